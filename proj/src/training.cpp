#include "hypekit/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hypekit/conversions.hpp"
#include "hypekit/error.hpp"
#include "hypekit/evaluation.hpp"

namespace hypekit {

void TrainingConfig::validate() const {
  if (negative_ratio < 1) throw ConfigError("negative ratio must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and nonnegative");
  }
  if (!(init_std >= 0.0)) throw ConfigError("init_std must be nonnegative");
  if (!(adagrad_epsilon > 0.0)) throw ConfigError("adagrad epsilon must be positive");
}

namespace {

EntityId draw_other(EntityId current, std::size_t num_entities, Rng& rng) {
  if (current >= num_entities) {
    std::uniform_int_distribution<std::size_t> pick(0, num_entities - 1);
    return static_cast<EntityId>(pick(rng));
  }
  std::uniform_int_distribution<std::size_t> pick(0, num_entities - 2);
  auto e = static_cast<EntityId>(pick(rng));
  return e >= current ? e + 1 : e;
}

}  // namespace

std::vector<Fact> sample_negatives(const Fact& fact, std::size_t negative_ratio,
                                   std::size_t num_entities, Rng& rng) {
  if (num_entities < 2) throw DataError("cannot corrupt a fact with fewer than two entities");
  std::vector<Fact> out;
  out.reserve(negative_ratio * fact.arity());
  for (std::size_t i = 0; i < fact.arity(); ++i) {
    for (std::size_t k = 0; k < negative_ratio; ++k) {
      Fact neg = fact;
      neg.entities[i] = draw_other(fact.entities[i], num_entities, rng);
      out.push_back(std::move(neg));
    }
  }
  return out;
}

double batch_loss(const Model& model, std::span<const Example> batch, const EntityOverride* ov) {
  double total = 0.0;
  std::vector<double> scores;
  for (const auto& ex : batch) {
    if (ex.negatives.empty()) throw TrainingError("degenerate loss: empty negative set");
    scores.clear();
    scores.push_back(ov ? model.score(ex.positive, *ov) : model.score(ex.positive));
    for (const auto& neg : ex.negatives) {
      scores.push_back(ov ? model.score(neg, *ov) : model.score(neg));
    }
    const double m = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - m);
    total += -(scores[0] - m) + std::log(z);
  }
  return total;
}

LossAndGradients loss_gradients(const Model& model, std::span<const Example> batch,
                                const Dropout& dropout, const EntityOverride* ov) {
  LossAndGradients out;
  std::vector<TupleCache> caches;
  std::vector<double> scores;
  for (const auto& ex : batch) {
    if (ex.negatives.empty()) throw TrainingError("degenerate loss: empty negative set");
    const std::size_t m = ex.negatives.size() + 1;
    if (caches.size() < m) caches.resize(m);
    scores.assign(m, 0.0);
    scores[0] = model.forward(ex.positive, caches[0], dropout, ov);
    for (std::size_t j = 1; j < m; ++j) {
      scores[j] = model.forward(ex.negatives[j - 1], caches[j], dropout, ov);
    }
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    out.loss += -(scores[0] - mx) + std::log(z);
    for (std::size_t j = 0; j < m; ++j) {
      const double weight = std::exp(scores[j] - mx) / z - (j == 0 ? 1.0 : 0.0);
      if (weight != 0.0) model.backward(caches[j], weight, out.grads);
    }
  }
  return out;
}

AdagradState::AdagradState(const Model& model, double eps)
    : entities(model.entities().rows(), model.entities().cols()),
      relations(model.relations().rows(), model.relations().cols()),
      filters(model.filters().size(), 0.0),
      projection(model.projection().size(), 0.0),
      epsilon(eps) {}

void adagrad_step(std::span<double> params, std::span<const double> grad,
                  std::span<double> acc, double lr, double epsilon) {
  if (params.size() != grad.size() || acc.size() != grad.size()) {
    throw DimensionError("adagrad: parameter, gradient and accumulator sizes differ");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    acc[i] += g * g;
    params[i] -= lr * g / (std::sqrt(acc[i]) + epsilon);
  }
}

void adagrad_update(Model& model, const Gradients& grads, AdagradState& state, double lr) {
  for (const auto& [id, g] : grads.entities) {
    if (id >= model.entities().rows()) continue;
    adagrad_step(model.entities().row(id), g, state.entities.row(id), lr, state.epsilon);
  }
  for (const auto& [id, g] : grads.relations) {
    adagrad_step(model.relations().row(id), g, state.relations.row(id), lr, state.epsilon);
  }
  if (!grads.filters.empty()) {
    adagrad_step(model.filters().values(), grads.filters, state.filters, lr, state.epsilon);
  }
  if (!grads.projection.empty()) {
    adagrad_step(model.projection().values(), grads.projection, state.projection, lr,
                 state.epsilon);
  }
}

ReifiedTraining reify_for_training(const Dataset& ds) {
  ReifiedTraining out;
  out.vocab = ds.vocab;
  register_position_relations(out.vocab);
  std::vector<Fact> usable;
  for (const auto& f : ds.train) {
    if (f.arity() >= 2) usable.push_back(f);
  }
  out.train = reify(usable, out.vocab);
  return out;
}

ModelConfig resolve_model_config(const ModelConfig& base, const Dataset& ds) {
  ModelConfig mc = base;
  if (mc.kind == ModelKind::RSimplE) {
    const auto rt = reify_for_training(ds);
    mc.num_entities = rt.vocab.num_entities();
    mc.num_relations = rt.vocab.num_relations();
    mc.max_arity = 2;
  } else {
    mc.num_entities = ds.vocab.num_entities();
    mc.num_relations = ds.vocab.num_relations();
    mc.max_arity = std::max<std::size_t>(1, ds.vocab.max_arity());
  }
  mc.validate();
  return mc;
}

TrainResult train(const Dataset& ds, const ModelConfig& model_config,
                  const TrainingConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  const ModelConfig mc = resolve_model_config(model_config, ds);
  const bool reified = mc.kind == ModelKind::RSimplE;

  TrainResult result;
  std::vector<Fact> facts;
  if (reified) {
    auto rt = reify_for_training(ds);
    result.model_vocab = std::move(rt.vocab);
    facts = std::move(rt.train);
  } else {
    result.model_vocab = ds.vocab;
    facts = ds.train;
  }
  if (facts.empty()) throw TrainingError("training split is empty");

  Rng rng(config.seed);
  Model model(mc);
  model.initialize(rng, config.init_std);
  AdagradState state(model, config.adagrad_epsilon);
  const Dropout dropout{config.dropout, &rng};

  const bool has_valid = !ds.valid.empty();
  const FactSet known = has_valid ? ds.all_facts() : FactSet{};
  const AuxFitConfig fit{config.aux_steps, config.learning_rate, config.negative_ratio,
                         config.init_std, config.adagrad_epsilon, ds.vocab.num_entities()};

  std::vector<std::size_t> order(facts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const Fact& f = facts[order[i]];
        batch.push_back(
            Example{f, sample_negatives(f, config.negative_ratio, mc.num_entities, rng)});
      }
      auto lg = loss_gradients(model, batch, dropout);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("loss diverged (" + std::to_string(lg.loss) + ") at epoch " +
                            std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start) + "; try a smaller learning rate");
      }
      epoch_loss += lg.loss;
      adagrad_update(model, lg.grads, state, config.learning_rate);
    }

    EpochLog entry{epoch, epoch_loss, std::nullopt};
    const bool checkpoint_epoch = epoch % config.eval_every == 0 || epoch == config.epochs;
    if (checkpoint_epoch && has_valid) {
      const EvalReport rep =
          reified ? evaluate_reified(model, ds.vocab, result.model_vocab, ds.valid, known, fit,
                                     config.seed, config.threads)
                  : evaluate(model, ds.valid, known, config.threads);
      entry.valid_mrr = rep.overall.mrr;
      if (!result.best_valid_mrr || rep.overall.mrr > *result.best_valid_mrr) {
        result.best_valid_mrr = rep.overall.mrr;
        result.best_epoch = epoch;
        result.model = model;
      }
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }

  if (!result.best_valid_mrr) {
    result.model = std::move(model);
    result.best_epoch = config.epochs;
  }
  return result;
}

Vec fit_aux_embedding(const Model& model, std::span<const Fact> observed, EntityId aux_id,
                      const AuxFitConfig& config, Rng& rng) {
  if (observed.empty()) throw TrainingError("cannot fit an auxiliary embedding without facts");
  const std::size_t width = model.config().entity_width();
  Vec aux(width);
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (auto& x : aux) x = normal(rng);

  const std::size_t candidates =
      config.candidate_entities ? config.candidate_entities : model.config().num_entities;
  if (candidates < 2) throw DataError("cannot corrupt tails with fewer than two candidates");
  Vec acc(width, 0.0);
  std::vector<Example> batch;
  for (std::size_t step = 0; step < config.steps; ++step) {
    batch.clear();
    for (const auto& f : observed) {
      if (f.arity() != 2 || f.entities[0] != aux_id) {
        throw ArityError("auxiliary facts must be binary with the auxiliary entity first");
      }
      Example ex{f, {}};
      for (std::size_t k = 0; k < config.negative_ratio; ++k) {
        Fact neg = f;
        neg.entities[1] = draw_other(f.entities[1], candidates, rng);
        ex.negatives.push_back(std::move(neg));
      }
      batch.push_back(std::move(ex));
    }
    const EntityOverride ov{aux_id, aux};
    const auto lg = loss_gradients(model, batch, {}, &ov);
    if (auto it = lg.grads.entities.find(aux_id); it != lg.grads.entities.end()) {
      adagrad_step(aux, it->second, acc, config.learning_rate, config.epsilon);
    }
  }
  return aux;
}

}  // namespace hypekit
