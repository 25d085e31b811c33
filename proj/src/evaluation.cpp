#include "hypekit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hypekit/conversions.hpp"
#include "hypekit/error.hpp"

namespace hypekit {

void RankAccumulator::add(std::size_t arity, std::size_t rank) { ++by_arity_[arity][rank]; }

void RankAccumulator::merge(const RankAccumulator& other) {
  for (const auto& [arity, hist] : other.by_arity_) {
    for (const auto& [rank, count] : hist) by_arity_[arity][rank] += count;
  }
  facts_ += other.facts_;
}

namespace {

// Double-double accumulator: MRR comes out correctly rounded in practice,
// independent of how ranks were grouped.
struct ExactSum {
  double hi = 0.0, lo = 0.0;

  void add(double x) {
    const double s = hi + x;
    const double bp = s - hi;
    const double err = (hi - (s - bp)) + (x - bp);
    hi = s;
    lo += err;
  }
  // Adds a / b with the division error folded into the low part.
  void add_ratio(double a, double b) {
    const double q = a / b;
    add(q);
    lo += std::fma(-q, b, a) / b;
  }
  double divided_by(double k) const {
    const double q = hi / k;
    const double r = std::fma(-q, k, hi) + lo;
    return q + r / k;
  }
};

Metrics summarize(const std::map<std::size_t, std::size_t>& hist) {
  Metrics m;
  ExactSum rr;
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  for (const auto& [rank, count] : hist) {
    m.tasks += count;
    rr.add_ratio(static_cast<double>(count), static_cast<double>(rank));
    if (rank <= 1) h1 += count;
    if (rank <= 3) h3 += count;
    if (rank <= 10) h10 += count;
  }
  if (m.tasks == 0) return m;
  const auto k = static_cast<double>(m.tasks);
  m.mrr = rr.divided_by(k);
  m.hit1 = static_cast<double>(h1) / k;
  m.hit3 = static_cast<double>(h3) / k;
  m.hit10 = static_cast<double>(h10) / k;
  return m;
}

}  // namespace

EvalReport RankAccumulator::report() const {
  std::map<std::size_t, std::size_t> all;
  EvalReport rep;
  for (const auto& [arity, hist] : by_arity_) {
    rep.per_arity[arity] = summarize(hist);
    for (const auto& [rank, count] : hist) all[rank] += count;
  }
  rep.overall = summarize(all);
  rep.num_facts = facts_;
  if (rep.overall.tasks == 0) throw EmptyReportError("no prediction tasks to report on");
  return rep;
}

void Scorer::score_candidates(const Fact& fact, std::size_t position,
                              std::span<double> out) const {
  Fact probe = fact;
  for (std::size_t e = 0; e < num_candidates(); ++e) {
    probe.entities[position - 1] = static_cast<EntityId>(e);
    out[e] = score(probe);
  }
}

ModelScorer::ModelScorer(const Model& model, std::size_t num_candidates)
    : model_(model),
      candidates_(num_candidates ? num_candidates : model.config().num_entities),
      cache_(model.config().max_arity),
      once_(std::make_unique<std::once_flag[]>(model.config().max_arity)) {
  if (candidates_ > model.config().num_entities) {
    throw DataError("more candidates requested than the model has entities");
  }
}

const Matrix& ModelScorer::transformed(std::size_t position) const {
  std::call_once(once_[position - 1], [&] {
    Matrix m(candidates_, model_.config().relation_dim());
    for (std::size_t e = 0; e < candidates_; ++e) {
      const Vec v = model_.position_transform(model_.entities().row(e), position);
      std::copy(v.begin(), v.end(), m.row(e).begin());
    }
    cache_[position - 1] = std::move(m);
  });
  return cache_[position - 1];
}

void ModelScorer::score_candidates(const Fact& fact, std::size_t position,
                                   std::span<double> out) const {
  const ModelConfig& cfg = model_.config();
  if (cfg.kind == ModelKind::RSimplE) {
    Scorer::score_candidates(fact, position, out);
    return;
  }
  model_.check_fact(fact);
  if (position < 1 || position > fact.arity()) {
    throw PositionError("position " + std::to_string(position) + " outside the fact");
  }
  const std::size_t dr = cfg.relation_dim();
  Vec partial(model_.relations().row(fact.relation).begin(),
              model_.relations().row(fact.relation).end());
  for (std::size_t j = 1; j <= fact.arity(); ++j) {
    if (j == position) continue;
    const Vec v = model_.position_vector(fact.entities[j - 1], j);
    for (std::size_t t = 0; t < dr; ++t) partial[t] *= v[t];
  }

  switch (cfg.kind) {
    case ModelKind::HypE: {
      const Matrix& m = transformed(position);
      for (std::size_t e = 0; e < candidates_; ++e) {
        const auto row = m.row(e);
        double acc = 0.0;
        for (std::size_t t = 0; t < dr; ++t) acc += partial[t] * row[t];
        out[e] = acc;
      }
      break;
    }
    case ModelKind::HSimplE: {
      const std::size_t d = cfg.dim;
      const std::size_t x = ((position - 1) * (d / cfg.max_arity)) % d;
      for (std::size_t e = 0; e < candidates_; ++e) {
        const auto row = model_.entities().row(e);
        double acc = 0.0;
        for (std::size_t t = 0; t < d; ++t) acc += partial[t] * row[(t + x) % d];
        out[e] = acc;
      }
      break;
    }
    case ModelKind::MDistMult:
    case ModelKind::MCP: {
      const std::size_t offset = cfg.kind == ModelKind::MCP ? (position - 1) * cfg.dim : 0;
      for (std::size_t e = 0; e < candidates_; ++e) {
        const auto row = model_.entities().row(e).subspan(offset, cfg.dim);
        double acc = 0.0;
        for (std::size_t t = 0; t < cfg.dim; ++t) acc += partial[t] * row[t];
        out[e] = acc;
      }
      break;
    }
    case ModelKind::RSimplE: break;
  }
}

std::vector<Fact> filtered_candidates(const Fact& fact, std::size_t position,
                                      std::size_t num_entities, const FactSet& known) {
  if (position < 1 || position > fact.arity()) {
    throw PositionError("position " + std::to_string(position) + " outside the fact");
  }
  std::vector<Fact> out;
  const EntityId self = fact.entities[position - 1];
  Fact probe = fact;
  for (std::size_t e = 0; e < num_entities; ++e) {
    if (e == self) continue;
    probe.entities[position - 1] = static_cast<EntityId>(e);
    if (!known.contains(probe)) out.push_back(probe);
  }
  out.push_back(fact);
  return out;
}

namespace {

std::size_t rank_from_scores(const Fact& fact, std::size_t position, std::span<const double> scores,
                             const FactSet& known) {
  const EntityId self = fact.entities[position - 1];
  const double target = scores[self];
  std::size_t rank = 1;
  Fact probe = fact;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e == self || !(scores[e] > target)) continue;
    probe.entities[position - 1] = static_cast<EntityId>(e);
    if (!known.contains(probe)) ++rank;
  }
  return rank;
}

std::size_t resolve_threads(std::size_t threads, std::size_t work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(threads, work));
}

// Runs body(i, acc) for i in [0, n) over `threads` workers, each with its own
// accumulator, and merges them. Exceptions from workers are rethrown.
template <typename Body>
RankAccumulator parallel_ranks(std::size_t n, std::size_t threads, Body body) {
  threads = resolve_threads(threads, n);
  std::vector<RankAccumulator> parts(threads);
  std::vector<std::exception_ptr> errors(threads);
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < n; i += threads) body(i, parts[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(run, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  RankAccumulator total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace

std::size_t rank_of(const Scorer& scorer, const Fact& fact, std::size_t position,
                    const FactSet& known) {
  if (position < 1 || position > fact.arity()) {
    throw PositionError("position " + std::to_string(position) + " outside the fact");
  }
  std::vector<double> scores(scorer.num_candidates());
  scorer.score_candidates(fact, position, scores);
  return rank_from_scores(fact, position, scores, known);
}

EvalReport evaluate(const Scorer& scorer, const std::vector<Fact>& test, const FactSet& known,
                    std::size_t threads) {
  if (test.empty()) throw EmptyReportError("empty test set");
  const auto acc = parallel_ranks(test.size(), threads, [&](std::size_t i, RankAccumulator& a) {
    const Fact& f = test[i];
    std::vector<double> scores(scorer.num_candidates());
    for (std::size_t pos = 1; pos <= f.arity(); ++pos) {
      scorer.score_candidates(f, pos, scores);
      a.add(f.arity(), rank_from_scores(f, pos, scores, known));
    }
    a.add_fact();
  });
  return acc.report();
}

EvalReport evaluate(const Model& model, const std::vector<Fact>& test, const FactSet& known,
                    std::size_t threads) {
  const ModelScorer scorer(model);
  return evaluate(scorer, test, known, threads);
}

EvalReport evaluate_reified(const Model& model, const Vocab& base_vocab, const Vocab& model_vocab,
                            const std::vector<Fact>& test, const FactSet& known,
                            const AuxFitConfig& fit, std::uint64_t seed, std::size_t threads) {
  if (test.empty()) throw EmptyReportError("empty test set");
  if (model.config().kind != ModelKind::RSimplE) {
    throw ConfigError("reified evaluation needs an r-simple model");
  }
  const std::size_t base_entities = base_vocab.num_entities();
  const ModelScorer scorer(model, base_entities);
  const auto aux = static_cast<EntityId>(model.config().num_entities);
  AuxFitConfig fit_cfg = fit;
  if (fit_cfg.candidate_entities == 0) fit_cfg.candidate_entities = base_entities;

  const auto acc = parallel_ranks(test.size(), threads, [&](std::size_t i, RankAccumulator& a) {
    const Fact& f = test[i];
    const std::size_t k = f.arity();
    if (k < 2) return;
    a.add_fact();
    if (k == 2) {
      std::vector<double> scores(base_entities);
      for (std::size_t pos = 1; pos <= 2; ++pos) {
        scorer.score_candidates(f, pos, scores);
        a.add(k, rank_from_scores(f, pos, scores, known));
      }
      return;
    }
    const std::string& base = base_vocab.relation_name(f.relation);
    std::vector<RelationId> pos_rel(k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto r = model_vocab.find_relation(position_relation_name(base, j + 1));
      if (!r) throw DataError("model has no reified relation for '" + base + "'");
      pos_rel[j] = *r;
    }
    for (std::size_t pos = 1; pos <= k; ++pos) {
      std::vector<Fact> observed;
      for (std::size_t j = 0; j < k; ++j) {
        if (j + 1 != pos) observed.push_back(Fact{pos_rel[j], {aux, f.entities[j]}});
      }
      Rng rng(seed ^ (FactHash{}(f) * 0x9e3779b97f4a7c15ULL + pos));
      const Vec emb = fit_aux_embedding(model, observed, aux, fit_cfg, rng);
      const EntityOverride ov{aux, emb};

      Fact task{pos_rel[pos - 1], {aux, f.entities[pos - 1]}};
      const double target = model.score(task, ov);
      std::size_t rank = 1;
      Fact original = f;
      for (std::size_t e = 0; e < base_entities; ++e) {
        if (e == f.entities[pos - 1]) continue;
        task.entities[1] = static_cast<EntityId>(e);
        if (!(model.score(task, ov) > target)) continue;
        original.entities[pos - 1] = static_cast<EntityId>(e);
        if (!known.contains(original)) ++rank;
      }
      a.add(k, rank);
    }
  });
  return acc.report();
}

std::string format_report_tsv(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "group\ttasks\tmrr\thit@1\thit@3\thit@10\n";
  auto row = [&out](const std::string& label, const Metrics& m) {
    out << label << '\t' << m.tasks << '\t' << m.mrr << '\t' << m.hit1 << '\t' << m.hit3 << '\t'
        << m.hit10 << '\n';
  };
  row("all", report.overall);
  for (const auto& [arity, m] : report.per_arity) row("arity=" + std::to_string(arity), m);
  return out.str();
}

std::string format_report_json(const EvalReport& report) {
  auto metrics = [](const Metrics& m) {
    return nlohmann::ordered_json{{"tasks", m.tasks}, {"mrr", m.mrr},     {"hit@1", m.hit1},
                                  {"hit@3", m.hit3},  {"hit@10", m.hit10}};
  };
  nlohmann::ordered_json doc = metrics(report.overall);
  doc["facts"] = report.num_facts;
  doc["K"] = report.overall.tasks;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [arity, m] : report.per_arity) per["arity=" + std::to_string(arity)] = metrics(m);
  doc["per_arity"] = per;
  return doc.dump(2) + "\n";
}

}  // namespace hypekit
