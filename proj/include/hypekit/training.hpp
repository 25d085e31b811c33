#pragma once

// Contrastive negative sampling, the softmax cross-entropy objective, Adagrad,
// and the mini-batch training loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hypekit/data.hpp"
#include "hypekit/models.hpp"

namespace hypekit {

struct TrainingConfig {
  std::size_t negative_ratio = 10;  // N
  double learning_rate = 0.1;
  double dropout = 0.0;
  std::size_t epochs = 500;
  std::size_t batch_size = 128;
  std::size_t eval_every = 50;
  std::uint64_t seed = 0;
  double init_std = 0.01;
  double adagrad_epsilon = 1e-10;
  std::size_t aux_steps = 100;  // r-SimplE test-time fitting
  std::size_t threads = 0;      // validation threads; 0 = hardware concurrency

  void validate() const;
};

/// A positive tuple and its negative set T_neg.
struct Example {
  Fact positive;
  std::vector<Fact> negatives;
};

/// N corruptions per position, position by position: for position i the
/// entity is replaced by a uniform draw from E \ {e_i}. Returns N * arity
/// facts. Throws DataError when fewer than two entities exist.
std::vector<Fact> sample_negatives(const Fact& fact, std::size_t negative_ratio,
                                   std::size_t num_entities, Rng& rng);

/// Sum over examples of -log(exp(phi(x')) / (exp(phi(x')) + sum_neg exp(phi(x)))),
/// evaluated with max subtraction. Throws TrainingError on an empty negative set.
double batch_loss(const Model& model, std::span<const Example> batch,
                  const EntityOverride* ov = nullptr);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// batch_loss and its exact gradient. With dropout the loss is the one seen
/// under the sampled masks.
LossAndGradients loss_gradients(const Model& model, std::span<const Example> batch,
                                const Dropout& dropout = {}, const EntityOverride* ov = nullptr);

/// Per-coordinate squared-gradient accumulators.
struct AdagradState {
  AdagradState() = default;
  explicit AdagradState(const Model& model, double epsilon = 1e-10);

  Matrix entities;
  Matrix relations;
  Vec filters;
  Vec projection;
  double epsilon = 1e-10;
};

/// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), only where g != 0.
void adagrad_step(std::span<double> params, std::span<const double> grad,
                  std::span<double> acc, double lr, double epsilon);
void adagrad_update(Model& model, const Gradients& grads, AdagradState& state, double lr);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> valid_mrr;
};

struct TrainResult {
  Model model;              // parameters of the best validation epoch
  Vocab model_vocab;        // vocabulary the model rows refer to
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  std::optional<double> best_valid_mrr;
};

/// Vocabulary and train facts an r-SimplE model is trained on: the dataset
/// vocabulary extended with auxiliary entities and r__pos<i> relations for
/// every relation of arity >= 3. Unary facts are dropped.
struct ReifiedTraining {
  Vocab vocab;
  std::vector<Fact> train;
};
ReifiedTraining reify_for_training(const Dataset& ds);

/// Fills num_entities, num_relations and max_arity from the vocabulary the
/// model will be trained on.
ModelConfig resolve_model_config(const ModelConfig& base, const Dataset& ds);

/// Trains from scratch. Every `eval_every` epochs (and at the last epoch) the
/// validation MRR is recorded; the returned model is the best one seen, or
/// the final one when there is no validation split. Deterministic given the
/// configs and the dataset order.
TrainResult train(const Dataset& ds, const ModelConfig& model_config,
                  const TrainingConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

struct AuxFitConfig {
  std::size_t steps = 100;
  double learning_rate = 0.1;
  std::size_t negative_ratio = 10;
  double init_std = 0.01;
  double epsilon = 1e-10;
  /// Tail corruptions are drawn from ids [0, candidate_entities); 0 means
  /// every entity row of the model.
  std::size_t candidate_entities = 0;
};

/// Embeds an entity the model never saw from binary facts that mention it at
/// position 1 (with id `aux_id`, normally model.config().num_entities). Starts
/// from N(0, init_std^2) noise and runs `steps` Adagrad steps on batch_loss
/// over the observed facts with tail corruptions, touching nothing else.
Vec fit_aux_embedding(const Model& model, std::span<const Fact> observed, EntityId aux_id,
                      const AuxFitConfig& config, Rng& rng);

}  // namespace hypekit
