#pragma once

// Score functions for HypE, HSimplE, m-DistMult, m-CP and the binary SimplE
// scorer used on reified data, with closed-form parameter gradients.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypekit/data.hpp"
#include "hypekit/mathkernel.hpp"

namespace hypekit {

using Rng = std::mt19937_64;

enum class ModelKind { HypE, HSimplE, MDistMult, MCP, RSimplE };

std::string_view to_string(ModelKind kind);
/// Accepts "hype", "hsimple", "m-distmult", "m-cp", "r-simple".
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::HypE;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::size_t dim = 200;         // d, entity embedding size (per copy for m-CP)
  std::size_t rel_dim = 0;       // d_r; 0 means "same as dim"
  std::size_t filters = 2;       // n, HypE filters per position
  std::size_t filter_len = 2;    // l
  std::size_t stride = 2;        // s
  std::size_t max_arity = 2;     // delta

  std::size_t relation_dim() const noexcept { return rel_dim == 0 ? dim : rel_dim; }
  /// HypE feature map size q = floor((d - l) / s) + 1.
  std::size_t feature_map_size() const;
  /// Width of one row of the entity matrix: delta * d for m-CP, d otherwise.
  std::size_t entity_width() const noexcept;
  /// Throws ConfigError on any violated shape invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Sparse gradient with the same layout as a Model's parameters. Rows that a
/// fact does not touch are absent.
struct Gradients {
  std::unordered_map<EntityId, Vec> entities;
  std::unordered_map<RelationId, Vec> relations;
  Vec filters;     // HypE only, layout of Model::filters()
  Vec projection;  // HypE only, layout of Model::projection()

  Vec& entity(EntityId id, std::size_t width);
  Vec& relation(RelationId id, std::size_t width);
  void scale(double factor);
  void add(const Gradients& other);
};

/// Replaces the lookup of one entity id with caller-owned values. The id may
/// lie past the end of the entity matrix (an entity the model never saw).
struct EntityOverride {
  EntityId id = 0;
  std::span<const double> values;
};

/// Inverted dropout on the vectors entering the score; rate 0 disables it.
struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;
};

/// Intermediate values of one scored tuple, kept for the backward pass.
struct TupleCache {
  Fact fact;
  std::vector<Vec> inputs;    // entity vectors after input dropout
  std::vector<Vec> features;  // HypE: concatenated feature maps (n*q)
  std::vector<Vec> out_masks; // HypE: dropout masks on f(e, i)
  std::vector<Vec> in_masks;
  std::vector<Vec> vectors;   // the vectors combined with the relation
  double score = 0.0;
};

class Model {
 public:
  Model() = default;
  /// All parameters zero. Validates the config.
  explicit Model(const ModelConfig& config);

  /// Entity, relation and filter entries from N(0, init_std^2); the HypE
  /// projection starts as a rectangular identity.
  void initialize(Rng& rng, double init_std);

  const ModelConfig& config() const noexcept { return config_; }

  Matrix& entities() noexcept { return entities_; }
  const Matrix& entities() const noexcept { return entities_; }
  Matrix& relations() noexcept { return relations_; }
  const Matrix& relations() const noexcept { return relations_; }
  /// HypE filters: row (i-1)*n + j holds filter j of position i; l columns.
  Matrix& filters() noexcept { return filters_; }
  const Matrix& filters() const noexcept { return filters_; }
  /// HypE projection P with n*q rows and d_r columns.
  Matrix& projection() noexcept { return projection_; }
  const Matrix& projection() const noexcept { return projection_; }

  /// Throws ArityError / DataError when the fact cannot be scored.
  void check_fact(const Fact& fact, const EntityOverride* ov = nullptr) const;

  double score(const Fact& fact) const;
  double score(const Fact& fact, const EntityOverride& ov) const;

  /// HypE f(e, i): the n feature maps of e under the position-i filters,
  /// concatenated and projected by P. `position` is 1-indexed.
  Vec position_transform(std::span<const double> e, std::size_t position) const;

  /// The vector entity `id` contributes at `position` (1-indexed) to the
  /// score's dotsum. Not defined for r-SimplE.
  Vec position_vector(EntityId id, std::size_t position) const;

  /// d(score)/d(parameters) for one fact, dropout off.
  Gradients score_gradients(const Fact& fact) const;

  /// Forward pass that records what backward() needs.
  double forward(const Fact& fact, TupleCache& cache, const Dropout& dropout = {},
                 const EntityOverride* ov = nullptr) const;
  /// Adds upstream * d(score)/d(parameters) into `grads`.
  void backward(const TupleCache& cache, double upstream, Gradients& grads) const;

  /// Flattened view over every parameter block (entities, relations,
  /// filters, projection), in that order.
  std::vector<std::span<double>> parameter_blocks();
  std::size_t parameter_count() const noexcept;

  bool operator==(const Model&) const = default;

 private:
  std::span<const double> entity_row(EntityId id, const EntityOverride* ov) const;
  std::size_t shift_for(std::size_t position_index) const;

  ModelConfig config_;
  Matrix entities_;
  Matrix relations_;
  Matrix filters_;
  Matrix projection_;
};

/// Dense flattening of a gradient, matching Model::parameter_blocks() order.
Vec flatten(const Gradients& grads, const Model& model);

}  // namespace hypekit
