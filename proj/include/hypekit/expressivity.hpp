#pragma once

// Constructive embeddings that make HypE and HSimplE score exactly 1 on the
// true tuples of a world and 0 on every other tuple, plus an exhaustive
// checker for that separation.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hypekit/data.hpp"
#include "hypekit/models.hpp"

namespace hypekit {

/// Entities [0, num_entities), relations with fixed arities, and the set of
/// true tuples.
struct World {
  std::size_t num_entities = 0;
  std::vector<std::size_t> arities;
  std::vector<Fact> facts;

  /// delta; at least 1.
  std::size_t max_arity() const noexcept;
  /// Throws DataError on bad ids, arity mismatches or duplicate facts.
  void validate() const;
};

World world_from_facts(const Vocab& vocab, const std::vector<Fact>& facts);

struct RandomWorldSpec {
  std::size_t entities = 5;
  std::size_t relations = 3;
  std::size_t max_arity = 4;
  std::size_t facts = 8;
};

/// Relation 0 gets arity `max_arity`, the others a uniform arity in
/// [1, max_arity]. Facts are distinct uniform tuples; fewer are returned
/// when the world has fewer possible tuples than requested.
World random_world(const RandomWorldSpec& spec, Rng& rng);

/// HypE with d = delta*|tau| (delta when tau is empty), relation size |tau|,
/// one one-hot filter of length delta per position, stride delta, identity
/// projection.
Model construct_hype(const World& world);

/// HSimplE with d = delta*|tau| (delta when tau is empty). Block j of an
/// entity marks the facts holding it at position j+1; a relation marks its
/// facts in the first |tau| coordinates.
Model construct_hsimple(const World& world);

/// Number of tuples verify_separation would score.
std::size_t enumeration_count(const World& world);

struct SeparationReport {
  bool passed = false;
  std::size_t dimension = 0;
  std::size_t relation_dimension = 0;
  std::size_t tuples_checked = 0;
  std::size_t violations = 0;
  std::optional<Fact> first_violator;
  double violator_score = 0.0;
  bool violator_is_true = false;

  /// One line: pass/fail, dimension used, first violator if any.
  std::string summary(const Vocab* vocab = nullptr) const;
};

/// Scores every tuple of every relation at its arity and checks phi = 1 on
/// the world's facts and phi = 0 elsewhere, within `tolerance`. Throws
/// ConfigError when more than `bound` tuples would be enumerated.
SeparationReport verify_separation(const Model& model, const World& world,
                                   std::size_t bound = 1'000'000, double tolerance = 1e-9);

}  // namespace hypekit
