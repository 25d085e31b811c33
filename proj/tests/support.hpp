#pragma once

// Shared fixtures: random models, finite-difference gradient checks and the
// synthetic compositional hypergraph.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "hypekit/data.hpp"
#include "hypekit/mathkernel.hpp"
#include "hypekit/models.hpp"
#include "oracles.hpp"

namespace support {

using namespace hypekit;

inline ModelConfig small_config(ModelKind kind, std::size_t max_arity, std::size_t dim,
                                std::size_t entities = 7, std::size_t relations = 3) {
  ModelConfig c;
  c.kind = kind;
  c.num_entities = entities;
  c.num_relations = relations;
  c.max_arity = max_arity;
  c.dim = dim;
  c.filters = 2;
  c.filter_len = 3;
  c.stride = 2;
  return c;
}

/// A model with U(-1, 1) parameters and a random fact of the given arity.
inline Model random_model(const ModelConfig& c, std::mt19937_64& rng) {
  Model m(c);
  oracle::randomize(m, rng);
  return m;
}

inline Fact random_fact(const ModelConfig& c, std::size_t arity, std::mt19937_64& rng) {
  std::uniform_int_distribution<EntityId> e(0, static_cast<EntityId>(c.num_entities - 1));
  std::uniform_int_distribution<RelationId> r(0, static_cast<RelationId>(c.num_relations - 1));
  Fact f;
  f.relation = r(rng);
  for (std::size_t i = 0; i < arity; ++i) f.entities.push_back(e(rng));
  return f;
}

/// Max over coordinates of |a - n| / max(|a|, |n|, 1e-6), where n is the
/// central difference (eps 1e-5) of `objective` over every model parameter.
inline double max_relative_error(Model& model, const std::function<double(const Model&)>& objective,
                                 const Vec& analytic) {
  Vec x;
  for (auto block : model.parameter_blocks()) x.insert(x.end(), block.begin(), block.end());
  const auto eval = [&](std::span<const double> p) {
    std::size_t at = 0;
    for (auto block : model.parameter_blocks()) {
      std::copy(p.begin() + static_cast<long>(at), p.begin() + static_cast<long>(at + block.size()),
                block.begin());
      at += block.size();
    }
    return objective(model);
  };
  const Vec numeric = finite_diff_grad(eval, x, 1e-5);
  (void)eval(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}));
  }
  return worst;
}

/// Compositional arity-3 hypergraph: `clusters` clusters of `size` entities
/// each, two random cluster permutations sigma and tau, and the fact
/// r(a, b, c) whenever cl(b) = sigma(cl(a)) and cl(c) = tau(cl(a)).
/// Produces clusters * size^3 facts, in a seeded random order.
inline std::vector<std::string> compositional_lines(std::size_t clusters, std::size_t size,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sigma(clusters), tau(clusters);
  std::iota(sigma.begin(), sigma.end(), std::size_t{0});
  std::iota(tau.begin(), tau.end(), std::size_t{0});
  std::shuffle(sigma.begin(), sigma.end(), rng);
  std::shuffle(tau.begin(), tau.end(), rng);
  const auto name = [&](std::size_t c, std::size_t i) {
    return "c" + std::to_string(c) + "_" + std::to_string(i);
  };
  std::vector<std::string> lines;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        for (std::size_t k = 0; k < size; ++k) {
          lines.push_back("rule\t" + name(c, i) + "\t" + name(sigma[c], j) + "\t" + name(tau[c], k));
        }
      }
    }
  }
  std::shuffle(lines.begin(), lines.end(), rng);
  return lines;
}

}  // namespace support
