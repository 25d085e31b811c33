#include <doctest.h>

#include <cmath>
#include <random>

#include "hypekit/error.hpp"
#include "hypekit/models.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hypekit;
using support::random_fact;
using support::random_model;
using support::small_config;

namespace {

constexpr ModelKind kAllKinds[] = {ModelKind::HypE, ModelKind::HSimplE, ModelKind::MDistMult,
                                   ModelKind::MCP, ModelKind::RSimplE};

ModelConfig config_for(ModelKind kind, std::size_t arity) {
  if (kind == ModelKind::RSimplE) return small_config(kind, 2, 8);
  return small_config(kind, arity, arity * 2 + (kind == ModelKind::HSimplE ? 0 : 1) * 3);
}

}  // namespace

TEST_CASE("model kind names") {
  for (auto k : kAllKinds) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_model_kind("transh"), ConfigError);
}

TEST_CASE("config validation") {
  auto c = small_config(ModelKind::HSimplE, 2, 201);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.dim = 200;
  CHECK_NOTHROW(c.validate());
  auto r = small_config(ModelKind::RSimplE, 3, 8);
  CHECK_THROWS_AS(r.validate(), ConfigError);
  auto h = small_config(ModelKind::HypE, 2, 4);
  h.filter_len = 5;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h.filter_len = 2;
  h.stride = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  auto d = small_config(ModelKind::MDistMult, 2, 4);
  d.rel_dim = 3;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("parameter shapes") {
  auto c = small_config(ModelKind::HypE, 3, 10);
  const Model h(c);
  CHECK(h.entities().cols() == 10);
  CHECK(h.filters().rows() == 3 * 2);
  CHECK(h.filters().cols() == 3);
  CHECK(h.projection().rows() == 2 * c.feature_map_size());
  CHECK(h.projection().cols() == 10);
  const Model cp(small_config(ModelKind::MCP, 3, 4));
  CHECK(cp.entities().cols() == 12);
  CHECK(cp.filters().size() == 0);
}

TEST_CASE("initialization") {
  std::mt19937_64 rng(1);
  Model m(small_config(ModelKind::HypE, 2, 6, 200, 50));
  m.initialize(rng, 0.01);
  double sum = 0, sq = 0;
  for (double v : m.entities().values()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(m.entities().size());
  CHECK(std::abs(sum / n) < 0.002);
  CHECK(std::abs(std::sqrt(sq / n) - 0.01) < 0.001);
  for (std::size_t r = 0; r < m.projection().rows(); ++r) {
    for (std::size_t col = 0; col < m.projection().cols(); ++col) {
      CHECK(m.projection()(r, col) == (r == col ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("position transform identity") {
  ModelConfig c = small_config(ModelKind::HypE, 2, 5);
  c.filters = 1;
  c.filter_len = 1;
  c.stride = 1;
  Model m(c);
  m.filters()(0, 0) = 1.0;
  m.filters()(1, 0) = 1.0;
  for (std::size_t i = 0; i < 5; ++i) m.projection()(i, i) = 1.0;
  const Vec e{0.5, -1, 2, 3, 4};
  CHECK(m.position_transform(e, 1) == e);
  CHECK(m.position_transform(e, 2) == e);
  CHECK_THROWS_AS(m.position_transform(e, 3), PositionError);
  CHECK_THROWS_AS(m.position_transform(e, 0), PositionError);
  CHECK_THROWS_AS(m.position_transform(Vec{1, 2}, 1), DimensionError);
}

TEST_CASE("position transform matches conv-concat-matmul loops") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    ModelConfig c = small_config(ModelKind::HypE, 3, 6 + trial % 7);
    c.filters = 1 + trial % 3;
    c.filter_len = 1 + trial % 4;
    c.stride = 1 + trial % 3;
    c.rel_dim = 3 + trial % 5;
    const Model m = random_model(c, rng);
    const Vec e = oracle::row(m.entities(), 0);
    for (std::size_t i = 1; i <= 3; ++i) {
      const Vec got = m.position_transform(e, i), want = oracle::hype_transform(m, e, i);
      REQUIRE(got.size() == c.relation_dim());
      for (std::size_t t = 0; t < got.size(); ++t) CHECK(std::abs(got[t] - want[t]) <= 1e-10);
    }
  }
}

TEST_CASE("scores match the loop oracle") {
  std::mt19937_64 rng(3);
  for (auto kind : kAllKinds) {
    for (std::size_t k = 1; k <= 6; ++k) {
      if (kind == ModelKind::RSimplE && k != 2) continue;
      const auto c = config_for(kind, k);
      for (int trial = 0; trial < 10; ++trial) {
        const Model m = random_model(c, rng);
        const Fact f = random_fact(c, k, rng);
        CHECK(std::abs(m.score(f) - oracle::score(m, f)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("zero relation gives zero score") {
  std::mt19937_64 rng(4);
  for (auto kind : kAllKinds) {
    const auto c = config_for(kind, 2);
    Model m = random_model(c, rng);
    for (double& v : m.relations().row(1)) v = 0.0;
    Fact f = random_fact(c, 2, rng);
    f.relation = 1;
    CHECK(m.score(f) == 0.0);
  }
}

TEST_CASE("scores are linear in each entity") {
  std::mt19937_64 rng(5);
  for (auto kind : kAllKinds) {
    const std::size_t k = kind == ModelKind::RSimplE ? 2 : 3;
    const auto c = config_for(kind, k);
    Model m = random_model(c, rng);
    const Fact f{0, {1, 2, 3}};
    const Fact fk{0, std::vector<EntityId>(f.entities.begin(), f.entities.begin() + k)};
    const double before = m.score(fk);
    for (double& v : m.entities().row(2)) v *= -2.5;
    CHECK(std::abs(m.score(fk) + 2.5 * before) <= 1e-9);
  }
}

TEST_CASE("hsimple equals simple at delta 2") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = small_config(ModelKind::HSimplE, 2, 2 * (1 + trial % 6));
    const Model h = random_model(c, rng);
    c.kind = ModelKind::RSimplE;
    Model s(c);
    s.entities() = h.entities();
    s.relations() = h.relations();
    const Fact f = random_fact(c, 2, rng);
    CHECK(std::abs(h.score(f) - s.score(f)) <= 1e-9);
  }
}

TEST_CASE("hsimple arity one is unshifted") {
  std::mt19937_64 rng(7);
  const auto c = small_config(ModelKind::HSimplE, 3, 6);
  const Model m = random_model(c, rng);
  const Fact f{1, {4}};
  const Vec r = oracle::row(m.relations(), 1), e = oracle::row(m.entities(), 4);
  CHECK(std::abs(m.score(f) - oracle::dotsum({r, e})) <= 1e-12);
}

TEST_CASE("m-distmult properties") {
  std::mt19937_64 rng(8);
  const auto c = small_config(ModelKind::MDistMult, 3, 5);
  Model m = random_model(c, rng);
  CHECK(std::abs(m.score(Fact{0, {1, 2, 3}}) - m.score(Fact{0, {3, 1, 2}})) <= 1e-12);
  for (std::size_t e = 0; e < c.num_entities; ++e) {
    for (double& v : m.entities().row(e)) v = 1.0;
  }
  double rsum = 0;
  for (double v : m.relations().row(2)) rsum += v;
  CHECK(std::abs(m.score(Fact{2, {0, 5, 6}}) - rsum) <= 1e-12);
}

TEST_CASE("m-cp properties") {
  std::mt19937_64 rng(9);
  const auto c = small_config(ModelKind::MCP, 2, 4);
  const Model m = random_model(c, rng);
  const Fact f{0, {1, 2}};
  const Vec r = oracle::row(m.relations(), 0), a = oracle::row(m.entities(), 1),
            b = oracle::row(m.entities(), 2);
  const Vec a1(a.begin(), a.begin() + 4), b2(b.begin() + 4, b.end());
  CHECK(std::abs(m.score(f) - oracle::dotsum({r, a1, b2})) <= 1e-12);
  CHECK(std::abs(m.score(f) - m.score(Fact{0, {2, 1}})) > 1e-6);

  // Copies past the fact's arity get no gradient.
  const auto c3 = small_config(ModelKind::MCP, 4, 3);
  const Model m3 = random_model(c3, rng);
  const Gradients g = m3.score_gradients(Fact{0, {1, 2}});
  for (const auto& [id, v] : g.entities) {
    for (std::size_t t = 2 * 3; t < v.size(); ++t) CHECK(v[t] == 0.0);
  }
}

TEST_CASE("r-simple properties") {
  std::mt19937_64 rng(10);
  const auto c = small_config(ModelKind::RSimplE, 2, 6);
  Model m = random_model(c, rng);
  for (std::size_t e = 0; e < c.num_entities; ++e) {
    auto row = m.entities().row(e);
    for (std::size_t t = 0; t < 3; ++t) row[3 + t] = row[t];
  }
  for (std::size_t r = 0; r < c.num_relations; ++r) {
    auto row = m.relations().row(r);
    for (std::size_t t = 0; t < 3; ++t) row[3 + t] = row[t];
  }
  CHECK(std::abs(m.score(Fact{1, {2, 5}}) - m.score(Fact{1, {5, 2}})) <= 1e-12);
  CHECK_THROWS_AS((void)m.score(Fact{1, {2, 5, 3}}), ArityError);
  CHECK_THROWS_AS((void)m.score(Fact{1, {2}}), ArityError);
}

TEST_CASE("fact checks") {
  const Model m(small_config(ModelKind::HypE, 2, 4));
  CHECK_THROWS_AS((void)m.score(Fact{0, {1, 2, 3}}), ArityError);
  CHECK_THROWS_AS((void)m.score(Fact{9, {1, 2}}), DataError);
  CHECK_THROWS_AS((void)m.score(Fact{0, {1, 99}}), DataError);
}

TEST_CASE("score gradients match finite differences") {
  std::mt19937_64 rng(11);
  for (auto kind : kAllKinds) {
    for (std::size_t k = 1; k <= 6; ++k) {
      if (kind == ModelKind::RSimplE && k != 2) continue;
      const auto c = config_for(kind, k);
      for (int trial = 0; trial < 3; ++trial) {
        Model m = random_model(c, rng);
        const Fact f = random_fact(c, k, rng);
        const Vec analytic = flatten(m.score_gradients(f), m);
        const double err = support::max_relative_error(
            m, [&](const Model& x) { return x.score(f); }, analytic);
        INFO(to_string(kind), " arity ", k);
        CHECK(err < 1e-4);
      }
    }
  }
}

TEST_CASE("m-distmult relation gradient is the entity product") {
  std::mt19937_64 rng(12);
  const auto c = small_config(ModelKind::MDistMult, 3, 5);
  Model m = random_model(c, rng);
  const Fact f{1, {0, 3, 4}};
  const Gradients g = m.score_gradients(f);
  const Vec& gr = g.relations.at(1);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(std::abs(gr[t] - m.entities()(0, t) * m.entities()(3, t) * m.entities()(4, t)) <= 1e-12);
  }
  m.entities()(3, 2) = 0.0;
  CHECK(m.score_gradients(f).relations.at(1)[2] == 0.0);
}
