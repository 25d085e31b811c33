#include <doctest.h>

#include <cmath>
#include <random>

#include "hypekit/error.hpp"
#include "hypekit/expressivity.hpp"
#include "oracles.hpp"

using namespace hypekit;

namespace {

/// Every tuple scored by the loop oracle: 1 on the world's facts, 0 elsewhere.
bool oracle_separates(const Model& m, const World& w) {
  const FactSet truth(w.facts.begin(), w.facts.end());
  for (RelationId r = 0; r < w.arities.size(); ++r) {
    const std::size_t k = w.arities[r];
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= w.num_entities;
    for (std::size_t code = 0; code < total; ++code) {
      Fact f{r, {}};
      std::size_t rest = code;
      for (std::size_t i = 0; i < k; ++i) {
        f.entities.push_back(static_cast<EntityId>(rest % w.num_entities));
        rest /= w.num_entities;
      }
      const double want = truth.contains(f) ? 1.0 : 0.0;
      if (std::abs(oracle::score(m, f) - want) > 1e-9) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("empty world") {
  World w{4, {2, 3}, {}};
  for (const Model& m : {construct_hype(w), construct_hsimple(w)}) {
    CHECK(m.config().dim == 3);
    for (double v : m.entities().values()) CHECK(v == 0.0);
    const auto rep = verify_separation(m, w);
    CHECK(rep.passed);
    CHECK(rep.tuples_checked == 16 + 64);
  }
}

TEST_CASE("hype construction layout") {
  // Five facts, max arity 4; the entity at position 2 of fact 3 selects
  // coordinate 3 of the transformed vector.
  World w{6, {4, 2}, {}};
  w.facts = {Fact{0, {0, 1, 2, 3}}, Fact{1, {4, 5}}, Fact{0, {5, 2, 1, 0}},
             Fact{0, {1, 1, 1, 1}}, Fact{1, {0, 0}}};
  const Model m = construct_hype(w);
  CHECK(m.config().dim == 4 * 5);
  CHECK(m.config().relation_dim() == 5);
  CHECK(m.config().filters == 1);
  CHECK(m.config().filter_len == 4);
  CHECK(m.config().stride == 4);
  const Vec f = m.position_transform(m.entities().row(2), 2);
  CHECK(f == Vec{0, 0, 1, 0, 0});
  const Vec g = m.position_transform(m.entities().row(1), 2);
  CHECK(g == Vec{1, 0, 0, 1, 0});
  CHECK(verify_separation(m, w).passed);
}

TEST_CASE("hsimple single ternary fact") {
  World w{3, {3}, {Fact{0, {0, 1, 2}}}};
  const Model m = construct_hsimple(w);
  CHECK(m.config().dim == 3);
  const auto rep = verify_separation(m, w);
  CHECK(rep.passed);
  CHECK(rep.tuples_checked == 27);
  CHECK(m.score(Fact{0, {0, 1, 2}}) == 1.0);
}

TEST_CASE("constructions separate random worlds") {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const World w = random_world({5, 3, 4, 8}, rng);
    const std::size_t delta = w.max_arity();
    const std::size_t dim = std::max(delta * w.facts.size(), delta);
    for (const Model& m : {construct_hype(w), construct_hsimple(w)}) {
      CHECK(m.config().dim == dim);
      const auto rep = verify_separation(m, w);
      CHECK(rep.passed);
      CHECK(rep.violations == 0);
      CHECK(oracle_separates(m, w));
    }
  }
}

TEST_CASE("hsimple construction at delta 2 agrees with the simple scorer") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const World w = random_world({4, 2, 2, 5}, rng);
    const Model h = construct_hsimple(w);
    auto c = h.config();
    c.kind = ModelKind::RSimplE;
    Model s(c);
    s.entities() = h.entities();
    s.relations() = h.relations();
    for (RelationId r = 0; r < w.arities.size(); ++r) {
      if (w.arities[r] != 2) continue;
      for (EntityId a = 0; a < 4; ++a) {
        for (EntityId b = 0; b < 4; ++b) CHECK(h.score(Fact{r, {a, b}}) == s.score(Fact{r, {a, b}}));
      }
    }
  }
}

TEST_CASE("full world scores one everywhere") {
  World w{3, {2}, {}};
  for (EntityId a = 0; a < 3; ++a) {
    for (EntityId b = 0; b < 3; ++b) w.facts.push_back(Fact{0, {a, b}});
  }
  for (const Model& m : {construct_hype(w), construct_hsimple(w)}) {
    const auto rep = verify_separation(m, w);
    CHECK(rep.passed);
    for (EntityId a = 0; a < 3; ++a) CHECK(m.score(Fact{0, {a, 2}}) == 1.0);
  }
}

TEST_CASE("perturbing a construction is caught") {
  Rng rng(3);
  std::size_t caught = 0, tried = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const World w = random_world({5, 3, 3, 6}, rng);
    for (Model m : {construct_hype(w), construct_hsimple(w)}) {
      // Perturb a nonzero entity entry so the change reaches a true fact.
      auto vals = m.entities().values();
      std::vector<std::size_t> nonzero;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i] != 0.0) nonzero.push_back(i);
      }
      if (nonzero.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, nonzero.size() - 1);
      vals[nonzero[pick(rng)]] += 0.25;
      ++tried;
      const auto rep = verify_separation(m, w);
      if (!rep.passed) {
        ++caught;
        CHECK(rep.first_violator.has_value());
      }
    }
  }
  CHECK(caught == tried);
}

TEST_CASE("enumeration bound") {
  World w{10, {4, 4}, {}};
  CHECK(enumeration_count(w) == 20000);
  const Model m = construct_hype(w);
  CHECK_THROWS_AS(verify_separation(m, w, 19999), ConfigError);
  CHECK_NOTHROW(verify_separation(m, w, 20000));
}

TEST_CASE("world validation") {
  CHECK_THROWS_AS(construct_hype(World{3, {2}, {Fact{0, {0, 1, 2}}}}), DataError);
  CHECK_THROWS_AS(construct_hype(World{3, {2}, {Fact{0, {0, 5}}}}), DataError);
  CHECK_THROWS_AS(construct_hype(World{3, {2}, {Fact{0, {0, 1}}, Fact{0, {0, 1}}}}), DataError);
  Vocab v;
  const auto facts = parse_facts("r\ta\tb\nr\ta\tb\ns\tc\n", v);
  const World w = world_from_facts(v, facts);
  CHECK(w.facts.size() == 2);
  CHECK(w.num_entities == 3);
}

TEST_CASE("report summary names the violator") {
  World w{2, {1}, {Fact{0, {0}}}};
  Model m = construct_hsimple(w);
  m.relations()(0, 0) = 2.0;
  Vocab v;
  v.add_entity("x");
  v.add_entity("y");
  v.add_relation("p", 1);
  const auto rep = verify_separation(m, w);
  CHECK_FALSE(rep.passed);
  CHECK(rep.summary(&v).find("FAIL dim=1") == 0);
  CHECK(rep.summary(&v).find("first_violator=p\tx") != std::string::npos);
}
