#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hypekit/checkpoint.hpp"
#include "hypekit/error.hpp"
#include "hypekit/evaluation.hpp"
#include "support.hpp"

using namespace hypekit;

namespace {

Vocab names_for(const ModelConfig& c) {
  Vocab v;
  for (std::size_t e = 0; e < c.num_entities; ++e) v.add_entity("e" + std::to_string(e));
  for (std::size_t r = 0; r < c.num_relations; ++r) v.add_relation("r" + std::to_string(r), c.max_arity);
  return v;
}

std::string save(const Checkpoint& ck) {
  std::ostringstream out;
  save_checkpoint(out, ck);
  return out.str();
}

Checkpoint load(const std::string& bytes) {
  std::istringstream in(bytes);
  return load_checkpoint(in);
}

}  // namespace

TEST_CASE("f64 round trip is exact") {
  std::mt19937_64 rng(1);
  for (auto kind : {ModelKind::HypE, ModelKind::HSimplE, ModelKind::MDistMult, ModelKind::MCP,
                    ModelKind::RSimplE}) {
    const auto c = support::small_config(kind, 2, 6);
    const Model m = support::random_model(c, rng);
    const Checkpoint back = load(save({m, names_for(c), 42, Precision::F64}));
    CHECK(back.model == m);
    CHECK(back.seed == 42);
    CHECK(back.vocab == names_for(c));
    CHECK(back.precision == Precision::F64);
  }
}

TEST_CASE("f32 round trip rounds each value once") {
  std::mt19937_64 rng(2);
  const auto c = support::small_config(ModelKind::HypE, 3, 8);
  const Model m = support::random_model(c, rng);
  const Checkpoint back = load(save({m, names_for(c), 0, Precision::F32}));
  const auto a = const_cast<Model&>(m).parameter_blocks();
  const auto b = const_cast<Model&>(back.model).parameter_blocks();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      CHECK(b[i][j] == static_cast<double>(static_cast<float>(a[i][j])));
    }
  }
}

TEST_CASE("evaluation survives a round trip") {
  std::mt19937_64 rng(3);
  Vocab v;
  const auto facts = oracle::random_facts(v, rng, 10, {3}, 30);
  auto c = support::small_config(ModelKind::HSimplE, 3, 6, 10, 1);
  const Model m = support::random_model(c, rng);
  const FactSet known(facts.begin(), facts.end());
  const double mrr = evaluate(m, facts, known, 1).overall.mrr;
  const Checkpoint b64 = load(save({m, v, 0, Precision::F64}));
  CHECK(evaluate(b64.model, facts, known, 1).overall.mrr == mrr);
  const Checkpoint b32 = load(save({m, v, 0, Precision::F32}));
  CHECK(std::abs(evaluate(b32.model, facts, known, 1).overall.mrr - mrr) <= 1e-6);
}

TEST_CASE("saving is deterministic and the header is readable") {
  const auto c = support::small_config(ModelKind::MDistMult, 2, 3, 2, 1);
  Model m(c);
  const std::string bytes = save({m, names_for(c), 7, Precision::F32});
  CHECK(bytes == save({m, names_for(c), 7, Precision::F32}));
  const auto blank = bytes.find("\n\n");
  REQUIRE(blank != std::string::npos);
  const std::string header = bytes.substr(0, blank + 1);
  CHECK(header.rfind("hypekit-checkpoint 1\nmodel\tm-distmult\n", 0) == 0);
  CHECK(header.find("entity\te1\n") != std::string::npos);
  CHECK(header.find("relation\tr0\t2\n") != std::string::npos);
  CHECK(header.find("vocab_hash\t" + format_hash(names_for(c).hash()) + "\n") != std::string::npos);
  CHECK(bytes.size() - (blank + 2) == (2 * 3 + 1 * 3) * 4);
}

TEST_CASE("payload is little endian") {
  const auto c = support::small_config(ModelKind::MDistMult, 1, 1, 1, 1);
  Model m(c);
  m.entities()(0, 0) = 1.0;
  const std::string bytes = save({m, names_for(c), 0, Precision::F64});
  const std::string tail = bytes.substr(bytes.size() - 16, 8);
  CHECK(tail == std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST_CASE("corrupt files are refused") {
  const auto c = support::small_config(ModelKind::HSimplE, 2, 4, 3, 2);
  const Model m(c);
  const std::string good = save({m, names_for(c), 0, Precision::F32});
  CHECK_THROWS_AS(load(good.substr(0, good.size() - 1)), CheckpointError);
  CHECK_THROWS_AS(load(good + "x"), CheckpointError);
  CHECK_THROWS_AS(load("not a checkpoint\n"), CheckpointError);
  std::string bad_dim = good;
  bad_dim.replace(bad_dim.find("dim\t4"), 5, "dim\t3");
  CHECK_THROWS_AS(load(bad_dim), CheckpointError);
  std::string bad_name = good;
  bad_name.replace(bad_name.find("entity\te0"), 9, "entity\tz0");
  CHECK_THROWS_AS(load(bad_name), CheckpointError);
}

TEST_CASE("rows are remapped by name") {
  std::mt19937_64 rng(4);
  Vocab a;
  const auto fa = parse_facts("r\tx\ty\ns\ty\tz\n", a);
  Vocab b;
  (void)parse_facts("s\tz\ty\nr\ty\tx\n", b);
  auto c = support::small_config(ModelKind::HypE, 2, 4, 3, 2);
  const Model m = support::random_model(c, rng);
  const Checkpoint ck{m, a, 0, Precision::F64};
  const Model aligned = align_to_vocab(ck, b);
  for (const auto& f : fa) {
    Fact g{*b.find_relation(a.relation_name(f.relation)), {}};
    for (EntityId e : f.entities) g.entities.push_back(*b.find_entity(a.entity_name(e)));
    CHECK(aligned.score(g) == m.score(f));
  }

  Vocab other;
  (void)parse_facts("r\tx\ty\ns\ty\tw\n", other);
  try {
    (void)align_to_vocab(ck, other);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(format_hash(a.hash())) != std::string::npos);
    CHECK(msg.find(format_hash(other.hash())) != std::string::npos);
  }
}
