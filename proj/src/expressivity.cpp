#include "hypekit/expressivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hypekit/error.hpp"

namespace hypekit {

std::size_t World::max_arity() const noexcept {
  std::size_t m = 1;
  for (auto a : arities) m = std::max(m, a);
  return m;
}

void World::validate() const {
  FactSet seen;
  for (const auto& f : facts) {
    if (f.relation >= arities.size()) throw DataError("world fact has unknown relation");
    if (f.arity() != arities[f.relation]) throw DataError("world fact has wrong arity");
    for (EntityId e : f.entities) {
      if (e >= num_entities) throw DataError("world fact has unknown entity");
    }
    if (!seen.insert(f).second) throw DataError("world lists a fact twice");
  }
}

World world_from_facts(const Vocab& vocab, const std::vector<Fact>& facts) {
  World w;
  w.num_entities = vocab.num_entities();
  w.arities = vocab.arities();
  FactSet seen;
  for (const auto& f : facts) {
    if (seen.insert(f).second) w.facts.push_back(f);
  }
  w.validate();
  return w;
}

World random_world(const RandomWorldSpec& spec, Rng& rng) {
  if (spec.entities == 0 || spec.relations == 0 || spec.max_arity == 0) {
    throw ConfigError("random world needs at least one entity, relation and position");
  }
  World w;
  w.num_entities = spec.entities;
  std::uniform_int_distribution<std::size_t> arity(1, spec.max_arity);
  for (std::size_t r = 0; r < spec.relations; ++r) {
    w.arities.push_back(r == 0 ? spec.max_arity : arity(rng));
  }
  const std::size_t possible = enumeration_count(w);
  const std::size_t target = std::min(spec.facts, possible);
  std::uniform_int_distribution<std::size_t> rel(0, spec.relations - 1);
  std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(spec.entities - 1));
  FactSet seen;
  while (w.facts.size() < target) {
    Fact f;
    f.relation = static_cast<RelationId>(rel(rng));
    for (std::size_t i = 0; i < w.arities[f.relation]; ++i) f.entities.push_back(ent(rng));
    if (seen.insert(f).second) w.facts.push_back(std::move(f));
  }
  return w;
}

Model construct_hype(const World& world) {
  world.validate();
  const std::size_t delta = world.max_arity();
  const std::size_t tau = world.facts.size();

  ModelConfig mc;
  mc.kind = ModelKind::HypE;
  mc.num_entities = world.num_entities;
  mc.num_relations = world.arities.size();
  mc.max_arity = delta;
  mc.filters = 1;
  mc.filter_len = delta;
  mc.stride = delta;
  mc.dim = tau == 0 ? delta : delta * tau;
  mc.rel_dim = tau == 0 ? delta : tau;
  Model model(mc);
  if (tau == 0) return model;

  for (std::size_t p = 0; p < tau; ++p) {
    const Fact& f = world.facts[p];
    for (std::size_t i = 0; i < f.arity(); ++i) model.entities()(f.entities[i], p * delta + i) = 1.0;
    model.relations()(f.relation, p) = 1.0;
  }
  for (std::size_t i = 0; i < delta; ++i) model.filters()(i, i) = 1.0;
  for (std::size_t p = 0; p < tau; ++p) model.projection()(p, p) = 1.0;
  return model;
}

Model construct_hsimple(const World& world) {
  world.validate();
  const std::size_t delta = world.max_arity();
  const std::size_t tau = world.facts.size();

  ModelConfig mc;
  mc.kind = ModelKind::HSimplE;
  mc.num_entities = world.num_entities;
  mc.num_relations = world.arities.size();
  mc.max_arity = delta;
  mc.dim = tau == 0 ? delta : delta * tau;
  Model model(mc);

  for (std::size_t p = 0; p < tau; ++p) {
    const Fact& f = world.facts[p];
    for (std::size_t j = 0; j < f.arity(); ++j) model.entities()(f.entities[j], j * tau + p) = 1.0;
    model.relations()(f.relation, p) = 1.0;
  }
  return model;
}

std::size_t enumeration_count(const World& world) {
  std::size_t total = 0;
  for (auto k : world.arities) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (world.num_entities != 0 && n > SIZE_MAX / world.num_entities) return SIZE_MAX;
      n *= world.num_entities;
    }
    if (total > SIZE_MAX - n) return SIZE_MAX;
    total += n;
  }
  return total;
}

SeparationReport verify_separation(const Model& model, const World& world, std::size_t bound,
                                   double tolerance) {
  world.validate();
  const std::size_t count = enumeration_count(world);
  if (count > bound) {
    throw ConfigError("enumeration needs " + std::to_string(count) + " tuples, above the bound " +
                      std::to_string(bound));
  }
  const FactSet truth(world.facts.begin(), world.facts.end());
  SeparationReport rep;
  rep.dimension = model.config().dim;
  rep.relation_dimension = model.config().relation_dim();

  for (RelationId r = 0; r < world.arities.size(); ++r) {
    const std::size_t k = world.arities[r];
    if (world.num_entities == 0) continue;
    Fact f{r, std::vector<EntityId>(k, 0)};
    while (true) {
      const double phi = model.score(f);
      const bool is_true = truth.contains(f);
      const double expected = is_true ? 1.0 : 0.0;
      ++rep.tuples_checked;
      if (!(std::abs(phi - expected) <= tolerance)) {
        if (rep.violations == 0) {
          rep.first_violator = f;
          rep.violator_score = phi;
          rep.violator_is_true = is_true;
        }
        ++rep.violations;
      }
      // odometer increment
      std::size_t i = 0;
      while (i < k && ++f.entities[i] == world.num_entities) f.entities[i++] = 0;
      if (i == k) break;
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

std::string SeparationReport::summary(const Vocab* vocab) const {
  std::ostringstream out;
  out << (passed ? "PASS" : "FAIL") << " dim=" << dimension << " rel_dim=" << relation_dimension
      << " tuples=" << tuples_checked << " violations=" << violations;
  if (first_violator) {
    out << " first_violator=";
    if (vocab != nullptr) {
      out << format_fact(*first_violator, *vocab);
    } else {
      out << "r" << first_violator->relation << "(";
      for (std::size_t i = 0; i < first_violator->arity(); ++i) {
        out << (i ? "," : "") << first_violator->entities[i];
      }
      out << ")";
    }
    out << " score=" << violator_score << " expected=" << (violator_is_true ? 1 : 0);
  }
  return out.str();
}

}  // namespace hypekit
