#include <algorithm>
#include <string>

#include "hypekit/data.hpp"
#include "hypekit/error.hpp"

namespace hypekit {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t FactHash::operator()(const Fact& f) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  mix(f.relation);
  mix(f.entities.size());
  for (EntityId e : f.entities) mix(e);
  return static_cast<std::size_t>(h);
}

EntityId Vocab::add_entity(std::string_view name) {
  if (auto it = entity_ids_.find(name); it != entity_ids_.end()) return it->second;
  const auto id = static_cast<EntityId>(entity_names_.size());
  entity_names_.emplace_back(name);
  entity_ids_.emplace(std::string(name), id);
  return id;
}

RelationId Vocab::add_relation(std::string_view name, std::size_t arity) {
  if (auto it = relation_ids_.find(name); it != relation_ids_.end()) {
    if (arities_[it->second] != arity) {
      throw ArityConflictError("relation '" + std::string(name) + "' declared with arity " +
                                   std::to_string(arities_[it->second]) + ", seen with " +
                                   std::to_string(arity),
                               0);
    }
    return it->second;
  }
  const auto id = static_cast<RelationId>(relation_names_.size());
  relation_names_.emplace_back(name);
  arities_.push_back(arity);
  relation_ids_.emplace(std::string(name), id);
  return id;
}

std::optional<EntityId> Vocab::find_entity(std::string_view name) const {
  if (auto it = entity_ids_.find(name); it != entity_ids_.end()) return it->second;
  return std::nullopt;
}

std::optional<RelationId> Vocab::find_relation(std::string_view name) const {
  if (auto it = relation_ids_.find(name); it != relation_ids_.end()) return it->second;
  return std::nullopt;
}

std::size_t Vocab::max_arity() const noexcept {
  std::size_t m = 0;
  for (auto a : arities_) m = std::max(m, a);
  return m;
}

std::uint64_t Vocab::hash() const {
  auto sorted_e = entity_names_;
  auto sorted_r = relation_names_;
  std::sort(sorted_e.begin(), sorted_e.end());
  std::sort(sorted_r.begin(), sorted_r.end());
  std::uint64_t h = fnv1a64("entities\n");
  for (const auto& n : sorted_e) {
    h = fnv1a64(n, h);
    h = fnv1a64("\n", h);
  }
  h = fnv1a64("relations\n", h);
  for (const auto& n : sorted_r) {
    h = fnv1a64(n, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

std::string format_fact(const Fact& fact, const Vocab& vocab) {
  std::string out = vocab.relation_name(fact.relation);
  for (EntityId e : fact.entities) {
    out += '\t';
    out += vocab.entity_name(e);
  }
  return out;
}

}  // namespace hypekit
