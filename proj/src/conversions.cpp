#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>

#include "hypekit/conversions.hpp"
#include "hypekit/error.hpp"

namespace hypekit {
namespace {

constexpr std::string_view kPosInfix = "__pos";

struct PositionSuffix {
  std::string base;
  std::size_t position;
};

std::optional<PositionSuffix> parse_position_relation(std::string_view name,
                                                     std::string_view infix = kPosInfix) {
  const auto at = name.rfind(infix);
  if (at == std::string_view::npos || at == 0) return std::nullopt;
  const auto digits = name.substr(at + infix.size());
  if (digits.empty()) return std::nullopt;
  std::size_t pos = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), pos);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    return std::nullopt;
  }
  return PositionSuffix{std::string(name.substr(0, at)), pos};
}

std::size_t first_free_aux_index(const Vocab& vocab) {
  std::size_t n = 0;
  while (vocab.find_entity(std::string(kAuxPrefix) + std::to_string(n))) ++n;
  return n;
}

}  // namespace

std::string position_relation_name(std::string_view base, std::size_t position) {
  return std::string(base) + std::string(kPosInfix) + std::to_string(position);
}

std::string pair_relation_name(std::string_view base, std::size_t i, std::size_t j) {
  return std::string(base) + "__pair" + std::to_string(i) + "_" + std::to_string(j);
}

void register_position_relations(Vocab& vocab) {
  const std::size_t n = vocab.num_relations();
  for (RelationId r = 0; r < n; ++r) {
    const std::size_t k = vocab.arity(r);
    if (k < 3) continue;
    const std::string base = vocab.relation_name(r);
    for (std::size_t i = 1; i <= k; ++i) vocab.add_relation(position_relation_name(base, i), 2);
  }
}

std::vector<Fact> reify(const std::vector<Fact>& facts, Vocab& vocab) {
  std::vector<Fact> out;
  std::size_t counter = first_free_aux_index(vocab);
  for (const auto& f : facts) {
    if (f.arity() <= 2) {
      out.push_back(f);
      continue;
    }
    std::string aux_name;
    do {
      aux_name = std::string(kAuxPrefix) + std::to_string(counter++);
    } while (vocab.find_entity(aux_name));
    const EntityId aux = vocab.add_entity(aux_name);
    const std::string base = vocab.relation_name(f.relation);
    for (std::size_t i = 0; i < f.arity(); ++i) {
      const RelationId r = vocab.add_relation(position_relation_name(base, i + 1), 2);
      out.push_back(Fact{r, {aux, f.entities[i]}});
    }
  }
  return out;
}

std::vector<Fact> star_to_clique(const std::vector<Fact>& facts, Vocab& vocab) {
  std::vector<Fact> out;
  for (const auto& f : facts) {
    if (f.arity() <= 2) {
      out.push_back(f);
      continue;
    }
    const std::string base = vocab.relation_name(f.relation);
    for (std::size_t i = 0; i < f.arity(); ++i) {
      for (std::size_t j = i + 1; j < f.arity(); ++j) {
        const RelationId r = vocab.add_relation(pair_relation_name(base, i + 1, j + 1), 2);
        out.push_back(Fact{r, {f.entities[i], f.entities[j]}});
      }
    }
  }
  return out;
}

bool is_numeric_name(std::string_view name) {
  if (name.empty()) return false;
  // from_chars also accepts "inf" and "nan".
  if (name.find_first_of("0123456789") == std::string_view::npos) return false;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), value);
  return ec == std::errc{} && ptr == name.data() + name.size();
}

InverseReifyResult inverse_reify(const std::vector<Fact>& triples, const Vocab& in_vocab,
                                 Vocab& out_vocab, const InverseReifyOptions& opts) {
  const auto is_aux = opts.is_aux ? opts.is_aux : [](std::string_view name) {
    return name.starts_with(kAuxPrefix);
  };

  // Output slots in order of first appearance; a slot is either a
  // pass-through binary fact or an auxiliary group.
  struct Member {
    EntityId entity;
    RelationId relation;
  };
  struct Slot {
    std::optional<Fact> passthrough;
    EntityId aux = 0;
    std::vector<Member> members;
  };
  std::vector<Slot> slots;
  std::unordered_map<EntityId, std::size_t> group_of;
  InverseReifyResult result;

  for (const auto& t : triples) {
    if (t.arity() < 2) {
      ++result.dropped_unary;
      continue;
    }
    const bool grouped = t.arity() == 2 && is_aux(in_vocab.entity_name(t.entities[0]));
    if (!grouped) {
      slots.push_back(Slot{t, 0, {}});
      continue;
    }
    auto [it, fresh] = group_of.try_emplace(t.entities[0], slots.size());
    if (fresh) slots.push_back(Slot{std::nullopt, t.entities[0], {}});
    slots[it->second].members.push_back(Member{t.entities[1], t.relation});
  }

  auto fail = [&](const std::string& msg) {
    if (!opts.skip_bad) throw MalformedGroupError(msg);
    result.malformed.push_back(msg);
  };

  for (auto& slot : slots) {
    Fact fact;
    std::string base;
    if (slot.passthrough) {
      const Fact& t = *slot.passthrough;
      base = in_vocab.relation_name(t.relation);
      for (EntityId e : t.entities) fact.entities.push_back(e);
    } else {
      const std::string& aux_name = in_vocab.entity_name(slot.aux);
      if (slot.members.size() == 1) {
        ++result.dropped_singleton_groups;
        continue;
      }
      std::map<std::size_t, EntityId> by_position;
      bool bad = false;
      for (const auto& m : slot.members) {
        const auto suffix =
            parse_position_relation(in_vocab.relation_name(m.relation), opts.position_infix);
        if (!suffix) {
          fail("group " + aux_name + ": relation '" + in_vocab.relation_name(m.relation) +
               "' has no position suffix");
          bad = true;
          break;
        }
        if (base.empty()) {
          base = suffix->base;
        } else if (base != suffix->base) {
          fail("group " + aux_name + ": mixes relations '" + base + "' and '" + suffix->base +
               "'");
          bad = true;
          break;
        }
        if (!by_position.emplace(suffix->position, m.entity).second) {
          fail("group " + aux_name + ": duplicate position " + std::to_string(suffix->position));
          bad = true;
          break;
        }
      }
      if (bad) continue;
      const std::size_t first = by_position.begin()->first;
      if (first > 1 || by_position.rbegin()->first - first + 1 != by_position.size()) {
        fail("group " + aux_name + ": positions are not contiguous from 0 or 1");
        continue;
      }
      for (const auto& [pos, e] : by_position) fact.entities.push_back(e);
    }

    if (opts.drop_numeric) {
      bool numeric = false;
      for (EntityId e : fact.entities) numeric = numeric || is_numeric_name(in_vocab.entity_name(e));
      if (numeric) {
        ++result.dropped_numeric;
        continue;
      }
    }
    try {
      fact.relation = out_vocab.add_relation(base, fact.entities.size());
    } catch (const ArityConflictError& e) {
      fail(e.what());
      continue;
    }
    for (auto& e : fact.entities) e = out_vocab.add_entity(in_vocab.entity_name(e));
    result.facts.push_back(std::move(fact));
  }
  return result;
}

NameSet read_allowlist(std::istream& in) {
  NameSet names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.insert(line);
  }
  return names;
}

NameSet read_allowlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open allowlist " + path.string());
  return read_allowlist(in);
}

std::vector<Fact> filter_by_allowlist(const std::vector<Fact>& facts, const Vocab& vocab,
                                      const NameSet* entity_allow,
                                      const NameSet* relation_allow) {
  std::vector<Fact> out;
  for (const auto& f : facts) {
    if (relation_allow && !relation_allow->contains(vocab.relation_name(f.relation))) continue;
    bool ok = true;
    if (entity_allow) {
      for (EntityId e : f.entities) ok = ok && entity_allow->contains(vocab.entity_name(e));
    }
    if (ok) out.push_back(f);
  }
  return out;
}

}  // namespace hypekit
