#pragma once

// Structural conversions between knowledge hypergraphs and binary graphs.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hypekit/data.hpp"

namespace hypekit {

inline constexpr std::string_view kAuxPrefix = "_aux_";

/// "<base>__pos<i>", the relation linking an auxiliary entity to position i.
std::string position_relation_name(std::string_view base, std::size_t position);
/// "<base>__pair<i>_<j>", the clique relation for positions i < j.
std::string pair_relation_name(std::string_view base, std::size_t i, std::size_t j);

/// Replaces every fact of arity k >= 3 by k binary facts r__pos<i>(aux, e_i)
/// through a fresh auxiliary entity "_aux_<n>" (n counts up from the first
/// unused index in `vocab`). Facts of arity <= 2 pass through.
std::vector<Fact> reify(const std::vector<Fact>& facts, Vocab& vocab);

/// Registers r__pos<i> for every relation of arity >= 3 already in `vocab`.
void register_position_relations(Vocab& vocab);

/// Replaces every fact of arity k >= 3 by C(k,2) binary facts
/// r__pair<i>_<j>(e_i, e_j), i < j. Facts of arity <= 2 pass through.
std::vector<Fact> star_to_clique(const std::vector<Fact>& facts, Vocab& vocab);

/// True when the whole name parses as a decimal number ("12", "-3.5", "1e3").
bool is_numeric_name(std::string_view name);

struct InverseReifyOptions {
  /// Identifies auxiliary entities; defaults to the "_aux_" prefix.
  std::function<bool(std::string_view)> is_aux;
  /// Collect malformed groups instead of throwing MalformedGroupError.
  bool skip_bad = false;
  /// Drop rebuilt facts that mention a numeric entity.
  bool drop_numeric = true;
  /// Separator before the position number in relation names: "r__pos1", or
  /// "r_0" with infix "_". Positions may count from 0 or from 1.
  std::string position_infix = "__pos";
};

struct InverseReifyResult {
  std::vector<Fact> facts;
  std::size_t dropped_unary = 0;
  std::size_t dropped_numeric = 0;
  std::size_t dropped_singleton_groups = 0;
  std::vector<std::string> malformed;  // one message per bad group
};

/// Rebuilds k-ary facts from reified triples. Triples whose first argument is
/// an auxiliary entity are grouped per auxiliary entity; each group becomes
/// one fact ordered by the relations' position suffixes. Other binary facts
/// pass through; unary facts are dropped. Output names go into `out_vocab`.
InverseReifyResult inverse_reify(const std::vector<Fact>& triples, const Vocab& in_vocab,
                                 Vocab& out_vocab, const InverseReifyOptions& opts = {});

using NameSet = std::unordered_set<std::string>;

/// One name per line; blank lines skipped.
NameSet read_allowlist(std::istream& in);
NameSet read_allowlist(const std::filesystem::path& path);

/// Keeps facts whose relation is allowed and whose entities are all allowed.
/// A null list allows everything.
std::vector<Fact> filter_by_allowlist(const std::vector<Fact>& facts, const Vocab& vocab,
                                      const NameSet* entity_allow,
                                      const NameSet* relation_allow);

}  // namespace hypekit
