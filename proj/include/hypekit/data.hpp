#pragma once

// Knowledge hypergraph facts, vocabularies, and dataset files.
//
// Text format: UTF-8, one fact per line, tab-separated, relation name first
// followed by k >= 1 entity names. Blank lines are ignored.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace hypekit {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

/// One tuple r(e_1, ..., e_k). Positions are 1-indexed in the public API.
struct Fact {
  RelationId relation = 0;
  std::vector<EntityId> entities;

  std::size_t arity() const noexcept { return entities.size(); }
  auto operator<=>(const Fact&) const = default;
};

struct FactHash {
  std::size_t operator()(const Fact& f) const noexcept;
};

using FactSet = std::unordered_set<Fact, FactHash>;

/// Dense name <-> id tables for entities and relations plus the declared
/// arity of each relation.
class Vocab {
 public:
  /// Returns the existing id or appends a new entity.
  EntityId add_entity(std::string_view name);
  /// Returns the existing id or appends a new relation with the given arity.
  /// Throws ArityConflictError when the relation exists with another arity.
  RelationId add_relation(std::string_view name, std::size_t arity);

  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
  const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
  std::size_t arity(RelationId id) const { return arities_.at(id); }

  std::size_t num_entities() const noexcept { return entity_names_.size(); }
  std::size_t num_relations() const noexcept { return relation_names_.size(); }
  /// Maximum relation arity (delta); 0 for an empty vocabulary.
  std::size_t max_arity() const noexcept;

  const std::vector<std::string>& entity_names() const noexcept { return entity_names_; }
  const std::vector<std::string>& relation_names() const noexcept { return relation_names_; }
  const std::vector<std::size_t>& arities() const noexcept { return arities_; }

  /// 64-bit FNV-1a over the sorted entity names, then the sorted relation names.
  std::uint64_t hash() const;

  bool operator==(const Vocab&) const = default;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  using IdMap = std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>>;

  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::vector<std::size_t> arities_;
  IdMap entity_ids_;
  IdMap relation_ids_;
};

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Renders a fact with names, tab-separated, without a trailing newline.
std::string format_fact(const Fact& fact, const Vocab& vocab);

struct ParseOptions {
  /// Names containing "__" are reserved for generated relations; plain
  /// datasets reject them. Converted datasets set this to true.
  bool allow_reserved = false;
};

/// Parses fact lines into `vocab`, adding unseen names. The first arity a
/// relation is seen with becomes its declared arity.
std::vector<Fact> parse_facts(std::istream& in, Vocab& vocab, const ParseOptions& opts = {});
std::vector<Fact> parse_facts(std::string_view text, Vocab& vocab,
                              const ParseOptions& opts = {});
std::vector<Fact> read_fact_file(const std::filesystem::path& path, Vocab& vocab,
                                 const ParseOptions& opts = {});

void write_facts(std::ostream& out, const std::vector<Fact>& facts, const Vocab& vocab);
void write_fact_file(const std::filesystem::path& path, const std::vector<Fact>& facts,
                     const Vocab& vocab);

/// Vocabulary plus train/valid/test partitions.
struct Dataset {
  Vocab vocab;
  std::vector<Fact> train;
  std::vector<Fact> valid;
  std::vector<Fact> test;

  /// train + valid + test as a set, the "known facts" used for filtering.
  FactSet all_facts() const;
  /// Throws DataError when partitions overlap, ids fall outside the vocab,
  /// or a fact's arity disagrees with its relation.
  void validate() const;
};

/// Loads `<dir>/train.txt`, `<dir>/valid.txt` (optional) and `<dir>/test.txt`
/// (optional) into one vocabulary, in that order, then validates.
Dataset load_dataset(const std::filesystem::path& dir, const ParseOptions& opts = {});
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

/// Facts from `test` that contain at least one (entity, position) pair never
/// observed in `train`.
std::vector<Fact> missing_positions_subset(const std::vector<Fact>& train,
                                           const std::vector<Fact>& test);

/// Random holdout of `fraction` of `facts` (rounded down), seeded. Returns
/// {kept, held_out}; relative order inside each part is preserved.
std::pair<std::vector<Fact>, std::vector<Fact>> holdout_split(const std::vector<Fact>& facts,
                                                               double fraction,
                                                               std::uint64_t seed);

}  // namespace hypekit
