#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "hypekit/conversions.hpp"
#include "hypekit/data.hpp"
#include "hypekit/error.hpp"

namespace hypekit {
namespace {

bool is_reserved(std::string_view name) {
  return name.find("__") != std::string_view::npos || name.starts_with(kAuxPrefix);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::vector<Fact> parse_facts(std::istream& in, Vocab& vocab, const ParseOptions& opts) {
  std::vector<Fact> facts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;

    const auto fields = split_tabs(view);
    if (fields.size() < 2) {
      throw ParseError("expected a relation name and at least one entity", lineno);
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].empty()) {
        throw ParseError(i == 0 ? "empty relation field"
                                : "empty entity field at position " + std::to_string(i),
                         lineno);
      }
      if (!opts.allow_reserved && is_reserved(fields[i])) {
        throw ParseError("name '" + std::string(fields[i]) +
                             "' uses a reserved pattern ('__' or the '_aux_' prefix)",
                         lineno);
      }
    }

    Fact fact;
    const std::size_t arity = fields.size() - 1;
    try {
      fact.relation = vocab.add_relation(fields[0], arity);
    } catch (const ArityConflictError& e) {
      throw ArityConflictError(e.what(), lineno);
    }
    fact.entities.reserve(arity);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      fact.entities.push_back(vocab.add_entity(fields[i]));
    }
    facts.push_back(std::move(fact));
  }
  return facts;
}

std::vector<Fact> parse_facts(std::string_view text, Vocab& vocab, const ParseOptions& opts) {
  std::istringstream in{std::string(text)};
  return parse_facts(in, vocab, opts);
}

std::vector<Fact> read_fact_file(const std::filesystem::path& path, Vocab& vocab,
                                 const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return parse_facts(in, vocab, opts);
  } catch (const ArityConflictError& e) {
    throw ArityConflictError(path.string() + ": " + e.what(), e.line());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_facts(std::ostream& out, const std::vector<Fact>& facts, const Vocab& vocab) {
  for (const auto& f : facts) out << format_fact(f, vocab) << '\n';
}

void write_fact_file(const std::filesystem::path& path, const std::vector<Fact>& facts,
                     const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_facts(out, facts, vocab);
}

FactSet Dataset::all_facts() const {
  FactSet known;
  known.reserve(train.size() + valid.size() + test.size());
  for (const auto* part : {&train, &valid, &test}) known.insert(part->begin(), part->end());
  return known;
}

void Dataset::validate() const {
  auto check = [this](const std::vector<Fact>& facts, const char* split) {
    for (const auto& f : facts) {
      if (f.relation >= vocab.num_relations()) {
        throw DataError(std::string(split) + ": relation id out of range");
      }
      if (f.arity() != vocab.arity(f.relation)) {
        throw DataError(std::string(split) + ": fact arity disagrees with relation '" +
                        vocab.relation_name(f.relation) + "'");
      }
      for (EntityId e : f.entities) {
        if (e >= vocab.num_entities()) {
          throw DataError(std::string(split) + ": entity id out of range");
        }
      }
    }
  };
  check(train, "train");
  check(valid, "valid");
  check(test, "test");

  const FactSet train_set(train.begin(), train.end());
  const FactSet valid_set(valid.begin(), valid.end());
  for (const auto& f : valid) {
    if (train_set.contains(f)) {
      throw DataError("fact in both train and valid: " + format_fact(f, vocab));
    }
  }
  for (const auto& f : test) {
    if (train_set.contains(f) || valid_set.contains(f)) {
      throw DataError("test fact also in train/valid: " + format_fact(f, vocab));
    }
  }
}

Dataset load_dataset(const std::filesystem::path& dir, const ParseOptions& opts) {
  Dataset ds;
  const auto train_path = dir / "train.txt";
  if (!std::filesystem::exists(train_path)) {
    throw DataError("missing " + train_path.string());
  }
  ds.train = read_fact_file(train_path, ds.vocab, opts);
  if (auto p = dir / "valid.txt"; std::filesystem::exists(p)) {
    ds.valid = read_fact_file(p, ds.vocab, opts);
  }
  if (auto p = dir / "test.txt"; std::filesystem::exists(p)) {
    ds.test = read_fact_file(p, ds.vocab, opts);
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  write_fact_file(dir / "train.txt", ds.train, ds.vocab);
  if (!ds.valid.empty()) write_fact_file(dir / "valid.txt", ds.valid, ds.vocab);
  if (!ds.test.empty()) write_fact_file(dir / "test.txt", ds.test, ds.vocab);
}

std::vector<Fact> missing_positions_subset(const std::vector<Fact>& train,
                                           const std::vector<Fact>& test) {
  std::set<std::pair<EntityId, std::size_t>> seen;
  for (const auto& f : train) {
    for (std::size_t i = 0; i < f.arity(); ++i) seen.emplace(f.entities[i], i + 1);
  }
  std::vector<Fact> out;
  for (const auto& f : test) {
    for (std::size_t i = 0; i < f.arity(); ++i) {
      if (!seen.contains({f.entities[i], i + 1})) {
        out.push_back(f);
        break;
      }
    }
  }
  return out;
}

std::pair<std::vector<Fact>, std::vector<Fact>> holdout_split(const std::vector<Fact>& facts,
                                                               double fraction,
                                                               std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> order(facts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_out = static_cast<std::size_t>(fraction * static_cast<double>(facts.size()));
  std::vector<bool> held(facts.size(), false);
  for (std::size_t i = 0; i < n_out; ++i) held[order[i]] = true;

  std::pair<std::vector<Fact>, std::vector<Fact>> parts;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    (held[i] ? parts.second : parts.first).push_back(facts[i]);
  }
  return parts;
}

}  // namespace hypekit
