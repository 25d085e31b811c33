#pragma once

// Filtered ranking evaluation: MRR and Hit@{1,3,10}, overall and per arity.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hypekit/data.hpp"
#include "hypekit/models.hpp"
#include "hypekit/training.hpp"

namespace hypekit {

struct Metrics {
  std::size_t tasks = 0;
  double mrr = 0.0;
  double hit1 = 0.0;
  double hit3 = 0.0;
  double hit10 = 0.0;
};

struct EvalReport {
  Metrics overall;                          // overall.tasks is K
  std::map<std::size_t, Metrics> per_arity;  // keyed by arity
  std::size_t num_facts = 0;
};

/// Collects ranks as integer histograms, so the report does not depend on
/// the order in which tasks were ranked.
class RankAccumulator {
 public:
  void add(std::size_t arity, std::size_t rank);
  void merge(const RankAccumulator& other);
  void add_fact() { ++facts_; }
  /// Throws EmptyReportError when nothing was added.
  EvalReport report() const;

 private:
  std::map<std::size_t, std::map<std::size_t, std::size_t>> by_arity_;
  std::size_t facts_ = 0;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Candidate entities are ids [0, num_candidates()).
  virtual std::size_t num_candidates() const = 0;
  virtual double score(const Fact& fact) const = 0;
  /// out[e] = score of `fact` with the entity at `position` (1-indexed)
  /// replaced by e. The default calls score() per candidate.
  virtual void score_candidates(const Fact& fact, std::size_t position,
                                std::span<double> out) const;
};

/// Scorer over a trained model. For dotsum-form models the product of the
/// relation and the fixed positions is formed once per task; HypE caches
/// f(e, i) for every entity and position on first use.
class ModelScorer final : public Scorer {
 public:
  explicit ModelScorer(const Model& model, std::size_t num_candidates = 0);

  std::size_t num_candidates() const override { return candidates_; }
  double score(const Fact& fact) const override { return model_.score(fact); }
  void score_candidates(const Fact& fact, std::size_t position,
                        std::span<double> out) const override;

 private:
  const Matrix& transformed(std::size_t position) const;

  const Model& model_;
  std::size_t candidates_;
  mutable std::vector<Matrix> cache_;
  std::unique_ptr<std::once_flag[]> once_;
};

/// The corruptions of `fact` at `position` not present in `known`, plus
/// `fact` itself (last).
std::vector<Fact> filtered_candidates(const Fact& fact, std::size_t position,
                                      std::size_t num_entities, const FactSet& known);

/// 1 + number of unfiltered corruptions scoring strictly higher than `fact`.
std::size_t rank_of(const Scorer& scorer, const Fact& fact, std::size_t position,
                    const FactSet& known);

/// Ranks every position of every test fact. `threads` = 0 uses the hardware
/// concurrency. Throws EmptyReportError on an empty test set.
EvalReport evaluate(const Scorer& scorer, const std::vector<Fact>& test, const FactSet& known,
                    std::size_t threads = 0);
EvalReport evaluate(const Model& model, const std::vector<Fact>& test, const FactSet& known,
                    std::size_t threads = 0);

/// r-SimplE protocol. Facts of arity <= 2 are ranked directly in both
/// positions. A fact of arity k >= 3 is reified through a fresh auxiliary
/// entity; for each position i the auxiliary embedding is fitted on the
/// other k-1 reified facts and only the tail of r__pos<i>(aux, ?) is ranked,
/// filtered against `known` in the original hypergraph. Unary facts are
/// skipped. `model_vocab` must extend `base_vocab` (as reify_for_training does).
EvalReport evaluate_reified(const Model& model, const Vocab& base_vocab, const Vocab& model_vocab,
                            const std::vector<Fact>& test, const FactSet& known,
                            const AuxFitConfig& fit, std::uint64_t seed,
                            std::size_t threads = 0);

/// Tab-separated table: one "all" row and one "arity=k" row per arity.
std::string format_report_tsv(const EvalReport& report);
/// JSON object with the same numbers.
std::string format_report_json(const EvalReport& report);

}  // namespace hypekit
