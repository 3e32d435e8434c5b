#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lambada/classify.hpp"
#include "lambada/condlm.hpp"
#include "lambada/corpus.hpp"

namespace lambada {

struct FilterOptions {
  /// Keep a candidate only when the baseline classifier agrees with its label.
  bool require_label_agreement = true;
  bool exclude_truncated = false;
  /// Drop exact (detokenized) repeats of training sentences and earlier candidates.
  bool dedup = true;
};

struct AugmentationPlan {
  /// N_y indexed by class id - 1.
  std::vector<std::size_t> per_class;
  std::size_t oversample_factor = 10;
  GenerationParams generation;
  FilterOptions filter;
  std::uint64_t seed = 0;

  std::size_t total_target() const;
  std::size_t target(ClassId y) const { return per_class.at(static_cast<std::size_t>(y - 1)); }
  void validate() const;
};

/// N_y = max(0, target - n_y) per class.
AugmentationPlan plan_balanced(const Dataset& d, std::size_t target_per_class);
/// The same N for every class.
AugmentationPlan plan_uniform(std::size_t num_classes, std::size_t per_class);

enum class Verdict { pending, retained, label_mismatch, low_rank, duplicate, truncated };

std::string to_string(Verdict v);

struct Candidate {
  LabeledSentence sentence;
  bool truncated = false;
  std::uint64_t gen_seed = 0;
  /// Generation index within its class.
  std::size_t index = 0;
  std::optional<double> confidence;
  std::optional<ClassId> predicted;
  Verdict verdict = Verdict::pending;
};

/// Candidates grouped by class id, each group in generation order.
struct SynthesizedPool {
  LabelMap labels;
  std::vector<Candidate> candidates;

  std::size_t count(ClassId y) const;
};

struct ClassFilterStats {
  ClassId label = 0;
  std::string name;
  std::size_t target = 0;
  std::size_t generated = 0;
  std::size_t mismatch = 0;
  std::size_t duplicates = 0;
  std::size_t truncated_excluded = 0;
  std::size_t ranked = 0;
  std::size_t retained = 0;
  std::size_t shortfall = 0;
  std::optional<double> min_confidence;
  std::optional<double> max_confidence;
};

struct FilterReport {
  std::vector<ClassFilterStats> classes;

  std::size_t total_generated() const;
  std::size_t total_retained() const;
  std::string to_json() const;
  static FilterReport from_json(std::string_view text);
};

/// Writes candidates as JSONL with `text`, `label`, `truncated`, `gen_seed`
/// (plus `confidence` and `verdict` once filtered).
void write_pool_jsonl(std::ostream& out, const SynthesizedPool& pool);

/// Draws oversample_factor * N_y candidates for every class. Candidate seeds
/// derive from (plan seed, class id, index).
SynthesizedPool synthesize_pool(ConditionalGenerator& g, const LabelMap& labels, const AugmentationPlan& plan);

struct FilterOutcome {
  Dataset synthesized;
  FilterReport report;
  /// Input pool with confidence, prediction and verdict filled in.
  SynthesizedPool pool;
};

/// Verify-then-rank filter: keep the top N_y candidates of class y that the
/// classifier assigns to y, ranked by its confidence.
FilterOutcome filter_pool(const SynthesizedPool& pool, const ClassifierModel& h, const AugmentationPlan& plan,
                          const Dataset* train = nullptr);

struct LambadaResult {
  Dataset synthesized;
  FilterReport report;
  ClassifierModel baseline;
  SynthesizedPool pool;
};

/// Train h on d, adapt g to d, synthesize, filter. Component failures are
/// rethrown as StageError.
LambadaResult run_lambada(const Dataset& d, const ClassifierSpec& classifier, ConditionalGenerator& g,
                          const AugmentationPlan& plan);

struct IterationRound {
  int round = 0;
  Dataset synthesized;
  FilterReport report;
  double validation_accuracy = 0.0;
};

struct IterateOptions {
  int rounds = 1;
  /// Stop once validation accuracy falls more than this below the previous round.
  double drift_tolerance = 0.0;
};

/// True when `current` dropped more than `tolerance` below `previous`.
bool drift_detected(double previous, double current, double tolerance);

struct IterateResult {
  double baseline_validation_accuracy = 0.0;
  std::vector<IterationRound> rounds;
  bool stopped_by_drift = false;
};

/// Round r runs the pipeline on d plus every earlier retained set and
/// evaluates A(that union plus the new retained set) on `validation`.
IterateResult iterate(const Dataset& d, const Dataset& validation, const ClassifierSpec& classifier,
                      ConditionalGenerator& g, const AugmentationPlan& plan, const IterateOptions& opts);

}  // namespace lambada
