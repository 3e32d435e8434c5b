#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lambada/baselines.hpp"
#include "lambada/classify.hpp"
#include "lambada/condlm.hpp"
#include "lambada/corpus.hpp"
#include "lambada/lambada.hpp"

namespace lambada {

// ---------------------------------------------------------------- statistics

struct McNemarResult {
  /// Pairs where A is correct and B is wrong.
  std::size_t b = 0;
  /// Pairs where A is wrong and B is correct.
  std::size_t c = 0;
  /// Exact two-sided binomial p-value on the discordant pairs.
  double p_value = 1.0;
  double threshold = 0.01;
  bool significant = false;
  /// Continuity-corrected chi-square statistic and its p-value (secondary).
  double chi_square = 0.0;
  double chi_square_p = 1.0;
};

/// min(1, 2 * sum_{k <= min(b,c)} C(b+c, k) / 2^(b+c)); 1 when b + c = 0.
double mcnemar_exact_p(std::size_t b, std::size_t c);
/// (|b - c| - 1)^2 / (b + c) with one degree of freedom.
double mcnemar_chi_square(std::size_t b, std::size_t c);

McNemarResult mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b,
                           double threshold = 0.01);

/// 100 * (method - baseline) / baseline; throws when baseline is 0.
double improvement_percent(double baseline_acc, double method_acc);

// ---------------------------------------------------------------- experiment grid

enum class Method { baseline, lambada, eda, weak_label, gpt_unlabeled };

std::string to_string(Method m);
Method method_from_string(std::string_view s);

struct GeneratorSpec {
  enum class Kind { ngram, external } kind = Kind::ngram;
  NGramOptions ngram;
  /// Unlabeled sentences merged into the n-gram counts at ngram.prior_weight.
  std::string prior_path;
  /// Shell command that launches an external adapter.
  std::string command;
  int timeout_ms = 30000;
};

struct ExperimentConfig {
  std::string dataset_path;
  /// When set, the dataset is the training pool and this file is the shared
  /// test set; otherwise the dataset is split by `split`.
  std::string test_path;
  SplitSpec split;
  std::vector<ClassifierSpec> classifiers = {ClassifierSpec{}};
  GeneratorSpec generator;
  std::vector<Method> methods = {Method::baseline, Method::lambada};
  std::vector<std::size_t> samples_per_class = {5};
  std::vector<std::uint64_t> seeds = {1};

  /// Per-class synthesis target N_y; `balance_to` > 0 uses plan_balanced instead.
  std::size_t plan_per_class = 20;
  std::size_t balance_to = 0;
  std::size_t oversample_factor = 10;
  FilterOptions filter;
  GenerationParams generation;

  /// Unlabeled originals per class for the weak_label arm.
  std::size_t unlabeled_per_class = 20;
  EdaParams eda;
  std::string lexicon_path;

  double threshold = 0.01;
  std::size_t jobs = 1;

  /// Every problem found, so callers can report them together.
  std::vector<std::string> validation_errors() const;
};

/// Everything a grid needs in memory.
struct ExperimentData {
  Dataset pool;
  Dataset test;
  std::vector<std::string> prior;
  SynonymLexicon lexicon;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct RunResult {
  Method method = Method::baseline;
  std::string classifier;
  std::size_t samples_per_class = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<bool> correct;
  std::optional<FilterReport> filter;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct CellSummary {
  std::size_t samples_per_class = 0;
  std::string classifier;
  Method method = Method::baseline;
  double mean_accuracy = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::optional<double> improvement;
  /// Method (A) vs baseline (B) on bitmaps pooled over seeds.
  std::optional<McNemarResult> vs_baseline;
};

struct GridResult {
  std::vector<std::size_t> samples_per_class;
  std::vector<std::string> classifiers;
  std::vector<Method> methods;
  double threshold = 0.01;
  std::vector<RunResult> runs;
  std::vector<CellSummary> summary;

  const CellSummary* cell(std::size_t k, std::string_view classifier, Method m) const;
};

/// Factory for the G slot; called once per (sample size, seed) cell group.
using GeneratorFactory = std::function<std::unique_ptr<ConditionalGenerator>()>;

GeneratorFactory make_generator_factory(const GeneratorSpec& spec, const std::vector<std::string>& prior);

GridResult run_experiment_grid(const ExperimentConfig& cfg);
GridResult run_experiment_grid(const ExperimentConfig& cfg, const ExperimentData& data,
                               const GeneratorFactory& make_generator = {});

/// Aggregates per-cell means and pooled McNemar tests against the baseline.
std::vector<CellSummary> summarize(const GridResult& grid);

enum class ReportFormat { text, csv, json };

ReportFormat report_format_from_string(std::string_view s);
std::string extension(ReportFormat f);

/// Byte-identical for identical results.
std::string emit_report(const GridResult& grid, ReportFormat format);
void write_report(const std::filesystem::path& path, const GridResult& grid, ReportFormat format);

/// Reads back the summary rows of a CSV report.
std::vector<CellSummary> parse_summary_csv(std::string_view csv);

/// Full results (runs with bitmaps and summary) as JSON and back.
std::string grid_to_json(const GridResult& grid);
GridResult grid_from_json(std::string_view text);

}  // namespace lambada
