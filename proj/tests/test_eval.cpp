#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include <json.hpp>

#include "lambada/eval.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_grammar.hpp"

using namespace lambada;

namespace {

// Two-sided exact tail by enumerating all 2^n outcomes of n fair coins.
double brute_force_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const std::size_t lo = std::min(b, c);
  std::uint64_t tail = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask)
    if (static_cast<std::size_t>(std::popcount(mask)) <= lo) ++tail;
  return std::min(1.0, 2.0 * static_cast<double>(tail) / static_cast<double>(std::uint64_t{1} << n));
}

std::vector<bool> bits(const std::string& s) {
  std::vector<bool> v;
  for (char ch : s) v.push_back(ch == '1');
  return v;
}

ExperimentData toy_data() {
  ExperimentData d;
  d.pool = toy::make_dataset(60, 11);
  d.test = toy::make_dataset(40, 22);
  d.prior = toy::make_prior(500, 33);
  return d;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dataset_path = "in-memory";
  cfg.methods = {Method::baseline, Method::lambada, Method::eda};
  ClassifierSpec lr;
  lr.kind = ClassifierKind::logreg;
  lr.logreg.epochs = 50;
  cfg.classifiers = {ClassifierSpec{}, lr};
  cfg.samples_per_class = {5, 10};
  cfg.seeds = {1, 2, 3};
  cfg.plan_per_class = 5;
  cfg.generator.ngram.prior_weight = 1.0;
  return cfg;
}

class BrokenGenerator : public ConditionalGenerator {
 public:
  std::string name() const override { return "broken"; }
  void fit(const Dataset&) override { throw Error("adapter exploded"); }
  bool covers(ClassId) const override { return false; }
  std::vector<GeneratedSentence> generate(ClassId, std::size_t, std::uint64_t, const GenerationParams&) override {
    return {};
  }
};

}  // namespace

TEST_CASE("McNemar exact p matches brute-force enumeration for b + c <= 20") {
  double worst = 0.0;
  for (std::size_t n = 0; n <= 20; ++n)
    for (std::size_t b = 0; b <= n; ++b) worst = std::max(worst, std::abs(mcnemar_exact_p(b, n - b) - brute_force_p(b, n - b)));
  CHECK(worst <= 1e-12);
}

TEST_CASE("McNemar reference values") {
  CHECK(mcnemar_exact_p(0, 0) == 1.0);
  CHECK(mcnemar_exact_p(10, 2) == doctest::Approx(2.0 * (1 + 12 + 66) / 4096.0).epsilon(1e-14));
  CHECK(std::abs(mcnemar_exact_p(10, 2) - 0.0386) < 1e-4);
  CHECK(mcnemar_exact_p(5, 5) == 1.0);
  CHECK(mcnemar_exact_p(400, 300) > 0);
  CHECK(mcnemar_exact_p(400, 300) < 1e-3);
  CHECK(mcnemar_chi_square(10, 2) == doctest::Approx(49.0 / 12.0));
}

TEST_CASE("McNemar on bitmaps") {
  const auto a = bits("1111111111110000");
  const auto b = bits("0000000000110011");
  const McNemarResult r = mcnemar_test(a, b);
  CHECK(r.b == 10);
  CHECK(r.c == 2);
  CHECK(r.p_value == doctest::Approx(mcnemar_exact_p(10, 2)));
  CHECK_FALSE(r.significant);
  CHECK(mcnemar_test(a, b, 0.05).significant);
  const McNemarResult swapped = mcnemar_test(b, a);
  CHECK(swapped.b == 2);
  CHECK(swapped.p_value == r.p_value);
  CHECK(mcnemar_test(a, a).p_value == 1.0);
  CHECK_THROWS_AS(mcnemar_test(a, bits("1")), Error);
  CHECK_THROWS_AS(mcnemar_test({}, {}), Error);
}

TEST_CASE("improvement percent") {
  CHECK(std::abs(improvement_percent(35.6, 56.5) - 58.7) < 0.05);
  CHECK(std::abs(improvement_percent(60.3, 64.3) - 6.6) < 0.05);
  CHECK(improvement_percent(0.4, 0.4) == 0.0);
  CHECK(improvement_percent(0.5, 0.25) == doctest::Approx(-50.0));
  CHECK_THROWS_AS(improvement_percent(0.0, 0.5), Error);
}

TEST_CASE("method names") {
  CHECK(method_from_string("gpt-unlabeled") == Method::gpt_unlabeled);
  CHECK(method_from_string("weak_label") == Method::weak_label);
  CHECK(to_string(Method::eda) == "eda");
  CHECK_THROWS_AS(method_from_string("cvae"), Error);
}

TEST_CASE("baseline-only grid is the plain accuracy table") {
  const ExperimentData data = toy_data();
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::baseline};
  cfg.classifiers = {ClassifierSpec{}};
  const GridResult g = run_experiment_grid(cfg, data);
  REQUIRE(g.runs.size() == 6);
  for (const auto k : cfg.samples_per_class) {
    double sum = 0.0;
    for (const auto s : cfg.seeds) {
      const Dataset train = subsample_per_class(data.pool, k, derive_seed(s, {k, 1})).data;
      sum += accuracy(train_naive_bayes(train), data.test);
    }
    const CellSummary* cell = g.cell(k, "nb", Method::baseline);
    REQUIRE(cell);
    CHECK(cell->mean_accuracy == doctest::Approx(sum / 3.0).epsilon(1e-12));
    CHECK_FALSE(cell->vs_baseline.has_value());
  }
}

TEST_CASE("grid: determinism, job-count invariance, bitmaps") {
  const ExperimentData data = toy_data();
  ExperimentConfig cfg = small_config();
  const GridResult a = run_experiment_grid(cfg, data);
  cfg.jobs = 4;
  const GridResult b = run_experiment_grid(cfg, data);
  CHECK(grid_to_json(a) == grid_to_json(b));
  CHECK(emit_report(a, ReportFormat::text) == emit_report(b, ReportFormat::text));
  CHECK(a.runs.size() == 2 * 3 * 2 * 3);
  for (const auto& r : a.runs) {
    REQUIRE(r.ok());
    CHECK(r.correct.size() == data.test.size());
    const double mean = static_cast<double>(std::count(r.correct.begin(), r.correct.end(), true)) /
                        static_cast<double>(r.correct.size());
    CHECK(std::abs(mean - r.accuracy) < 1e-9);
    CHECK(r.filter.has_value() == (r.method == Method::lambada));
  }
}

TEST_CASE("pooled bitmap accuracy equals the mean of per-seed accuracies") {
  const GridResult g = run_experiment_grid(small_config(), toy_data());
  for (const auto& cell : g.summary) {
    std::size_t hits = 0, total = 0;
    for (const auto& r : g.runs)
      if (r.samples_per_class == cell.samples_per_class && r.classifier == cell.classifier && r.method == cell.method) {
        hits += static_cast<std::size_t>(std::count(r.correct.begin(), r.correct.end(), true));
        total += r.correct.size();
      }
    CHECK(static_cast<double>(hits) / static_cast<double>(total) == doctest::Approx(cell.mean_accuracy).epsilon(1e-12));
  }
}

TEST_CASE("run failures are recorded per cell and the grid continues") {
  ExperimentConfig cfg = small_config();
  cfg.classifiers = {ClassifierSpec{}};
  const GridResult g = run_experiment_grid(cfg, toy_data(), [] { return std::make_unique<BrokenGenerator>(); });
  const CellSummary* lam = g.cell(5, "nb", Method::lambada);
  const CellSummary* base = g.cell(5, "nb", Method::baseline);
  REQUIRE(lam);
  CHECK(lam->failures == 3);
  CHECK(lam->runs == 0);
  CHECK(base->runs == 3);
  for (const auto& r : g.runs)
    if (r.method == Method::lambada) CHECK(r.error.find("adapter exploded") != std::string::npos);
  CHECK(emit_report(g, ReportFormat::text).find("n/a") != std::string::npos);
}

TEST_CASE("report formats") {
  const GridResult g = run_experiment_grid(small_config(), toy_data());
  const std::string csv = emit_report(g, ReportFormat::csv);
  CHECK(csv.rfind("samples_per_class,classifier,method,mean_accuracy", 0) == 0);
  const auto rows = parse_summary_csv(csv);
  REQUIRE(rows.size() == g.summary.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].method == g.summary[i].method);
    CHECK(rows[i].classifier == g.summary[i].classifier);
    CHECK(rows[i].mean_accuracy == g.summary[i].mean_accuracy);
    CHECK(rows[i].runs == g.summary[i].runs);
    CHECK(rows[i].improvement.has_value() == g.summary[i].improvement.has_value());
    if (rows[i].improvement) CHECK(*rows[i].improvement == *g.summary[i].improvement);
    if (g.summary[i].vs_baseline) {
      REQUIRE(rows[i].vs_baseline);
      CHECK(rows[i].vs_baseline->p_value == g.summary[i].vs_baseline->p_value);
      CHECK(rows[i].vs_baseline->b == g.summary[i].vs_baseline->b);
    }
  }
  const auto j = nlohmann::json::parse(emit_report(g, ReportFormat::json));
  CHECK(j.is_object());
  CHECK(emit_report(g, ReportFormat::json) == emit_report(g, ReportFormat::json));
  CHECK_THROWS_AS(report_format_from_string("xml"), Error);

  const GridResult back = grid_from_json(grid_to_json(g));
  CHECK(grid_to_json(back) == grid_to_json(g));
  CHECK(emit_report(back, ReportFormat::csv) == csv);

  testing::TempDir dir;
  write_report(dir / "r.csv", g, ReportFormat::csv);
  CHECK(testing::read_file(dir / "r.csv") == csv);
}

TEST_CASE("significance star appears exactly below the threshold") {
  GridResult g = run_experiment_grid(small_config(), toy_data());
  for (double t : {1e-9, 0.01, 0.5, 1.0}) {
    g.threshold = t;
    g.summary = summarize(g);
    const std::string text = emit_report(g, ReportFormat::text);
    for (const auto& cell : g.summary) {
      if (!cell.vs_baseline) continue;
      CHECK(cell.vs_baseline->significant == (cell.vs_baseline->p_value < t));
    }
    std::size_t stars = 0, expect = 0;
    for (char ch : text) stars += ch == '*';
    for (const auto& cell : g.summary) expect += cell.vs_baseline && cell.vs_baseline->significant;
    // One '*' in the legend line.
    CHECK(stars == expect + 1);
  }
}

TEST_CASE("grid configuration errors") {
  ExperimentConfig cfg = small_config();
  cfg.methods.clear();
  CHECK_THROWS_AS(run_experiment_grid(cfg, toy_data()), Error);
  CHECK_FALSE(cfg.validation_errors().empty());

  ExperimentConfig bad;
  bad.seeds.clear();
  bad.samples_per_class = {0};
  bad.threshold = 2.0;
  const auto problems = bad.validation_errors();
  CHECK(problems.size() >= 4);
  bool names_dataset = false;
  for (const auto& p : problems) names_dataset = names_dataset || p.find("dataset") != std::string::npos;
  CHECK(names_dataset);
}

TEST_CASE("weak-label arm and gpt_unlabeled under label agreement") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::baseline, Method::lambada, Method::gpt_unlabeled, Method::weak_label};
  cfg.classifiers = {ClassifierSpec{}};
  cfg.samples_per_class = {5};
  const GridResult g = run_experiment_grid(cfg, toy_data());
  // With agreement on, every retained sentence already carries h's label.
  for (const auto s : cfg.seeds) {
    const RunResult *lam = nullptr, *gpt = nullptr;
    for (const auto& r : g.runs) {
      if (r.seed != s) continue;
      if (r.method == Method::lambada) lam = &r;
      if (r.method == Method::gpt_unlabeled) gpt = &r;
    }
    REQUIRE(lam);
    REQUIRE(gpt);
    CHECK(lam->correct == gpt->correct);
  }
  CHECK(g.cell(5, "nb", Method::weak_label)->runs == 3);
}
