#include "lambada/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lambada/extgen.hpp"
#include "lambada/random.hpp"

namespace lambada {

using json = nlohmann::json;

// ---------------------------------------------------------------- statistics

double mcnemar_exact_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const std::size_t m = std::min(b, c);
  // log C(n, k) - n ln 2, accumulated with a running max for stability.
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  std::vector<double> terms;
  terms.reserve(m + 1);
  for (std::size_t k = 0; k <= m; ++k)
    terms.push_back(lgn - std::lgamma(static_cast<double>(k) + 1.0) -
                    std::lgamma(static_cast<double>(n - k) + 1.0) + log_half_n);
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  const double tail = std::exp(top + std::log(sum));
  return std::min(1.0, 2.0 * tail);
}

double mcnemar_chi_square(std::size_t b, std::size_t c) {
  if (b + c == 0) return 0.0;
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  const double d = std::max(0.0, diff);
  return d * d / static_cast<double>(b + c);
}

McNemarResult mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b, double threshold) {
  if (correct_a.size() != correct_b.size())
    throw Error("McNemar needs equal-length bitmaps (" + std::to_string(correct_a.size()) + " vs " +
                std::to_string(correct_b.size()) + ")");
  if (correct_a.empty()) throw Error("McNemar needs at least one paired prediction");
  McNemarResult r;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    r.b += correct_a[i] && !correct_b[i];
    r.c += !correct_a[i] && correct_b[i];
  }
  r.p_value = mcnemar_exact_p(r.b, r.c);
  r.threshold = threshold;
  r.significant = r.p_value < threshold;
  r.chi_square = mcnemar_chi_square(r.b, r.c);
  r.chi_square_p = r.b + r.c == 0 ? 1.0 : std::erfc(std::sqrt(r.chi_square / 2.0));
  return r;
}

double improvement_percent(double baseline_acc, double method_acc) {
  if (!(baseline_acc > 0)) throw Error("improvement is undefined for a zero baseline accuracy");
  return 100.0 * (method_acc - baseline_acc) / baseline_acc;
}

// ---------------------------------------------------------------- config

std::string to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::lambada: return "lambada";
    case Method::eda: return "eda";
    case Method::weak_label: return "weak_label";
    case Method::gpt_unlabeled: return "gpt_unlabeled";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "baseline") return Method::baseline;
  if (s == "lambada") return Method::lambada;
  if (s == "eda") return Method::eda;
  if (s == "weak_label" || s == "weak-label") return Method::weak_label;
  if (s == "gpt_unlabeled" || s == "gpt-unlabeled") return Method::gpt_unlabeled;
  throw Error("unknown method '" + std::string(s) + "'");
}

std::vector<std::string> ExperimentConfig::validation_errors() const {
  std::vector<std::string> errs;
  if (dataset_path.empty()) errs.push_back("dataset path is missing");
  if (methods.empty()) errs.push_back("at least one method is required");
  if (seeds.empty()) errs.push_back("at least one seed is required");
  if (samples_per_class.empty()) errs.push_back("at least one samples-per-class value is required");
  for (auto k : samples_per_class)
    if (k == 0) errs.push_back("samples-per-class values must be >= 1");
  if (classifiers.empty()) errs.push_back("at least one classifier is required");
  if (test_path.empty()) {
    try {
      split.validate();
    } catch (const Error& e) {
      errs.push_back(e.what());
    }
    if (!(split.test > 0)) errs.push_back("split needs a non-zero test ratio when no test path is given");
  }
  if (oversample_factor < 1) errs.push_back("oversample factor must be >= 1");
  if (!(threshold > 0 && threshold < 1)) errs.push_back("significance threshold must lie in (0, 1)");
  if (!(generation.temperature > 0)) errs.push_back("temperature must be > 0");
  if (generation.max_len == 0) errs.push_back("max_len must be >= 1");
  if (generator.ngram.order < 2) errs.push_back("n-gram order must be >= 2");
  if (generator.kind == GeneratorSpec::Kind::external && generator.command.empty())
    errs.push_back("external generator needs a command");
  if (std::find(methods.begin(), methods.end(), Method::eda) != methods.end()) {
    try {
      eda.validate();
    } catch (const Error& e) {
      errs.push_back(e.what());
    }
  }
  return errs;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  if (auto errs = cfg.validation_errors(); !errs.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw Error(msg);
  }
  ExperimentData data;
  Dataset all = load_dataset(cfg.dataset_path);
  if (!cfg.test_path.empty()) {
    data.pool = std::move(all);
    data.test = load_dataset(cfg.test_path, &data.pool.labels);
  } else {
    Splits s = split_dataset(all, cfg.split);
    data.pool = std::move(s.train);
    data.test = std::move(s.test);
  }
  if (!cfg.generator.prior_path.empty()) data.prior = load_texts(cfg.generator.prior_path);
  if (!cfg.lexicon_path.empty()) data.lexicon = SynonymLexicon::load(cfg.lexicon_path);
  return data;
}

GeneratorFactory make_generator_factory(const GeneratorSpec& spec, const std::vector<std::string>& prior) {
  if (spec.kind == GeneratorSpec::Kind::external) {
    return [spec]() -> std::unique_ptr<ConditionalGenerator> {
      return std::make_unique<ExternalGenerator>(spec.command, std::chrono::milliseconds(spec.timeout_ms));
    };
  }
  return [spec, prior]() -> std::unique_ptr<ConditionalGenerator> {
    return std::make_unique<NGramGenerator>(spec.ngram, prior);
  };
}

// ---------------------------------------------------------------- grid

const CellSummary* GridResult::cell(std::size_t k, std::string_view classifier, Method m) const {
  for (const auto& s : summary)
    if (s.samples_per_class == k && s.classifier == classifier && s.method == m) return &s;
  return nullptr;
}

namespace {

bool has_method(const ExperimentConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

// Runs every method and classifier for one (samples per class, seed) pair.
std::vector<RunResult> run_group(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const GeneratorFactory& make_generator, std::size_t k, std::uint64_t seed) {
  std::vector<RunResult> out;
  auto blank = [&](Method m, const ClassifierSpec& spec) {
    RunResult r;
    r.method = m;
    r.classifier = spec.name();
    r.samples_per_class = k;
    r.seed = seed;
    return r;
  };
  auto evaluate = [&](RunResult& r, const ClassifierModel& model) {
    r.correct = correctness(model, data.test);
    r.accuracy = static_cast<double>(std::count(r.correct.begin(), r.correct.end(), true)) /
                 static_cast<double>(r.correct.size());
  };

  Subsample sub;
  try {
    sub = subsample_per_class(data.pool, k, derive_seed(seed, {k, 1}));
  } catch (const std::exception& e) {
    for (const auto& spec : cfg.classifiers)
      for (auto m : cfg.methods) {
        out.push_back(blank(m, spec));
        out.back().error = std::string("subsample: ") + e.what();
      }
    return out;
  }
  const Dataset& train = sub.data;

  AugmentationPlan plan = cfg.balance_to > 0 ? plan_balanced(train, cfg.balance_to)
                                             : plan_uniform(train.num_classes(), cfg.plan_per_class);
  plan.oversample_factor = cfg.oversample_factor;
  plan.generation = cfg.generation;
  plan.filter = cfg.filter;
  plan.seed = derive_seed(seed, {k, 2});

  // The raw pool depends only on the training subset, so all classifiers share it.
  std::optional<SynthesizedPool> pool;
  std::string pool_error;
  if (has_method(cfg, Method::lambada) || has_method(cfg, Method::gpt_unlabeled)) {
    try {
      if (plan.total_target() == 0) {
        pool = SynthesizedPool{train.labels, {}};
      } else {
        auto g = make_generator();
        try {
          g->fit(train);
        } catch (const std::exception& e) {
          throw StageError("step 2 (adapt generator)", e.what());
        }
        try {
          pool = synthesize_pool(*g, train.labels, plan);
        } catch (const StageError&) {
          throw;
        } catch (const std::exception& e) {
          throw StageError("step 3 (synthesize)", e.what());
        }
      }
    } catch (const std::exception& e) {
      pool_error = e.what();
    }
  }

  Dataset unlabeled_originals;
  if (has_method(cfg, Method::weak_label)) {
    const Dataset rest = complement(data.pool, sub.indices);
    if (!rest.empty())
      unlabeled_originals = subsample_per_class(rest, cfg.unlabeled_per_class, derive_seed(seed, {k, 3})).data;
  }

  for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
    ClassifierSpec spec = cfg.classifiers[ci];
    spec.logreg.seed = derive_seed(spec.logreg.seed, {seed, k});
    std::optional<ClassifierModel> h;
    std::string h_error;
    try {
      h = train_classifier(spec, train);
    } catch (const std::exception& e) {
      h_error = std::string("step 1 (baseline classifier): ") + e.what();
    }
    std::optional<Dataset> synthesized;
    for (const Method m : cfg.methods) {
      RunResult r = blank(m, spec);
      try {
        if (!h) throw Error(h_error);
        switch (m) {
          case Method::baseline:
            evaluate(r, *h);
            break;
          case Method::lambada:
          case Method::gpt_unlabeled: {
            if (!pool) throw Error(pool_error);
            if (!synthesized) {
              FilterOutcome f = filter_pool(*pool, *h, plan, &train);
              synthesized = std::move(f.synthesized);
              if (m == Method::lambada) r.filter = std::move(f.report);
            }
            Dataset extra = *synthesized;
            if (m == Method::gpt_unlabeled) extra = weak_label(*h, strip_labels(*synthesized)).data;
            evaluate(r, train_classifier(spec, concat(train, extra)));
            break;
          }
          case Method::weak_label: {
            const Dataset weak = weak_label(*h, strip_labels(unlabeled_originals)).data;
            evaluate(r, train_classifier(spec, concat(train, weak)));
            break;
          }
          case Method::eda: {
            EdaParams p = cfg.eda;
            p.seed = derive_seed(cfg.eda.seed, {seed, k});
            const EdaResult aug = eda_augment(train, data.lexicon, p);
            evaluate(r, train_classifier(spec, concat(train, aug.augmented)));
            break;
          }
        }
      } catch (const std::exception& e) {
        r.error = e.what();
        r.correct.clear();
        r.accuracy = 0.0;
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

GridResult run_experiment_grid(const ExperimentConfig& cfg) {
  const ExperimentData data = load_experiment_data(cfg);
  return run_experiment_grid(cfg, data, make_generator_factory(cfg.generator, data.prior));
}

GridResult run_experiment_grid(const ExperimentConfig& cfg, const ExperimentData& data,
                               const GeneratorFactory& make_generator) {
  if (cfg.methods.empty()) throw Error("experiment grid needs at least one method");
  if (cfg.seeds.empty()) throw Error("experiment grid needs at least one seed");
  if (cfg.samples_per_class.empty()) throw Error("experiment grid needs at least one sample size");
  if (data.test.empty()) throw Error("experiment grid needs a non-empty test set");
  const GeneratorFactory factory = make_generator ? make_generator : make_generator_factory(cfg.generator, data.prior);

  std::vector<std::pair<std::size_t, std::uint64_t>> groups;
  for (auto k : cfg.samples_per_class)
    for (auto s : cfg.seeds) groups.emplace_back(k, s);
  std::vector<std::vector<RunResult>> results(groups.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < groups.size(); i = next++)
      results[i] = run_group(cfg, data, factory, groups[i].first, groups[i].second);
  };
  // External adapters are one process per run, so their groups stay sequential.
  const bool serial = cfg.generator.kind == GeneratorSpec::Kind::external;
  const std::size_t jobs = serial ? 1 : std::min(std::max<std::size_t>(1, cfg.jobs), groups.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  GridResult grid;
  grid.samples_per_class = cfg.samples_per_class;
  for (const auto& c : cfg.classifiers) grid.classifiers.push_back(c.name());
  grid.methods = cfg.methods;
  grid.threshold = cfg.threshold;
  for (auto& group : results)
    for (auto& r : group) grid.runs.push_back(std::move(r));
  grid.summary = summarize(grid);
  return grid;
}

std::vector<CellSummary> summarize(const GridResult& grid) {
  std::vector<CellSummary> out;
  for (const auto k : grid.samples_per_class) {
    for (const auto& clf : grid.classifiers) {
      std::map<std::uint64_t, const RunResult*> baseline;
      for (const auto& r : grid.runs)
        if (r.samples_per_class == k && r.classifier == clf && r.method == Method::baseline && r.ok())
          baseline[r.seed] = &r;
      std::optional<double> baseline_mean;
      for (const Method m : grid.methods) {
        CellSummary s;
        s.samples_per_class = k;
        s.classifier = clf;
        s.method = m;
        std::vector<bool> pooled_method, pooled_base;
        double sum = 0.0;
        for (const auto& r : grid.runs) {
          if (r.samples_per_class != k || r.classifier != clf || r.method != m) continue;
          if (!r.ok()) {
            ++s.failures;
            continue;
          }
          ++s.runs;
          sum += r.accuracy;
          if (auto it = baseline.find(r.seed); it != baseline.end()) {
            pooled_method.insert(pooled_method.end(), r.correct.begin(), r.correct.end());
            pooled_base.insert(pooled_base.end(), it->second->correct.begin(), it->second->correct.end());
          }
        }
        if (s.runs) s.mean_accuracy = sum / static_cast<double>(s.runs);
        if (m == Method::baseline && s.runs) baseline_mean = s.mean_accuracy;
        out.push_back(std::move(s));
        if (m != Method::baseline && !pooled_method.empty())
          out.back().vs_baseline = mcnemar_test(pooled_method, pooled_base, grid.threshold);
      }
      if (baseline_mean && *baseline_mean > 0) {
        for (auto& s : out)
          if (s.samples_per_class == k && s.classifier == clf && s.method != Method::baseline && s.runs)
            s.improvement = improvement_percent(*baseline_mean, s.mean_accuracy);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- reports

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "text" || s == "txt" || s == "text-table") return ReportFormat::text;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw Error("unknown report format '" + std::string(s) + "' (expected text, csv, json)");
}

std::string extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::text: return ".txt";
    case ReportFormat::csv: return ".csv";
    case ReportFormat::json: return ".json";
  }
  return "";
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string text_report(const GridResult& grid) {
  std::ostringstream out;
  out << "Accuracy (%) by method and classifier; * marks McNemar p < " << fmt("%g", grid.threshold)
      << " against the baseline.\n";
  std::size_t label_width = 16;
  for (const auto m : grid.methods) label_width = std::max(label_width, to_string(m).size() + 18);
  for (const auto k : grid.samples_per_class) {
    out << "\nsamples per class: " << k << "\n";
    out << pad("", label_width);
    for (const auto& c : grid.classifiers) out << " | " << pad(c, 10);
    out << "\n" << std::string(label_width + grid.classifiers.size() * 13, '-') << "\n";
    for (const auto m : grid.methods) {
      out << pad(to_string(m), label_width);
      for (const auto& c : grid.classifiers) {
        const CellSummary* s = grid.cell(k, c, m);
        std::string v = "n/a";
        if (s && s->runs) {
          v = fmt("%.1f", 100.0 * s->mean_accuracy);
          if (s->vs_baseline && s->vs_baseline->significant) v += "*";
          if (s->failures) v += " (" + std::to_string(s->failures) + " failed)";
        }
        out << " | " << pad(v, 10);
      }
      out << "\n";
    }
    for (const auto m : grid.methods) {
      if (m == Method::baseline) continue;
      out << pad("% improvement " + to_string(m), label_width);
      for (const auto& c : grid.classifiers) {
        const CellSummary* s = grid.cell(k, c, m);
        out << " | " << pad(s && s->improvement ? fmt("%.1f", *s->improvement) : "n/a", 10);
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string csv_report(const GridResult& grid) {
  std::ostringstream out;
  out << "samples_per_class,classifier,method,mean_accuracy,runs,failures,improvement_percent,b,c,p_value,significant\n";
  for (const auto& s : grid.summary) {
    out << s.samples_per_class << ',' << s.classifier << ',' << to_string(s.method) << ','
        << fmt("%.17g", s.mean_accuracy) << ',' << s.runs << ',' << s.failures << ','
        << (s.improvement ? fmt("%.17g", *s.improvement) : "") << ',';
    if (s.vs_baseline)
      out << s.vs_baseline->b << ',' << s.vs_baseline->c << ',' << fmt("%.17g", s.vs_baseline->p_value) << ','
          << (s.vs_baseline->significant ? 1 : 0);
    else
      out << ",,,";
    out << '\n';
  }
  return out.str();
}

json summary_to_json(const CellSummary& s) {
  json j = {{"samples_per_class", s.samples_per_class},
            {"classifier", s.classifier},
            {"method", to_string(s.method)},
            {"mean_accuracy", s.mean_accuracy},
            {"runs", s.runs},
            {"failures", s.failures}};
  j["improvement_percent"] = s.improvement ? json(*s.improvement) : json(nullptr);
  if (s.vs_baseline) {
    const auto& m = *s.vs_baseline;
    j["mcnemar"] = {{"b", m.b},
                    {"c", m.c},
                    {"p_value", m.p_value},
                    {"threshold", m.threshold},
                    {"significant", m.significant},
                    {"chi_square", m.chi_square},
                    {"chi_square_p", m.chi_square_p}};
  } else {
    j["mcnemar"] = nullptr;
  }
  return j;
}

CellSummary summary_from_json(const json& j) {
  CellSummary s;
  s.samples_per_class = j.at("samples_per_class").get<std::size_t>();
  s.classifier = j.at("classifier").get<std::string>();
  s.method = method_from_string(j.at("method").get<std::string>());
  s.mean_accuracy = j.at("mean_accuracy").get<double>();
  s.runs = j.at("runs").get<std::size_t>();
  s.failures = j.at("failures").get<std::size_t>();
  if (!j.at("improvement_percent").is_null()) s.improvement = j.at("improvement_percent").get<double>();
  if (!j.at("mcnemar").is_null()) {
    const auto& m = j.at("mcnemar");
    McNemarResult r;
    r.b = m.at("b").get<std::size_t>();
    r.c = m.at("c").get<std::size_t>();
    r.p_value = m.at("p_value").get<double>();
    r.threshold = m.at("threshold").get<double>();
    r.significant = m.at("significant").get<bool>();
    r.chi_square = m.at("chi_square").get<double>();
    r.chi_square_p = m.at("chi_square_p").get<double>();
    s.vs_baseline = r;
  }
  return s;
}

json grid_header_json(const GridResult& grid) {
  json methods = json::array();
  for (auto m : grid.methods) methods.push_back(to_string(m));
  return {{"samples_per_class", grid.samples_per_class},
          {"classifiers", grid.classifiers},
          {"methods", methods},
          {"threshold", grid.threshold}};
}

}  // namespace

std::string emit_report(const GridResult& grid, ReportFormat format) {
  if (grid.methods.empty()) throw Error("report needs at least one method");
  if (grid.summary.empty()) throw Error("report needs non-empty results");
  switch (format) {
    case ReportFormat::text: return text_report(grid);
    case ReportFormat::csv: return csv_report(grid);
    case ReportFormat::json: {
      json j = grid_header_json(grid);
      json rows = json::array();
      for (const auto& s : grid.summary) rows.push_back(summary_to_json(s));
      j["summary"] = std::move(rows);
      return j.dump(2) + "\n";
    }
  }
  throw Error("unknown report format");
}

void write_report(const std::filesystem::path& path, const GridResult& grid, ReportFormat format) {
  const std::string body = emit_report(grid, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << body;
}

std::vector<CellSummary> parse_summary_csv(std::string_view csv) {
  std::vector<CellSummary> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 11) throw ParseError(n, "expected 11 columns in summary CSV");
    CellSummary s;
    s.samples_per_class = std::stoul(f[0]);
    s.classifier = f[1];
    s.method = method_from_string(f[2]);
    s.mean_accuracy = std::stod(f[3]);
    s.runs = std::stoul(f[4]);
    s.failures = std::stoul(f[5]);
    if (!f[6].empty()) s.improvement = std::stod(f[6]);
    if (!f[7].empty()) {
      McNemarResult r;
      r.b = std::stoul(f[7]);
      r.c = std::stoul(f[8]);
      r.p_value = std::stod(f[9]);
      r.significant = f[10] == "1";
      s.vs_baseline = r;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string grid_to_json(const GridResult& grid) {
  json j = grid_header_json(grid);
  j["format"] = "lambada-grid-results";
  j["version"] = 1;
  json runs = json::array();
  for (const auto& r : grid.runs) {
    std::string bits;
    for (bool b : r.correct) bits.push_back(b ? '1' : '0');
    json jr = {{"method", to_string(r.method)},
               {"classifier", r.classifier},
               {"samples_per_class", r.samples_per_class},
               {"seed", r.seed},
               {"accuracy", r.accuracy},
               {"correct", bits},
               {"error", r.error}};
    jr["filter_report"] = r.filter ? json::parse(r.filter->to_json()) : json(nullptr);
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  json rows = json::array();
  for (const auto& s : grid.summary) rows.push_back(summary_to_json(s));
  j["summary"] = std::move(rows);
  return j.dump(1) + "\n";
}

GridResult grid_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "lambada-grid-results") throw Error("not a grid results file");
    GridResult g;
    g.samples_per_class = j.at("samples_per_class").get<std::vector<std::size_t>>();
    g.classifiers = j.at("classifiers").get<std::vector<std::string>>();
    for (const auto& m : j.at("methods")) g.methods.push_back(method_from_string(m.get<std::string>()));
    g.threshold = j.at("threshold").get<double>();
    for (const auto& jr : j.at("runs")) {
      RunResult r;
      r.method = method_from_string(jr.at("method").get<std::string>());
      r.classifier = jr.at("classifier").get<std::string>();
      r.samples_per_class = jr.at("samples_per_class").get<std::size_t>();
      r.seed = jr.at("seed").get<std::uint64_t>();
      r.accuracy = jr.at("accuracy").get<double>();
      for (char c : jr.at("correct").get<std::string>()) r.correct.push_back(c == '1');
      r.error = jr.at("error").get<std::string>();
      if (const auto& f = jr.at("filter_report"); !f.is_null()) r.filter = FilterReport::from_json(f.dump());
      g.runs.push_back(std::move(r));
    }
    for (const auto& s : j.at("summary")) g.summary.push_back(summary_from_json(s));
    return g;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid grid results file: ") + e.what());
  }
}

}  // namespace lambada
