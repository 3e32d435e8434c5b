#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "lambada/baselines.hpp"
#include "lambada/classify.hpp"
#include "lambada/condlm.hpp"
#include "lambada/config.hpp"
#include "lambada/corpus.hpp"
#include "lambada/eval.hpp"
#include "lambada/extgen.hpp"
#include "lambada/lambada.hpp"
#include "lambada/version.hpp"

namespace lambada::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Bad flags, bad config values, or a refused overwrite.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
void apply(const CLI::Option* opt, const T& value, T& target) {
  if (opt->count()) target = value;
}

// Options shared by every command that writes files.
struct Output {
  std::string label;
  std::string run_root;
  std::string out_dir;
  bool force = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--label", label, "Run label; outputs go to <run root>/<label>");
    cmd->add_option("--run-root", run_root, std::string("Run root (default $") + kRunRootEnv + " or ./runs)");
    cmd->add_option("--out", out_dir, "Explicit output directory (overrides --label/--run-root)");
    cmd->add_flag("--force", force, "Allow writing into an existing non-empty directory");
  }

  fs::path resolve(const std::string& command) const {
    fs::path dir;
    if (!out_dir.empty()) {
      dir = out_dir;
    } else {
      std::string root = run_root;
      if (root.empty()) {
        const char* env = std::getenv(kRunRootEnv);
        root = env && *env ? env : "runs";
      }
      dir = fs::path(root) / (label.empty() ? command : label);
    }
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
      throw UsageError("output directory '" + dir.string() + "' already exists and is not empty (use --force)");
    fs::create_directories(dir);
    return dir;
  }
};

ExperimentConfig base_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_config(path);
}

/// Loads a split file, taking class ids from a sibling manifest.json when present.
Dataset load_split(const std::string& path) {
  const fs::path manifest = fs::path(path).parent_path() / "manifest.json";
  if (fs::exists(manifest)) {
    const LabelMap labels = read_manifest_labels(manifest);
    return load_dataset(path, &labels);
  }
  return load_dataset(path);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << body;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json versions() {
  return {{"lambada", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION}};
}

// Flags that tune the generator and sampling, shared by train-lm, generate, augment.
struct LmFlags {
  int order = 3;
  double alpha = 0.01;
  std::string prior;
  double prior_weight = 0.0;
  double temperature = 1.0;
  std::size_t top_k = 0;
  std::size_t max_len = 40;
  bool greedy = false;
  std::string command;
  int timeout_ms = 30000;
  CLI::Option *o_order{}, *o_alpha{}, *o_prior{}, *o_prior_weight{}, *o_temperature{}, *o_top_k{}, *o_max_len{},
      *o_greedy{}, *o_command{}, *o_timeout{};

  void attach_model(CLI::App* cmd) {
    o_order = cmd->add_option("--order", order, "N-gram order");
    o_alpha = cmd->add_option("--lm-alpha", alpha, "Add-alpha for the unigram level");
    o_prior = cmd->add_option("--prior", prior, "Unlabeled prior corpus merged into the counts");
    o_prior_weight = cmd->add_option("--prior-weight", prior_weight, "Weight of prior-corpus counts");
  }
  void attach_sampling(CLI::App* cmd) {
    o_temperature = cmd->add_option("--temperature", temperature);
    o_top_k = cmd->add_option("--top-k", top_k, "0 keeps the full distribution");
    o_max_len = cmd->add_option("--max-len", max_len);
    o_greedy = cmd->add_flag("--greedy", greedy);
  }
  void attach_external(CLI::App* cmd) {
    o_command = cmd->add_option("--generator-command", command, "Launch an external generator adapter");
    o_timeout = cmd->add_option("--timeout-ms", timeout_ms);
  }
  void apply_to(ExperimentConfig& cfg) const {
    if (o_order) {
      apply(o_order, order, cfg.generator.ngram.order);
      apply(o_alpha, alpha, cfg.generator.ngram.add_alpha);
      apply(o_prior, prior, cfg.generator.prior_path);
      apply(o_prior_weight, prior_weight, cfg.generator.ngram.prior_weight);
    }
    if (o_temperature) {
      apply(o_temperature, temperature, cfg.generation.temperature);
      apply(o_top_k, top_k, cfg.generation.top_k);
      apply(o_max_len, max_len, cfg.generation.max_len);
      apply(o_greedy, greedy, cfg.generation.greedy);
    }
    if (o_command && o_command->count()) {
      cfg.generator.kind = GeneratorSpec::Kind::external;
      cfg.generator.command = command;
    }
    if (o_timeout) apply(o_timeout, timeout_ms, cfg.generator.timeout_ms);
  }
};

// Flags for the classifier A.
struct ClfFlags {
  std::string kind = "nb";
  double nb_alpha = 1.0;
  double lr = 0.1;
  int epochs = 200;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  CLI::Option *o_kind{}, *o_nb_alpha{}, *o_lr{}, *o_epochs{}, *o_l2{}, *o_batch{}, *o_seed{};

  void attach(CLI::App* cmd) {
    o_kind = cmd->add_option("--classifier", kind, "nb or logreg");
    o_nb_alpha = cmd->add_option("--nb-alpha", nb_alpha, "Laplace smoothing");
    o_lr = cmd->add_option("--lr", lr);
    o_epochs = cmd->add_option("--epochs", epochs);
    o_l2 = cmd->add_option("--l2", l2);
    o_batch = cmd->add_option("--batch-size", batch_size);
    o_seed = cmd->add_option("--clf-seed", seed);
  }
  ClassifierSpec spec(const ExperimentConfig& cfg) const {
    ClassifierSpec s = cfg.classifiers.empty() ? ClassifierSpec{} : cfg.classifiers.front();
    if (o_kind->count()) s.kind = classifier_kind_from_string(kind);
    apply(o_nb_alpha, nb_alpha, s.nb.laplace_alpha);
    apply(o_lr, lr, s.logreg.learning_rate);
    apply(o_epochs, epochs, s.logreg.epochs);
    apply(o_l2, l2, s.logreg.l2);
    apply(o_batch, batch_size, s.logreg.batch_size);
    apply(o_seed, seed, s.logreg.seed);
    return s;
  }
};

std::unique_ptr<ConditionalGenerator> make_generator(const ExperimentConfig& cfg) {
  std::vector<std::string> prior;
  if (!cfg.generator.prior_path.empty()) prior = load_texts(cfg.generator.prior_path);
  return make_generator_factory(cfg.generator, prior)();
}

// ---------------------------------------------------------------- commands

struct Prepare {
  std::string in, format, ratios = "0.8,0.1,0.1", config;
  std::uint64_t seed = 0;
  CLI::Option *o_ratios{}, *o_seed{};
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--in", in, "Labeled CSV or JSONL file")->required();
    cmd->add_option("--format", format, "csv or jsonl (default: from extension)");
    o_ratios = cmd->add_option("--ratios", ratios, "train,validation,test");
    o_seed = cmd->add_option("--seed", seed);
    cmd->add_option("--config", config);
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream& err) {
    SplitSpec spec = base_config(config).split;
    if (o_ratios->count() || config.empty()) {
      const auto r = split_commas(ratios);
      if (r.size() != 3) throw UsageError("--ratios needs three comma-separated values");
      try {
        spec.train = std::stod(r[0]);
        spec.validation = std::stod(r[1]);
        spec.test = std::stod(r[2]);
      } catch (const std::exception&) {
        throw UsageError("--ratios values must be numbers");
      }
    }
    apply(o_seed, seed, spec.seed);
    try {
      spec.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    const Dataset d = format.empty() ? load_dataset(in)
                                     : load_dataset(in, format == "csv" ? DataFormat::csv : DataFormat::jsonl);
    const Splits s = split_dataset(d, spec);
    const fs::path dir = output.resolve("prepare");
    write_splits(dir, s, spec, in);
    for (const auto& w : s.warnings) err << "warning: " << w << "\n";
    out << "wrote " << dir.string() << ": train " << s.train.size() << ", validation " << s.validation.size()
        << ", test " << s.test.size() << "\n";
    return kExitOk;
  }
};

struct TrainLm {
  std::string train, config;
  LmFlags lm;
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--train", train, "Labeled training file")->required();
    cmd->add_option("--config", config);
    lm.attach_model(cmd);
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream&) {
    ExperimentConfig cfg = base_config(config);
    lm.apply_to(cfg);
    const Dataset d = load_split(train);
    std::vector<std::string> prior;
    if (!cfg.generator.prior_path.empty()) prior = load_texts(cfg.generator.prior_path);
    NGramGenerator g(cfg.generator.ngram, prior);
    g.fit(d);
    const fs::path dir = output.resolve("train-lm");
    g.model().save(dir / "lm.json");
    const NllResult nll = corpus_nll(g.model(), encode_training_stream(d, g.model().vocab()));
    out << "wrote " << (dir / "lm.json").string() << ": order " << g.model().order() << ", vocabulary "
        << g.model().vocab().size() << ", training perplexity " << nll.perplexity << "\n";
    return kExitOk;
  }
};

struct Generate {
  std::string model, label, config;
  std::size_t count = 10;
  std::uint64_t seed = 0;
  LmFlags lm;
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "Model written by train-lm")->required();
    cmd->add_option("--class", label, "Class name (default: every class)");
    cmd->add_option("--count", count, "Sentences per class");
    cmd->add_option("--seed", seed);
    cmd->add_option("--config", config);
    lm.attach_sampling(cmd);
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream&) {
    ExperimentConfig cfg = base_config(config);
    lm.apply_to(cfg);
    cfg.generation.validate();
    NGramModel m = NGramModel::load(model);
    const LabelMap labels = m.labels();
    if (labels.size() == 0) throw Error("model has no class names");
    NGramGenerator g(m.options());
    g.set_model(std::move(m));
    std::vector<ClassId> classes;
    if (label.empty()) {
      for (ClassId y = 1; y <= static_cast<ClassId>(labels.size()); ++y) classes.push_back(y);
    } else {
      auto y = labels.find(normalize_label_name(label));
      if (!y) throw UsageError("unknown class '" + label + "'");
      classes.push_back(*y);
    }
    SynthesizedPool pool{labels, {}};
    for (ClassId y : classes) {
      const auto sentences = g.generate(y, count, derive_seed(seed, {static_cast<std::uint64_t>(y)}), cfg.generation);
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        Candidate c;
        c.sentence = {detokenize(sentences[i].tokens), sentences[i].tokens, y};
        c.truncated = sentences[i].truncated;
        c.gen_seed = sentences[i].gen_seed;
        c.index = i;
        pool.candidates.push_back(std::move(c));
      }
    }
    const fs::path dir = output.resolve("generate");
    std::ofstream f(dir / "generated.jsonl", std::ios::binary);
    if (!f) throw Error("cannot write generated.jsonl");
    write_pool_jsonl(f, pool);
    out << "wrote " << pool.candidates.size() << " sentences to " << (dir / "generated.jsonl").string() << "\n";
    return kExitOk;
  }
};

struct Augment {
  std::string train, method = "lambada", config, unlabeled, lexicon, ops;
  std::size_t per_class = 20, balance_to = 0, factor = 10, naug = 4;
  double eda_alpha = 0.1;
  std::uint64_t seed = 0;
  bool exclude_truncated = false, no_dedup = false, no_label_check = false;
  CLI::Option *o_per_class{}, *o_balance{}, *o_factor{}, *o_seed{}, *o_naug{}, *o_eda_alpha{}, *o_ops{},
      *o_lexicon{}, *o_excl{}, *o_nodedup{}, *o_nocheck{};
  LmFlags lm;
  ClfFlags clf;
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--train", train, "Labeled training file")->required();
    cmd->add_option("--method", method, "lambada, eda or weak-label");
    cmd->add_option("--config", config);
    o_per_class = cmd->add_option("--per-class", per_class, "Synthesized sentences kept per class (N_y)");
    o_balance = cmd->add_option("--balance-to", balance_to, "Top every class up to this size instead");
    o_factor = cmd->add_option("--factor", factor, "Candidates generated per kept sentence");
    o_seed = cmd->add_option("--seed", seed);
    o_excl = cmd->add_flag("--exclude-truncated", exclude_truncated);
    o_nodedup = cmd->add_flag("--no-dedup", no_dedup);
    o_nocheck = cmd->add_flag("--no-label-check", no_label_check, "Keep candidates h disagrees with");
    o_eda_alpha = cmd->add_option("--alpha", eda_alpha, "EDA fraction of tokens changed");
    o_naug = cmd->add_option("--naug", naug, "EDA variants per sentence");
    o_ops = cmd->add_option("--ops", ops, "EDA operations, e.g. sr,ri,rs,rd");
    o_lexicon = cmd->add_option("--lexicon", lexicon, "Synonym lexicon for EDA");
    cmd->add_option("--unlabeled", unlabeled, "Unlabeled texts for weak-label");
    lm.attach_model(cmd);
    lm.attach_sampling(cmd);
    lm.attach_external(cmd);
    clf.attach(cmd);
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = base_config(config);
    lm.apply_to(cfg);
    apply(o_per_class, per_class, cfg.plan_per_class);
    apply(o_balance, balance_to, cfg.balance_to);
    apply(o_factor, factor, cfg.oversample_factor);
    if (o_excl->count()) cfg.filter.exclude_truncated = true;
    if (o_nodedup->count()) cfg.filter.dedup = false;
    if (o_nocheck->count()) cfg.filter.require_label_agreement = false;
    apply(o_eda_alpha, eda_alpha, cfg.eda.alpha);
    apply(o_naug, naug, cfg.eda.n_aug);
    apply(o_lexicon, lexicon, cfg.lexicon_path);
    apply(o_seed, seed, cfg.eda.seed);
    if (o_ops->count()) {
      cfg.eda.ops.clear();
      for (const auto& o : split_commas(ops)) cfg.eda.ops.push_back(eda_op_from_string(o));
    }
    const ClassifierSpec spec = clf.spec(cfg);
    const Method m = method_from_string(method);
    const Dataset d = load_split(train);

    if (m == Method::lambada) {
      AugmentationPlan plan = cfg.balance_to > 0 ? plan_balanced(d, cfg.balance_to)
                                                 : plan_uniform(d.num_classes(), cfg.plan_per_class);
      plan.oversample_factor = cfg.oversample_factor;
      plan.generation = cfg.generation;
      plan.filter = cfg.filter;
      plan.seed = o_seed->count() ? seed : 0;
      try {
        plan.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const fs::path dir = output.resolve("augment");
      auto g = make_generator(cfg);
      LambadaResult r = run_lambada(d, spec, *g, plan);
      write_augmented(dir, d, r.synthesized, "lambada");
      write_text(dir / "filter_report.json", r.report.to_json() + "\n");
      std::ofstream pool(dir / "pool.jsonl", std::ios::binary);
      write_pool_jsonl(pool, r.pool);
      out << "generated " << r.report.total_generated() << ", retained " << r.report.total_retained()
          << "; wrote " << (dir / "augmented.jsonl").string() << "\n";
      for (const auto& c : r.report.classes)
        if (c.shortfall) err << "warning: class '" << c.name << "' is short by " << c.shortfall << "\n";
      return kExitOk;
    }
    if (m == Method::eda) {
      try {
        cfg.eda.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const SynonymLexicon lex = cfg.lexicon_path.empty() ? SynonymLexicon{} : SynonymLexicon::load(cfg.lexicon_path);
      const EdaResult r = eda_augment(d, lex, cfg.eda);
      const fs::path dir = output.resolve("augment");
      write_augmented(dir, d, r.augmented, "eda");
      write_text(dir / "eda_report.json",
                 json{{"originals", d.size()}, {"augmented", r.augmented.size()}, {"degenerate", r.degenerate}}
                         .dump(2) +
                     "\n");
      if (lex.size() == 0) err << "warning: no lexicon; synonym replacement and insertion are no-ops\n";
      out << "eda produced " << r.augmented.size() << " variants (" << r.degenerate << " degenerate)\n";
      return kExitOk;
    }
    if (m == Method::weak_label) {
      if (unlabeled.empty()) throw UsageError("weak-label needs --unlabeled");
      const ClassifierModel h = train_classifier(spec, d);
      const WeakLabelResult r = weak_label(h, load_texts(unlabeled));
      const fs::path dir = output.resolve("augment");
      write_augmented(dir, d, r.data, "weak_label");
      out << "weak-labeled " << r.data.size() << " texts\n";
      return kExitOk;
    }
    throw UsageError("augment supports --method lambada, eda or weak-label");
  }

  static void write_augmented(const fs::path& dir, const Dataset& train, const Dataset& extra,
                              const std::string& provenance) {
    std::ofstream f(dir / "augmented.jsonl", std::ios::binary);
    if (!f) throw Error("cannot write augmented.jsonl");
    write_jsonl(f, train);
    write_jsonl(f, extra, provenance);
  }
};

struct TrainClf {
  std::string train, test, config;
  ClfFlags clf;
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--train", train, "Labeled training file")->required();
    cmd->add_option("--test", test, "Labeled file to score");
    cmd->add_option("--config", config);
    clf.attach(cmd);
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream&) {
    const ExperimentConfig cfg = base_config(config);
    const ClassifierSpec spec = clf.spec(cfg);
    const Dataset d = load_split(train);
    const ClassifierModel h = train_classifier(spec, d);
    const fs::path dir = output.resolve("train-clf");
    h.save(dir / "classifier.json");
    out << "wrote " << (dir / "classifier.json").string() << " (" << spec.name() << ")\n";
    if (!test.empty()) {
      const Dataset t = load_dataset(test, &d.labels);
      const double acc = accuracy(h, t);
      write_text(dir / "metrics.json",
                 json{{"classifier", spec.name()}, {"test", test}, {"size", t.size()}, {"accuracy", acc}}.dump(2) + "\n");
      out << "test accuracy " << std::fixed << std::setprecision(4) << acc << "\n";
    }
    return kExitOk;
  }
};

std::vector<ReportFormat> parse_formats(const std::string& s) {
  std::vector<ReportFormat> out;
  for (const auto& f : split_commas(s)) {
    try {
      out.push_back(report_format_from_string(f));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("--format needs at least one of text, csv, json");
  return out;
}

struct Eval {
  std::string config, dataset, test_path, methods, classifiers, samples, seeds, formats = "text";
  std::size_t jobs = 1;
  double threshold = 0.01;
  CLI::Option *o_dataset{}, *o_test{}, *o_methods{}, *o_classifiers{}, *o_samples{}, *o_seeds{}, *o_jobs{},
      *o_threshold{};
  LmFlags lm;
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Experiment config file");
    o_dataset = cmd->add_option("--dataset", dataset);
    o_test = cmd->add_option("--test", test_path, "Shared test file (otherwise the dataset is split)");
    o_methods = cmd->add_option("--methods", methods, "baseline,lambada,eda,weak_label,gpt_unlabeled");
    o_classifiers = cmd->add_option("--classifiers", classifiers, "nb,logreg");
    o_samples = cmd->add_option("--samples", samples, "Samples per class, e.g. 5,10,20");
    o_seeds = cmd->add_option("--seeds", seeds, "Seeds, e.g. 1-20");
    o_jobs = cmd->add_option("--jobs", jobs, "Parallel grid cells");
    o_threshold = cmd->add_option("--threshold", threshold, "Significance threshold");
    cmd->add_option("--format", formats, "Comma-separated report formats: text, csv, json");
    lm.attach_model(cmd);
    lm.attach_sampling(cmd);
    lm.attach_external(cmd);
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream&) {
    ExperimentConfig cfg = base_config(config);
    std::vector<std::string> problems;
    auto guard = [&](auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        problems.push_back(e.what());
      }
    };
    apply(o_dataset, dataset, cfg.dataset_path);
    apply(o_test, test_path, cfg.test_path);
    apply(o_jobs, jobs, cfg.jobs);
    apply(o_threshold, threshold, cfg.threshold);
    lm.apply_to(cfg);
    if (o_methods->count()) guard([&] {
        cfg.methods.clear();
        for (const auto& m : split_commas(methods)) cfg.methods.push_back(method_from_string(m));
      });
    if (o_classifiers->count()) guard([&] {
        std::vector<ClassifierSpec> specs;
        const ClassifierSpec proto = cfg.classifiers.empty() ? ClassifierSpec{} : cfg.classifiers.front();
        for (const auto& c : split_commas(classifiers)) {
          ClassifierSpec s = proto;
          s.kind = classifier_kind_from_string(c);
          specs.push_back(s);
        }
        cfg.classifiers = specs;
      });
    if (o_samples->count()) guard([&] {
        cfg.samples_per_class.clear();
        for (auto k : parse_int_list(samples)) cfg.samples_per_class.push_back(k);
      });
    if (o_seeds->count()) guard([&] { cfg.seeds = parse_int_list(seeds); });
    std::vector<ReportFormat> fmts;
    guard([&] { fmts = parse_formats(formats); });
    for (auto& e : cfg.validation_errors()) problems.push_back(std::move(e));
    if (!problems.empty()) throw ConfigError(std::move(problems));

    const fs::path dir = output.resolve("eval");
    const auto started = std::chrono::steady_clock::now();
    const GridResult grid = run_experiment_grid(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    for (const auto f : fmts) write_report(dir / ("report" + extension(f)), grid, f);
    write_text(dir / "results.json", grid_to_json(grid));
    json manifest = {{"format", "lambada-experiment"},
                     {"version", 1},
                     {"config", json::parse(config_to_json(cfg))},
                     {"versions", versions()},
                     {"timestamp", utc_timestamp()},
                     {"elapsed_seconds", seconds}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    std::size_t failures = 0;
    for (const auto& r : grid.runs) failures += !r.ok();
    out << emit_report(grid, ReportFormat::text);
    out << "wrote reports to " << dir.string() << " (" << grid.runs.size() << " runs, " << failures
        << " failed)\n";
    return kExitOk;
  }
};

struct Report {
  std::string results, formats = "text";
  double threshold = 0.01;
  bool to_stdout = false;
  CLI::Option* o_threshold{};
  Output output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--results", results, "results.json written by eval")->required();
    cmd->add_option("--format", formats, "Comma-separated report formats: text, csv, json");
    o_threshold = cmd->add_option("--threshold", threshold, "Recompute significance at this threshold");
    cmd->add_flag("--stdout", to_stdout, "Print instead of writing files");
    output.attach(cmd);
  }

  int run(std::ostream& out, std::ostream&) {
    const auto fmts = parse_formats(formats);
    std::ifstream in(results, std::ios::binary);
    if (!in) throw Error("cannot open '" + results + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    GridResult grid = grid_from_json(buf.str());
    if (o_threshold->count()) {
      if (!(threshold > 0 && threshold < 1)) throw UsageError("--threshold must lie in (0, 1)");
      grid.threshold = threshold;
      grid.summary = summarize(grid);
    }
    if (to_stdout) {
      for (const auto f : fmts) out << emit_report(grid, f);
      return kExitOk;
    }
    const fs::path dir = output.resolve("report");
    for (const auto f : fmts) write_report(dir / ("report" + extension(f)), grid, f);
    out << "wrote reports to " << dir.string() << "\n";
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LAMBADA data augmentation toolkit", "lambada"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Prepare prepare;
  TrainLm train_lm;
  Generate generate;
  Augment augment;
  TrainClf train_clf;
  Eval eval;
  Report report;
  prepare.attach(app.add_subcommand("prepare", "Split a labeled corpus into train/validation/test"));
  train_lm.attach(app.add_subcommand("train-lm", "Fit the class-conditional n-gram generator"));
  generate.attach(app.add_subcommand("generate", "Sample sentences from a fitted generator"));
  augment.attach(app.add_subcommand("augment", "Augment a training file (lambada, eda, weak-label)"));
  train_clf.attach(app.add_subcommand("train-clf", "Train a classifier and optionally score a test file"));
  eval.attach(app.add_subcommand("eval", "Run an experiment grid and write reports"));
  report.attach(app.add_subcommand("report", "Render reports from saved grid results"));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "prepare") return prepare.run(out, err);
    if (name == "train-lm") return train_lm.run(out, err);
    if (name == "generate") return generate.run(out, err);
    if (name == "augment") return augment.run(out, err);
    if (name == "train-clf") return train_clf.run(out, err);
    if (name == "eval") return eval.run(out, err);
    if (name == "report") return report.run(out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << "error: unknown command '" << name << "'\n";
  return kExitUsage;
}

}  // namespace lambada::cli
