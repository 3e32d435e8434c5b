#include "lambada/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace lambada {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss{std::string(s)};
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(std::string_view s) {
  const std::string t = trim(s);
  T v{};
  const auto* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || p != end || t.empty()) throw Error("'" + t + "' is not a valid number");
  return v;
}

double parse_double(std::string_view s) {
  const std::string t = trim(s);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) throw Error("'" + t + "' is not a valid number");
  return v;
}

}  // namespace

IniFile IniFile::parse(std::istream& in, const std::string& source) {
  IniFile ini;
  std::string section;
  std::string line;
  std::size_t n = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    try {
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) throw ParseError(n, "malformed section header", source);
        section = trim(std::string_view(t).substr(1, t.size() - 2));
        ini.sections[section];
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(n, "expected 'key = value'", source);
      if (section.empty()) throw ParseError(n, "key outside any [section]", source);
      const std::string key = trim(std::string_view(t).substr(0, eq));
      if (key.empty()) throw ParseError(n, "empty key", source);
      auto& keys = ini.sections[section];
      if (keys.count(key)) throw ParseError(n, "duplicate key '" + section + "." + key + "'", source);
      keys[key] = {trim(std::string_view(t).substr(eq + 1)), n};
    } catch (const ParseError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  return parse(in, path.string());
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error([&] {
        std::string msg = "invalid config (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : problems) msg += "\n  - " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

std::vector<std::uint64_t> parse_int_list(std::string_view s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(parse_number<std::uint64_t>(item));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>(item.substr(0, dash));
    const auto hi = parse_number<std::uint64_t>(item.substr(dash + 1));
    if (hi < lo) throw Error("range '" + item + "' is decreasing");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

bool parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw Error("'" + t + "' is not a boolean");
}

ExperimentConfig config_from_ini(const IniFile& ini, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::vector<std::string> problems;
  std::vector<ClassifierKind> kinds = {ClassifierKind::naive_bayes};
  NaiveBayesParams nb;
  LogRegParams lr;

  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  };
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"dataset",
       {{"path", [&](const std::string& v) { cfg.dataset_path = path(v); }},
        {"test_path", [&](const std::string& v) { cfg.test_path = path(v); }}}},
      {"split",
       {{"ratios",
         [&](const std::string& v) {
           const auto r = split_list(v);
           if (r.size() != 3) throw Error("ratios needs three values train,validation,test");
           cfg.split.train = parse_double(r[0]);
           cfg.split.validation = parse_double(r[1]);
           cfg.split.test = parse_double(r[2]);
         }},
        {"seed", [&](const std::string& v) { cfg.split.seed = parse_number<std::uint64_t>(v); }}}},
      {"experiment",
       {{"methods",
         [&](const std::string& v) {
           cfg.methods.clear();
           for (const auto& m : split_list(v)) cfg.methods.push_back(method_from_string(m));
         }},
        {"classifiers",
         [&](const std::string& v) {
           kinds.clear();
           for (const auto& k : split_list(v)) kinds.push_back(classifier_kind_from_string(k));
         }},
        {"samples_per_class",
         [&](const std::string& v) {
           cfg.samples_per_class.clear();
           for (auto k : parse_int_list(v)) cfg.samples_per_class.push_back(k);
         }},
        {"seeds", [&](const std::string& v) { cfg.seeds = parse_int_list(v); }},
        {"threshold", [&](const std::string& v) { cfg.threshold = parse_double(v); }},
        {"jobs", [&](const std::string& v) { cfg.jobs = parse_number<std::size_t>(v); }},
        {"unlabeled_per_class", [&](const std::string& v) { cfg.unlabeled_per_class = parse_number<std::size_t>(v); }}}},
      {"plan",
       {{"per_class", [&](const std::string& v) { cfg.plan_per_class = parse_number<std::size_t>(v); }},
        {"balance_to", [&](const std::string& v) { cfg.balance_to = parse_number<std::size_t>(v); }},
        {"factor", [&](const std::string& v) { cfg.oversample_factor = parse_number<std::size_t>(v); }},
        {"require_label_agreement", [&](const std::string& v) { cfg.filter.require_label_agreement = parse_bool(v); }},
        {"exclude_truncated", [&](const std::string& v) { cfg.filter.exclude_truncated = parse_bool(v); }},
        {"dedup", [&](const std::string& v) { cfg.filter.dedup = parse_bool(v); }}}},
      {"lm",
       {{"order", [&](const std::string& v) { cfg.generator.ngram.order = parse_number<int>(v); }},
        {"alpha", [&](const std::string& v) { cfg.generator.ngram.add_alpha = parse_double(v); }},
        {"prior_path", [&](const std::string& v) { cfg.generator.prior_path = path(v); }},
        {"prior_weight", [&](const std::string& v) { cfg.generator.ngram.prior_weight = parse_double(v); }},
        {"temperature", [&](const std::string& v) { cfg.generation.temperature = parse_double(v); }},
        {"top_k", [&](const std::string& v) { cfg.generation.top_k = parse_number<std::size_t>(v); }},
        {"max_len", [&](const std::string& v) { cfg.generation.max_len = parse_number<std::size_t>(v); }},
        {"greedy", [&](const std::string& v) { cfg.generation.greedy = parse_bool(v); }}}},
      {"generator",
       {{"kind",
         [&](const std::string& v) {
           if (v == "ngram") cfg.generator.kind = GeneratorSpec::Kind::ngram;
           else if (v == "external") cfg.generator.kind = GeneratorSpec::Kind::external;
           else throw Error("generator kind must be ngram or external");
         }},
        {"command", [&](const std::string& v) { cfg.generator.command = v; }},
        {"timeout_ms", [&](const std::string& v) { cfg.generator.timeout_ms = parse_number<int>(v); }}}},
      {"nb", {{"alpha", [&](const std::string& v) { nb.laplace_alpha = parse_double(v); }}}},
      {"logreg",
       {{"lr", [&](const std::string& v) { lr.learning_rate = parse_double(v); }},
        {"epochs", [&](const std::string& v) { lr.epochs = parse_number<int>(v); }},
        {"l2", [&](const std::string& v) { lr.l2 = parse_double(v); }},
        {"batch_size", [&](const std::string& v) { lr.batch_size = parse_number<std::size_t>(v); }},
        {"seed", [&](const std::string& v) { lr.seed = parse_number<std::uint64_t>(v); }}}},
      {"eda",
       {{"alpha", [&](const std::string& v) { cfg.eda.alpha = parse_double(v); }},
        {"n_aug", [&](const std::string& v) { cfg.eda.n_aug = parse_number<std::size_t>(v); }},
        {"ops",
         [&](const std::string& v) {
           cfg.eda.ops.clear();
           for (const auto& o : split_list(v)) cfg.eda.ops.push_back(eda_op_from_string(o));
         }},
        {"seed", [&](const std::string& v) { cfg.eda.seed = parse_number<std::uint64_t>(v); }},
        {"lexicon", [&](const std::string& v) { cfg.lexicon_path = path(v); }}}},
  };

  for (const auto& [section, keys] : ini.sections) {
    auto sec = schema.find(section);
    if (sec == schema.end()) {
      problems.push_back("unknown section [" + section + "]");
      continue;
    }
    for (const auto& [key, entry] : keys) {
      const auto& [value, line] = entry;
      auto setter = sec->second.find(key);
      if (setter == sec->second.end()) {
        problems.push_back("line " + std::to_string(line) + ": unknown key '" + section + "." + key + "'");
        continue;
      }
      try {
        setter->second(value);
      } catch (const std::exception& e) {
        problems.push_back("line " + std::to_string(line) + ": " + section + "." + key + ": " + e.what());
      }
    }
  }

  cfg.classifiers.clear();
  for (auto k : kinds) {
    ClassifierSpec spec;
    spec.kind = k;
    spec.nb = nb;
    spec.logreg = lr;
    cfg.classifiers.push_back(spec);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_ini(IniFile::load(path), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  using json = nlohmann::json;
  std::vector<std::string> methods, classifiers, ops;
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  for (const auto& c : cfg.classifiers) classifiers.push_back(c.name());
  for (auto o : cfg.eda.ops) ops.push_back(to_string(o));
  const ClassifierSpec first = cfg.classifiers.empty() ? ClassifierSpec{} : cfg.classifiers.front();
  json j = {
      {"dataset", {{"path", cfg.dataset_path}, {"test_path", cfg.test_path}}},
      {"split",
       {{"ratios", {cfg.split.train, cfg.split.validation, cfg.split.test}}, {"seed", cfg.split.seed}}},
      {"experiment",
       {{"methods", methods},
        {"classifiers", classifiers},
        {"samples_per_class", cfg.samples_per_class},
        {"seeds", cfg.seeds},
        {"threshold", cfg.threshold},
        {"unlabeled_per_class", cfg.unlabeled_per_class}}},
      {"plan",
       {{"per_class", cfg.plan_per_class},
        {"balance_to", cfg.balance_to},
        {"factor", cfg.oversample_factor},
        {"require_label_agreement", cfg.filter.require_label_agreement},
        {"exclude_truncated", cfg.filter.exclude_truncated},
        {"dedup", cfg.filter.dedup}}},
      {"lm",
       {{"order", cfg.generator.ngram.order},
        {"alpha", cfg.generator.ngram.add_alpha},
        {"prior_path", cfg.generator.prior_path},
        {"prior_weight", cfg.generator.ngram.prior_weight},
        {"temperature", cfg.generation.temperature},
        {"top_k", cfg.generation.top_k},
        {"max_len", cfg.generation.max_len},
        {"greedy", cfg.generation.greedy}}},
      {"generator",
       {{"kind", cfg.generator.kind == GeneratorSpec::Kind::ngram ? "ngram" : "external"},
        {"command", cfg.generator.command},
        {"timeout_ms", cfg.generator.timeout_ms}}},
      {"nb", {{"alpha", first.nb.laplace_alpha}}},
      {"logreg",
       {{"lr", first.logreg.learning_rate},
        {"epochs", first.logreg.epochs},
        {"l2", first.logreg.l2},
        {"batch_size", first.logreg.batch_size},
        {"seed", first.logreg.seed}}},
      {"eda",
       {{"alpha", cfg.eda.alpha},
        {"n_aug", cfg.eda.n_aug},
        {"ops", ops},
        {"seed", cfg.eda.seed},
        {"lexicon", cfg.lexicon_path}}},
  };
  return j.dump(2);
}

}  // namespace lambada
