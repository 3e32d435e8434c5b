#include "lambada/condlm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lambada/math.hpp"
#include "lambada/random.hpp"

namespace lambada {

using json = nlohmann::json;

// ---------------------------------------------------------------- vocab

namespace {

std::string label_spelling(ClassId id) { return "__label_" + std::to_string(id) + "__"; }

}  // namespace

LmVocab::LmVocab(std::size_t num_classes) : num_classes_(num_classes) {
  tokens_ = {"<SEP>", "<EOS>", "<UNK>"};
  for (std::size_t c = 1; c <= num_classes; ++c) tokens_.push_back(label_spelling(static_cast<ClassId>(c)));
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<TokenId>(i));
}

bool LmVocab::is_reserved_spelling(std::string_view token) {
  if (token == "<SEP>" || token == "<EOS>" || token == "<UNK>") return true;
  constexpr std::string_view prefix = "__label_";
  constexpr std::string_view suffix = "__";
  if (token.size() <= prefix.size() + suffix.size()) return false;
  if (token.substr(0, prefix.size()) != prefix || token.substr(token.size() - suffix.size()) != suffix) return false;
  const auto digits = token.substr(prefix.size(), token.size() - prefix.size() - suffix.size());
  return std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
}

TokenId LmVocab::add(std::string_view token) {
  if (is_reserved_spelling(token)) throw Error("token '" + std::string(token) + "' collides with a reserved token");
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

TokenId LmVocab::id(std::string_view token) const {
  if (is_reserved_spelling(token)) return kUnk;
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

TokenId LmVocab::label_token(ClassId label) const {
  if (label < 1 || static_cast<std::size_t>(label) > num_classes_)
    throw Error("class id " + std::to_string(label) + " has no label token");
  return 2 + label;
}

// ---------------------------------------------------------------- streams

bool EncodedStream::well_formed(const LmVocab& vocab) const {
  enum { kLabel, kSepNext, kFirstToken, kTokens } state = kLabel;
  for (const TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) return false;
    switch (state) {
      case kLabel:
        if (!vocab.is_label(id)) return false;
        state = kSepNext;
        break;
      case kSepNext:
        if (id != LmVocab::kSep) return false;
        state = kFirstToken;
        break;
      case kFirstToken:
        if (vocab.is_reserved(id)) return false;
        state = kTokens;
        break;
      case kTokens:
        if (id == LmVocab::kEos) {
          state = kLabel;
        } else if (vocab.is_reserved(id)) {
          return false;
        }
        break;
    }
  }
  return state == kLabel && !ids.empty();
}

LmVocab build_lm_vocab(const Dataset& d, const std::vector<std::vector<std::string>>& extra) {
  LmVocab vocab(d.num_classes());
  for (const auto& item : d.items)
    for (const auto& t : item.tokens) vocab.add(t);
  for (const auto& sentence : extra)
    for (const auto& t : sentence) vocab.add(t);
  return vocab;
}

EncodedStream encode_training_stream(const Dataset& d, const LmVocab& vocab) {
  if (d.empty()) throw Error("cannot encode an empty dataset");
  EncodedStream s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& item = d.items[i];
    s.ids.push_back(vocab.label_token(item.label));
    s.ids.push_back(LmVocab::kSep);
    for (const auto& t : item.tokens) {
      if (LmVocab::is_reserved_spelling(t))
        throw Error("sentence " + std::to_string(i + 1) + " contains reserved token '" + t + "'");
      s.ids.push_back(vocab.id(t));
    }
    s.ids.push_back(LmVocab::kEos);
  }
  return s;
}

EncodedStream encode_unlabeled(const std::vector<std::vector<std::string>>& sentences, const LmVocab& vocab) {
  EncodedStream s;
  for (const auto& tokens : sentences) {
    if (tokens.empty()) continue;
    s.ids.push_back(LmVocab::kSep);
    for (const auto& t : tokens) s.ids.push_back(vocab.id(t));
    s.ids.push_back(LmVocab::kEos);
  }
  return s;
}

std::vector<std::pair<std::vector<std::string>, ClassId>> decode_stream(const EncodedStream& s, const LmVocab& vocab) {
  if (!s.well_formed(vocab)) throw Error("stream does not match (LABEL SEP token+ EOS)+");
  std::vector<std::pair<std::vector<std::string>, ClassId>> out;
  std::size_t i = 0;
  while (i < s.ids.size()) {
    const ClassId label = vocab.label_of(s.ids[i]);
    i += 2;
    std::vector<std::string> tokens;
    while (s.ids[i] != LmVocab::kEos) tokens.push_back(vocab.token(s.ids[i++]));
    ++i;
    out.emplace_back(std::move(tokens), label);
  }
  return out;
}

// ---------------------------------------------------------------- model

NGramModel NGramModel::uniform(LmVocab vocab, const NGramOptions& opts) {
  if (opts.order < 2) throw Error("n-gram order must be >= 2");
  NGramModel m;
  m.opts_ = opts;
  m.vocab_ = std::move(vocab);
  m.tables_.resize(static_cast<std::size_t>(opts.order));
  return m;
}

void NGramModel::set_labels(LabelMap labels) {
  if (labels.size() != vocab_.num_classes()) throw Error("label map size does not match the model's class count");
  labels_ = std::move(labels);
}

void NGramModel::count(const EncodedStream& stream, double weight) {
  const int k = opts_.order;
  std::vector<TokenId> padded(static_cast<std::size_t>(k - 1), LmVocab::kEos);
  padded.insert(padded.end(), stream.ids.begin(), stream.ids.end());
  for (std::size_t j = static_cast<std::size_t>(k - 1); j < padded.size(); ++j) {
    const TokenId w = padded[j];
    for (int n = 1; n <= k; ++n) {
      std::vector<TokenId> ctx(padded.begin() + static_cast<std::ptrdiff_t>(j) - (n - 1),
                               padded.begin() + static_cast<std::ptrdiff_t>(j));
      auto& stats = tables_[static_cast<std::size_t>(n - 1)][ctx];
      stats.total += weight;
      stats.followers[w] += weight;
    }
  }
}

NGramModel fit_ngram(const EncodedStream& stream, LmVocab vocab, const NGramOptions& opts, const EncodedStream* prior) {
  if (opts.order < 2) throw Error("n-gram order must be >= 2 (label conditioning needs at least bigrams)");
  if (!(opts.add_alpha > 0)) throw Error("n-gram add-alpha must be positive");
  if (opts.prior_weight < 0) throw Error("prior weight must be >= 0");
  if (stream.size() < static_cast<std::size_t>(opts.order))
    throw Error("stream of length " + std::to_string(stream.size()) + " is shorter than the n-gram order");
  NGramModel m = NGramModel::uniform(std::move(vocab), opts);
  m.count(stream, 1.0);
  if (prior && opts.prior_weight > 0 && !prior->ids.empty()) m.count(*prior, opts.prior_weight);
  for (auto& table : m.tables_)
    for (auto& [ctx, stats] : table) {
      stats.types = 0.0;
      for (const auto& [w, c] : stats.followers) stats.types += std::min(1.0, c);
    }
  return m;
}

double NGramModel::ml_estimate(int order, const std::vector<TokenId>& context, TokenId w) const {
  if (order < 1 || order > opts_.order) throw Error("order out of range");
  const auto& table = tables_[static_cast<std::size_t>(order - 1)];
  std::vector<TokenId> ctx(context.end() - std::min<std::ptrdiff_t>(order - 1, static_cast<std::ptrdiff_t>(context.size())),
                           context.end());
  auto it = table.find(ctx);
  if (it == table.end() || it->second.total <= 0) return 0.0;
  auto f = it->second.followers.find(w);
  return f == it->second.followers.end() ? 0.0 : f->second / it->second.total;
}

namespace {

std::vector<TokenId> padded_context(const std::vector<TokenId>& context, int order) {
  const auto need = static_cast<std::size_t>(order - 1);
  std::vector<TokenId> ctx(need, LmVocab::kEos);
  const std::size_t take = std::min(need, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

}  // namespace

double NGramModel::floor_probability() const {
  const double v = static_cast<double>(vocab_.size());
  double unigram_total = 0.0;
  if (!tables_.empty()) {
    auto it = tables_[0].find({});
    if (it != tables_[0].end()) unigram_total = it->second.total;
  }
  double bound = opts_.add_alpha / (unigram_total + opts_.add_alpha * v);
  for (std::size_t n = 1; n < tables_.size(); ++n) {
    double worst = 1.0;
    for (const auto& [ctx, stats] : tables_[n])
      if (stats.total > 0) worst = std::min(worst, stats.types / (stats.total + stats.types));
    bound *= worst;
  }
  return bound;
}

Eigen::VectorXd NGramModel::next_token_dist(const std::vector<TokenId>& context) const {
  const auto v = static_cast<Eigen::Index>(vocab_.size());
  const auto ctx = padded_context(context, opts_.order);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(v, opts_.add_alpha);
  double total = opts_.add_alpha * static_cast<double>(v);
  if (auto it = tables_[0].find({}); it != tables_[0].end()) {
    for (const auto& [w, c] : it->second.followers) p(w) += c;
    total += it->second.total;
  }
  p /= total;
  for (int n = 2; n <= opts_.order; ++n) {
    const std::vector<TokenId> h(ctx.end() - (n - 1), ctx.end());
    const auto& table = tables_[static_cast<std::size_t>(n - 1)];
    auto it = table.find(h);
    if (it == table.end() || it->second.total <= 0) continue;
    const auto& stats = it->second;
    const double lambda = stats.total / (stats.total + stats.types);
    p *= (1.0 - lambda);
    for (const auto& [w, c] : stats.followers) p(w) += lambda * c / stats.total;
  }
  return p;
}

double NGramModel::probability(const std::vector<TokenId>& context, TokenId w) const {
  const auto ctx = padded_context(context, opts_.order);
  double total = opts_.add_alpha * static_cast<double>(vocab_.size());
  double count = opts_.add_alpha;
  if (auto it = tables_[0].find({}); it != tables_[0].end()) {
    total += it->second.total;
    if (auto f = it->second.followers.find(w); f != it->second.followers.end()) count += f->second;
  }
  double p = count / total;
  for (int n = 2; n <= opts_.order; ++n) {
    const std::vector<TokenId> h(ctx.end() - (n - 1), ctx.end());
    const auto& table = tables_[static_cast<std::size_t>(n - 1)];
    auto it = table.find(h);
    if (it == table.end() || it->second.total <= 0) continue;
    const auto& stats = it->second;
    const double lambda = stats.total / (stats.total + stats.types);
    auto f = stats.followers.find(w);
    const double ml = f == stats.followers.end() ? 0.0 : f->second / stats.total;
    p = lambda * ml + (1.0 - lambda) * p;
  }
  return p;
}

// ---------------------------------------------------------------- sampling

void GenerationParams::validate() const {
  if (!(temperature > 0)) throw Error("temperature must be > 0");
  if (max_len == 0) throw Error("max_len must be >= 1");
}

GeneratedSentence sample_sentence(const NGramModel& m, ClassId y, const GenerationParams& p) {
  p.validate();
  const LmVocab& vocab = m.vocab();
  std::vector<TokenId> context = {vocab.label_token(y), LmVocab::kSep};
  GeneratedSentence out;
  out.label = y;
  out.gen_seed = p.seed;
  Rng rng(p.seed);
  const bool greedy = p.greedy || p.temperature < 1e-6;
  const auto v = static_cast<Eigen::Index>(vocab.size());

  while (true) {
    if (out.tokens.size() >= p.max_len) {
      out.truncated = true;
      break;
    }
    Eigen::VectorXd dist = m.next_token_dist(context);
    dist(LmVocab::kSep) = 0.0;
    dist(LmVocab::kUnk) = 0.0;
    for (std::size_t c = 1; c <= vocab.num_classes(); ++c) dist(vocab.label_token(static_cast<ClassId>(c))) = 0.0;
    if (out.tokens.empty()) dist(LmVocab::kEos) = 0.0;

    TokenId next;
    if (greedy) {
      next = static_cast<TokenId>(argmax_first(dist));
    } else {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(v);
      double max_log = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < v; ++i)
        if (dist(i) > 0) max_log = std::max(max_log, std::log(dist(i)) / p.temperature);
      for (Eigen::Index i = 0; i < v; ++i)
        if (dist(i) > 0) w(i) = std::exp(std::log(dist(i)) / p.temperature - max_log);
      if (p.top_k > 0 && static_cast<Eigen::Index>(p.top_k) < v) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(v));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
        for (std::size_t r = p.top_k; r < order.size(); ++r) w(order[r]) = 0.0;
      }
      const double u = rng.uniform() * w.sum();
      double acc = 0.0;
      next = -1;
      for (Eigen::Index i = 0; i < v; ++i) {
        if (w(i) <= 0) continue;
        acc += w(i);
        next = static_cast<TokenId>(i);
        if (u < acc) break;
      }
    }
    if (next == LmVocab::kEos) break;
    out.tokens.push_back(vocab.token(next));
    context.push_back(next);
  }
  return out;
}

NllResult corpus_nll(const NGramModel& m, const EncodedStream& stream) {
  NllResult r;
  std::vector<TokenId> context;
  for (const TokenId w : stream.ids) {
    r.nll -= std::log(m.probability(context, w));
    context.push_back(w);
  }
  r.tokens = stream.size();
  r.perplexity = r.tokens ? std::exp(r.nll / static_cast<double>(r.tokens)) : 1.0;
  return r;
}

// ---------------------------------------------------------------- persistence

std::string NGramModel::to_json() const {
  json j;
  j["format"] = "lambada-ngram";
  j["version"] = 1;
  j["order"] = opts_.order;
  j["add_alpha"] = opts_.add_alpha;
  j["prior_weight"] = opts_.prior_weight;
  j["num_classes"] = vocab_.num_classes();
  j["labels"] = labels_.names();
  const auto& tokens = vocab_.tokens();
  j["vocabulary"] = std::vector<std::string>(tokens.begin() + 3 + static_cast<std::ptrdiff_t>(vocab_.num_classes()),
                                             tokens.end());
  json counts = json::array();
  for (std::size_t n = 0; n < tables_.size(); ++n)
    for (const auto& [ctx, stats] : tables_[n])
      for (const auto& [w, c] : stats.followers) counts.push_back({n + 1, ctx, w, c});
  j["counts"] = std::move(counts);
  return j.dump();
}

NGramModel NGramModel::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "lambada-ngram") throw Error("not an n-gram model file");
    if (j.value("version", 0) != 1) throw Error("unsupported n-gram model version");
    NGramOptions opts;
    opts.order = j.at("order").get<int>();
    opts.add_alpha = j.at("add_alpha").get<double>();
    opts.prior_weight = j.at("prior_weight").get<double>();
    LmVocab vocab(j.at("num_classes").get<std::size_t>());
    for (const auto& t : j.at("vocabulary")) vocab.add(t.get<std::string>());
    NGramModel m = NGramModel::uniform(std::move(vocab), opts);
    const auto names = j.at("labels").get<std::vector<std::string>>();
    if (!names.empty()) m.set_labels(LabelMap(names));
    for (const auto& row : j.at("counts")) {
      const auto n = row.at(0).get<std::size_t>();
      if (n < 1 || n > m.tables_.size()) throw Error("n-gram model file: bad order in counts");
      auto& stats = m.tables_[n - 1][row.at(1).get<std::vector<TokenId>>()];
      const double c = row.at(3).get<double>();
      stats.followers[row.at(2).get<TokenId>()] += c;
      stats.total += c;
      stats.types += std::min(1.0, c);
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid n-gram model file: ") + e.what());
  }
}

void NGramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json() << '\n';
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------- generator

NGramGenerator::NGramGenerator(NGramOptions opts, std::vector<std::string> prior_corpus, std::size_t jobs)
    : opts_(opts), jobs_(std::max<std::size_t>(1, jobs)) {
  for (const auto& text : prior_corpus) {
    auto tokens = tokenize(text);
    if (!tokens.empty()) prior_.push_back(std::move(tokens));
  }
}

void NGramGenerator::fit(const Dataset& d) {
  LmVocab vocab = build_lm_vocab(d, opts_.prior_weight > 0 ? prior_ : std::vector<std::vector<std::string>>{});
  const EncodedStream stream = encode_training_stream(d, vocab);
  EncodedStream prior;
  if (opts_.prior_weight > 0) prior = encode_unlabeled(prior_, vocab);
  model_ = fit_ngram(stream, std::move(vocab), opts_, &prior);
  model_.set_labels(d.labels);
  fitted_ = true;
}

const NGramModel& NGramGenerator::model() const {
  if (!fitted_) throw Error("n-gram generator has not been fitted");
  return model_;
}

bool NGramGenerator::covers(ClassId label) const {
  return fitted_ && label >= 1 && static_cast<std::size_t>(label) <= model_.vocab().num_classes();
}

std::vector<GeneratedSentence> NGramGenerator::generate(ClassId label, std::size_t count, std::uint64_t class_seed,
                                                        const GenerationParams& params) {
  const NGramModel& m = model();
  if (!covers(label)) throw Error("class id " + std::to_string(label) + " is unknown to the generator");
  params.validate();
  std::vector<GeneratedSentence> out(count);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      GenerationParams p = params;
      p.seed = derive_seed(class_seed, {i});
      out[i] = sample_sentence(m, label, p);
    }
  };
  const std::size_t jobs = std::min(jobs_, std::max<std::size_t>(1, count));
  if (jobs <= 1) {
    work(0, count);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (count + jobs - 1) / jobs;
    for (std::size_t t = 0; t < jobs; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      if (begin < end) threads.emplace_back(work, begin, end);
    }
    for (auto& th : threads) th.join();
  }
  return out;
}

}  // namespace lambada
