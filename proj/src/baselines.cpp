#include "lambada/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lambada/random.hpp"

namespace lambada {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

// ---------------------------------------------------------------- lexicon

void SynonymLexicon::add(std::string_view token, const std::vector<std::string>& synonyms) {
  const std::string key = lower(token);
  auto& list = entries_[key];
  for (const auto& s : synonyms) {
    std::string syn = lower(trim(s));
    if (syn.empty() || syn == key) continue;
    if (std::find(list.begin(), list.end(), syn) == list.end()) list.push_back(std::move(syn));
  }
  if (list.empty()) entries_.erase(key);
}

const std::vector<std::string>& SynonymLexicon::synonyms(std::string_view token) const {
  static const std::vector<std::string> none;
  auto it = entries_.find(lower(token));
  return it == entries_.end() ? none : it->second;
}

SynonymLexicon SynonymLexicon::parse(std::istream& in) {
  SynonymLexicon lex;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(n, "lexicon entry needs 'token<TAB>syn1,syn2'");
    const std::string token = trim(line.substr(0, tab));
    if (token.empty()) throw ParseError(n, "lexicon entry has an empty token");
    std::vector<std::string> syns;
    std::stringstream ss(line.substr(tab + 1));
    std::string item;
    while (std::getline(ss, item, ',')) syns.push_back(item);
    lex.add(token, syns);
  }
  return lex;
}

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon '" + path.string() + "'");
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

// ---------------------------------------------------------------- EDA ops

std::string to_string(EdaOp op) {
  switch (op) {
    case EdaOp::synonym_replace: return "synonym_replace";
    case EdaOp::random_insert: return "random_insert";
    case EdaOp::random_swap: return "random_swap";
    case EdaOp::random_delete: return "random_delete";
  }
  return "unknown";
}

EdaOp eda_op_from_string(std::string_view s) {
  if (s == "synonym_replace" || s == "sr") return EdaOp::synonym_replace;
  if (s == "random_insert" || s == "ri") return EdaOp::random_insert;
  if (s == "random_swap" || s == "rs") return EdaOp::random_swap;
  if (s == "random_delete" || s == "rd") return EdaOp::random_delete;
  throw Error("unknown EDA operation '" + std::string(s) + "'");
}

void EdaParams::validate() const {
  if (!(alpha >= 0 && alpha <= 1)) throw Error("EDA alpha must lie in [0, 1]");
  if (n_aug < 1) throw Error("EDA n_aug must be >= 1");
  if (ops.empty()) throw Error("EDA needs at least one enabled operation");
}

std::size_t eda_positions(double alpha, std::size_t len) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(alpha * static_cast<double>(len))));
}

EdaEdit synonym_replace(const std::vector<std::string>& tokens, const SynonymLexicon& lex, std::size_t n, Rng& rng) {
  EdaEdit e{tokens, EdaOp::synonym_replace, 0, false};
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (lex.has(tokens[i])) candidates.push_back(i);
  rng.shuffle(candidates);
  for (std::size_t k = 0; k < candidates.size() && e.applied < n; ++k) {
    const auto& syns = lex.synonyms(tokens[candidates[k]]);
    e.tokens[candidates[k]] = syns[rng.index(syns.size())];
    ++e.applied;
  }
  e.degenerate = e.applied == 0;
  return e;
}

EdaEdit random_insert(const std::vector<std::string>& tokens, const SynonymLexicon& lex, std::size_t n, Rng& rng) {
  EdaEdit e{tokens, EdaOp::random_insert, 0, false};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < e.tokens.size(); ++i)
      if (lex.has(e.tokens[i])) candidates.push_back(i);
    if (candidates.empty()) break;
    const auto& syns = lex.synonyms(e.tokens[candidates[rng.index(candidates.size())]]);
    const std::string word = syns[rng.index(syns.size())];
    const auto pos = rng.index(e.tokens.size() + 1);
    e.tokens.insert(e.tokens.begin() + static_cast<std::ptrdiff_t>(pos), word);
    ++e.applied;
  }
  e.degenerate = e.applied == 0;
  return e;
}

EdaEdit random_swap(const std::vector<std::string>& tokens, std::size_t n, Rng& rng) {
  EdaEdit e{tokens, EdaOp::random_swap, 0, false};
  if (tokens.size() < 2) {
    e.degenerate = true;
    return e;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto a = rng.index(e.tokens.size());
    auto b = rng.index(e.tokens.size() - 1);
    if (b >= a) ++b;
    std::swap(e.tokens[a], e.tokens[b]);
    ++e.applied;
  }
  return e;
}

EdaEdit random_delete(const std::vector<std::string>& tokens, std::size_t n, Rng& rng) {
  EdaEdit e{tokens, EdaOp::random_delete, 0, false};
  const std::size_t remove = std::min(n, tokens.empty() ? 0 : tokens.size() - 1);
  if (remove == 0) {
    e.degenerate = true;
    return e;
  }
  std::vector<std::size_t> idx(tokens.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  std::vector<bool> drop(tokens.size(), false);
  for (std::size_t k = 0; k < remove; ++k) drop[idx[k]] = true;
  e.tokens.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!drop[i]) e.tokens.push_back(tokens[i]);
  e.applied = remove;
  return e;
}

EdaResult eda_augment(const Dataset& d, const SynonymLexicon& lex, const EdaParams& p) {
  p.validate();
  if (d.empty()) throw Error("EDA needs a non-empty dataset");
  EdaResult out;
  out.augmented.labels = d.labels;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& item = d.items[i];
    const std::size_t n = eda_positions(p.alpha, item.tokens.size());
    for (std::size_t v = 0; v < p.n_aug; ++v) {
      Rng rng(derive_seed(p.seed, {i, v}));
      const EdaOp op = p.ops[rng.index(p.ops.size())];
      EdaEdit edit;
      switch (op) {
        case EdaOp::synonym_replace: edit = synonym_replace(item.tokens, lex, n, rng); break;
        case EdaOp::random_insert: edit = random_insert(item.tokens, lex, n, rng); break;
        case EdaOp::random_swap: edit = random_swap(item.tokens, n, rng); break;
        case EdaOp::random_delete: edit = random_delete(item.tokens, n, rng); break;
      }
      out.degenerate += edit.degenerate;
      out.augmented.items.push_back({detokenize(edit.tokens), edit.tokens, item.label});
      out.edits.push_back(std::move(edit));
    }
  }
  return out;
}

// ---------------------------------------------------------------- weak labels

WeakLabelResult weak_label(const ClassifierModel& h, const std::vector<std::string>& unlabeled) {
  WeakLabelResult out;
  out.data.labels = h.labels();
  for (const auto& text : unlabeled) {
    auto tokens = tokenize(text);
    if (tokens.empty()) continue;
    const Prediction p = h.predict(tokens);
    out.data.items.push_back({text, std::move(tokens), p.label.id});
    out.confidences.push_back(p.confidence);
  }
  return out;
}

std::vector<std::string> strip_labels(const Dataset& d) {
  std::vector<std::string> texts;
  texts.reserve(d.size());
  for (const auto& item : d.items) texts.push_back(item.text);
  return texts;
}

}  // namespace lambada
