#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lambada/classify.hpp"
#include "lambada/corpus.hpp"
#include "lambada/random.hpp"

namespace lambada {

/// token -> synonyms. Lookups are lowercased; a token is never its own synonym.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;

  void add(std::string_view token, const std::vector<std::string>& synonyms);
  const std::vector<std::string>& synonyms(std::string_view token) const;
  bool has(std::string_view token) const { return !synonyms(token).empty(); }
  std::size_t size() const { return entries_.size(); }

  /// One entry per line: token TAB comma-separated synonyms. '#' starts a comment.
  static SynonymLexicon parse(std::istream& in);
  static SynonymLexicon load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

enum class EdaOp { synonym_replace, random_insert, random_swap, random_delete };

std::string to_string(EdaOp op);
EdaOp eda_op_from_string(std::string_view s);

struct EdaParams {
  /// Fraction of tokens touched per operation; at least one position is always touched.
  double alpha = 0.1;
  std::size_t n_aug = 4;
  std::vector<EdaOp> ops = {EdaOp::synonym_replace, EdaOp::random_insert, EdaOp::random_swap,
                            EdaOp::random_delete};
  std::uint64_t seed = 0;

  void validate() const;
};

struct EdaEdit {
  std::vector<std::string> tokens;
  EdaOp op = EdaOp::random_swap;
  /// Number of positions actually changed (insertions for random_insert).
  std::size_t applied = 0;
  /// The op could not act on this sentence and returned it unchanged.
  bool degenerate = false;
};

/// max(1, floor(alpha * len)).
std::size_t eda_positions(double alpha, std::size_t len);

EdaEdit synonym_replace(const std::vector<std::string>& tokens, const SynonymLexicon& lex, std::size_t n, Rng& rng);
EdaEdit random_insert(const std::vector<std::string>& tokens, const SynonymLexicon& lex, std::size_t n, Rng& rng);
EdaEdit random_swap(const std::vector<std::string>& tokens, std::size_t n, Rng& rng);
/// Deletes min(n, len - 1) positions so the sentence never becomes empty.
EdaEdit random_delete(const std::vector<std::string>& tokens, std::size_t n, Rng& rng);

struct EdaResult {
  Dataset augmented;
  /// One entry per augmented item.
  std::vector<EdaEdit> edits;
  std::size_t degenerate = 0;
};

/// n_aug variants per sentence, each from one uniformly chosen enabled op.
EdaResult eda_augment(const Dataset& d, const SynonymLexicon& lex, const EdaParams& p);

struct WeakLabelResult {
  Dataset data;
  std::vector<double> confidences;
};

/// Labels each text with the classifier's prediction. Texts without tokens are skipped.
WeakLabelResult weak_label(const ClassifierModel& h, const std::vector<std::string>& unlabeled);

std::vector<std::string> strip_labels(const Dataset& d);

}  // namespace lambada
