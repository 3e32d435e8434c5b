#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lambada/corpus.hpp"

namespace lambada {

using TokenId = int;

/// Token <-> id bijection for the label-conditioned stream. Reserved ids come
/// first: <SEP>, <EOS>, <UNK>, then one `__label_<id>__` per class.
class LmVocab {
 public:
  static constexpr TokenId kSep = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;

  LmVocab() = default;
  explicit LmVocab(std::size_t num_classes);

  /// Adds a corpus token; throws if it spells a reserved token.
  TokenId add(std::string_view token);
  /// Id of a corpus token, or kUnk.
  TokenId id(std::string_view token) const;
  TokenId label_token(ClassId label) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  bool is_label(TokenId id) const { return id >= 3 && id < 3 + static_cast<TokenId>(num_classes_); }
  bool is_reserved(TokenId id) const { return id < 3 + static_cast<TokenId>(num_classes_); }
  ClassId label_of(TokenId id) const { return id - 2; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static bool is_reserved_spelling(std::string_view token);

 private:
  std::size_t num_classes_ = 0;
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> ids_;
};

/// Token ids of the concatenation LABEL SEP tokens EOS, one group per sentence.
struct EncodedStream {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  /// True when `ids` matches (LABEL SEP token+ EOS)+ under `vocab`.
  bool well_formed(const LmVocab& vocab) const;
};

/// Builds a vocabulary covering every token of `d` (and of `extra` texts).
LmVocab build_lm_vocab(const Dataset& d, const std::vector<std::vector<std::string>>& extra = {});

/// Throws if a sentence contains a reserved token spelling.
EncodedStream encode_training_stream(const Dataset& d, const LmVocab& vocab);
/// Inverse of encode_training_stream; throws on a malformed stream.
std::vector<std::pair<std::vector<std::string>, ClassId>> decode_stream(const EncodedStream& s, const LmVocab& vocab);
/// Unlabeled sentences as SEP tokens EOS groups (prior-corpus form).
EncodedStream encode_unlabeled(const std::vector<std::vector<std::string>>& sentences, const LmVocab& vocab);

struct NGramOptions {
  int order = 3;
  double add_alpha = 0.01;
  /// Weight applied to prior-corpus counts when merged with the labeled stream.
  double prior_weight = 0.0;
};

/// Interpolated n-gram model. Each order n >= 2 mixes its ML estimate with the
/// order n-1 distribution using Witten-Bell weights; order 1 is add-alpha.
class NGramModel {
 public:
  struct ContextStats {
    double total = 0.0;
    /// Sum over followers of min(1, count).
    double types = 0.0;
    std::map<TokenId, double> followers;
  };
  using Table = std::map<std::vector<TokenId>, ContextStats>;

  /// Every context unseen: the distribution is uniform over the vocabulary.
  static NGramModel uniform(LmVocab vocab, const NGramOptions& opts);

  int order() const { return opts_.order; }
  const NGramOptions& options() const { return opts_; }
  const LmVocab& vocab() const { return vocab_; }
  /// Class names for the label tokens; empty when the model was fitted on a bare stream.
  const LabelMap& labels() const { return labels_; }
  void set_labels(LabelMap labels);
  /// Tables indexed by order - 1; contexts have order - 1 tokens.
  const std::vector<Table>& tables() const { return tables_; }

  /// Raw relative frequency c(h, w) / c(h) at one order (0 for unseen h).
  double ml_estimate(int order, const std::vector<TokenId>& context, TokenId w) const;
  /// Lower bound on every conditional probability the model can produce.
  double floor_probability() const;

  double probability(const std::vector<TokenId>& context, TokenId w) const;

  /// P(. | context); only the last order-1 ids of `context` are used and
  /// shorter contexts are left-padded with <EOS>.
  Eigen::VectorXd next_token_dist(const std::vector<TokenId>& context) const;

  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);
  std::string to_json() const;
  static NGramModel from_json(std::string_view text);

  friend NGramModel fit_ngram(const EncodedStream& stream, LmVocab vocab, const NGramOptions& opts,
                              const EncodedStream* prior);

 private:
  void count(const EncodedStream& stream, double weight);

  NGramOptions opts_;
  LmVocab vocab_;
  LabelMap labels_;
  std::vector<Table> tables_;
};

/// Fits count tables on `stream` plus, when given, `prior` at opts.prior_weight.
NGramModel fit_ngram(const EncodedStream& stream, LmVocab vocab, const NGramOptions& opts = {},
                     const EncodedStream* prior = nullptr);

struct GenerationParams {
  double temperature = 1.0;
  /// 0 means unlimited.
  std::size_t top_k = 0;
  std::size_t max_len = 40;
  std::uint64_t seed = 0;
  /// Argmax decoding; also used whenever temperature < 1e-6.
  bool greedy = false;

  void validate() const;
};

struct GeneratedSentence {
  std::vector<std::string> tokens;
  ClassId label = 0;
  bool truncated = false;
  std::uint64_t gen_seed = 0;
};

/// Continues [LABEL_y, SEP] until <EOS> or max_len tokens.
GeneratedSentence sample_sentence(const NGramModel& m, ClassId y, const GenerationParams& p);

struct NllResult {
  double nll = 0.0;
  std::size_t tokens = 0;
  double perplexity = 1.0;
};

/// -sum_j ln P(w_j | previous order-1 ids), with <EOS> padding at the start.
NllResult corpus_nll(const NGramModel& m, const EncodedStream& stream);

/// The G slot of the pipeline: adapted on a labeled set, then asked for
/// sentences conditioned on a class.
class ConditionalGenerator {
 public:
  virtual ~ConditionalGenerator() = default;
  virtual std::string name() const = 0;
  virtual void fit(const Dataset& d) = 0;
  virtual bool covers(ClassId label) const = 0;
  /// Exactly `count` sentences for `label`. Candidate i uses seed
  /// derive_seed(class_seed, {i}) where the generator supports per-candidate seeds.
  virtual std::vector<GeneratedSentence> generate(ClassId label, std::size_t count, std::uint64_t class_seed,
                                                  const GenerationParams& params) = 0;
};

/// Built-in generator backed by NGramModel, optionally mixing in an
/// unlabeled prior corpus.
class NGramGenerator : public ConditionalGenerator {
 public:
  explicit NGramGenerator(NGramOptions opts = {}, std::vector<std::string> prior_corpus = {}, std::size_t jobs = 1);

  std::string name() const override { return "ngram"; }
  void fit(const Dataset& d) override;
  bool covers(ClassId label) const override;
  std::vector<GeneratedSentence> generate(ClassId label, std::size_t count, std::uint64_t class_seed,
                                          const GenerationParams& params) override;

  /// Throws if fit() has not been called.
  const NGramModel& model() const;
  void set_model(NGramModel m) { model_ = std::move(m); fitted_ = true; }

 private:
  NGramOptions opts_;
  std::vector<std::vector<std::string>> prior_;
  std::size_t jobs_;
  NGramModel model_;
  bool fitted_ = false;
};

}  // namespace lambada
