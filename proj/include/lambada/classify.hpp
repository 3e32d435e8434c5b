#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lambada/corpus.hpp"
#include "lambada/math.hpp"

namespace lambada {

/// Training vocabulary of a classifier; unknown tokens share the id `oov()`,
/// which is one past the last known token.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);
  static Vocabulary from_dataset(const Dataset& d);

  Eigen::Index id(std::string_view token) const;
  Eigen::Index oov() const { return static_cast<Eigen::Index>(tokens_.size()); }
  /// Known tokens plus the OOV slot.
  Eigen::Index dim() const { return oov() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, Eigen::Index, std::less<>> ids_;
};

/// Sparse token-id -> weight map of length `Vocabulary::dim()`.
using FeatureVector = Eigen::SparseVector<double>;
/// Row-per-example design matrix.
using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

FeatureVector count_features(const Vocabulary& vocab, const std::vector<std::string>& tokens);

/// Smoothed idf, ln((1 + N) / (1 + df)) + 1, fitted on a training set.
Eigen::VectorXd fit_idf(const Vocabulary& vocab, const Dataset& d);
/// counts * idf, L2-normalized.
FeatureVector tfidf_features(const Vocabulary& vocab, const Eigen::VectorXd& idf,
                             const std::vector<std::string>& tokens);

enum class ClassifierKind { naive_bayes, logreg };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view s);

struct NaiveBayesParams {
  double laplace_alpha = 1.0;
};

struct LogRegParams {
  double learning_rate = 0.1;
  int epochs = 200;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

/// Which algorithm A to run, with its hyperparameters.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::naive_bayes;
  NaiveBayesParams nb;
  LogRegParams logreg;

  std::string name() const { return to_string(kind); }
};

struct Prediction {
  ClassLabel label;
  double confidence = 0.0;
  /// Posterior over classes, index = class id - 1.
  Eigen::VectorXd distribution;
};

class ClassifierModel {
 public:
  ClassifierKind kind() const { return kind_; }
  const LabelMap& labels() const { return labels_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  std::size_t num_classes() const { return labels_.size(); }

  /// Unnormalized per-class scores: NB log-joint or logreg logits.
  Eigen::VectorXd scores(const std::vector<std::string>& tokens) const;
  Prediction predict(const std::vector<std::string>& tokens) const;
  /// Throws on text that has no tokens.
  Prediction predict(std::string_view text) const;

  // Naive Bayes parameters.
  const Eigen::VectorXd& log_prior() const { return log_prior_; }
  /// q x |V| matrix of log P(token | class); OOV column excluded.
  const Eigen::MatrixXd& log_likelihood() const { return log_likelihood_; }
  const NaiveBayesParams& nb_params() const { return nb_; }

  // Logistic regression parameters.
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  const Eigen::VectorXd& idf() const { return idf_; }
  const LogRegParams& logreg_params() const { return lr_; }
  /// Mean training loss after each epoch (logreg only; not persisted).
  const std::vector<double>& loss_history() const { return loss_history_; }

  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);
  std::string to_json() const;
  static ClassifierModel from_json(std::string_view text);

  friend ClassifierModel train_naive_bayes(const Dataset& d, const NaiveBayesParams& params);
  friend ClassifierModel train_logreg(const Dataset& d, const LogRegParams& params);

 private:
  ClassifierKind kind_ = ClassifierKind::naive_bayes;
  LabelMap labels_;
  Vocabulary vocab_;
  NaiveBayesParams nb_;
  LogRegParams lr_;
  Eigen::VectorXd log_prior_;
  Eigen::MatrixXd log_likelihood_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  Eigen::VectorXd idf_;
  std::vector<double> loss_history_;
};

ClassifierModel train_naive_bayes(const Dataset& d, const NaiveBayesParams& params = {});
ClassifierModel train_logreg(const Dataset& d, const LogRegParams& params = {});
ClassifierModel train_classifier(const ClassifierSpec& spec, const Dataset& d);

/// Mean softmax cross-entropy of `weights`/`bias` on rows of `x`, plus
/// (l2 / 2) * ||weights||^2. Gradients are written when the pointers are set.
double logreg_objective(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias, const FeatureMatrix& x,
                        std::span<const int> targets, double l2, Eigen::MatrixXd* grad_weights = nullptr,
                        Eigen::VectorXd* grad_bias = nullptr);

/// TF-IDF design matrix and 0-based class targets used by logreg training.
struct LogRegDesign {
  Vocabulary vocab;
  Eigen::VectorXd idf;
  FeatureMatrix x;
  std::vector<int> targets;
};
LogRegDesign build_logreg_design(const Dataset& d);

/// Per-example correctness of argmax predictions, in test-set order.
std::vector<bool> correctness(const ClassifierModel& m, const Dataset& test);
/// Fraction of correct predictions; throws on an empty test set.
double accuracy(const ClassifierModel& m, const Dataset& test);

}  // namespace lambada
