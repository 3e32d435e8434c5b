#include "lambada/classify.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lambada/random.hpp"

namespace lambada {

using json = nlohmann::json;

// ---------------------------------------------------------------- features

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<Eigen::Index>(i)).second)
      throw Error("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::from_dataset(const Dataset& d) {
  std::vector<std::string> tokens;
  std::map<std::string, Eigen::Index, std::less<>> seen;
  for (const auto& item : d.items)
    for (const auto& t : item.tokens)
      if (seen.emplace(t, static_cast<Eigen::Index>(tokens.size())).second) tokens.push_back(t);
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.ids_ = std::move(seen);
  return v;
}

Eigen::Index Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? oov() : it->second;
}

FeatureVector count_features(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
  FeatureVector f(vocab.dim());
  for (const auto& t : tokens) f.coeffRef(vocab.id(t)) += 1.0;
  return f;
}

Eigen::VectorXd fit_idf(const Vocabulary& vocab, const Dataset& d) {
  Eigen::VectorXd df = Eigen::VectorXd::Zero(vocab.dim());
  for (const auto& item : d.items) {
    const FeatureVector f = count_features(vocab, item.tokens);
    for (FeatureVector::InnerIterator it(f); it; ++it) df(it.index()) += 1.0;
  }
  const double n = static_cast<double>(d.size());
  return ((1.0 + n) / (1.0 + df.array())).log().matrix() + Eigen::VectorXd::Ones(vocab.dim());
}

FeatureVector tfidf_features(const Vocabulary& vocab, const Eigen::VectorXd& idf,
                             const std::vector<std::string>& tokens) {
  FeatureVector f = count_features(vocab, tokens);
  for (FeatureVector::InnerIterator it(f); it; ++it) it.valueRef() *= idf(it.index());
  const double norm = f.norm();
  if (norm > 0) f /= norm;
  return f;
}

// ---------------------------------------------------------------- model

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::naive_bayes ? "nb" : "logreg";
}

ClassifierKind classifier_kind_from_string(std::string_view s) {
  if (s == "nb" || s == "naive_bayes") return ClassifierKind::naive_bayes;
  if (s == "logreg" || s == "lr") return ClassifierKind::logreg;
  throw Error("unknown classifier kind '" + std::string(s) + "' (expected nb or logreg)");
}

Eigen::VectorXd ClassifierModel::scores(const std::vector<std::string>& tokens) const {
  if (kind_ == ClassifierKind::naive_bayes) {
    Eigen::VectorXd s = log_prior_;
    for (const auto& t : tokens) {
      const auto id = vocab_.id(t);
      if (id != vocab_.oov()) s += log_likelihood_.col(id);
    }
    return s;
  }
  const FeatureVector f = tfidf_features(vocab_, idf_, tokens);
  return weights_ * f + bias_;
}

Prediction ClassifierModel::predict(const std::vector<std::string>& tokens) const {
  Prediction p;
  p.distribution = softmax(scores(tokens));
  const auto best = argmax_first(p.distribution);
  p.label = labels_.label(static_cast<ClassId>(best + 1));
  p.confidence = p.distribution(best);
  return p;
}

Prediction ClassifierModel::predict(std::string_view text) const {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw Error("cannot classify empty text");
  return predict(tokens);
}

namespace {

void require_nonempty_classes(const Dataset& d) {
  if (d.empty()) throw Error("training set is empty");
  const auto counts = d.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0)
      throw Error("class '" + d.labels.name(static_cast<ClassId>(c + 1)) + "' has no training examples");
}

}  // namespace

ClassifierModel train_naive_bayes(const Dataset& d, const NaiveBayesParams& params) {
  if (!(params.laplace_alpha > 0)) throw Error("naive Bayes alpha must be positive");
  require_nonempty_classes(d);
  ClassifierModel m;
  m.kind_ = ClassifierKind::naive_bayes;
  m.labels_ = d.labels;
  m.vocab_ = Vocabulary::from_dataset(d);
  m.nb_ = params;

  const auto q = static_cast<Eigen::Index>(d.num_classes());
  const Eigen::Index v = m.vocab_.oov();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(q, v);
  Eigen::VectorXd docs = Eigen::VectorXd::Zero(q);
  for (const auto& item : d.items) {
    const Eigen::Index c = item.label - 1;
    docs(c) += 1.0;
    for (const auto& t : item.tokens) counts(c, m.vocab_.id(t)) += 1.0;
  }
  m.log_prior_ = (docs.array() / static_cast<double>(d.size())).log();
  const double a = params.laplace_alpha;
  const Eigen::VectorXd denom = counts.rowwise().sum().array() + a * static_cast<double>(v);
  m.log_likelihood_ = ((counts.array() + a).colwise() / denom.array()).log();
  return m;
}

double logreg_objective(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias, const FeatureMatrix& x,
                        std::span<const int> targets, double l2, Eigen::MatrixXd* grad_weights,
                        Eigen::VectorXd* grad_bias) {
  const Eigen::Index n = x.rows();
  if (n == 0) throw Error("logreg objective on empty batch");
  // n x q logits
  Eigen::MatrixXd logits = x * weights.transpose();
  logits.rowwise() += bias.transpose();
  double loss = 0.0;
  Eigen::MatrixXd residual(n, weights.rows());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = logits.row(i).transpose();
    const double shift = row.maxCoeff();
    const double lse = shift + std::log((row.array() - shift).exp().sum());
    loss += lse - row(targets[static_cast<std::size_t>(i)]);
    residual.row(i) = (row.array() - lse).exp().matrix().transpose();
    residual(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss = loss * inv_n + 0.5 * l2 * weights.squaredNorm();
  if (grad_weights) *grad_weights = (residual.transpose() * x) * inv_n + l2 * weights;
  if (grad_bias) *grad_bias = residual.colwise().sum().transpose() * inv_n;
  return loss;
}

LogRegDesign build_logreg_design(const Dataset& d) {
  LogRegDesign design;
  design.vocab = Vocabulary::from_dataset(d);
  design.idf = fit_idf(design.vocab, d);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const FeatureVector f = tfidf_features(design.vocab, design.idf, d.items[i].tokens);
    for (FeatureVector::InnerIterator it(f); it; ++it)
      triplets.emplace_back(static_cast<Eigen::Index>(i), it.index(), it.value());
    design.targets.push_back(d.items[i].label - 1);
  }
  design.x.resize(static_cast<Eigen::Index>(d.size()), design.vocab.dim());
  design.x.setFromTriplets(triplets.begin(), triplets.end());
  return design;
}

ClassifierModel train_logreg(const Dataset& d, const LogRegParams& params) {
  if (!(params.learning_rate > 0)) throw Error("logreg learning rate must be positive");
  if (params.epochs < 0) throw Error("logreg epochs must be >= 0");
  if (params.l2 < 0) throw Error("logreg l2 must be >= 0");
  if (params.batch_size == 0) throw Error("logreg batch size must be >= 1");
  require_nonempty_classes(d);

  ClassifierModel m;
  m.kind_ = ClassifierKind::logreg;
  m.labels_ = d.labels;
  m.lr_ = params;
  auto design = build_logreg_design(d);
  m.vocab_ = std::move(design.vocab);
  m.idf_ = std::move(design.idf);

  const auto q = static_cast<Eigen::Index>(d.num_classes());
  m.weights_ = Eigen::MatrixXd::Zero(q, m.vocab_.dim());
  m.bias_ = Eigen::VectorXd::Zero(q);

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params.seed);
  Eigen::MatrixXd grad_w;
  Eigen::VectorXd grad_b;
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t end = std::min(n, start + params.batch_size);
      FeatureMatrix batch(static_cast<Eigen::Index>(end - start), design.x.cols());
      std::vector<Eigen::Triplet<double>> triplets;
      std::vector<int> targets;
      for (std::size_t r = start; r < end; ++r) {
        const auto row = static_cast<Eigen::Index>(order[r]);
        for (FeatureMatrix::InnerIterator it(design.x, row); it; ++it)
          triplets.emplace_back(static_cast<Eigen::Index>(r - start), it.col(), it.value());
        targets.push_back(design.targets[order[r]]);
      }
      batch.setFromTriplets(triplets.begin(), triplets.end());
      logreg_objective(m.weights_, m.bias_, batch, targets, params.l2, &grad_w, &grad_b);
      m.weights_ -= params.learning_rate * grad_w;
      m.bias_ -= params.learning_rate * grad_b;
    }
    const double loss = logreg_objective(m.weights_, m.bias_, design.x, design.targets, params.l2);
    if (!std::isfinite(loss)) throw Error("logreg loss became non-finite at epoch " + std::to_string(epoch));
    m.loss_history_.push_back(loss);
  }
  return m;
}

ClassifierModel train_classifier(const ClassifierSpec& spec, const Dataset& d) {
  return spec.kind == ClassifierKind::naive_bayes ? train_naive_bayes(d, spec.nb) : train_logreg(d, spec.logreg);
}

std::vector<bool> correctness(const ClassifierModel& m, const Dataset& test) {
  std::vector<bool> bits;
  bits.reserve(test.size());
  for (const auto& item : test.items) bits.push_back(m.predict(item.tokens).label.id == item.label);
  return bits;
}

double accuracy(const ClassifierModel& m, const Dataset& test) {
  if (test.empty()) throw Error("accuracy requires a non-empty test set");
  const auto bits = correctness(m, test);
  const auto hits = std::count(bits.begin(), bits.end(), true);
  return static_cast<double>(hits) / static_cast<double>(bits.size());
}

// ---------------------------------------------------------------- persistence

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw Error("model file: bad matrix shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw Error("model file: bad matrix shape");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != size) throw Error("model file: bad vector length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), size);
}

}  // namespace

std::string ClassifierModel::to_json() const {
  json j;
  j["format"] = "lambada-classifier";
  j["version"] = 1;
  j["kind"] = to_string(kind_);
  j["labels"] = labels_.names();
  j["vocabulary"] = vocab_.tokens();
  if (kind_ == ClassifierKind::naive_bayes) {
    j["hyperparameters"] = {{"laplace_alpha", nb_.laplace_alpha}};
    j["log_prior"] = vector_to_json(log_prior_);
    j["log_likelihood"] = matrix_to_json(log_likelihood_);
  } else {
    j["hyperparameters"] = {{"learning_rate", lr_.learning_rate},
                            {"epochs", lr_.epochs},
                            {"l2", lr_.l2},
                            {"batch_size", lr_.batch_size},
                            {"seed", lr_.seed}};
    j["idf"] = vector_to_json(idf_);
    j["weights"] = matrix_to_json(weights_);
    j["bias"] = vector_to_json(bias_);
  }
  return j.dump();
}

ClassifierModel ClassifierModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    if (j.value("format", "") != "lambada-classifier") throw Error("not a classifier model file");
    if (j.value("version", 0) != 1) throw Error("unsupported classifier model version");
    ClassifierModel m;
    m.kind_ = classifier_kind_from_string(j.at("kind").get<std::string>());
    m.labels_ = LabelMap(j.at("labels").get<std::vector<std::string>>());
    m.vocab_ = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    const auto q = static_cast<Eigen::Index>(m.labels_.size());
    const auto& hp = j.at("hyperparameters");
    if (m.kind_ == ClassifierKind::naive_bayes) {
      m.nb_.laplace_alpha = hp.at("laplace_alpha").get<double>();
      m.log_prior_ = vector_from_json(j.at("log_prior"), q);
      m.log_likelihood_ = matrix_from_json(j.at("log_likelihood"), q, m.vocab_.oov());
    } else {
      m.lr_.learning_rate = hp.at("learning_rate").get<double>();
      m.lr_.epochs = hp.at("epochs").get<int>();
      m.lr_.l2 = hp.at("l2").get<double>();
      m.lr_.batch_size = hp.at("batch_size").get<std::size_t>();
      m.lr_.seed = hp.at("seed").get<std::uint64_t>();
      m.idf_ = vector_from_json(j.at("idf"), m.vocab_.dim());
      m.weights_ = matrix_from_json(j.at("weights"), q, m.vocab_.dim());
      m.bias_ = vector_from_json(j.at("bias"), q);
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid classifier model file: ") + e.what());
  }
}

void ClassifierModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json() << '\n';
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace lambada
