#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lambada/classify.hpp"
#include "support/temp_dir.hpp"

using namespace lambada;

namespace {

Dataset make(const std::vector<std::pair<std::string, std::string>>& rows) {
  Dataset d;
  for (const auto& [text, label] : rows) d.add(text, d.labels.intern(label));
  return d;
}

// 10 examples, disjoint vocabularies.
Dataset separable() {
  return make({{"refund my money", "billing"},
               {"charge on my card", "billing"},
               {"invoice is wrong", "billing"},
               {"pay the bill", "billing"},
               {"billing refund charge", "billing"},
               {"router keeps rebooting", "tech"},
               {"wifi signal drops", "tech"},
               {"cannot connect router", "tech"},
               {"modem light blinking", "tech"},
               {"reset the wifi modem", "tech"}});
}

void check_distribution(const Prediction& p) {
  CHECK(p.distribution.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((p.distribution.array() >= 0).all());
  CHECK(p.confidence == doctest::Approx(p.distribution.maxCoeff()));
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.distribution.size(); ++i)
    if (p.distribution[i] > p.distribution[best]) best = i;
  CHECK(p.label.id == best + 1);
}

}  // namespace

TEST_CASE("vocabulary maps unknown tokens to the OOV slot") {
  const Vocabulary v = Vocabulary::from_dataset(make({{"a b", "x"}, {"b c", "y"}}));
  CHECK(v.dim() == 4);
  CHECK(v.id("zzz") == v.oov());
  const FeatureVector f = count_features(v, {"a", "a", "zzz"});
  CHECK(f.coeff(v.id("a")) == 2.0);
  CHECK(f.coeff(v.oov()) == 1.0);
}

TEST_CASE("tf-idf vectors are L2 normalized with smoothed idf") {
  const Dataset d = make({{"a b", "x"}, {"a c", "y"}});
  const Vocabulary v = Vocabulary::from_dataset(d);
  const Eigen::VectorXd idf = fit_idf(v, d);
  CHECK(idf[v.id("a")] == doctest::Approx(std::log(3.0 / 3.0) + 1));
  CHECK(idf[v.id("b")] == doctest::Approx(std::log(3.0 / 2.0) + 1));
  const FeatureVector f = tfidf_features(v, idf, {"a", "b"});
  CHECK(f.norm() == doctest::Approx(1.0));
  for (FeatureVector::InnerIterator it(f); it; ++it) CHECK(it.value() >= 0);
}

TEST_CASE("naive Bayes: a class-only word decides") {
  const Dataset d = make({{"refund now", "A"}, {"where is it", "B"}, {"hello there", "B"}, {"thanks", "A"}});
  const ClassifierModel m = train_naive_bayes(d);
  const Prediction p = m.predict(std::string_view("refund please"));
  CHECK(p.label.name == "A");
  check_distribution(p);
}

TEST_CASE("naive Bayes: hand-computed posterior") {
  // A: "x x y" ; B: "y z". V = {x, y, z}, alpha = 1.
  const Dataset d = make({{"x x y", "A"}, {"y z", "B"}});
  const ClassifierModel m = train_naive_bayes(d, {1.0});
  const double pa = 0.5 * (3.0 / 6.0);  // P(A) * P(x|A)
  const double pb = 0.5 * (1.0 / 5.0);
  const Prediction p = m.predict(std::vector<std::string>{"x"});
  CHECK(p.distribution[0] == doctest::Approx(pa / (pa + pb)).epsilon(1e-12));
  for (Eigen::Index c = 0; c < 2; ++c) CHECK(m.log_likelihood().row(c).array().exp().sum() == doctest::Approx(1.0));
}

TEST_CASE("naive Bayes: one sentence per class, disjoint vocabularies") {
  const Dataset d = make({{"alpha beta", "one"}, {"gamma delta", "two"}, {"epsilon", "three"}});
  CHECK(accuracy(train_naive_bayes(d, {1.0}), d) == 1.0);
  CHECK(accuracy(train_naive_bayes(d, {1e-9}), d) == 1.0);
}

TEST_CASE("naive Bayes: all-OOV input follows the class priors") {
  const Dataset d = make({{"a", "x"}, {"b", "x"}, {"c", "x"}, {"d", "y"}});
  const ClassifierModel m = train_naive_bayes(d);
  const Prediction p = m.predict(std::vector<std::string>{"qqq", "rrr"});
  CHECK(p.distribution[0] == doctest::Approx(0.75));
  CHECK(p.distribution[1] == doctest::Approx(0.25));
}

TEST_CASE("naive Bayes is deterministic") {
  const Dataset d = separable();
  const ClassifierModel a = train_naive_bayes(d), b = train_naive_bayes(d);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("empty class is an error naming the class") {
  Dataset d = make({{"a", "x"}});
  d.labels.intern("ghost");
  CHECK_THROWS_WITH_AS(train_naive_bayes(d), doctest::Contains("ghost"), Error);
  CHECK_THROWS_WITH_AS(train_logreg(d), doctest::Contains("ghost"), Error);
}

TEST_CASE("logreg gradient matches central finite differences") {
  const Dataset d = separable();
  const LogRegDesign design = build_logreg_design(d);
  const Eigen::Index q = 2, dim = design.vocab.dim();
  const double l2 = 1e-2;
  // Check at initialization and at a random interior point.
  for (int trial = 0; trial < 2; ++trial) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(q, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
    if (trial == 1) {
      std::srand(3);
      w = Eigen::MatrixXd::Random(q, dim) * 0.5;
      b = Eigen::VectorXd::Random(q) * 0.5;
    }
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    logreg_objective(w, b, design.x, design.targets, l2, &gw, &gb);
    const double h = 1e-6;
    // Relative error over the full parameter vector; single entries can be exactly 0 at symmetric points.
    Eigen::VectorXd analytic(q * dim + q), numeric(q * dim + q);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < q; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c, ++k) {
        Eigen::MatrixXd wp = w, wm = w;
        wp(r, c) += h;
        wm(r, c) -= h;
        numeric[k] = (logreg_objective(wp, b, design.x, design.targets, l2) -
                      logreg_objective(wm, b, design.x, design.targets, l2)) /
                     (2 * h);
        analytic[k] = gw(r, c);
      }
      Eigen::VectorXd bp = b, bm = b;
      bp[r] += h;
      bm[r] -= h;
      numeric[k] = (logreg_objective(w, bp, design.x, design.targets, l2) -
                    logreg_objective(w, bm, design.x, design.targets, l2)) /
                   (2 * h);
      analytic[k++] = gb[r];
    }
    REQUIRE(analytic.norm() > 1e-3);
    const double worst = (numeric - analytic).norm() / std::max(numeric.norm(), analytic.norm());
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("logreg separates a separable toy") {
  LogRegParams p;
  p.epochs = 300;
  const ClassifierModel m = train_logreg(separable(), p);
  CHECK(accuracy(m, separable()) == 1.0);
  CHECK(m.weights().rows() == 2);
}

TEST_CASE("logreg loss is non-increasing at a small learning rate") {
  LogRegParams p;
  p.learning_rate = 0.01;
  p.epochs = 100;
  const ClassifierModel m = train_logreg(separable(), p);
  const auto& loss = m.loss_history();
  REQUIRE(loss.size() == 100);
  for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-6);
}

TEST_CASE("logreg with zero epochs predicts uniformly") {
  LogRegParams p;
  p.epochs = 0;
  const ClassifierModel m = train_logreg(separable(), p);
  const Prediction pr = m.predict(std::string_view("refund router"));
  check_distribution(pr);
  CHECK(pr.distribution[0] == doctest::Approx(0.5));
  CHECK(pr.label.id == 1);
}

TEST_CASE("logreg is deterministic given its seed") {
  LogRegParams p;
  p.seed = 17;
  p.batch_size = 3;
  const ClassifierModel a = train_logreg(separable(), p), b = train_logreg(separable(), p);
  CHECK(a.weights() == b.weights());
  p.seed = 18;
  CHECK(train_logreg(separable(), p).weights() != a.weights());
}

TEST_CASE("argmax is invariant to shifting logits and scaling NB scores") {
  const Dataset d = separable();
  const ClassifierModel nb = train_naive_bayes(d);
  const ClassifierModel lr = train_logreg(d);
  for (const auto& it : d.items) {
    const Eigen::VectorXd s = nb.scores(it.tokens);
    CHECK(argmax_first(s) == argmax_first(Eigen::VectorXd(s * 3.5)));
    const Eigen::VectorXd z = lr.scores(it.tokens);
    CHECK(argmax_first(z) == argmax_first(Eigen::VectorXd(z.array() + 42.0)));
    check_distribution(nb.predict(it.tokens));
    check_distribution(lr.predict(it.tokens));
  }
}

TEST_CASE("ties break toward the lowest class id") {
  const Dataset d = make({{"same", "first"}, {"same", "second"}});
  CHECK(train_naive_bayes(d).predict(std::string_view("same")).label.id == 1);
}

TEST_CASE("accuracy") {
  const Dataset train = make({{"a", "x"}, {"b", "y"}});
  const ClassifierModel m = train_naive_bayes(train);
  CHECK(accuracy(m, train) == 1.0);
  const Dataset test = make({{"a", "x"}, {"b", "y"}, {"a", "y"}});
  CHECK(accuracy(m, test) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const Dataset constant = make({{"a", "x"}, {"a", "y"}});
  CHECK(accuracy(m, constant) == doctest::Approx(0.5));
  CHECK_THROWS_AS(accuracy(m, Dataset{}), Error);
  CHECK_THROWS_AS(m.predict(std::string_view("   ")), Error);
}

TEST_CASE("models round-trip through files") {
  testing::TempDir dir;
  for (auto kind : {ClassifierKind::naive_bayes, ClassifierKind::logreg}) {
    ClassifierSpec spec;
    spec.kind = kind;
    const ClassifierModel m = train_classifier(spec, separable());
    m.save(dir / "m.json");
    const ClassifierModel back = ClassifierModel::load(dir / "m.json");
    CHECK(back.kind() == kind);
    CHECK(back.labels() == m.labels());
    for (const auto& it : separable().items) {
      const auto a = m.predict(it.tokens), b = back.predict(it.tokens);
      CHECK(a.label.id == b.label.id);
      CHECK((a.distribution - b.distribution).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  CHECK_THROWS_AS(ClassifierModel::from_json("{\"format\":\"other\"}"), Error);
}

TEST_CASE("classifier kind strings") {
  CHECK(classifier_kind_from_string("nb") == ClassifierKind::naive_bayes);
  CHECK(classifier_kind_from_string("logreg") == ClassifierKind::logreg);
  CHECK(to_string(ClassifierKind::logreg) == "logreg");
  CHECK_THROWS_AS(classifier_kind_from_string("svm"), Error);
}
