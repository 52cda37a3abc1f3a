#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>

#include "desmine/classify.hpp"
#include "desmine/error.hpp"
#include "desmine/rng.hpp"
#include "oracles.hpp"

using namespace desmine;
using namespace desmine::testing;

namespace {

ClassifierSpec spec_for(Algorithm a, std::uint64_t seed = 0) {
  ClassifierSpec s;
  s.algorithm = a;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("spec parsing and defaults") {
  const auto s = classifier_spec_from_json("naive_bayes", 5);
  CHECK(s.algorithm == Algorithm::naive_bayes);
  CHECK(s.seed == 5);
  const auto j = to_json(spec_for(Algorithm::logistic_regression));
  CHECK(j["hyperparameters"]["l2_lambda"] == 1e-4);
  CHECK(j["hyperparameters"]["epochs"] == 100);
  CHECK(j["hyperparameters"]["lr"] == 0.1);
  CHECK_FALSE(j["hyperparameters"].contains("laplace_alpha"));
  for (auto a : all_algorithms()) {
    auto spec = spec_for(a, 3);
    CHECK(classifier_spec_from_json(nlohmann::json::parse(to_json(spec).dump()), 0) == spec);
  }
  CHECK_THROWS_WITH_AS(classifier_spec_from_json("naive_bayse", 0), doctest::Contains("logistic_regression"),
                       DataError);
  CHECK_THROWS_AS(classifier_spec_from_json(nlohmann::json::parse(
                                                R"({"algorithm":"naive_bayes","hyperparameters":{"lr":0.1}})"),
                                            0),
                  DataError);
  CHECK_THROWS_AS(classifier_spec_from_json(nlohmann::json::parse(R"({"algorithm":"zeror","extra":1})"), 0),
                  DataError);
}

TEST_CASE("zeror") {
  std::vector<int> y(1000, 0);
  std::fill(y.begin(), y.begin() + 224, 1);
  FeatureMatrix X;
  X.dim = 1;
  X.rows.assign(1000, {});
  const auto m = fit(spec_for(Algorithm::zeror), X, y);
  const auto& s = std::get<ZeroRState>(m.state);
  CHECK(s.majority == 0);
  CHECK(s.prevalence == 0.224);
  const auto labels = predict_labels(m, X);
  CHECK(std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; }));
  CHECK(predict_scores(m, X)[0] == 0.224);
}

TEST_CASE("naive bayes toy corpus") {
  // good design bad bug pattern fix
  const auto X = dense_matrix({{1, 1, 0, 0, 0, 0}, {0, 0, 1, 1, 0, 0}, {0, 1, 0, 0, 1, 0}, {0, 0, 0, 1, 0, 1}}, 6);
  const std::vector<int> y{1, 0, 1, 0};
  const auto m = fit(spec_for(Algorithm::naive_bayes), X, y);
  const auto probe = dense_matrix({{0, 1, 0, 0, 0, 1}}, 6);
  CHECK(predict_scores(m, probe)[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(predict_labels(m, probe)[0] == 1);
}

TEST_CASE("naive bayes matches brute-force Bayes") {
  Rng rng(31);
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
  for (int trial = 0; trial < 500; ++trial) {
    random_counts(rng, 16, 8, 3, X, y, dense);
    auto spec = spec_for(Algorithm::naive_bayes);
    spec.laplace_alpha = 0.25 + rng.uniform() * 2;
    const auto m = fit(spec, X, y);
    for (int probe = 0; probe < 5; ++probe) {
      std::vector<double> x(X.dim);
      for (auto& v : x) v = static_cast<double>(rng.below(4));
      const double expected = brute_force_nb(dense, y, spec.laplace_alpha, x);
      REQUIRE(std::abs(predict_score(m, to_sparse(x)) - expected) <= 1e-12);
    }
  }
}

TEST_CASE("decision tree matches exhaustive split search") {
  Rng rng(41);
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
  for (int trial = 0; trial < 2000; ++trial) {
    random_counts(rng, 12, 3, 3, X, y, dense);
    auto spec = spec_for(Algorithm::decision_tree);
    if (rng.uniform() < 0.3) spec.max_depth = 1 + rng.below(3);
    spec.min_samples_split = 2 + rng.below(3);
    const auto m = fit(spec, X, y);
    std::vector<std::size_t> idx(dense.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto oracle = oracle_tree(dense, y, idx, 0, spec);
    for (std::size_t i = 0; i < dense.size(); ++i)
      REQUIRE(predict_score(m, X.rows[i]) == oracle->predict(dense[i]));
    for (int probe = 0; probe < 10; ++probe) {
      std::vector<double> x(X.dim);
      for (auto& v : x) v = static_cast<double>(rng.below(5));
      REQUIRE(predict_score(m, to_sparse(x)) == oracle->predict(x));
    }
  }
}

TEST_CASE("decision tree single leaf") {
  TrainedModel m;
  m.spec = spec_for(Algorithm::decision_tree);
  m.feature_dim = 2;
  TreeState t;
  t.nodes.push_back(TreeNode{true, 0, 0.0, 0, 0, 3, 3, 1.0});
  m.state = t;
  CHECK(predict_score(m, {{0, 1.0}}) == 1.0);
}

TEST_CASE("logistic regression examples") {
  const auto X = dense_matrix({{-1}, {1}}, 1);
  const std::vector<int> y{0, 1};
  const auto m = fit(spec_for(Algorithm::logistic_regression), X, y);
  CHECK(predict_labels(m, X) == y);

  TrainedModel zero;
  zero.spec = spec_for(Algorithm::logistic_regression);
  zero.feature_dim = 3;
  zero.state = LinearState{{0, 0, 0}, 0};
  CHECK(predict_score(zero, {{0, 4.0}, {2, -7.0}}) == 0.5);
  CHECK(predict_score(zero, {}) == 0.5);
}

TEST_CASE("logistic gradient matches central differences") {
  Rng rng(51);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(10), dim = 1 + rng.below(5);
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = rng.uniform() < 0.3 ? 0.0 : 4 * rng.uniform() - 2;
      y[i] = static_cast<int>(rng.below(2));
    }
    const auto X = dense_matrix(rows, dim);
    std::vector<double> w(dim);
    for (auto& v : w) v = 2 * rng.uniform() - 1;
    const double b = 2 * rng.uniform() - 1;
    const double l2 = rng.uniform() < 0.5 ? 1e-4 : rng.uniform();

    const auto analytic = logistic_gradient(X, y, w, b, l2);
    std::vector<double> numeric(dim + 1), diff(dim + 1);
    for (std::size_t j = 0; j <= dim; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < dim) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      numeric[j] = (logistic_objective(X, y, wp, bp, l2) - logistic_objective(X, y, wm, bm, l2)) / (2 * h);
      diff[j] = analytic[j] - numeric[j];
    }
    const double rel = norm(diff) / std::max(1e-12, norm(analytic) + norm(numeric));
    REQUIRE(rel <= 1e-6);
  }
}

TEST_CASE("logistic objective decreases") {
  Rng rng(52);
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
  random_counts(rng, 40, 6, 3, X, y, dense);
  const auto m = fit(spec_for(Algorithm::logistic_regression), X, y);
  REQUIRE(m.objective_trace.size() == 100);
  for (std::size_t e = 1; e < m.objective_trace.size(); ++e)
    CHECK(m.objective_trace[e] <= m.objective_trace[e - 1] + 1e-15);
}

TEST_CASE("svm objective is non-increasing within jitter") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 60, dim = 5;
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 2;
      for (std::size_t d = 0; d < dim; ++d) rows[i][d] = rng.uniform() + (y[i] && d < 2 ? 0.8 : 0.0);
    }
    auto spec = spec_for(Algorithm::linear_svm, rng.next());
    spec.l2_lambda = 0.01;
    const auto m = fit(spec, dense_matrix(rows, dim), y);
    const auto& tr = m.objective_trace;
    REQUIRE(tr.size() == spec.epochs);
    for (std::size_t e = 1; e < tr.size(); ++e) CHECK(tr[e] <= tr[e - 1] * 1.01);
    CHECK(tr.back() < tr.front());
  }
}

TEST_CASE("svm margins and thresholds") {
  TrainedModel m;
  m.spec = spec_for(Algorithm::linear_svm);
  m.feature_dim = 1;
  m.state = LinearState{{1.0}, -0.2};
  const FeatureMatrix X{1, {{}}};
  CHECK(predict_scores(m, X)[0] == doctest::Approx(-0.2));
  CHECK(predict_labels(m, X)[0] == 0);
  CHECK(default_threshold(Algorithm::linear_svm) == 0.0);
  CHECK(default_threshold(Algorithm::naive_bayes) == 0.5);
  CHECK(predict_labels(m, X, -0.4)[0] == 1);
}

TEST_CASE("logistic labels agree with the sign of the margin") {
  Rng rng(71);
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
  random_counts(rng, 50, 6, 3, X, y, dense);
  const auto m = fit(spec_for(Algorithm::logistic_regression), X, y);
  const auto& s = std::get<LinearState>(m.state);
  const auto labels = predict_labels(m, X);
  for (std::size_t i = 0; i < X.size(); ++i) CHECK(labels[i] == (dot(X.rows[i], s.weights) + s.bias >= 0.0 ? 1 : 0));
}

TEST_CASE("fit errors") {
  const auto X = dense_matrix({{1}, {2}}, 1);
  CHECK_THROWS_AS(fit(spec_for(Algorithm::naive_bayes), X, std::vector<int>{1, 1}), DataError);
  CHECK_NOTHROW(fit(spec_for(Algorithm::zeror), X, std::vector<int>{1, 1}));
  CHECK_THROWS_AS(fit(spec_for(Algorithm::naive_bayes), X, std::vector<int>{1}), DataError);
  const auto m = fit(spec_for(Algorithm::naive_bayes), X, std::vector<int>{1, 0});
  CHECK_THROWS_AS(predict_scores(m, dense_matrix({{1, 2}}, 2)), DataError);
  CHECK_THROWS_AS(fit(spec_for(Algorithm::naive_bayes), dense_matrix({{-1}, {1}}, 1), std::vector<int>{1, 0}),
                  DataError);
}

TEST_CASE("fit is deterministic and models reload exactly") {
  Rng rng(81);
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
  random_counts(rng, 40, 8, 4, X, y, dense);
  for (auto a : all_algorithms()) {
    const auto spec = spec_for(a, 12);
    const auto m1 = fit(spec, X, y);
    const auto m2 = fit(spec, X, y);
    const auto text = serialize_model(m1);
    CHECK(text.rfind("DESMINE-M1", 0) == 0);
    CHECK(serialize_model(m2) == text);
    const auto back = deserialize_model(text);
    CHECK(predict_scores(back, X) == predict_scores(m1, X));
    CHECK(serialize_model(back) == text);
  }
  const auto path = std::filesystem::temp_directory_path() / "desmine_test_model.txt";
  const auto m = fit(spec_for(Algorithm::decision_tree), X, y);
  save_model(m, path);
  CHECK(predict_scores(load_model(path), X) == predict_scores(m, X));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(deserialize_model("garbage"), DataError);
}
