#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "desmine/vectorize.hpp"

namespace desmine {

enum class Algorithm { zeror, naive_bayes, decision_tree, logistic_regression, linear_svm };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);
const std::vector<Algorithm>& all_algorithms();

/// An algorithm plus its hyperparameters. Only the fields belonging to the
/// chosen algorithm are meaningful (and serialized).
struct ClassifierSpec {
  Algorithm algorithm = Algorithm::zeror;
  double laplace_alpha = 1.0;               // naive_bayes
  std::optional<std::size_t> max_depth;     // decision_tree, unlimited when empty
  std::size_t min_samples_split = 2;        // decision_tree
  double l2_lambda = 1e-4;                  // logistic_regression, linear_svm
  std::size_t epochs = 100;                 // logistic_regression, linear_svm
  double lr = 0.1;                          // logistic_regression
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

/// {"algorithm": ..., "hyperparameters": {...}, "seed": ...} with every
/// default written out.
nlohmann::ordered_json to_json(const ClassifierSpec& spec);
/// Accepts an algorithm name string or the object form. Unknown or
/// foreign hyperparameter keys are rejected. `default_seed` applies when
/// the object has no "seed".
ClassifierSpec classifier_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed);

struct ZeroRState {
  int majority = 0;
  double prevalence = 0.0;
};

struct NaiveBayesState {
  double log_prior[2] = {0.0, 0.0};
  std::vector<double> log_likelihood[2];  // per feature
};

struct TreeNode {
  // Internal nodes send x[feature] <= threshold left.
  bool leaf = true;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::size_t samples = 0;
  std::size_t positives = 0;
  double score = 0.0;  // positive fraction
};

struct TreeState {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct LinearState {
  std::vector<double> weights;
  double bias = 0.0;
};

struct TrainedModel {
  ClassifierSpec spec;
  std::size_t feature_dim = 0;
  std::variant<ZeroRState, NaiveBayesState, TreeState, LinearState> state;
  /// Per-epoch objective for the iterative learners, empty otherwise.
  std::vector<double> objective_trace;
};

TrainedModel fit(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y);

/// Higher means more design. NB/DT/LR/ZeroR return probabilities, SVM a
/// raw margin.
std::vector<double> predict_scores(const TrainedModel& model, const FeatureMatrix& X);
double predict_score(const TrainedModel& model, const SparseVector& x);

/// 0.0 for the SVM margin, 0.5 for everything else.
double default_threshold(Algorithm algorithm);
std::vector<int> predict_labels(const TrainedModel& model, const FeatureMatrix& X,
                                std::optional<double> threshold = std::nullopt);

// Objectives exposed for gradient checks and convergence tests.
/// Mean log-loss + (l2/2)||w||^2, labels in {0,1}.
double logistic_objective(const FeatureMatrix& X, std::span<const int> y, std::span<const double> w, double b,
                          double l2);
/// Gradient of logistic_objective; returns d/dw with d/db appended.
std::vector<double> logistic_gradient(const FeatureMatrix& X, std::span<const int> y, std::span<const double> w,
                                      double b, double l2);
/// Mean hinge loss + (l2/2)||w||^2, labels in {0,1} mapped to -1/+1.
double hinge_objective(const FeatureMatrix& X, std::span<const int> y, std::span<const double> w, double b,
                       double l2);

/// Versioned text format: a "DESMINE-M1" line followed by JSON.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace desmine
