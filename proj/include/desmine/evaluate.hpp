#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace desmine {

class Dataset;
struct ProtocolSpec;

/// Class 1 (design) is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class Metric { accuracy, precision, recall, f1, balanced_accuracy, roc_auc };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);
const std::vector<Metric>& all_metrics();

/// Per-fold values kept when the report aggregates cross-validation.
struct FoldValues {
  std::vector<double> accuracy, precision, recall, f1, balanced_accuracy, roc_auc;
  friend bool operator==(const FoldValues&, const FoldValues&) = default;
};

struct EvalReport {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, balanced_accuracy = 0, roc_auc = 0;
  /// Names of metrics whose denominator was zero (reported as 0).
  std::vector<std::string> undefined;
  std::size_t instances = 0;
  std::optional<ConfusionMatrix> confusion;  // single evaluations only
  std::optional<FoldValues> folds;           // cross-validation only
  std::optional<FoldValues> stdev;           // one value per metric when folded
  std::string note;

  double get(Metric metric) const;
  bool is_undefined(std::string_view metric) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions);

/// Threshold metrics. roc_auc stays 0 and is marked undefined.
EvalReport metrics(const ConfusionMatrix& cm);

/// Mann-Whitney statistic with midranks for ties. Both classes required.
double roc_auc(std::span<const int> labels, std::span<const double> scores);

/// Threshold metrics from labels and predictions plus AUC from scores;
/// a single-class label set leaves AUC undefined instead of failing.
EvalReport evaluate_scores(std::span<const int> labels, std::span<const double> scores, std::span<const int> predictions);

/// Mean of the per-fold values; AUC is averaged over folds where it is
/// defined.
EvalReport aggregate_folds(const std::vector<EvalReport>& folds);

/// Majority-class baseline measured the way it is usually quoted: against
/// the majority class, so recall is 1 and precision is the majority share.
EvalReport zeror_baseline(double prevalence);

/// Stable key order.
nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);
/// Aligned two-column text table.
std::string render_table(const EvalReport& report);

/// k-fold cross-validation of a protocol on one dataset; `k` and `seed`
/// override the protocol's validation block.
EvalReport cross_validate(const ProtocolSpec& protocol, const Dataset& dataset, std::size_t k, std::uint64_t seed);

}  // namespace desmine
