#include "desmine/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "desmine/error.hpp"

namespace desmine {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::f1: return "f1";
    case Metric::balanced_accuracy: return "balanced_accuracy";
    case Metric::roc_auc: return "roc_auc";
  }
  throw InvariantError("bad Metric");
}

const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> all{Metric::accuracy, Metric::precision,         Metric::recall,
                                       Metric::f1,       Metric::balanced_accuracy, Metric::roc_auc};
  return all;
}

Metric parse_metric(std::string_view name) {
  for (auto m : all_metrics())
    if (to_string(m) == name) return m;
  throw DataError(
      fmt::format("unknown metric '{}' (valid: accuracy, precision, recall, f1, balanced_accuracy, roc_auc)", name));
}

double EvalReport::get(Metric metric) const {
  switch (metric) {
    case Metric::accuracy: return accuracy;
    case Metric::precision: return precision;
    case Metric::recall: return recall;
    case Metric::f1: return f1;
    case Metric::balanced_accuracy: return balanced_accuracy;
    case Metric::roc_auc: return roc_auc;
  }
  throw InvariantError("bad Metric");
}

bool EvalReport::is_undefined(std::string_view metric) const {
  return std::find(undefined.begin(), undefined.end(), metric) != undefined.end();
}

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size())
    throw DataError(fmt::format("confusion: {} labels but {} predictions", labels.size(), predictions.size()));
  if (labels.empty()) throw DataError("confusion: no instances");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == 1, pred = predictions[i] == 1;
    if (truth && pred) ++cm.tp;
    else if (truth) ++cm.fn;
    else if (pred) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

EvalReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
  EvalReport r;
  r.instances = cm.total();
  r.confusion = cm;
  auto ratio = [&](std::size_t num, std::size_t den, const char* name) {
    if (den == 0) {
      r.undefined.emplace_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  r.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
  r.recall = ratio(cm.tp, cm.tp + cm.fn, "recall");
  if (r.is_undefined("precision") || r.is_undefined("recall") || r.precision + r.recall == 0.0) {
    r.undefined.emplace_back("f1");
    r.f1 = 0.0;
  } else {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  const bool tpr_defined = cm.tp + cm.fn > 0, tnr_defined = cm.tn + cm.fp > 0;
  const double tpr = tpr_defined ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0.0;
  const double tnr = tnr_defined ? static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp) : 0.0;
  if (!tpr_defined || !tnr_defined) r.undefined.emplace_back("balanced_accuracy");
  r.balanced_accuracy = (tpr + tnr) / 2.0;
  r.undefined.emplace_back("roc_auc");
  return r;
}

double roc_auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    throw DataError(fmt::format("roc_auc: {} labels but {} scores", labels.size(), scores.size()));
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1 ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) rank_sum += midrank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

EvalReport evaluate_scores(std::span<const int> labels, std::span<const double> scores,
                           std::span<const int> predictions) {
  EvalReport r = metrics(confusion(labels, predictions));
  std::erase(r.undefined, "roc_auc");
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    r.undefined.emplace_back("roc_auc");
    r.roc_auc = 0.0;
  } else {
    r.roc_auc = roc_auc(labels, scores);
  }
  return r;
}

EvalReport aggregate_folds(const std::vector<EvalReport>& folds) {
  if (folds.empty()) throw DataError("no folds to aggregate");
  EvalReport r;
  FoldValues values, spread;
  auto collect = [&](auto member, std::vector<double>& out, std::vector<double>& sd, const char* name,
                     double& mean_out) {
    std::vector<double> defined;
    for (const auto& f : folds) {
      out.push_back(f.*member);
      if (!f.is_undefined(name)) defined.push_back(f.*member);
    }
    if (defined.empty()) {
      r.undefined.emplace_back(name);
      mean_out = 0.0;
      sd.push_back(0.0);
      return;
    }
    const double mean = std::accumulate(defined.begin(), defined.end(), 0.0) / static_cast<double>(defined.size());
    double ss = 0.0;
    for (double v : defined) ss += (v - mean) * (v - mean);
    mean_out = mean;
    sd.push_back(defined.size() > 1 ? std::sqrt(ss / static_cast<double>(defined.size() - 1)) : 0.0);
  };
  collect(&EvalReport::accuracy, values.accuracy, spread.accuracy, "accuracy", r.accuracy);
  collect(&EvalReport::precision, values.precision, spread.precision, "precision", r.precision);
  collect(&EvalReport::recall, values.recall, spread.recall, "recall", r.recall);
  collect(&EvalReport::f1, values.f1, spread.f1, "f1", r.f1);
  collect(&EvalReport::balanced_accuracy, values.balanced_accuracy, spread.balanced_accuracy, "balanced_accuracy",
          r.balanced_accuracy);
  collect(&EvalReport::roc_auc, values.roc_auc, spread.roc_auc, "roc_auc", r.roc_auc);
  for (const auto& f : folds) r.instances += f.instances;
  r.folds = std::move(values);
  r.stdev = std::move(spread);
  return r;
}

EvalReport zeror_baseline(double prevalence) {
  if (!(prevalence > 0.0) || !(prevalence < 1.0))
    throw DataError(fmt::format("zeror_baseline needs prevalence in (0, 1), got {}", prevalence));
  EvalReport r;
  const double majority_share = prevalence < 0.5 ? 1.0 - prevalence : prevalence;
  r.accuracy = majority_share;
  r.precision = majority_share;
  r.recall = 1.0;
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  r.balanced_accuracy = 0.5;
  r.roc_auc = 0.5;
  r.note = prevalence < 0.5 ? "majority class is non-design; precision and recall measured against it"
                            : "majority class is design; precision and recall measured against it";
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  for (auto m : all_metrics()) j[std::string(to_string(m))] = report.get(m);
  j["instances"] = report.instances;
  j["undefined"] = report.undefined;
  if (report.confusion) {
    const auto& cm = *report.confusion;
    j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
  }
  auto fold_json = [](const FoldValues& v) {
    nlohmann::ordered_json f;
    f["accuracy"] = v.accuracy;
    f["precision"] = v.precision;
    f["recall"] = v.recall;
    f["f1"] = v.f1;
    f["balanced_accuracy"] = v.balanced_accuracy;
    f["roc_auc"] = v.roc_auc;
    return f;
  };
  if (report.folds) j["folds"] = fold_json(*report.folds);
  if (report.stdev) j["stdev"] = fold_json(*report.stdev);
  if (!report.note.empty()) j["note"] = report.note;
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.balanced_accuracy = j.at("balanced_accuracy").get<double>();
  r.roc_auc = j.at("roc_auc").get<double>();
  r.instances = j.value("instances", std::size_t{0});
  if (j.contains("undefined")) r.undefined = j["undefined"].get<std::vector<std::string>>();
  if (j.contains("confusion")) {
    const auto& c = j["confusion"];
    r.confusion = ConfusionMatrix{c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                                  c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  }
  auto folds = [](const nlohmann::json& f) {
    FoldValues v;
    v.accuracy = f.at("accuracy").get<std::vector<double>>();
    v.precision = f.at("precision").get<std::vector<double>>();
    v.recall = f.at("recall").get<std::vector<double>>();
    v.f1 = f.at("f1").get<std::vector<double>>();
    v.balanced_accuracy = f.at("balanced_accuracy").get<std::vector<double>>();
    v.roc_auc = f.at("roc_auc").get<std::vector<double>>();
    return v;
  };
  if (j.contains("folds")) r.folds = folds(j["folds"]);
  if (j.contains("stdev")) r.stdev = folds(j["stdev"]);
  r.note = j.value("note", std::string());
  return r;
}

std::string render_table(const EvalReport& report) {
  std::string out;
  for (std::size_t i = 0; i < all_metrics().size(); ++i) {
    const auto m = all_metrics()[i];
    const auto name = to_string(m);
    std::string value = fmt::format("{:.4f}", report.get(m));
    if (report.stdev) {
      const auto& sd = *report.stdev;
      const std::vector<double>* col[] = {&sd.accuracy, &sd.precision, &sd.recall, &sd.f1, &sd.balanced_accuracy,
                                          &sd.roc_auc};
      if (!col[i]->empty()) value += fmt::format(" ± {:.4f}", col[i]->front());
    }
    if (report.is_undefined(name)) value += "  (undefined)";
    out += fmt::format("{:<18} {}\n", name, value);
  }
  return out;
}

}  // namespace desmine
