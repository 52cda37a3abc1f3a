#include "desmine/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "desmine/error.hpp"
#include "desmine/rng.hpp"

namespace desmine {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_inputs(const FeatureMatrix& X, std::span<const int> y) {
  if (X.size() != y.size()) throw DataError(fmt::format("{} feature rows but {} labels", X.size(), y.size()));
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw DataError(fmt::format("label at row {} is not 0/1", i));
    if (!X.rows[i].empty() && X.rows[i].back().index >= X.dim)
      throw DataError(fmt::format("row {} has feature index {} beyond dimension {}", i, X.rows[i].back().index, X.dim));
  }
}

// ---------------------------------------------------------------------------
// Naive Bayes

NaiveBayesState fit_naive_bayes(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y) {
  std::vector<double> counts[2] = {std::vector<double>(X.dim, 0.0), std::vector<double>(X.dim, 0.0)};
  double totals[2] = {0.0, 0.0};
  double docs[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < X.size(); ++i) {
    docs[y[i]] += 1.0;
    for (const auto& f : X.rows[i]) {
      if (f.value < 0) throw DataError("naive_bayes requires nonnegative features");
      counts[y[i]][f.index] += f.value;
      totals[y[i]] += f.value;
    }
  }
  NaiveBayesState s;
  const double alpha = spec.laplace_alpha;
  const double n = docs[0] + docs[1];
  for (int c = 0; c < 2; ++c) {
    s.log_prior[c] = std::log(docs[c] / n);
    const double denom = std::log(totals[c] + alpha * static_cast<double>(X.dim));
    s.log_likelihood[c].resize(X.dim);
    for (std::size_t j = 0; j < X.dim; ++j) s.log_likelihood[c][j] = std::log(counts[c][j] + alpha) - denom;
  }
  return s;
}

double score_naive_bayes(const NaiveBayesState& s, const SparseVector& x) {
  double l[2] = {s.log_prior[0], s.log_prior[1]};
  for (const auto& f : x)
    for (int c = 0; c < 2; ++c) l[c] += f.value * s.log_likelihood[c][f.index];
  return sigmoid(l[1] - l[0]);
}

// ---------------------------------------------------------------------------
// Decision tree (CART, Gini)

// Weighted Gini of a split, scaled by n/2: pl*ql/nl + pr*qr/nr, kept as an
// exact fraction so equal splits compare equal and ties resolve by order.
struct SplitScore {
  __int128 num = 0;
  __int128 den = 1;

  static SplitScore of(std::int64_t nl, std::int64_t pl, std::int64_t nr, std::int64_t pr) {
    SplitScore s;
    s.num = static_cast<__int128>(pl) * (nl - pl) * nr + static_cast<__int128>(pr) * (nr - pr) * nl;
    s.den = static_cast<__int128>(nl) * nr;
    return s;
  }
  bool operator<(const SplitScore& o) const { return num * o.den < o.num * den; }
};

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return (m >= b) ? a : m;
}

class TreeBuilder {
 public:
  TreeBuilder(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y)
      : spec_(spec), X_(X), y_(y), buckets_(X.dim) {}

  TreeState build() {
    std::vector<std::size_t> all(X_.size());
    std::iota(all.begin(), all.end(), 0);
    struct Work {
      std::uint32_t node;
      std::vector<std::size_t> samples;
      std::size_t depth;
    };
    TreeState tree;
    tree.nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(all), 0});
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      std::size_t pos = 0;
      for (auto i : w.samples) pos += static_cast<std::size_t>(y_[i]);
      {
        auto& node = tree.nodes[w.node];
        node.samples = w.samples.size();
        node.positives = pos;
        node.score = static_cast<double>(pos) / static_cast<double>(w.samples.size());
        node.leaf = true;
      }
      const bool pure = pos == 0 || pos == w.samples.size();
      const bool depth_cap = spec_.max_depth && w.depth >= *spec_.max_depth;
      if (pure || depth_cap || w.samples.size() < spec_.min_samples_split) continue;

      auto split = best_split(w.samples, pos);
      if (!split) continue;
      std::vector<std::size_t> left, right;
      for (auto i : w.samples) (value(i, split->feature) <= split->threshold ? left : right).push_back(i);
      if (left.empty() || right.empty()) throw InvariantError("decision tree produced an empty child");

      const auto l = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      const auto r = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      auto& node = tree.nodes[w.node];
      node.leaf = false;
      node.feature = split->feature;
      node.threshold = split->threshold;
      node.left = l;
      node.right = r;
      // Right first so the left subtree is expanded first.
      stack.push_back({r, std::move(right), w.depth + 1});
      stack.push_back({l, std::move(left), w.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    std::uint32_t feature;
    double threshold;
    SplitScore score;
  };

  double value(std::size_t row, std::uint32_t feature) const {
    const auto& r = X_.rows[row];
    auto it = std::lower_bound(r.begin(), r.end(), feature,
                               [](const Feature& f, std::uint32_t idx) { return f.index < idx; });
    return (it != r.end() && it->index == feature) ? it->value : 0.0;
  }

  std::optional<Split> best_split(const std::vector<std::size_t>& samples, std::size_t positives) {
    touched_.clear();
    for (auto i : samples) {
      for (const auto& f : X_.rows[i]) {
        auto& b = buckets_[f.index];
        if (b.empty()) touched_.push_back(f.index);
        b.emplace_back(f.value, y_[i]);
      }
    }
    std::sort(touched_.begin(), touched_.end());

    const auto n = static_cast<std::int64_t>(samples.size());
    const auto p = static_cast<std::int64_t>(positives);
    std::optional<Split> best;
    std::vector<std::pair<double, std::int64_t>> groups;  // (value, count) with positives tracked separately
    std::vector<std::int64_t> group_pos;
    for (auto feature : touched_) {
      auto& entries = buckets_[feature];
      std::sort(entries.begin(), entries.end());
      std::int64_t nz_count = static_cast<std::int64_t>(entries.size());
      std::int64_t nz_pos = 0;
      for (const auto& e : entries) nz_pos += e.second;
      const std::int64_t zero_count = n - nz_count;
      const std::int64_t zero_pos = p - nz_pos;

      // Collapse to distinct values, splicing in the implicit zeros.
      groups.clear();
      group_pos.clear();
      bool zeros_done = zero_count == 0;
      auto push = [&](double v, std::int64_t c, std::int64_t cp) {
        if (!groups.empty() && groups.back().first == v) {
          groups.back().second += c;
          group_pos.back() += cp;
        } else {
          groups.emplace_back(v, c);
          group_pos.push_back(cp);
        }
      };
      for (const auto& e : entries) {
        if (!zeros_done && e.first > 0.0) {
          push(0.0, zero_count, zero_pos);
          zeros_done = true;
        }
        push(e.first, 1, e.second);
      }
      if (!zeros_done) push(0.0, zero_count, zero_pos);

      std::int64_t nl = 0, pl = 0;
      for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        nl += groups[g].second;
        pl += group_pos[g];
        const auto score = SplitScore::of(nl, pl, n - nl, p - pl);
        if (!best || score < best->score)
          best = Split{feature, midpoint(groups[g].first, groups[g + 1].first), score};
      }
      entries.clear();
    }
    return best;
  }

  const ClassifierSpec& spec_;
  const FeatureMatrix& X_;
  std::span<const int> y_;
  std::vector<std::vector<std::pair<double, int>>> buckets_;
  std::vector<std::uint32_t> touched_;
};

double score_tree(const TreeState& t, const SparseVector& x) {
  std::uint32_t n = 0;
  while (!t.nodes[n].leaf) {
    const auto& node = t.nodes[n];
    auto it = std::lower_bound(x.begin(), x.end(), node.feature,
                               [](const Feature& f, std::uint32_t idx) { return f.index < idx; });
    const double v = (it != x.end() && it->index == node.feature) ? it->value : 0.0;
    n = v <= node.threshold ? node.left : node.right;
  }
  return t.nodes[n].score;
}

// ---------------------------------------------------------------------------
// Logistic regression: full-batch gradient descent

LinearState fit_logistic(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y,
                         std::vector<double>& trace) {
  LinearState s;
  s.weights.assign(X.dim, 0.0);
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto g = logistic_gradient(X, y, s.weights, s.bias, spec.l2_lambda);
    for (std::size_t j = 0; j < X.dim; ++j) s.weights[j] -= spec.lr * g[j];
    s.bias -= spec.lr * g[X.dim];
    trace.push_back(logistic_objective(X, y, s.weights, s.bias, spec.l2_lambda));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Linear SVM: subgradient descent on the regularized hinge loss, one
// seeded shuffle per epoch. Step size 1/(l2 * (t0 + t)).

LinearState fit_svm(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y,
                    std::vector<double>& trace) {
  const double lambda = spec.l2_lambda;
  // w = scale * v keeps the shrink step O(1) on sparse rows.
  std::vector<double> v(X.dim, 0.0);
  double scale = 1.0;
  double bias = 0.0;
  const double typical_w = std::sqrt(1.0 / std::sqrt(lambda));
  const double t0 = 1.0 / (typical_w * lambda);
  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  double t = 0.0;

  // Reported weights are the average of all iterates so far. The sum of
  // scale * v[j] is accumulated lazily: sum_scale is the running total of
  // scale, and each coordinate remembers the total at its last flush.
  std::vector<double> acc(X.dim, 0.0), seen(X.dim, 0.0);
  double sum_scale = 0.0, acc_b = 0.0;
  auto flush = [&](std::size_t j) {
    acc[j] += v[j] * (sum_scale - seen[j]);
    seen[j] = sum_scale;
  };

  std::vector<double> w(X.dim, 0.0);
  double wb = 0.0;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (auto i : order) {
      const double eta = 1.0 / (lambda * (t0 + t));
      const double label = y[i] == 1 ? 1.0 : -1.0;
      const double margin = label * (scale * dot(X.rows[i], v) + bias);
      scale *= (1.0 - eta * lambda);
      if (margin < 1.0) {
        for (const auto& f : X.rows[i]) {
          flush(f.index);
          v[f.index] += eta * label * f.value / scale;
        }
        bias += eta * label;
      }
      if (scale < 1e-9) {
        for (std::size_t j = 0; j < X.dim; ++j) {
          flush(j);
          v[j] *= scale;
          seen[j] = 0.0;
        }
        sum_scale = 0.0;
        scale = 1.0;
      }
      sum_scale += scale;
      acc_b += bias;
      t += 1.0;
    }
    for (std::size_t j = 0; j < X.dim; ++j) {
      flush(j);
      w[j] = acc[j] / t;
    }
    wb = acc_b / t;
    trace.push_back(hinge_objective(X, y, w, wb, lambda));
  }
  LinearState s;
  s.weights = w;
  s.bias = wb;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::zeror: return "zeror";
    case Algorithm::naive_bayes: return "naive_bayes";
    case Algorithm::decision_tree: return "decision_tree";
    case Algorithm::logistic_regression: return "logistic_regression";
    case Algorithm::linear_svm: return "linear_svm";
  }
  throw InvariantError("bad Algorithm");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all{Algorithm::zeror, Algorithm::naive_bayes, Algorithm::decision_tree,
                                          Algorithm::logistic_regression, Algorithm::linear_svm};
  return all;
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : all_algorithms())
    if (to_string(a) == name) return a;
  throw DataError(fmt::format(
      "unknown classifier '{}' (valid: zeror, naive_bayes, decision_tree, logistic_regression, linear_svm)", name));
}

void ClassifierSpec::validate() const {
  if (!(laplace_alpha > 0)) throw DataError("naive_bayes laplace_alpha must be > 0");
  if (max_depth && *max_depth < 1) throw DataError("decision_tree max_depth must be >= 1");
  if (min_samples_split < 2) throw DataError("decision_tree min_samples_split must be >= 2");
  if (!(l2_lambda > 0)) throw DataError("l2_lambda must be > 0");
  if (epochs < 1) throw DataError("epochs must be >= 1");
  if (!(lr > 0)) throw DataError("lr must be > 0");
}

nlohmann::ordered_json to_json(const ClassifierSpec& spec) {
  ojson hp = ojson::object();
  switch (spec.algorithm) {
    case Algorithm::zeror: break;
    case Algorithm::naive_bayes: hp["laplace_alpha"] = spec.laplace_alpha; break;
    case Algorithm::decision_tree:
      hp["max_depth"] = spec.max_depth ? ojson(*spec.max_depth) : ojson(nullptr);
      hp["min_samples_split"] = spec.min_samples_split;
      break;
    case Algorithm::logistic_regression:
      hp["l2_lambda"] = spec.l2_lambda;
      hp["epochs"] = spec.epochs;
      hp["lr"] = spec.lr;
      break;
    case Algorithm::linear_svm:
      hp["l2_lambda"] = spec.l2_lambda;
      hp["epochs"] = spec.epochs;
      break;
  }
  ojson j;
  j["algorithm"] = std::string(to_string(spec.algorithm));
  j["hyperparameters"] = std::move(hp);
  j["seed"] = spec.seed;
  return j;
}

ClassifierSpec classifier_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed) {
  ClassifierSpec spec;
  spec.seed = default_seed;
  if (j.is_string()) {
    spec.algorithm = parse_algorithm(j.get<std::string>());
    return spec;
  }
  if (!j.is_object()) throw DataError("classifier must be a name or an object");
  for (const auto& [key, _] : j.items())
    if (key != "algorithm" && key != "hyperparameters" && key != "seed")
      throw DataError(fmt::format("unknown classifier key '{}'", key));
  if (!j.contains("algorithm") || !j["algorithm"].is_string()) throw DataError("classifier needs an 'algorithm' name");
  spec.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw DataError("classifier seed must be a nonnegative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("hyperparameters")) {
    const auto& hp = j["hyperparameters"];
    if (!hp.is_object()) throw DataError("hyperparameters must be an object");
    std::vector<std::string_view> allowed;
    switch (spec.algorithm) {
      case Algorithm::zeror: break;
      case Algorithm::naive_bayes: allowed = {"laplace_alpha"}; break;
      case Algorithm::decision_tree: allowed = {"max_depth", "min_samples_split"}; break;
      case Algorithm::logistic_regression: allowed = {"l2_lambda", "epochs", "lr"}; break;
      case Algorithm::linear_svm: allowed = {"l2_lambda", "epochs"}; break;
    }
    auto number = [&](const char* key) {
      if (!hp[key].is_number()) throw DataError(fmt::format("hyperparameter '{}' must be a number", key));
      return hp[key].get<double>();
    };
    auto count = [&](const char* key) {
      if (!hp[key].is_number_unsigned()) throw DataError(fmt::format("hyperparameter '{}' must be a count", key));
      return hp[key].get<std::size_t>();
    };
    for (const auto& [key, value] : hp.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw DataError(fmt::format("hyperparameter '{}' does not apply to {}", key, to_string(spec.algorithm)));
      if (key == "laplace_alpha") spec.laplace_alpha = number("laplace_alpha");
      else if (key == "max_depth") spec.max_depth = value.is_null() ? std::nullopt : std::optional(count("max_depth"));
      else if (key == "min_samples_split") spec.min_samples_split = count("min_samples_split");
      else if (key == "l2_lambda") spec.l2_lambda = number("l2_lambda");
      else if (key == "epochs") spec.epochs = count("epochs");
      else if (key == "lr") spec.lr = number("lr");
    }
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// fit / predict

TrainedModel fit(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y) {
  spec.validate();
  check_inputs(X, y);
  if (X.size() < 2) throw DataError(fmt::format("need at least 2 training instances, got {}", X.size()));
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  TrainedModel model;
  model.spec = spec;
  model.feature_dim = X.dim;
  if (spec.algorithm == Algorithm::zeror) {
    ZeroRState s;
    s.prevalence = static_cast<double>(positives) / static_cast<double>(X.size());
    s.majority = s.prevalence > 0.5 ? 1 : 0;
    model.state = s;
    return model;
  }
  if (positives == 0 || positives == X.size())
    throw DataError(fmt::format("{} needs both classes in the training data", to_string(spec.algorithm)));
  switch (spec.algorithm) {
    case Algorithm::naive_bayes: model.state = fit_naive_bayes(spec, X, y); break;
    case Algorithm::decision_tree: model.state = TreeBuilder(spec, X, y).build(); break;
    case Algorithm::logistic_regression: model.state = fit_logistic(spec, X, y, model.objective_trace); break;
    case Algorithm::linear_svm: model.state = fit_svm(spec, X, y, model.objective_trace); break;
    case Algorithm::zeror: break;
  }
  return model;
}

double predict_score(const TrainedModel& model, const SparseVector& x) {
  if (!x.empty() && x.back().index >= model.feature_dim)
    throw DataError(fmt::format("feature index {} beyond model dimension {}", x.back().index, model.feature_dim));
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ZeroRState>) return s.prevalence;
        else if constexpr (std::is_same_v<T, NaiveBayesState>) return score_naive_bayes(s, x);
        else if constexpr (std::is_same_v<T, TreeState>) return score_tree(s, x);
        else {
          const double z = dot(x, s.weights) + s.bias;
          return model.spec.algorithm == Algorithm::logistic_regression ? sigmoid(z) : z;
        }
      },
      model.state);
}

std::vector<double> predict_scores(const TrainedModel& model, const FeatureMatrix& X) {
  if (X.dim != model.feature_dim)
    throw DataError(fmt::format("feature dimension {} does not match model dimension {}", X.dim, model.feature_dim));
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& row : X.rows) out.push_back(predict_score(model, row));
  return out;
}

double default_threshold(Algorithm algorithm) { return algorithm == Algorithm::linear_svm ? 0.0 : 0.5; }

std::vector<int> predict_labels(const TrainedModel& model, const FeatureMatrix& X, std::optional<double> threshold) {
  const auto scores = predict_scores(model, X);
  std::vector<int> out(scores.size());
  if (const auto* z = std::get_if<ZeroRState>(&model.state); z && !threshold) {
    std::fill(out.begin(), out.end(), z->majority);
    return out;
  }
  const double t = threshold.value_or(default_threshold(model.spec.algorithm));
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= t ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Objectives

double logistic_objective(const FeatureMatrix& X, std::span<const int> y, std::span<const double> w, double b,
                          double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = dot(X.rows[i], w) + b;
    loss += softplus(z) - y[i] * z;
  }
  double reg = 0.0;
  for (double x : w) reg += x * x;
  return loss / static_cast<double>(X.size()) + 0.5 * l2 * reg;
}

std::vector<double> logistic_gradient(const FeatureMatrix& X, std::span<const int> y, std::span<const double> w,
                                      double b, double l2) {
  std::vector<double> g(X.dim + 1, 0.0);
  const double n = static_cast<double>(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double r = (sigmoid(dot(X.rows[i], w) + b) - y[i]) / n;
    for (const auto& f : X.rows[i]) g[f.index] += r * f.value;
    g[X.dim] += r;
  }
  for (std::size_t j = 0; j < X.dim; ++j) g[j] += l2 * w[j];
  return g;
}

double hinge_objective(const FeatureMatrix& X, std::span<const int> y, std::span<const double> w, double b,
                       double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double label = y[i] == 1 ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - label * (dot(X.rows[i], w) + b));
  }
  double reg = 0.0;
  for (double x : w) reg += x * x;
  return loss / static_cast<double>(X.size()) + 0.5 * l2 * reg;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {
constexpr std::string_view kModelMagic = "DESMINE-M1";
}

std::string serialize_model(const TrainedModel& model) {
  ojson j;
  j["spec"] = to_json(model.spec);
  j["feature_dim"] = model.feature_dim;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        ojson st;
        if constexpr (std::is_same_v<T, ZeroRState>) {
          st["majority"] = s.majority;
          st["prevalence"] = s.prevalence;
        } else if constexpr (std::is_same_v<T, NaiveBayesState>) {
          st["log_prior"] = {s.log_prior[0], s.log_prior[1]};
          st["log_likelihood"] = {s.log_likelihood[0], s.log_likelihood[1]};
        } else if constexpr (std::is_same_v<T, TreeState>) {
          ojson nodes = ojson::array();
          for (const auto& n : s.nodes) {
            ojson node;
            node["leaf"] = n.leaf;
            node["feature"] = n.feature;
            node["threshold"] = n.threshold;
            node["left"] = n.left;
            node["right"] = n.right;
            node["samples"] = n.samples;
            node["positives"] = n.positives;
            node["score"] = n.score;
            nodes.push_back(std::move(node));
          }
          st["nodes"] = std::move(nodes);
        } else {
          st["weights"] = s.weights;
          st["bias"] = s.bias;
        }
        j["state"] = std::move(st);
      },
      model.state);
  return std::string(kModelMagic) + "\n" + j.dump() + "\n";
}

TrainedModel deserialize_model(std::string_view text) {
  if (text.substr(0, kModelMagic.size() + 1) != std::string(kModelMagic) + "\n")
    throw DataError("not a DESMINE-M1 model file");
  json j;
  try {
    j = json::parse(text.substr(kModelMagic.size() + 1));
    TrainedModel m;
    m.spec = classifier_spec_from_json(j.at("spec"), 0);
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    const auto& st = j.at("state");
    switch (m.spec.algorithm) {
      case Algorithm::zeror: m.state = ZeroRState{st.at("majority").get<int>(), st.at("prevalence").get<double>()}; break;
      case Algorithm::naive_bayes: {
        NaiveBayesState s;
        for (int c = 0; c < 2; ++c) {
          s.log_prior[c] = st.at("log_prior").at(c).get<double>();
          s.log_likelihood[c] = st.at("log_likelihood").at(c).get<std::vector<double>>();
        }
        m.state = std::move(s);
        break;
      }
      case Algorithm::decision_tree: {
        TreeState s;
        for (const auto& n : st.at("nodes")) {
          TreeNode node;
          node.leaf = n.at("leaf").get<bool>();
          node.feature = n.at("feature").get<std::uint32_t>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<std::uint32_t>();
          node.right = n.at("right").get<std::uint32_t>();
          node.samples = n.at("samples").get<std::size_t>();
          node.positives = n.at("positives").get<std::size_t>();
          node.score = n.at("score").get<double>();
          s.nodes.push_back(node);
        }
        m.state = std::move(s);
        break;
      }
      case Algorithm::logistic_regression:
      case Algorithm::linear_svm:
        m.state = LinearState{st.at("weights").get<std::vector<double>>(), st.at("bias").get<double>()};
        break;
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed model file: {}", e.what()));
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << serialize_model(model);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace desmine
