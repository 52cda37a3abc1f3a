#include "desmine/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "desmine/error.hpp"
#include "desmine/rng.hpp"

namespace desmine {

std::vector<std::size_t> FoldAssignment::members(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) out.push_back(i);
  return out;
}

FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DataError(fmt::format("fold count must be >= 2, got {}", k));
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError(fmt::format("label at {} is not binary", i));
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  if (pos.size() < k || neg.size() < k)
    throw DataError(fmt::format("stratified {}-fold split needs >= {} members per class (have {} design, {} non-design)",
                                k, k, pos.size(), neg.size()));
  Rng rng(seed);
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));

  FoldAssignment a;
  a.k = k;
  a.fold.assign(labels.size(), 0);
  std::size_t next = 0;
  for (const auto* cls : {&pos, &neg}) {
    for (auto i : *cls) {
      a.fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return a;
}

FoldAssignment contiguous_folds(std::size_t n, std::size_t k) {
  if (k < 2) throw DataError(fmt::format("fold count must be >= 2, got {}", k));
  if (n < k) throw DataError(fmt::format("{} instances cannot fill {} folds", n, k));
  FoldAssignment a;
  a.k = k;
  a.fold.resize(n);
  const std::size_t base = n / k, extra = n % k;
  std::size_t i = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) a.fold[i++] = f;
  }
  return a;
}

void SmoteParams::validate() const {
  if (k_neighbors < 1) throw DataError("smote k_neighbors must be >= 1");
  if (!(target_ratio > 0.0) || target_ratio > 1.0)
    throw DataError(fmt::format("smote target_ratio must be in (0, 1], got {}", target_ratio));
}

std::size_t smote_deficit(std::size_t minority, std::size_t majority, double target_ratio) {
  // The small slack keeps ratios like 0.3 * 10 from rounding up to 4.
  const double wanted = std::ceil(target_ratio * static_cast<double>(majority) - 1e-9);
  const auto target = static_cast<std::size_t>(std::max(0.0, wanted));
  return target > minority ? target - minority : 0;
}

namespace {

SparseVector interpolate(const SparseVector& a, const SparseVector& b, double u) {
  SparseVector out;
  out.reserve(std::max(a.size(), b.size()));
  std::size_t i = 0, j = 0;
  auto emit = [&](std::uint32_t idx, double av, double bv) {
    const double v = av + u * (bv - av);
    if (v != 0.0) out.push_back({idx, v});
  };
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].index < b[j].index)) {
      emit(a[i].index, a[i].value, 0.0);
      ++i;
    } else if (i == a.size() || b[j].index < a[i].index) {
      emit(b[j].index, 0.0, b[j].value);
      ++j;
    } else {
      emit(a[i].index, a[i].value, b[j].value);
      ++i;
      ++j;
    }
  }
  return out;
}

}  // namespace

SmoteResult smote(const FeatureMatrix& features, std::span<const int> labels, const SmoteParams& params) {
  params.validate();
  if (features.size() != labels.size())
    throw DataError(fmt::format("smote: {} feature rows but {} labels", features.size(), labels.size()));

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  const bool design_is_minority = pos.size() <= neg.size();
  const auto& minority = design_is_minority ? pos : neg;
  const auto& majority = design_is_minority ? neg : pos;
  const int minority_label = design_is_minority ? 1 : 0;

  SmoteResult result;
  result.features = features;
  result.labels.assign(labels.begin(), labels.end());

  const std::size_t deficit = smote_deficit(minority.size(), majority.size(), params.target_ratio);
  if (deficit == 0) return result;
  if (minority.size() < 2)
    throw DataError(fmt::format("smote needs at least 2 minority instances, got {}", minority.size()));

  std::size_t k = params.k_neighbors;
  if (k >= minority.size()) {
    k = minority.size() - 1;
    result.warnings.push_back(
        fmt::format("smote: k_neighbors={} >= minority size {}; clamped to {}", params.k_neighbors, minority.size(), k));
  }
  result.effective_k = k;

  // k nearest minority neighbours of each minority point; ties by index.
  const std::size_t m = minority.size();
  std::vector<std::vector<std::size_t>> knn(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < m; ++a) {
    dist.clear();
    const auto& xa = features.rows[minority[a]];
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      dist.emplace_back(squared_distance(xa, features.rows[minority[b]]), b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < k; ++j) knn[a].push_back(dist[j].second);
  }

  Rng rng(params.seed);
  result.features.rows.reserve(features.size() + deficit);
  for (std::size_t s = 0; s < deficit; ++s) {
    const std::size_t a = static_cast<std::size_t>(rng.below(m));
    const std::size_t b = knn[a][static_cast<std::size_t>(rng.below(k))];
    const double u = rng.uniform();
    result.features.rows.push_back(interpolate(features.rows[minority[a]], features.rows[minority[b]], u));
    result.labels.push_back(minority_label);
    result.origins.push_back({minority[a], minority[b], u});
  }
  return result;
}

}  // namespace desmine
