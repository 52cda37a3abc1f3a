#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "desmine/vectorize.hpp"

namespace desmine {

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> fold;  // per instance, in [0, k)

  std::vector<std::size_t> members(std::size_t f) const;
  std::vector<std::size_t> complement(std::size_t f) const;
};

/// Each class is shuffled by seed and dealt round-robin into folds; the
/// deal for the second class continues where the first left off so that
/// fold sizes also differ by at most one.
FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Contiguous blocks in input order (first n % k folds get one extra).
FoldAssignment contiguous_folds(std::size_t n, std::size_t k);

struct SmoteParams {
  std::size_t k_neighbors = 5;
  double target_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SmoteParams&, const SmoteParams&) = default;
};

/// Provenance of one synthetic sample: base + u * (neighbor - base).
struct SyntheticOrigin {
  std::size_t base = 0;      // index into the input
  std::size_t neighbor = 0;  // index into the input
  double u = 0.0;
};

struct SmoteResult {
  FeatureMatrix features;  // originals first, unchanged, then synthetic rows
  std::vector<int> labels;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row
  std::size_t effective_k = 0;
  std::vector<std::string> warnings;
};

/// Number of synthetic minority samples needed to reach target_ratio.
std::size_t smote_deficit(std::size_t minority, std::size_t majority, double target_ratio);

/// Oversamples the minority class. Training partitions only.
SmoteResult smote(const FeatureMatrix& features, std::span<const int> labels, const SmoteParams& params);

}  // namespace desmine
