#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "desmine/corpus.hpp"
#include "desmine/rng.hpp"

namespace desmine::testing {

/// Shape of one generated corpus.
struct CorpusShape {
  std::string name;
  std::size_t size = 1000;
  double prevalence = 0.2;
  ArtifactKind kind = ArtifactKind::other;
  std::size_t min_len = 6, max_len = 24;
};

/// A family of labeled corpora sharing a generic vocabulary. Each corpus
/// has its own topic words and its own design words; a small pool of design
/// words is shared by all of them.
struct SyntheticSuite {
  std::vector<Dataset> datasets;
  /// Word-vector file body ("count dim" header, then one row per token).
  std::string embeddings;
};

/// The five-corpus suite used when the published datasets are absent.
/// `scale` shrinks every corpus (minimum 200 instances).
SyntheticSuite make_suite(std::uint64_t seed, double scale = 1.0);

/// One corpus over the suite vocabulary; exact design count is
/// round(size * prevalence).
Dataset make_corpus(const CorpusShape& shape, std::size_t corpus_index, std::uint64_t seed);

/// Embedding rows for the full suite vocabulary.
std::string make_embeddings(std::size_t dim, std::uint64_t seed);

/// Default corpus shapes, in suite order.
std::vector<CorpusShape> suite_shapes();

double gaussian(Rng& rng);

}  // namespace desmine::testing
