#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace desmine {

using Tokens = std::vector<std::string>;
using TokenizedCorpus = std::vector<Tokens>;

struct Feature {
  std::uint32_t index = 0;
  double value = 0.0;
  friend bool operator==(const Feature&, const Feature&) = default;
};

/// Sorted by index, strictly increasing, no explicit zeros.
using SparseVector = std::vector<Feature>;
using DenseVector = std::vector<double>;

/// Row-major sparse design matrix. Dense representations (embeddings,
/// document vectors) are stored here too, minus their exact zeros.
struct FeatureMatrix {
  std::size_t dim = 0;
  std::vector<SparseVector> rows;

  std::size_t size() const { return rows.size(); }
};

SparseVector to_sparse(std::span<const double> dense);
DenseVector to_dense(const SparseVector& v, std::size_t dim);
double dot(const SparseVector& v, std::span<const double> w);
double squared_norm(const SparseVector& v);
double squared_distance(const SparseVector& a, const SparseVector& b);
/// Checks sorted, strictly increasing, nonzero and below `dim`.
bool is_canonical(const SparseVector& v, std::size_t dim);

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::size_t min_df, std::optional<std::size_t> max_features);

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::uint32_t> index(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(const std::string& token) const { return index_.contains(token); }
  std::size_t min_df() const { return min_df_; }
  std::optional<std::size_t> max_features() const { return max_features_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t min_df_ = 1;
  std::optional<std::size_t> max_features_;
};

/// Tokens with document frequency >= min_df, ranked by total frequency
/// (ties lexicographic), truncated to max_features. Index = rank.
Vocabulary build_vocabulary(const TokenizedCorpus& docs, std::size_t min_df = 1,
                            std::optional<std::size_t> max_features = std::nullopt);

using Bigram = std::pair<std::string, std::string>;

struct BigramSet {
  std::vector<Bigram> pairs;  // ranking order
  std::size_t k = 0;

  std::size_t size() const { return pairs.size(); }
};

/// Adjacent pairs ranked by corpus frequency, ties by lexicographic pair.
BigramSet top_bigrams(const TokenizedCorpus& docs, std::size_t k);

/// Unigram counts, then one presence bit per bigram at offset vocab.size().
SparseVector count_vectorize(const Tokens& tokens, const Vocabulary& vocab, const BigramSet* bigrams = nullptr);

struct IdfModel {
  std::vector<double> idf;  // indexed like the vocabulary
  std::size_t n_docs = 0;
};

/// Smoothed idf: ln((1 + n) / (1 + df)) + 1.
IdfModel fit_tfidf(const TokenizedCorpus& docs, const Vocabulary& vocab);
/// Raw count times idf, L2-normalized. Empty stays empty.
SparseVector tfidf_vectorize(const Tokens& tokens, const Vocabulary& vocab, const IdfModel& idf);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::vector<std::string> tokens, std::vector<float> data);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::size_t> row(const std::string& token) const;
  std::span<const float> vector(std::size_t row) const { return {data_.data() + row * dim_, dim_}; }

  /// Up to n rows most cosine-similar to `row` (self excluded) with
  /// similarity >= tau, best first; ties by token.
  std::vector<std::pair<std::size_t, double>> neighbors(std::size_t row, std::size_t n, double tau) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Text vector format: optional "<count> <dim>" header, then
/// "<token> v1 ... v_dim" per line. Duplicate tokens keep the first row.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary* restrict_to = nullptr);
EmbeddingTable parse_embeddings(std::string_view content, const Vocabulary* restrict_to = nullptr);

/// Mean of in-table token vectors; zero vector when none are in the table.
DenseVector embed_average(const Tokens& tokens, const EmbeddingTable& table);

/// Appends up to n neighbors with cosine >= tau for each in-table token,
/// skipping tokens already present.
Tokens expand_vocabulary(const Tokens& tokens, const EmbeddingTable& table, std::size_t n, double tau);

}  // namespace desmine
