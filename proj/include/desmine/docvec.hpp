#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "desmine/vectorize.hpp"

namespace desmine {

struct DocVecParams {
  std::size_t dim = 100;
  std::size_t epochs = 20;
  std::size_t negative = 5;
  double initial_lr = 0.025;
  double final_lr = 0.0001;
  std::size_t min_count = 2;
  std::uint64_t seed = 0;

  /// Throws DataError when an invariant is violated.
  void validate() const;
  friend bool operator==(const DocVecParams&, const DocVecParams&) = default;
};

/// Paragraph vectors trained with distributed bag of words and negative
/// sampling. Rows of `doc_vectors` follow the training corpus order.
struct DocVecModel {
  DocVecParams params;
  Vocabulary vocab;
  std::vector<std::uint64_t> word_counts;  // per vocab index, training corpus
  std::vector<double> doc_vectors;         // n_docs x dim
  std::vector<double> word_weights;        // vocab x dim (output layer)
  std::vector<double> epoch_loss;          // mean loss per step, one per epoch

  std::size_t n_docs() const { return params.dim == 0 ? 0 : doc_vectors.size() / params.dim; }
  DenseVector doc_vector(std::size_t doc) const;
};

/// `ids` names documents in error messages; may be empty.
DocVecModel train_docvec(const TokenizedCorpus& docs, const DocVecParams& params,
                         const std::vector<std::string>& ids = {});

struct InferredVector {
  DenseVector vector;
  bool all_oov = false;
};

/// Optimizes a fresh document vector against frozen word weights.
InferredVector infer_docvec(const DocVecModel& model, const Tokens& tokens, std::size_t steps, std::uint64_t seed);

/// Binary format with magic header "DESMINE-DV1"; doubles are stored as
/// their IEEE-754 bit patterns so a reload is bit-exact.
void save_docvec(const DocVecModel& model, const std::filesystem::path& path);
DocVecModel load_docvec(const std::filesystem::path& path);
std::string serialize_docvec(const DocVecModel& model);
DocVecModel deserialize_docvec(const std::string& bytes);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace desmine
