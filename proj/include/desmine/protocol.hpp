#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "desmine/balance.hpp"
#include "desmine/classify.hpp"
#include "desmine/corpus.hpp"
#include "desmine/docvec.hpp"
#include "desmine/evaluate.hpp"
#include "desmine/vectorize.hpp"

namespace desmine {

enum class VectorizerKind { count, bigram_top_k, tfidf, embedding_average, docvec };

std::string_view to_string(VectorizerKind kind);
VectorizerKind parse_vectorizer_kind(std::string_view name);
const std::vector<VectorizerKind>& all_vectorizer_kinds();

struct VectorizerSpec {
  VectorizerKind kind = VectorizerKind::count;
  std::size_t min_df = 1;                   // count, bigram_top_k, tfidf
  std::optional<std::size_t> max_features;  // count, bigram_top_k, tfidf
  std::size_t bigram_k = 200;               // bigram_top_k
  std::string embeddings;                   // embedding_average
  DocVecParams docvec;                      // docvec
  std::size_t infer_steps = 20;             // docvec
  std::string docvec_model;                 // docvec, pretrained model instead of training

  friend bool operator==(const VectorizerSpec&, const VectorizerSpec&) = default;
};

/// Embedding-based vocabulary expansion. Uses the vectorizer's table when
/// `embeddings` is empty.
struct ExpansionSpec {
  std::size_t n = 1;
  double tau = 0.7;
  std::string embeddings;

  friend bool operator==(const ExpansionSpec&, const ExpansionSpec&) = default;
};

struct BalanceSpec {
  bool stratify = false;
  std::optional<SmoteParams> smote;

  bool empty() const { return !stratify && !smote; }
  friend bool operator==(const BalanceSpec&, const BalanceSpec&) = default;
};

enum class ValidationKind { kfold, holdout };

struct ValidationSpec {
  ValidationKind kind = ValidationKind::kfold;
  std::size_t k = 10;
  double train = 0.6, validation = 0.2, test = 0.2;

  friend bool operator==(const ValidationSpec&, const ValidationSpec&) = default;
};

enum class FitFeatures { per_fold, global };

std::string_view to_string(FitFeatures mode);

struct ProtocolSpec {
  std::string name;
  CleanOptions preprocess;
  VectorizerSpec vectorizer;
  std::optional<ExpansionSpec> expansion;
  BalanceSpec balance;
  ClassifierSpec classifier;
  ValidationSpec validation;
  FitFeatures fit_features = FitFeatures::per_fold;
  std::uint64_t seed = 0;

  /// Throws DataError on an inconsistent spec.
  void validate() const;
  friend bool operator==(const ProtocolSpec&, const ProtocolSpec&) = default;
};

/// Parses the versioned JSON form. Defaults are filled in, unknown keys and
/// names are rejected, and "seed" is mandatory. Relative paths are kept as
/// written; see resolve_data_path.
ProtocolSpec parse_protocol(const nlohmann::json& j);
ProtocolSpec parse_protocol_text(std::string_view text);
ProtocolSpec parse_protocol_file(const std::filesystem::path& path);
/// Fully resolved form with every default written out.
nlohmann::ordered_json to_json(const ProtocolSpec& spec);

/// Shipped presets: brunet-strict, brunet-stratified, newbest, newbest-alt.
std::vector<std::string> preset_names();
ProtocolSpec preset(std::string_view name);
/// A preset name or a path to a protocol file.
ProtocolSpec load_protocol(const std::string& name_or_path);

/// Absolute paths are returned unchanged. Relative ones are looked up under
/// DESMINE_DATA_DIR first, then under `base`.
std::filesystem::path resolve_data_path(const std::string& path, const std::filesystem::path& base = {});

/// Linear chain of the active stages.
std::string render_dot(const ProtocolSpec& spec);

struct Provenance {
  std::string dataset;
  std::uint64_t seed = 0;
  std::string version;
  std::optional<std::string> timestamp;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ProtocolResult {
  ProtocolSpec spec;
  EvalReport report;
  /// Holdout only: the validation split, used for model selection.
  std::optional<EvalReport> validation_report;
  Provenance provenance;
  std::vector<std::string> warnings;
};

/// A validated spec with its external resources (embedding tables, a
/// pretrained document-vector model) loaded once and shared across folds
/// and transfer cells.
class Pipeline {
 public:
  /// Embedding rows are only kept for tokens occurring in `corpora`, unless
  /// vocabulary expansion needs the whole table.
  Pipeline(ProtocolSpec spec, const std::vector<const Dataset*>& corpora);

  const ProtocolSpec& spec() const { return spec_; }

  /// Cleaned, stopword-filtered and optionally expanded tokens.
  TokenizedCorpus preprocess(const Dataset& dataset) const;

  /// Stratified or contiguous folds per the balance stage; `k` and `seed`
  /// override the spec.
  EvalReport cross_validate(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                            std::vector<std::string>* warnings = nullptr) const;

  /// Trains on all of `train` and scores all of `test`. SMOTE, when
  /// configured, only sees `train`.
  EvalReport train_test(const Dataset& train, const Dataset& test, std::uint64_t seed,
                        std::vector<std::string>* warnings = nullptr) const;

  ProtocolResult execute(const Dataset& dataset) const;

  /// Same resources, different classifier.
  Pipeline with_classifier(const ClassifierSpec& classifier) const;

 private:
  EvalReport holdout(const Dataset& dataset, const TokenizedCorpus& docs, std::optional<EvalReport>& validation,
                     std::vector<std::string>* warnings) const;

  ProtocolSpec spec_;
  std::shared_ptr<const EmbeddingTable> expansion_table_;
  std::shared_ptr<const EmbeddingTable> vector_table_;
  std::shared_ptr<const DocVecModel> pretrained_;
};

ProtocolResult execute(const ProtocolSpec& spec, const Dataset& dataset);
nlohmann::ordered_json to_json(const ProtocolResult& result);

struct GridSearchResult {
  ClassifierSpec best;
  std::size_t best_index = 0;
  std::vector<EvalReport> reports;  // one per grid entry
};

/// Stratified k-fold mean of `metric` per classifier under the protocol's
/// other stages. Ties go to the earliest entry.
GridSearchResult grid_search(const std::vector<ClassifierSpec>& grid, const Dataset& dataset,
                             const ProtocolSpec& context, std::size_t k, Metric metric);

const char* version_string();

}  // namespace desmine
