#include "desmine/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "desmine/error.hpp"
#include "desmine/rng.hpp"
#include "embedded_data.hpp"

namespace desmine {

using nlohmann::json;
using nlohmann::ordered_json;

const char* version_string() { return "0.1.0"; }

std::string_view to_string(VectorizerKind kind) {
  switch (kind) {
    case VectorizerKind::count: return "count";
    case VectorizerKind::bigram_top_k: return "bigram_top_k";
    case VectorizerKind::tfidf: return "tfidf";
    case VectorizerKind::embedding_average: return "embedding_average";
    case VectorizerKind::docvec: return "docvec";
  }
  throw InvariantError("bad VectorizerKind");
}

const std::vector<VectorizerKind>& all_vectorizer_kinds() {
  static const std::vector<VectorizerKind> all{VectorizerKind::count, VectorizerKind::bigram_top_k,
                                               VectorizerKind::tfidf, VectorizerKind::embedding_average,
                                               VectorizerKind::docvec};
  return all;
}

VectorizerKind parse_vectorizer_kind(std::string_view name) {
  for (auto k : all_vectorizer_kinds())
    if (to_string(k) == name) return k;
  throw DataError(fmt::format(
      "unknown vectorizer '{}' (valid: count, bigram_top_k, tfidf, embedding_average, docvec)", name));
}

std::string_view to_string(FitFeatures mode) { return mode == FitFeatures::global ? "global" : "per_fold"; }

void ProtocolSpec::validate() const {
  const auto& v = vectorizer;
  if (v.min_df < 1) throw DataError("vectorizer min_df must be >= 1");
  if (v.max_features && *v.max_features < 1) throw DataError("vectorizer max_features must be >= 1");
  if (v.kind == VectorizerKind::bigram_top_k && v.bigram_k < 1) throw DataError("bigram_top_k needs k >= 1");
  if (v.kind == VectorizerKind::embedding_average && v.embeddings.empty())
    throw DataError("embedding_average needs an 'embeddings' table path");
  if (v.kind == VectorizerKind::docvec) {
    v.docvec.validate();
    if (v.infer_steps < 1) throw DataError("docvec infer_steps must be >= 1");
  }
  if (expansion) {
    if (expansion->n < 1) throw DataError("expansion n must be >= 1");
    if (!(expansion->tau >= -1.0 && expansion->tau <= 1.0))
      throw DataError(fmt::format("expansion tau must be in [-1, 1], got {}", expansion->tau));
    if (expansion->embeddings.empty() && v.kind != VectorizerKind::embedding_average)
      throw DataError("expansion needs an embedding table: set expansion.embeddings or use embedding_average");
  }
  if (balance.smote) balance.smote->validate();
  classifier.validate();
  if (validation.kind == ValidationKind::kfold) {
    if (validation.k < 2) throw DataError(fmt::format("kfold needs k >= 2, got {}", validation.k));
  } else {
    const double sum = validation.train + validation.validation + validation.test;
    if (!(validation.train > 0.0) || validation.validation < 0.0 || !(validation.test > 0.0))
      throw DataError("holdout fractions must be positive (validation may be 0)");
    if (std::abs(sum - 1.0) > 1e-9)
      throw DataError(fmt::format("holdout fractions must sum to 1, got {}", sum));
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw DataError(fmt::format("{} must be an object", where));
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string valid;
      for (auto a : allowed) valid += (valid.empty() ? "" : ", ") + std::string(a);
      throw DataError(fmt::format("unknown key '{}' in {} (valid: {})", key, where, valid));
    }
}

std::size_t get_count(const json& j, const char* key, std::string_view where) {
  if (!j[key].is_number_unsigned()) throw DataError(fmt::format("{}.{} must be a nonnegative integer", where, key));
  return j[key].get<std::size_t>();
}

double get_number(const json& j, const char* key, std::string_view where) {
  if (!j[key].is_number()) throw DataError(fmt::format("{}.{} must be a number", where, key));
  return j[key].get<double>();
}

bool get_bool(const json& j, const char* key, std::string_view where) {
  if (!j[key].is_boolean()) throw DataError(fmt::format("{}.{} must be true or false", where, key));
  return j[key].get<bool>();
}

std::string get_string(const json& j, const char* key, std::string_view where) {
  if (!j[key].is_string()) throw DataError(fmt::format("{}.{} must be a string", where, key));
  return j[key].get<std::string>();
}

CleanOptions parse_preprocess(const json& j) {
  CleanOptions o;
  if (j.is_null()) return o;
  check_keys(j, {"lowercase", "strip_html_and_code", "strip_punctuation", "stopwords", "domain_stopwords"},
             "preprocess");
  if (j.contains("lowercase")) o.lowercase = get_bool(j, "lowercase", "preprocess");
  if (j.contains("strip_html_and_code")) o.strip_html_and_code = get_bool(j, "strip_html_and_code", "preprocess");
  if (j.contains("strip_punctuation")) o.strip_punctuation = get_bool(j, "strip_punctuation", "preprocess");
  if (j.contains("stopwords")) o.stopword_set = parse_stopword_set(get_string(j, "stopwords", "preprocess"));
  if (j.contains("domain_stopwords")) {
    const auto& d = j["domain_stopwords"];
    if (!d.is_array()) throw DataError("preprocess.domain_stopwords must be a list of strings");
    o.domain_stopwords.clear();
    for (const auto& w : d) {
      if (!w.is_string()) throw DataError("preprocess.domain_stopwords must be a list of strings");
      o.domain_stopwords.push_back(w.get<std::string>());
    }
  }
  return o;
}

DocVecParams parse_docvec_params(const json& j, DocVecParams p) {
  if (j.contains("dim")) p.dim = get_count(j, "dim", "vectorizer");
  if (j.contains("epochs")) p.epochs = get_count(j, "epochs", "vectorizer");
  if (j.contains("negative")) p.negative = get_count(j, "negative", "vectorizer");
  if (j.contains("initial_lr")) p.initial_lr = get_number(j, "initial_lr", "vectorizer");
  if (j.contains("final_lr")) p.final_lr = get_number(j, "final_lr", "vectorizer");
  if (j.contains("min_count")) p.min_count = get_count(j, "min_count", "vectorizer");
  if (j.contains("seed")) p.seed = get_count(j, "seed", "vectorizer");
  return p;
}

VectorizerSpec parse_vectorizer(const json& j, std::uint64_t seed) {
  VectorizerSpec v;
  v.docvec.seed = seed;
  if (j.is_string()) {
    v.kind = parse_vectorizer_kind(j.get<std::string>());
    return v;
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw DataError("vectorizer must be a name or an object with a 'type'");
  v.kind = parse_vectorizer_kind(j["type"].get<std::string>());
  switch (v.kind) {
    case VectorizerKind::count:
    case VectorizerKind::tfidf: check_keys(j, {"type", "min_df", "max_features"}, "vectorizer"); break;
    case VectorizerKind::bigram_top_k: check_keys(j, {"type", "k", "min_df", "max_features"}, "vectorizer"); break;
    case VectorizerKind::embedding_average: check_keys(j, {"type", "embeddings"}, "vectorizer"); break;
    case VectorizerKind::docvec:
      check_keys(j,
                 {"type", "dim", "epochs", "negative", "initial_lr", "final_lr", "min_count", "seed", "infer_steps",
                  "model"},
                 "vectorizer");
      break;
  }
  if (j.contains("min_df")) v.min_df = get_count(j, "min_df", "vectorizer");
  if (j.contains("max_features") && !j["max_features"].is_null())
    v.max_features = get_count(j, "max_features", "vectorizer");
  if (j.contains("k")) v.bigram_k = get_count(j, "k", "vectorizer");
  if (j.contains("embeddings")) v.embeddings = get_string(j, "embeddings", "vectorizer");
  if (v.kind == VectorizerKind::docvec) {
    v.docvec = parse_docvec_params(j, v.docvec);
    if (j.contains("infer_steps")) v.infer_steps = get_count(j, "infer_steps", "vectorizer");
    if (j.contains("model") && !j["model"].is_null()) v.docvec_model = get_string(j, "model", "vectorizer");
  }
  return v;
}

ValidationSpec parse_validation(const json& j) {
  ValidationSpec v;
  std::string type;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw DataError("validation must be 'kfold', 'holdout' or an object with a 'type'");
    type = j["type"].get<std::string>();
  }
  if (type == "kfold") v.kind = ValidationKind::kfold;
  else if (type == "holdout") v.kind = ValidationKind::holdout;
  else throw DataError(fmt::format("unknown validation '{}' (valid: kfold, holdout)", type));
  if (j.is_string()) return v;
  if (v.kind == ValidationKind::kfold) {
    check_keys(j, {"type", "k"}, "validation");
    if (j.contains("k")) v.k = get_count(j, "k", "validation");
  } else {
    check_keys(j, {"type", "train", "validation", "test"}, "validation");
    if (j.contains("train")) v.train = get_number(j, "train", "validation");
    if (j.contains("validation")) v.validation = get_number(j, "validation", "validation");
    if (j.contains("test")) v.test = get_number(j, "test", "validation");
  }
  return v;
}

BalanceSpec parse_balance(const json& j, std::uint64_t seed) {
  BalanceSpec b;
  if (j.is_null()) return b;
  check_keys(j, {"stratify", "smote"}, "balance");
  if (j.contains("stratify")) b.stratify = get_bool(j, "stratify", "balance");
  if (j.contains("smote")) {
    const auto& s = j["smote"];
    if (s.is_null() || (s.is_boolean() && !s.get<bool>())) return b;
    SmoteParams p;
    p.seed = seed;
    if (!s.is_boolean()) {
      check_keys(s, {"k_neighbors", "target_ratio", "seed"}, "balance.smote");
      if (s.contains("k_neighbors")) p.k_neighbors = get_count(s, "k_neighbors", "balance.smote");
      if (s.contains("target_ratio")) p.target_ratio = get_number(s, "target_ratio", "balance.smote");
      if (s.contains("seed")) p.seed = get_count(s, "seed", "balance.smote");
    }
    b.smote = p;
  }
  return b;
}

}  // namespace

ProtocolSpec parse_protocol(const json& j) {
  check_keys(j,
             {"desmine_protocol", "name", "seed", "preprocess", "vectorizer", "expansion", "balance", "classifier",
              "validation", "fit_features"},
             "protocol");
  if (!j.contains("desmine_protocol")) throw DataError("missing 'desmine_protocol' version key");
  if (!j["desmine_protocol"].is_number_integer() || j["desmine_protocol"].get<int>() != 1)
    throw DataError(fmt::format("unsupported desmine_protocol version {} (expected 1)", j["desmine_protocol"].dump()));
  if (!j.contains("seed")) throw DataError("protocol is missing 'seed' (seeds are mandatory)");
  ProtocolSpec spec;
  spec.seed = get_count(j, "seed", "protocol");
  if (j.contains("name")) spec.name = get_string(j, "name", "protocol");
  if (j.contains("preprocess")) spec.preprocess = parse_preprocess(j["preprocess"]);
  if (!j.contains("vectorizer")) throw DataError("protocol is missing 'vectorizer'");
  spec.vectorizer = parse_vectorizer(j["vectorizer"], spec.seed);
  if (j.contains("expansion") && !j["expansion"].is_null()) {
    const auto& e = j["expansion"];
    check_keys(e, {"n", "tau", "embeddings"}, "expansion");
    ExpansionSpec x;
    if (e.contains("n")) x.n = get_count(e, "n", "expansion");
    if (e.contains("tau")) x.tau = get_number(e, "tau", "expansion");
    if (e.contains("embeddings")) x.embeddings = get_string(e, "embeddings", "expansion");
    spec.expansion = x;
  }
  if (j.contains("balance")) spec.balance = parse_balance(j["balance"], spec.seed);
  if (!j.contains("classifier")) throw DataError("protocol is missing 'classifier'");
  spec.classifier = classifier_spec_from_json(j["classifier"], spec.seed);
  if (j.contains("validation")) spec.validation = parse_validation(j["validation"]);
  if (j.contains("fit_features")) {
    const auto mode = get_string(j, "fit_features", "protocol");
    if (mode == "per_fold") spec.fit_features = FitFeatures::per_fold;
    else if (mode == "global") spec.fit_features = FitFeatures::global;
    else throw DataError(fmt::format("unknown fit_features '{}' (valid: per_fold, global)", mode));
  }
  spec.validate();
  return spec;
}

ProtocolSpec parse_protocol_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("protocol is not valid JSON: {}", e.what()));
  }
  return parse_protocol(j);
}

ProtocolSpec parse_protocol_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open protocol file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_protocol_text(buf.str());
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ordered_json to_json(const ProtocolSpec& spec) {
  ordered_json j;
  j["desmine_protocol"] = 1;
  j["name"] = spec.name;
  j["seed"] = spec.seed;

  const auto& p = spec.preprocess;
  j["preprocess"] = {{"lowercase", p.lowercase},
                     {"strip_html_and_code", p.strip_html_and_code},
                     {"strip_punctuation", p.strip_punctuation},
                     {"stopwords", std::string(to_string(p.stopword_set))},
                     {"domain_stopwords", p.domain_stopwords}};

  const auto& v = spec.vectorizer;
  ordered_json vj;
  vj["type"] = std::string(to_string(v.kind));
  switch (v.kind) {
    case VectorizerKind::bigram_top_k: vj["k"] = v.bigram_k; [[fallthrough]];
    case VectorizerKind::count:
    case VectorizerKind::tfidf:
      vj["min_df"] = v.min_df;
      vj["max_features"] = v.max_features ? ordered_json(*v.max_features) : ordered_json(nullptr);
      break;
    case VectorizerKind::embedding_average: vj["embeddings"] = v.embeddings; break;
    case VectorizerKind::docvec:
      vj["dim"] = v.docvec.dim;
      vj["epochs"] = v.docvec.epochs;
      vj["negative"] = v.docvec.negative;
      vj["initial_lr"] = v.docvec.initial_lr;
      vj["final_lr"] = v.docvec.final_lr;
      vj["min_count"] = v.docvec.min_count;
      vj["seed"] = v.docvec.seed;
      vj["infer_steps"] = v.infer_steps;
      vj["model"] = v.docvec_model.empty() ? ordered_json(nullptr) : ordered_json(v.docvec_model);
      break;
  }
  j["vectorizer"] = vj;

  if (spec.expansion)
    j["expansion"] = {{"n", spec.expansion->n}, {"tau", spec.expansion->tau}, {"embeddings", spec.expansion->embeddings}};
  else
    j["expansion"] = nullptr;

  ordered_json bj;
  bj["stratify"] = spec.balance.stratify;
  if (spec.balance.smote)
    bj["smote"] = {{"k_neighbors", spec.balance.smote->k_neighbors},
                   {"target_ratio", spec.balance.smote->target_ratio},
                   {"seed", spec.balance.smote->seed}};
  else
    bj["smote"] = nullptr;
  j["balance"] = bj;

  j["classifier"] = to_json(spec.classifier);

  if (spec.validation.kind == ValidationKind::kfold)
    j["validation"] = {{"type", "kfold"}, {"k", spec.validation.k}};
  else
    j["validation"] = {{"type", "holdout"},
                       {"train", spec.validation.train},
                       {"validation", spec.validation.validation},
                       {"test", spec.validation.test}};
  j["fit_features"] = std::string(to_string(spec.fit_features));
  return j;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (auto n : embedded::preset_names()) out.emplace_back(n);
  return out;
}

ProtocolSpec preset(std::string_view name) {
  const auto body = embedded::preset(name);
  if (!body) {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw DataError(fmt::format("unknown preset '{}' (valid: {})", name, valid));
  }
  return parse_protocol_text(*body);
}

ProtocolSpec load_protocol(const std::string& name_or_path) {
  if (embedded::preset(name_or_path)) return preset(name_or_path);
  return parse_protocol_file(name_or_path);
}

std::filesystem::path resolve_data_path(const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("DESMINE_DATA_DIR"); root && *root) {
    auto candidate = std::filesystem::path(root) / p;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return base.empty() ? p : base / p;
}

// ---------------------------------------------------------------------------
// DOT

namespace {

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string trim_number(double x) { return fmt::format("{}", x); }

std::string vectorizer_label(const VectorizerSpec& v) {
  switch (v.kind) {
    case VectorizerKind::count: return "count";
    case VectorizerKind::bigram_top_k: return fmt::format("bigram_top_k({})", v.bigram_k);
    case VectorizerKind::tfidf: return "tfidf";
    case VectorizerKind::embedding_average:
      return fmt::format("embedding_average({})", std::filesystem::path(v.embeddings).filename().string());
    case VectorizerKind::docvec:
      return v.docvec_model.empty() ? fmt::format("docvec(dim={}, epochs={})", v.docvec.dim, v.docvec.epochs)
                                    : fmt::format("docvec({})", std::filesystem::path(v.docvec_model).filename().string());
  }
  throw InvariantError("bad VectorizerKind");
}

}  // namespace

std::string render_dot(const ProtocolSpec& spec) {
  std::vector<std::pair<std::string, std::string>> nodes;
  nodes.emplace_back("source", "discussions");

  std::string pre = fmt::format("stopwords={}", to_string(spec.preprocess.stopword_set));
  if (spec.preprocess.strip_html_and_code) pre += "\\nstrip html+code";
  if (spec.expansion) pre += fmt::format("\\nexpand(n={}, tau={})", spec.expansion->n, trim_number(spec.expansion->tau));
  nodes.emplace_back("preprocess", pre);
  nodes.emplace_back("vectorize", vectorizer_label(spec.vectorizer));

  if (!spec.balance.empty()) {
    std::vector<std::string> parts;
    if (spec.balance.stratify) parts.emplace_back("stratify");
    if (spec.balance.smote)
      parts.push_back(fmt::format("smote(k={}, ratio={})", spec.balance.smote->k_neighbors,
                                  trim_number(spec.balance.smote->target_ratio)));
    std::string label;
    for (const auto& p : parts) label += (label.empty() ? "" : " + ") + p;
    nodes.emplace_back("balance", label);
  }
  nodes.emplace_back("classify", std::string(to_string(spec.classifier.algorithm)));

  std::string val = spec.validation.kind == ValidationKind::kfold
                        ? fmt::format("kfold({})", spec.validation.k)
                        : fmt::format("holdout({}/{}/{})", trim_number(spec.validation.train),
                                      trim_number(spec.validation.validation), trim_number(spec.validation.test));
  val += fmt::format("\\nfit_features={}", to_string(spec.fit_features));
  nodes.emplace_back("validate", val);

  std::string out = "digraph protocol {\n";
  out += fmt::format("  label=\"{}\";\n", dot_escape(spec.name));
  out += fmt::format("  comment=\"{}\";\n", dot_escape(to_json(spec).dump()));
  out += "  rankdir=LR;\n  node [shape=box, fontname=\"sans-serif\"];\n";
  for (const auto& [id, label] : nodes) {
    // Labels already carry DOT \n escapes, so only quotes are escaped here.
    std::string escaped;
    for (char c : label) {
      if (c == '"') escaped += '\\';
      escaped += c;
    }
    out += fmt::format("  {} [label=\"{}\\n{}\"];\n", id, id, escaped);
  }
  out += "  ";
  for (std::size_t i = 0; i < nodes.size(); ++i) out += (i ? " -> " : "") + nodes[i].first;
  out += ";\n}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

template <typename F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", stage, e.what()));
  }
}

TokenizedCorpus pick(const TokenizedCorpus& docs, const std::vector<std::size_t>& idx) {
  TokenizedCorpus out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(docs[i]);
  return out;
}

std::vector<int> pick(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

FeatureMatrix pick(const FeatureMatrix& m, const std::vector<std::size_t>& idx) {
  FeatureMatrix out;
  out.dim = m.dim;
  out.rows.reserve(idx.size());
  for (auto i : idx) out.rows.push_back(m.rows[i]);
  return out;
}

std::vector<std::string> ids_of(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(d[i].id);
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

/// Vectorizer state fitted on a training corpus.
class Featurizer {
 public:
  Featurizer(const VectorizerSpec& spec, const EmbeddingTable* table, const DocVecModel* pretrained)
      : spec_(spec), table_(table), pretrained_(pretrained) {}

  /// Fits on `train` and returns its rows.
  FeatureMatrix fit(const TokenizedCorpus& train, const std::vector<std::string>& ids, std::uint64_t seed) {
    switch (spec_.kind) {
      case VectorizerKind::count:
      case VectorizerKind::tfidf:
      case VectorizerKind::bigram_top_k:
        vocab_ = build_vocabulary(train, spec_.min_df, spec_.max_features);
        if (spec_.kind == VectorizerKind::bigram_top_k) bigrams_ = top_bigrams(train, spec_.bigram_k);
        if (spec_.kind == VectorizerKind::tfidf) idf_ = fit_tfidf(train, vocab_);
        return transform(train, seed);
      case VectorizerKind::embedding_average: return transform(train, seed);
      case VectorizerKind::docvec: {
        if (pretrained_) return transform(train, seed);
        DocVecParams params = spec_.docvec;
        params.seed = derive_seed(params.seed, seed);
        trained_ = train_docvec(train, params, ids);
        FeatureMatrix m;
        m.dim = params.dim;
        for (std::size_t i = 0; i < train.size(); ++i) m.rows.push_back(to_sparse(trained_.doc_vector(i)));
        return m;
      }
    }
    throw InvariantError("bad VectorizerKind");
  }

  FeatureMatrix transform(const TokenizedCorpus& docs, std::uint64_t seed) const {
    FeatureMatrix m;
    switch (spec_.kind) {
      case VectorizerKind::count:
      case VectorizerKind::bigram_top_k: {
        const BigramSet* b = spec_.kind == VectorizerKind::bigram_top_k ? &bigrams_ : nullptr;
        m.dim = vocab_.size() + (b ? b->size() : 0);
        for (const auto& d : docs) m.rows.push_back(count_vectorize(d, vocab_, b));
        break;
      }
      case VectorizerKind::tfidf:
        m.dim = vocab_.size();
        for (const auto& d : docs) m.rows.push_back(tfidf_vectorize(d, vocab_, idf_));
        break;
      case VectorizerKind::embedding_average:
        m.dim = table_->dim();
        for (const auto& d : docs) m.rows.push_back(to_sparse(embed_average(d, *table_)));
        break;
      case VectorizerKind::docvec: {
        const DocVecModel& model = pretrained_ ? *pretrained_ : trained_;
        m.dim = model.params.dim;
        for (std::size_t i = 0; i < docs.size(); ++i)
          m.rows.push_back(to_sparse(infer_docvec(model, docs[i], spec_.infer_steps, derive_seed(seed, i)).vector));
        break;
      }
    }
    return m;
  }

 private:
  const VectorizerSpec& spec_;
  const EmbeddingTable* table_;
  const DocVecModel* pretrained_;
  Vocabulary vocab_;
  BigramSet bigrams_;
  IdfModel idf_;
  DocVecModel trained_;
};

/// Balance + fit on the training rows, score the test rows.
EvalReport fit_and_score(const ProtocolSpec& spec, FeatureMatrix X_train, std::vector<int> y_train,
                         const FeatureMatrix& X_test, const std::vector<int>& y_test, std::uint64_t seed,
                         std::vector<std::string>* warnings, const std::vector<const FeatureMatrix*>& extra_tests = {},
                         const std::vector<const std::vector<int>*>& extra_labels = {},
                         std::vector<EvalReport>* extra_reports = nullptr) {
  if (spec.balance.smote) {
    SmoteParams params = *spec.balance.smote;
    params.seed = derive_seed(params.seed, seed);
    auto res = in_stage("balance", [&] { return smote(X_train, y_train, params); });
    if (warnings)
      for (auto& w : res.warnings) warnings->push_back(std::move(w));
    X_train = std::move(res.features);
    y_train = std::move(res.labels);
  }
  ClassifierSpec cls = spec.classifier;
  cls.seed = derive_seed(cls.seed, seed);
  const auto model = in_stage("classify", [&] { return fit(cls, X_train, y_train); });
  auto score = [&](const FeatureMatrix& X, const std::vector<int>& y) {
    const auto scores = predict_scores(model, X);
    const auto labels = predict_labels(model, X);
    return in_stage("validate", [&] { return evaluate_scores(y, scores, labels); });
  };
  if (extra_reports)
    for (std::size_t i = 0; i < extra_tests.size(); ++i) extra_reports->push_back(score(*extra_tests[i], *extra_labels[i]));
  return score(X_test, y_test);
}

std::shared_ptr<const EmbeddingTable> load_table(const std::string& path, const Vocabulary* restrict_to) {
  return in_stage("vectorize", [&] {
    const auto resolved = resolve_data_path(path);
    if (!std::filesystem::exists(resolved))
      throw DataError(fmt::format("embedding table '{}' not found (set DESMINE_DATA_DIR or use an absolute path)",
                                  path));
    return std::make_shared<const EmbeddingTable>(load_embeddings(resolved, restrict_to));
  });
}

}  // namespace

Pipeline::Pipeline(ProtocolSpec spec, const std::vector<const Dataset*>& corpora) : spec_(std::move(spec)) {
  spec_.validate();
  const auto& v = spec_.vectorizer;
  if (spec_.expansion) {
    const std::string& path = spec_.expansion->embeddings.empty() ? v.embeddings : spec_.expansion->embeddings;
    expansion_table_ = load_table(path, nullptr);
    if (v.kind == VectorizerKind::embedding_average && v.embeddings == path) vector_table_ = expansion_table_;
  }
  if (v.kind == VectorizerKind::embedding_average && !vector_table_) {
    if (spec_.expansion) {
      vector_table_ = load_table(v.embeddings, nullptr);
    } else {
      TokenizedCorpus all;
      for (const auto* d : corpora)
        for (auto& doc : preprocess(*d)) all.push_back(std::move(doc));
      const auto vocab = build_vocabulary(all);
      vector_table_ = load_table(v.embeddings, &vocab);
    }
  }
  if (v.kind == VectorizerKind::docvec && !v.docvec_model.empty()) {
    pretrained_ = in_stage("vectorize", [&] {
      return std::make_shared<const DocVecModel>(load_docvec(resolve_data_path(v.docvec_model)));
    });
  }
}

TokenizedCorpus Pipeline::preprocess(const Dataset& dataset) const {
  const StopwordFilter filter(spec_.preprocess);
  TokenizedCorpus docs;
  docs.reserve(dataset.size());
  for (const auto& d : dataset.discussions()) {
    auto tokens = remove_stopwords(tokenize(clean(d.text, spec_.preprocess)), filter);
    if (expansion_table_) tokens = expand_vocabulary(tokens, *expansion_table_, spec_.expansion->n, spec_.expansion->tau);
    docs.push_back(std::move(tokens));
  }
  return docs;
}

EvalReport Pipeline::cross_validate(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                                    std::vector<std::string>* warnings) const {
  const auto docs = preprocess(dataset);
  const auto labels = dataset.labels();
  const auto folds = in_stage("validate", [&] {
    return spec_.balance.stratify ? stratified_folds(labels, k, seed) : contiguous_folds(labels.size(), k);
  });

  const EmbeddingTable* table = vector_table_.get();
  FeatureMatrix global;
  if (spec_.fit_features == FitFeatures::global) {
    Featurizer fz(spec_.vectorizer, table, pretrained_.get());
    global = in_stage("vectorize", [&] { return fz.fit(docs, ids_of(dataset, all_indices(docs.size())), seed); });
  }

  std::vector<EvalReport> reports;
  for (std::size_t f = 0; f < k; ++f) {
    try {
      const auto train_idx = folds.complement(f), test_idx = folds.members(f);
      const std::uint64_t fold_seed = derive_seed(seed, f);
      FeatureMatrix X_train, X_test;
      if (spec_.fit_features == FitFeatures::global) {
        X_train = pick(global, train_idx);
        X_test = pick(global, test_idx);
      } else {
        Featurizer fz(spec_.vectorizer, table, pretrained_.get());
        X_train = in_stage("vectorize",
                           [&] { return fz.fit(pick(docs, train_idx), ids_of(dataset, train_idx), fold_seed); });
        X_test = in_stage("vectorize", [&] { return fz.transform(pick(docs, test_idx), derive_seed(fold_seed, 1)); });
      }
      reports.push_back(fit_and_score(spec_, std::move(X_train), pick(labels, train_idx), X_test,
                                      pick(labels, test_idx), fold_seed, warnings));
    } catch (const DataError& e) {
      throw DataError(fmt::format("fold {}: {}", f, e.what()));
    }
  }
  return aggregate_folds(reports);
}

EvalReport Pipeline::train_test(const Dataset& train, const Dataset& test, std::uint64_t seed,
                                std::vector<std::string>* warnings) const {
  const auto train_docs = preprocess(train), test_docs = preprocess(test);
  Featurizer fz(spec_.vectorizer, vector_table_.get(), pretrained_.get());
  auto X_train =
      in_stage("vectorize", [&] { return fz.fit(train_docs, ids_of(train, all_indices(train.size())), seed); });
  auto X_test = in_stage("vectorize", [&] { return fz.transform(test_docs, derive_seed(seed, 1)); });
  return fit_and_score(spec_, std::move(X_train), train.labels(), X_test, test.labels(), seed, warnings);
}

EvalReport Pipeline::holdout(const Dataset& dataset, const TokenizedCorpus& docs,
                             std::optional<EvalReport>& validation, std::vector<std::string>* warnings) const {
  const auto labels = dataset.labels();
  const auto& v = spec_.validation;
  std::vector<std::size_t> train_idx, val_idx, test_idx;
  auto split = [&](std::vector<std::size_t> idx, std::uint64_t tag) {
    Rng rng(derive_seed(spec_.seed, tag));
    rng.shuffle(std::span(idx));
    const auto n = idx.size();
    const auto n_train = static_cast<std::size_t>(std::llround(v.train * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(v.validation * static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i)
      (i < n_train ? train_idx : i < n_train + n_val ? val_idx : test_idx).push_back(idx[i]);
  };
  if (spec_.balance.stratify) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    split(pos, 1);
    split(neg, 0);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
  } else {
    split(all_indices(labels.size()), 2);
  }
  if (train_idx.empty() || test_idx.empty()) throw DataError("validate: holdout split left an empty partition");

  FeatureMatrix X_train, X_val, X_test;
  Featurizer fz(spec_.vectorizer, vector_table_.get(), pretrained_.get());
  if (spec_.fit_features == FitFeatures::global) {
    const auto all = in_stage("vectorize", [&] {
      return fz.fit(docs, ids_of(dataset, all_indices(docs.size())), spec_.seed);
    });
    X_train = pick(all, train_idx);
    X_val = pick(all, val_idx);
    X_test = pick(all, test_idx);
  } else {
    X_train = in_stage("vectorize", [&] { return fz.fit(pick(docs, train_idx), ids_of(dataset, train_idx), spec_.seed); });
    X_val = in_stage("vectorize", [&] { return fz.transform(pick(docs, val_idx), derive_seed(spec_.seed, 2)); });
    X_test = in_stage("vectorize", [&] { return fz.transform(pick(docs, test_idx), derive_seed(spec_.seed, 1)); });
  }
  const auto y_val = pick(labels, val_idx);
  std::vector<EvalReport> val_reports;
  std::vector<const FeatureMatrix*> extra;
  std::vector<const std::vector<int>*> extra_y;
  if (!val_idx.empty()) {
    extra.push_back(&X_val);
    extra_y.push_back(&y_val);
  }
  auto report = fit_and_score(spec_, std::move(X_train), pick(labels, train_idx), X_test, pick(labels, test_idx),
                              spec_.seed, warnings, extra, extra_y, &val_reports);
  if (!val_reports.empty()) validation = val_reports.front();
  return report;
}

ProtocolResult Pipeline::execute(const Dataset& dataset) const {
  ProtocolResult result;
  result.spec = spec_;
  result.provenance = {dataset.name(), spec_.seed, version_string(), std::nullopt};
  if (spec_.validation.kind == ValidationKind::kfold) {
    result.report = cross_validate(dataset, spec_.validation.k, spec_.seed, &result.warnings);
  } else {
    const auto docs = preprocess(dataset);
    result.report = holdout(dataset, docs, result.validation_report, &result.warnings);
  }
  return result;
}

ProtocolResult execute(const ProtocolSpec& spec, const Dataset& dataset) {
  return Pipeline(spec, {&dataset}).execute(dataset);
}

EvalReport cross_validate(const ProtocolSpec& protocol, const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  return Pipeline(protocol, {&dataset}).cross_validate(dataset, k, seed);
}

ordered_json to_json(const ProtocolResult& result) {
  ordered_json j;
  j["spec"] = to_json(result.spec);
  j["report"] = to_json(result.report);
  if (result.validation_report) j["validation_report"] = to_json(*result.validation_report);
  ordered_json p;
  p["dataset"] = result.provenance.dataset;
  p["seed"] = result.provenance.seed;
  p["version"] = result.provenance.version;
  if (result.provenance.timestamp) p["timestamp"] = *result.provenance.timestamp;
  j["provenance"] = p;
  j["warnings"] = result.warnings;
  return j;
}

Pipeline Pipeline::with_classifier(const ClassifierSpec& classifier) const {
  Pipeline p = *this;
  p.spec_.classifier = classifier;
  p.spec_.validate();
  return p;
}

GridSearchResult grid_search(const std::vector<ClassifierSpec>& grid, const Dataset& dataset,
                             const ProtocolSpec& context, std::size_t k, Metric metric) {
  if (grid.empty()) throw DataError("grid_search needs at least one classifier spec");
  ProtocolSpec base = context;
  base.balance.stratify = true;
  const Pipeline pipeline(base, {&dataset});
  GridSearchResult out;
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EvalReport report;
    try {
      report = pipeline.with_classifier(grid[i]).cross_validate(dataset, k, base.seed);
    } catch (const DataError& e) {
      throw DataError(fmt::format("grid entry {} ({}): {}", i, to_json(grid[i]).dump(), e.what()));
    }
    const double value = report.get(metric);
    if (i == 0 || value > best) {
      best = value;
      out.best = grid[i];
      out.best_index = i;
    }
    out.reports.push_back(std::move(report));
  }
  return out;
}

}  // namespace desmine
