#include "desmine/vectorize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "desmine/error.hpp"

namespace desmine {

SparseVector to_sparse(std::span<const double> dense) {
  SparseVector out;
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0.0) out.push_back({static_cast<std::uint32_t>(i), dense[i]});
  return out;
}

DenseVector to_dense(const SparseVector& v, std::size_t dim) {
  DenseVector out(dim, 0.0);
  for (const auto& f : v) out.at(f.index) = f.value;
  return out;
}

double dot(const SparseVector& v, std::span<const double> w) {
  double s = 0.0;
  for (const auto& f : v) s += f.value * w[f.index];
  return s;
}

double squared_norm(const SparseVector& v) {
  double s = 0.0;
  for (const auto& f : v) s += f.value * f.value;
  return s;
}

double squared_distance(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].index < b[j].index)) {
      s += a[i].value * a[i].value;
      ++i;
    } else if (i == a.size() || b[j].index < a[i].index) {
      s += b[j].value * b[j].value;
      ++j;
    } else {
      const double d = a[i].value - b[j].value;
      s += d * d;
      ++i;
      ++j;
    }
  }
  return s;
}

bool is_canonical(const SparseVector& v, std::size_t dim) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].value == 0.0 || !std::isfinite(v[i].value) || v[i].index >= dim) return false;
    if (i > 0 && v[i].index <= v[i - 1].index) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t min_df, std::optional<std::size_t> max_features)
    : tokens_(std::move(tokens)), min_df_(min_df), max_features_(max_features) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second)
      throw DataError(fmt::format("duplicate vocabulary token '{}'", tokens_[i]));
  }
}

std::optional<std::uint32_t> Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const TokenizedCorpus& docs, std::size_t min_df, std::optional<std::size_t> max_features) {
  if (docs.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  struct Counts {
    std::size_t df = 0;
    std::size_t total = 0;
    std::size_t last_doc = SIZE_MAX;
  };
  std::unordered_map<std::string, Counts> counts;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& tok : docs[d]) {
      auto& c = counts[tok];
      ++c.total;
      if (c.last_doc != d) {
        ++c.df;
        c.last_doc = d;
      }
    }
  }
  std::vector<std::pair<const std::string*, std::size_t>> kept;
  for (const auto& [tok, c] : counts)
    if (c.df >= min_df) kept.emplace_back(&tok, c.total);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return *a.first < *b.first;
  });
  if (max_features && kept.size() > *max_features) kept.resize(*max_features);
  if (kept.empty()) throw DataError(fmt::format("vocabulary is empty (min_df={})", min_df));
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (const auto& k : kept) tokens.push_back(*k.first);
  return Vocabulary(std::move(tokens), min_df, max_features);
}

// ---------------------------------------------------------------------------
// Bigrams and counts

BigramSet top_bigrams(const TokenizedCorpus& docs, std::size_t k) {
  if (k == 0) throw DataError("bigram k must be >= 1");
  std::map<Bigram, std::size_t> counts;
  for (const auto& doc : docs)
    for (std::size_t i = 1; i < doc.size(); ++i) ++counts[{doc[i - 1], doc[i]}];
  std::vector<std::pair<const Bigram*, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [pair, n] : counts) ranked.emplace_back(&pair, n);
  // std::map iteration is already lexicographic, so a stable sort on count
  // leaves ties in pair order.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  BigramSet set;
  set.k = k;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) set.pairs.push_back(*ranked[i].first);
  return set;
}

SparseVector count_vectorize(const Tokens& tokens, const Vocabulary& vocab, const BigramSet* bigrams) {
  std::map<std::uint32_t, double> acc;
  for (const auto& tok : tokens)
    if (auto idx = vocab.index(tok)) acc[*idx] += 1.0;
  if (bigrams && !bigrams->pairs.empty() && tokens.size() >= 2) {
    std::unordered_set<std::string> present;
    for (std::size_t i = 1; i < tokens.size(); ++i) present.insert(tokens[i - 1] + '\x1f' + tokens[i]);
    const auto offset = static_cast<std::uint32_t>(vocab.size());
    for (std::size_t b = 0; b < bigrams->pairs.size(); ++b) {
      const auto& [first, second] = bigrams->pairs[b];
      if (present.contains(first + '\x1f' + second)) acc[offset + static_cast<std::uint32_t>(b)] = 1.0;
    }
  }
  SparseVector out;
  out.reserve(acc.size());
  for (const auto& [i, v] : acc) out.push_back({i, v});
  return out;
}

// ---------------------------------------------------------------------------
// TF-IDF

IdfModel fit_tfidf(const TokenizedCorpus& docs, const Vocabulary& vocab) {
  if (docs.empty()) throw DataError("cannot fit idf on an empty corpus");
  std::vector<std::size_t> df(vocab.size(), 0);
  std::vector<std::size_t> last(vocab.size(), SIZE_MAX);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& tok : docs[d]) {
      if (auto idx = vocab.index(tok); idx && last[*idx] != d) {
        ++df[*idx];
        last[*idx] = d;
      }
    }
  }
  IdfModel model;
  model.n_docs = docs.size();
  model.idf.resize(vocab.size());
  const double n = static_cast<double>(docs.size());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    model.idf[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  return model;
}

SparseVector tfidf_vectorize(const Tokens& tokens, const Vocabulary& vocab, const IdfModel& idf) {
  SparseVector v = count_vectorize(tokens, vocab);
  for (auto& f : v) f.value *= idf.idf.at(f.index);
  const double norm = std::sqrt(squared_norm(v));
  if (norm > 0.0)
    for (auto& f : v) f.value /= norm;
  return v;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> tokens, std::vector<float> data)
    : dim_(dim), tokens_(std::move(tokens)), data_(std::move(data)) {
  if (dim_ == 0) throw DataError("embedding dimension must be >= 1");
  if (data_.size() != tokens_.size() * dim_) throw InvariantError("embedding data size mismatch");
  norms_.resize(tokens_.size());
  index_.reserve(tokens_.size());
  for (std::size_t r = 0; r < tokens_.size(); ++r) {
    double s = 0.0;
    for (float x : vector(r)) s += static_cast<double>(x) * x;
    norms_[r] = std::sqrt(s);
    index_.emplace(tokens_[r], r);
  }
}

std::optional<std::size_t> EmbeddingTable::row(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::size_t, double>> EmbeddingTable::neighbors(std::size_t row, std::size_t n, double tau) const {
  std::vector<std::pair<std::size_t, double>> found;
  if (n == 0 || norms_[row] == 0.0) return found;
  const auto query = vector(row);
  for (std::size_t r = 0; r < tokens_.size(); ++r) {
    if (r == row || norms_[r] == 0.0) continue;
    const auto other = vector(r);
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += static_cast<double>(query[i]) * other[i];
    const double cosine = s / (norms_[row] * norms_[r]);
    if (cosine >= tau) found.emplace_back(r, cosine);
  }
  auto better = [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return tokens_[a.first] < tokens_[b.first];
  };
  if (found.size() > n) {
    std::partial_sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(n), found.end(), better);
    found.resize(n);
  } else {
    std::sort(found.begin(), found.end(), better);
  }
  return found;
}

EmbeddingTable parse_embeddings(std::string_view content, const Vocabulary* restrict_to) {
  std::size_t dim = 0;
  std::vector<std::string> tokens;
  std::vector<float> data;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<std::string_view> fields;

  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    fields.clear();
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) fields.push_back(line.substr(i, j - i));
      i = j;
    }
    if (fields.empty()) continue;

    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, declared = 0;
      auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), count);
      auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), declared);
      if (r1.ec == std::errc() && r1.ptr == fields[0].data() + fields[0].size() && r2.ec == std::errc() &&
          r2.ptr == fields[1].data() + fields[1].size()) {
        if (declared == 0) throw DataError("embedding header declares dimension 0");
        dim = declared;
        continue;
      }
    }
    if (dim == 0) dim = fields.size() - 1;
    if (dim == 0 || fields.size() - 1 != dim)
      throw DataError(fmt::format("embedding line {}: expected {} values, got {}", line_no, dim, fields.size() - 1));

    std::string token(fields[0]);
    if (restrict_to && !restrict_to->contains(token)) continue;
    if (!seen.insert(token).second) continue;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      auto res = std::from_chars(fields[f].data(), fields[f].data() + fields[f].size(), v);
      if (res.ec != std::errc() || res.ptr != fields[f].data() + fields[f].size() || !std::isfinite(v))
        throw DataError(fmt::format("embedding line {}: bad value '{}'", line_no, fields[f]));
      data.push_back(static_cast<float>(v));
    }
    tokens.push_back(std::move(token));
  }
  if (tokens.empty()) throw DataError("no embedding rows loaded");
  return EmbeddingTable(dim, std::move(tokens), std::move(data));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary* restrict_to) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open embedding file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_embeddings(ss.str(), restrict_to);
}

DenseVector embed_average(const Tokens& tokens, const EmbeddingTable& table) {
  DenseVector out(table.dim(), 0.0);
  // Summing in row order makes the result exactly permutation-invariant.
  std::vector<std::size_t> rows;
  for (const auto& tok : tokens)
    if (auto r = table.row(tok)) rows.push_back(*r);
  if (rows.empty()) return out;
  std::sort(rows.begin(), rows.end());
  for (auto r : rows) {
    const auto v = table.vector(r);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  for (auto& x : out) x /= static_cast<double>(rows.size());
  return out;
}

Tokens expand_vocabulary(const Tokens& tokens, const EmbeddingTable& table, std::size_t n, double tau) {
  Tokens out = tokens;
  std::unordered_set<std::string> present(tokens.begin(), tokens.end());
  for (const auto& tok : tokens) {
    auto r = table.row(tok);
    if (!r) continue;
    for (const auto& [nb, sim] : table.neighbors(*r, n, tau)) {
      const auto& word = table.tokens()[nb];
      if (present.insert(word).second) out.push_back(word);
    }
  }
  return out;
}

}  // namespace desmine
