#include "desmine/docvec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "desmine/error.hpp"
#include "desmine/rng.hpp"

namespace desmine {

namespace {

constexpr std::string_view kMagic = "DESMINE-DV1\n";

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// Cumulative unigram^0.75 distribution for negative sampling.
class NoiseSampler {
 public:
  explicit NoiseSampler(const std::vector<std::uint64_t>& counts) {
    cumulative_.reserve(counts.size());
    double total = 0.0;
    for (auto c : counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(total);
    }
    for (auto& c : cumulative_) c /= total;
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

// One PV-DBOW step: the document vector predicts `target` against
// `negative` noise words. Returns the step loss.
// `trainable` is null during inference, when the word weights are frozen.
double dbow_step(std::span<double> doc, const double* weights, double* trainable, std::size_t target,
                 std::size_t negative, const NoiseSampler& noise, Rng& rng, double lr, std::vector<double>& grad) {
  const std::size_t dim = doc.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t s = 0; s <= negative; ++s) {
    std::size_t word = target;
    double label = 1.0;
    if (s > 0) {
      word = noise.sample(rng);
      if (word == target) continue;
      label = 0.0;
    }
    const double* w = weights + word * dim;
    double f = 0.0;
    for (std::size_t i = 0; i < dim; ++i) f += doc[i] * w[i];
    loss -= label > 0 ? log_sigmoid(f) : log_sigmoid(-f);
    const double g = (label - sigmoid(f)) * lr;
    for (std::size_t i = 0; i < dim; ++i) grad[i] += g * w[i];
    if (trainable) {
      double* wt = trainable + word * dim;
      for (std::size_t i = 0; i < dim; ++i) wt[i] += g * doc[i];
    }
  }
  for (std::size_t i = 0; i < dim; ++i) doc[i] += grad[i];
  return loss;
}

std::vector<std::vector<std::size_t>> encode(const TokenizedCorpus& docs, const Vocabulary& vocab) {
  std::vector<std::vector<std::size_t>> out(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (const auto& tok : docs[d])
      if (auto idx = vocab.index(tok)) out[d].push_back(*idx);
  return out;
}

void init_vector(std::span<double> v, Rng& rng) {
  for (auto& x : v) x = (rng.uniform() - 0.5) / static_cast<double>(v.size());
}

// Little-endian binary writer/reader for the model file.
class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  void raw(std::string_view s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s(in_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw DataError("truncated docvec model file");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void DocVecParams::validate() const {
  if (dim < 1) throw DataError("docvec dim must be >= 1");
  if (epochs < 1) throw DataError("docvec epochs must be >= 1");
  if (!(final_lr > 0.0) || !(initial_lr > final_lr))
    throw DataError(fmt::format("docvec learning rates must satisfy initial_lr > final_lr > 0 (got {} and {})",
                                initial_lr, final_lr));
}

DenseVector DocVecModel::doc_vector(std::size_t doc) const {
  const auto* p = doc_vectors.data() + doc * params.dim;
  return DenseVector(p, p + params.dim);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

DocVecModel train_docvec(const TokenizedCorpus& docs, const DocVecParams& params, const std::vector<std::string>& ids) {
  params.validate();
  if (docs.empty()) throw DataError("cannot train document vectors on an empty corpus");

  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs)
    for (const auto& tok : doc) ++counts[tok];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, c] : counts)
    if (c >= params.min_count) kept.emplace_back(tok, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  DocVecModel model;
  model.params = params;
  std::vector<std::string> tokens;
  for (auto& [tok, c] : kept) {
    tokens.push_back(tok);
    model.word_counts.push_back(c);
  }
  model.vocab = Vocabulary(std::move(tokens), 1, std::nullopt);

  const auto encoded = encode(docs, model.vocab);
  std::size_t tokens_per_epoch = 0;
  for (std::size_t d = 0; d < encoded.size(); ++d) {
    if (encoded[d].empty()) {
      const std::string name = d < ids.size() ? ids[d] : std::to_string(d);
      throw DataError(fmt::format("document '{}' has no tokens with frequency >= min_count={}", name, params.min_count));
    }
    tokens_per_epoch += encoded[d].size();
  }

  const std::size_t dim = params.dim;
  Rng rng(params.seed);
  model.doc_vectors.resize(docs.size() * dim);
  for (std::size_t d = 0; d < docs.size(); ++d) init_vector({model.doc_vectors.data() + d * dim, dim}, rng);
  model.word_weights.assign(model.vocab.size() * dim, 0.0);

  const NoiseSampler noise(model.word_counts);
  const double total_steps = static_cast<double>(tokens_per_epoch * params.epochs);
  std::vector<double> grad(dim);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    double loss = 0.0;
    for (std::size_t d = 0; d < encoded.size(); ++d) {
      std::span<double> doc(model.doc_vectors.data() + d * dim, dim);
      for (auto word : encoded[d]) {
        const double lr =
            params.initial_lr - (params.initial_lr - params.final_lr) * (static_cast<double>(step) / total_steps);
        loss += dbow_step(doc, model.word_weights.data(), model.word_weights.data(), word, params.negative, noise, rng, lr, grad);
        ++step;
      }
    }
    model.epoch_loss.push_back(loss / static_cast<double>(tokens_per_epoch));
  }
  return model;
}

InferredVector infer_docvec(const DocVecModel& model, const Tokens& tokens, std::size_t steps, std::uint64_t seed) {
  if (steps < 1) throw DataError("docvec inference steps must be >= 1");
  const std::size_t dim = model.params.dim;
  InferredVector result;
  result.vector.resize(dim);
  Rng rng(seed);
  init_vector(result.vector, rng);

  std::vector<std::size_t> words;
  for (const auto& tok : tokens)
    if (auto idx = model.vocab.index(tok)) words.push_back(*idx);
  if (words.empty()) {
    result.all_oov = true;
    return result;
  }

  const NoiseSampler noise(model.word_counts);
  std::vector<double> grad(dim);
  const double total = static_cast<double>(steps * words.size());
  const auto& p = model.params;
  std::size_t step = 0;
  for (std::size_t pass = 0; pass < steps; ++pass) {
    for (auto word : words) {
      const double lr = p.initial_lr - (p.initial_lr - p.final_lr) * (static_cast<double>(step) / total);
      dbow_step(result.vector, model.word_weights.data(), nullptr, word, p.negative, noise, rng, lr, grad);
      ++step;
    }
  }
  return result;
}

std::string serialize_docvec(const DocVecModel& model) {
  Writer w;
  w.raw(kMagic);
  const auto& p = model.params;
  w.u64(p.dim);
  w.u64(p.epochs);
  w.u64(p.negative);
  w.f64(p.initial_lr);
  w.f64(p.final_lr);
  w.u64(p.min_count);
  w.u64(p.seed);
  w.u64(model.vocab.size());
  for (std::size_t i = 0; i < model.vocab.size(); ++i) {
    w.str(model.vocab.tokens()[i]);
    w.u64(model.word_counts[i]);
  }
  w.u64(model.n_docs());
  for (double x : model.doc_vectors) w.f64(x);
  for (double x : model.word_weights) w.f64(x);
  w.u64(model.epoch_loss.size());
  for (double x : model.epoch_loss) w.f64(x);
  return w.take();
}

DocVecModel deserialize_docvec(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || r.raw(kMagic.size()) != kMagic)
    throw DataError("not a DESMINE-DV1 document vector model");
  DocVecModel m;
  auto& p = m.params;
  p.dim = r.u64();
  p.epochs = r.u64();
  p.negative = r.u64();
  p.initial_lr = r.f64();
  p.final_lr = r.f64();
  p.min_count = r.u64();
  p.seed = r.u64();
  p.validate();
  const auto vocab_size = r.u64();
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    tokens.push_back(r.str());
    m.word_counts.push_back(r.u64());
  }
  m.vocab = Vocabulary(std::move(tokens), 1, std::nullopt);
  const auto n_docs = r.u64();
  m.doc_vectors.resize(n_docs * p.dim);
  for (auto& x : m.doc_vectors) x = r.f64();
  m.word_weights.resize(vocab_size * p.dim);
  for (auto& x : m.word_weights) x = r.f64();
  m.epoch_loss.resize(r.u64());
  for (auto& x : m.epoch_loss) x = r.f64();
  if (!r.done()) throw DataError("trailing bytes in docvec model file");
  return m;
}

void save_docvec(const DocVecModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  const auto bytes = serialize_docvec(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

DocVecModel load_docvec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_docvec(ss.str());
}

}  // namespace desmine
