// Acceptance runner: one PASS / FAIL / SKIPPED line per criterion.
// Exits non-zero only when a criterion FAILs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "desmine/balance.hpp"
#include "desmine/classify.hpp"
#include "desmine/error.hpp"
#include "desmine/evaluate.hpp"
#include "desmine/protocol.hpp"
#include "desmine/rng.hpp"
#include "desmine/transfer.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace desmine;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skipped };

struct Verdict {
  Status status;
  std::string detail;
};

Verdict pass(std::string d) { return {Status::pass, std::move(d)}; }
Verdict fail(std::string d) { return {Status::fail, std::move(d)}; }
Verdict skipped(std::string d) { return {Status::skipped, std::move(d)}; }
Verdict check(bool ok, std::string d) { return {ok ? Status::pass : Status::fail, std::move(d)}; }

const std::vector<std::string> kSuiteFiles{"brunet2014.jsonl", "shakiba2016.jsonl", "viviani2018.jsonl", "satd.jsonl",
                                           "stackoverflow.jsonl"};
constexpr const char* kEmbeddings = "so-embeddings.txt";

std::optional<fs::path> data_file(const std::string& name) {
  const char* root = std::getenv("DESMINE_DATA_DIR");
  if (!root || !*root) return std::nullopt;
  const fs::path p = fs::path(root) / name;
  if (!fs::exists(p)) return std::nullopt;
  return p;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "desmine_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int invoke(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "desmine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

// ---------------------------------------------------------------------------
// 1-3: real data

std::optional<nlohmann::json> replicate_rows(std::string& error) {
  const auto brunet = data_file(kSuiteFiles[0]);
  if (!brunet) return std::nullopt;
  const auto dir = scratch("replicate");
  std::string err;
  if (invoke({"replicate", "brunet", "--data", brunet->string(), "--stratified", "--out", dir.string()}, nullptr,
             &err) != 0) {
    error = err;
    return nlohmann::json();
  }
  return nlohmann::json::parse(slurp(dir / "replicate.json"));
}

Verdict criterion1(const std::optional<nlohmann::json>& rows, const std::string& error) {
  if (!rows) return skipped("brunet2014.jsonl not found under $DESMINE_DATA_DIR");
  if (rows->is_null()) return fail("replicate failed: " + error);
  const auto& nb = (*rows)[0];
  const auto& dt = (*rows)[1];
  return check(nb["pass"].get<bool>() && dt["pass"].get<bool>(),
               fmt::format("NB accuracy {:.4f} (ref 0.862 ± 0.03), DT accuracy {:.4f} (ref 0.931 ± 0.03)",
                           nb["accuracy"].get<double>(), dt["accuracy"].get<double>()));
}

Verdict criterion2(const std::optional<nlohmann::json>& rows, const std::string& error) {
  if (!rows) return skipped("brunet2014.jsonl not found under $DESMINE_DATA_DIR");
  if (rows->is_null()) return fail("replicate failed: " + error);
  const double strict = (*rows)[1]["accuracy"].get<double>();
  const double strat = (*rows)[2]["accuracy"].get<double>();
  return check((*rows)[2]["pass"].get<bool>() && strat < strict,
               fmt::format("stratified DT accuracy {:.4f} (ref 0.876 ± 0.03), strict DT {:.4f}", strat, strict));
}

Verdict criterion3() {
  const auto brunet = data_file(kSuiteFiles[0]);
  if (!brunet) return skipped("brunet2014.jsonl not found under $DESMINE_DATA_DIR");
  const auto vectors = data_file(kEmbeddings);
  if (!vectors) return skipped("so-embeddings.txt not found under $DESMINE_DATA_DIR");
  const auto ds = load_jsonl(*brunet);
  auto nb = preset("newbest");
  nb.vectorizer.embeddings = vectors->string();
  const auto main = execute(nb, ds).report;
  const auto alt = execute(preset("newbest-alt"), ds).report;
  return check(std::abs(main.roc_auc - 0.84) <= 0.06,
               fmt::format("newbest AUC {:.4f} (ref 0.84 ± 0.06); newbest-alt AUC {:.4f}, accuracy {:.4f} (reported only)",
                           main.roc_auc, alt.roc_auc, alt.accuracy));
}

// ---------------------------------------------------------------------------
// 4-6: oracles

Verdict criterion4() {
  Rng rng(4);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = rng.uniform() < 0.5 ? static_cast<double>(rng.below(5)) / 4 : rng.uniform();
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(roc_auc(y, s) - testing::brute_force_auc(y, s)));
  }
  if (worst > 1e-12) return fail(fmt::format("AUC deviates from brute force by {:.3g}", worst));

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<int> y(n), p(n);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      p[i] = static_cast<int>(rng.below(2));
      tp += y[i] && p[i];
      fp += !y[i] && p[i];
      tn += !y[i] && !p[i];
      fn += y[i] && !p[i];
    }
    const auto cm = confusion(y, p);
    const auto r = metrics(cm);
    const bool ok = cm == ConfusionMatrix{tp, fp, tn, fn} &&
                    r.accuracy == static_cast<double>(tp + tn) / static_cast<double>(n) &&
                    (tp + fp == 0 || r.precision == static_cast<double>(tp) / static_cast<double>(tp + fp)) &&
                    (tp + fn == 0 || r.recall == static_cast<double>(tp) / static_cast<double>(tp + fn));
    if (!ok) return fail(fmt::format("metrics disagree with a recount on trial {}", trial));
  }

  const auto z = zeror_baseline(0.14);
  const bool exact = z.accuracy == 0.86 && z.precision == 0.86 && z.recall == 1.0 && z.balanced_accuracy == 0.5 &&
                     std::abs(z.f1 - 86.0 / 93.0) <= 1e-15;
  return check(exact && std::abs(z.f1 - 0.93) <= 0.01,
               fmt::format("1000 AUC instances within {:.2g}; 1000 recounts; zeror(0.14) = ({}, {}, {}, {:.4f}, {})",
                           worst, z.accuracy, z.precision, z.recall, z.f1, z.balanced_accuracy));
}

Verdict criterion5() {
  Rng rng(5);
  FeatureMatrix X;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
  double nb_worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    testing::random_counts(rng, 16, 8, 3, X, y, dense);
    ClassifierSpec spec;
    spec.algorithm = Algorithm::naive_bayes;
    spec.laplace_alpha = 0.25 + rng.uniform() * 2;
    const auto m = fit(spec, X, y);
    for (int probe = 0; probe < 5; ++probe) {
      std::vector<double> x(X.dim);
      for (auto& v : x) v = static_cast<double>(rng.below(4));
      nb_worst = std::max(nb_worst, std::abs(predict_score(m, to_sparse(x)) -
                                             testing::brute_force_nb(dense, y, spec.laplace_alpha, x)));
    }
  }
  if (nb_worst > 1e-12) return fail(fmt::format("NB deviates from brute-force Bayes by {:.3g}", nb_worst));

  for (int trial = 0; trial < 2000; ++trial) {
    testing::random_counts(rng, 12, 3, 3, X, y, dense);
    ClassifierSpec spec;
    spec.algorithm = Algorithm::decision_tree;
    if (rng.uniform() < 0.3) spec.max_depth = 1 + rng.below(3);
    spec.min_samples_split = 2 + rng.below(3);
    const auto m = fit(spec, X, y);
    std::vector<std::size_t> idx(dense.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto oracle = testing::oracle_tree(dense, y, idx, 0, spec);
    for (int probe = 0; probe < 10; ++probe) {
      std::vector<double> x(X.dim);
      for (auto& v : x) v = static_cast<double>(rng.below(5));
      if (predict_score(m, to_sparse(x)) != oracle->predict(x))
        return fail(fmt::format("tree differs from exhaustive search on trial {}", trial));
    }
  }

  const double h = 1e-5;
  double lr_worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(10), dim = 1 + rng.below(5);
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = rng.uniform() < 0.3 ? 0.0 : 4 * rng.uniform() - 2;
      labels[i] = static_cast<int>(rng.below(2));
    }
    const auto M = testing::dense_matrix(rows, dim);
    std::vector<double> w(dim);
    for (auto& v : w) v = 2 * rng.uniform() - 1;
    const double b = 2 * rng.uniform() - 1;
    const double l2 = rng.uniform() < 0.5 ? 1e-4 : rng.uniform();
    const auto analytic = logistic_gradient(M, labels, w, b, l2);
    std::vector<double> numeric(dim + 1), diff(dim + 1);
    for (std::size_t j = 0; j <= dim; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < dim) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      numeric[j] = (logistic_objective(M, labels, wp, bp, l2) - logistic_objective(M, labels, wm, bm, l2)) / (2 * h);
      diff[j] = analytic[j] - numeric[j];
    }
    lr_worst = std::max(lr_worst, testing::norm(diff) /
                                      std::max(1e-12, testing::norm(analytic) + testing::norm(numeric)));
  }
  return check(lr_worst <= 1e-6,
               fmt::format("NB within {:.2g} on 500 fixtures; DT equal to exhaustive search on 2000 fixtures; "
                           "LR gradient relative error {:.2g} on 100 instances",
                           nb_worst, lr_worst));
}

Verdict criterion6() {
  Rng rng(6);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    const std::size_t pos = k + rng.below(40), neg = k + rng.below(80);
    std::vector<int> y(pos, 1);
    y.insert(y.end(), neg, 0);
    rng.shuffle(std::span(y));
    const auto a = stratified_folds(y, k, rng.next());
    std::vector<std::size_t> count[2] = {std::vector<std::size_t>(k), std::vector<std::size_t>(k)};
    for (std::size_t i = 0; i < y.size(); ++i) ++count[y[i]][a.fold[i]];
    for (int c = 0; c < 2; ++c) {
      const double expected = std::round(static_cast<double>(c ? pos : neg) / static_cast<double>(k));
      for (std::size_t f = 0; f < k; ++f)
        if (std::abs(static_cast<double>(count[c][f]) - expected) > 1.0)
          return fail(fmt::format("stratification trial {} violates the ±1 bound", trial));
    }
  }

  if (smote_deficit(224, 776, 1.0) != 552) return fail("224 vs 776 does not give 552 synthetic rows");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t pos = 2 + rng.below(15), neg = pos + rng.below(30), dim = 1 + rng.below(5);
    FeatureMatrix X;
    X.dim = dim;
    for (std::size_t i = 0; i < pos + neg; ++i) {
      std::vector<double> row(dim, 0.0);
      for (auto& v : row)
        if (rng.uniform() < 0.6) v = static_cast<double>(rng.below(7)) - 3.0;
      X.rows.push_back(to_sparse(row));
    }
    std::vector<int> y(pos, 1);
    y.insert(y.end(), neg, 0);
    rng.shuffle(std::span(y));
    const double ratio = 0.2 + 0.8 * rng.uniform();
    const SmoteParams p{1 + rng.below(6), ratio, rng.next()};
    const auto r = smote(X, y, p);
    const auto deficit = smote_deficit(pos, neg, ratio);
    if (r.features.size() != X.size() + deficit || r.origins.size() != deficit)
      return fail(fmt::format("SMOTE trial {} produced the wrong count", trial));
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == 1) minority.push_back(i);
    const std::size_t k = std::min(p.k_neighbors, pos - 1);
    for (std::size_t s = 0; s < deficit; ++s) {
      const auto& o = r.origins[s];
      const auto a = static_cast<std::size_t>(std::find(minority.begin(), minority.end(), o.base) - minority.begin());
      const auto nn = testing::minority_neighbours(X, minority, a, k);
      if (y[o.base] != 1 || std::find(nn.begin(), nn.end(), o.neighbor) == nn.end() || o.u < 0.0 || o.u >= 1.0)
        return fail(fmt::format("SMOTE trial {} used a non-neighbour", trial));
      const auto base = to_dense(X.rows[o.base], dim), nb = to_dense(X.rows[o.neighbor], dim);
      const auto got = to_dense(r.features.rows[X.size() + s], dim);
      for (std::size_t d = 0; d < dim; ++d)
        if (std::abs(got[d] - (base[d] + o.u * (nb[d] - base[d]))) > 1e-12 ||
            got[d] < std::min(base[d], nb[d]) || got[d] > std::max(base[d], nb[d]))
          return fail(fmt::format("SMOTE trial {} produced a non-convex point", trial));
    }
  }
  return pass("10000 stratification trials within ±1; 1000 SMOTE trials convex with exact counts; 224/776 -> 552");
}

// ---------------------------------------------------------------------------
// 7-8: suite and document vectors

Verdict criterion7() {
  std::vector<Dataset> datasets;
  for (const auto& f : kSuiteFiles)
    if (const auto p = data_file(f)) datasets.push_back(load_jsonl(*p));
  auto spec = preset("newbest");
  std::string source;
  const auto vectors = data_file(kEmbeddings);
  if (datasets.size() >= 2 && vectors) {
    spec.vectorizer.embeddings = vectors->string();
    source = fmt::format("{} real datasets", datasets.size());
  } else {
    auto suite = testing::make_suite(2019);
    datasets = std::move(suite.datasets);
    const auto path = scratch("suite") / "vectors.txt";
    std::ofstream(path) << suite.embeddings;
    spec.vectorizer.embeddings = path.string();
    source = "generated surrogate suite (fewer than 2 real datasets or no embeddings file)";
  }
  const auto m = transfer_matrix(datasets, spec, spec.seed);
  double diag = 0, off = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) (i == j ? diag : off) += m.cell(i, j).roc_auc;
  const auto n = static_cast<double>(m.size());
  diag /= n;
  off /= n * (n - 1);
  return check(diag - off >= 0.05, fmt::format("{}x{} on {}: mean diagonal AUC {:.4f}, off-diagonal {:.4f}, gap {:.4f}",
                                               m.size(), m.size(), source, diag, off, diag - off));
}

Dataset balanced_sample(const Dataset& full, std::size_t per_class, std::uint64_t seed) {
  std::vector<Discussion> pos, neg;
  for (const auto& d : full.discussions()) (d.is_design() ? pos : neg).push_back(d);
  if (pos.size() < per_class || neg.size() < per_class)
    throw DataError(fmt::format("need {} discussions per class, have {} design and {} non-design", per_class,
                                pos.size(), neg.size()));
  Rng rng(seed);
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));
  std::vector<Discussion> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(per_class));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(per_class));
  return Dataset(full.name(), std::move(out));
}

Verdict criterion8() {
  std::optional<Dataset> full;
  std::string source;
  if (const auto p = data_file("stackoverflow.jsonl")) {
    full = load_jsonl(*p);
    source = "stackoverflow.jsonl";
  } else {
    auto shape = testing::suite_shapes()[4];
    shape.size = 5000;
    shape.prevalence = 0.5;
    full = testing::make_corpus(shape, 4, 808);
    source = "generated surrogate corpus (stackoverflow.jsonl not found)";
  }
  const auto sample = balanced_sample(*full, 2000, 42);

  ProtocolSpec spec;
  spec.name = "docvec-holdout";
  spec.preprocess.stopword_set = StopwordSet::english;
  spec.vectorizer.kind = VectorizerKind::docvec;
  spec.classifier.algorithm = Algorithm::logistic_regression;
  spec.balance.stratify = true;
  spec.validation.kind = ValidationKind::holdout;
  spec.validation.train = 0.8;
  spec.validation.validation = 0.0;
  spec.validation.test = 0.2;

  std::vector<std::string> parts;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    spec.seed = seed;
    spec.classifier.seed = seed;
    spec.vectorizer.docvec.seed = seed;
    const auto r = execute(spec, sample).report;
    ok = ok && r.accuracy >= 0.65;
    parts.push_back(fmt::format("seed {}: {:.4f}", seed, r.accuracy));
  }
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : ", ") + p;
  return check(ok, fmt::format("balanced 4000-document sample of {}, 80/20 stratified holdout, held-out accuracy {}",
                               source, joined));
}

// ---------------------------------------------------------------------------
// 9: determinism

Verdict criterion9() {
  const auto inputs = scratch("inputs");
  auto suite = testing::make_suite(9, 0.2);
  std::vector<std::string> data;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto p = inputs / (suite.datasets[i].name() + ".jsonl");
    save_jsonl(suite.datasets[i], p);
    data.push_back(p.string());
  }
  const auto protocol = (inputs / "fast.json").string();
  std::ofstream(protocol) << R"({"desmine_protocol": 1, "name": "fast", "seed": 7, "vectorizer": "tfidf",
    "balance": {"stratify": true, "smote": {}}, "classifier": "logistic_regression",
    "validation": {"type": "kfold", "k": 3}})";
  const auto grid = (inputs / "grid.json").string();
  std::ofstream(grid) << R"(["zeror", "naive_bayes", "decision_tree"])";

  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"stats", {"stats", "--data", data[0], "--json"}},
      {"run", {"run", "--protocol", protocol, "--data", data[0]}},
      {"replicate", {"replicate", "brunet", "--data", data[0], "--stratified"}},
      {"crossdataset", {"crossdataset", "--protocol", protocol, "--data", data[0], "--data", data[1], "--k", "3"}},
      {"train-docvec", {"train-docvec", "--data", data[0], "--dim", "16", "--epochs", "3", "--seed", "5"}},
      {"gridsearch", {"gridsearch", "--protocol", protocol, "--data", data[0], "--grid", grid, "--k", "3"}},
      {"render", {"render", "--protocol", "newbest"}},
  };
  std::size_t files = 0;
  for (const auto& [name, args] : commands) {
    std::map<std::string, std::string> outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = scratch(name + "-" + std::to_string(rep));
      auto full = args;
      full.push_back("--out");
      full.push_back(dir.string());
      std::string err;
      if (invoke(full, nullptr, &err) != 0) return fail(fmt::format("{} failed: {}", name, err));
      for (const auto& e : fs::directory_iterator(dir)) outputs[rep][e.path().filename().string()] = slurp(e.path());
    }
    if (outputs[0].empty()) return fail(name + " wrote no files");
    if (outputs[0] != outputs[1]) return fail(name + " output differs between identical runs");
    files += outputs[0].size();
  }
  return pass(fmt::format("7 subcommands run twice, {} output files byte-identical", files));
}

}  // namespace

int main() {
  std::string replicate_error;
  std::optional<nlohmann::json> rows;
  bool failed = false;

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"strict replication",
       [&] {
         rows = replicate_rows(replicate_error);
         return criterion1(rows, replicate_error);
       }},
      {"stratification effect", [&] { return criterion2(rows, replicate_error); }},
      {"newbest on brunet", criterion3},
      {"metric oracles", criterion4},
      {"classifier oracles", criterion5},
      {"balance properties", criterion6},
      {"conclusion stability", criterion7},
      {"document vectors at desk scale", criterion8},
      {"determinism", criterion9},
  };
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* label = v.status == Status::pass ? "PASS" : v.status == Status::fail ? "FAIL" : "SKIPPED";
    failed = failed || v.status == Status::fail;
    std::cout << fmt::format("criterion {} ({}): {} - {} [{:.1f}s]", i + 1, criteria[i].first, label, v.detail, secs)
              << std::endl;
  }
  return failed ? 1 : 0;
}
