#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "desmine/classify.hpp"
#include "desmine/corpus.hpp"
#include "desmine/docvec.hpp"
#include "desmine/error.hpp"
#include "desmine/evaluate.hpp"
#include "desmine/protocol.hpp"
#include "desmine/transfer.hpp"
#include "embedded_data.hpp"

namespace desmine::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::unique_ptr<CLI::App> build_cli(Options& o) {
  auto app = std::make_unique<CLI::App>("Design-discussion mining workbench", "desmine");
  app->require_subcommand(1);
  app->set_version_flag("--version", std::string(version_string()));

  auto seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed for every random choice; overrides the protocol seed");
  };
  auto data_flags = [&](CLI::App* sub, bool many) {
    if (many)
      sub->add_option("--data", o.data, "Dataset file (repeat for several datasets)")->required();
    else
      sub->add_option("--data", o.data, "Dataset file (.jsonl or .csv)")->expected(1);
    sub->add_option("--format", o.format, "Dataset format; inferred from the extension when omitted")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    sub->add_option("--text-col", o.text_col, "CSV text column")->capture_default_str();
    sub->add_option("--label-col", o.label_col, "CSV label column")->capture_default_str();
    sub->add_option("--id-col", o.id_col, "CSV id column; row numbers are used when absent")->capture_default_str();
  };

  auto* stats = app->add_subcommand("stats", "Corpus statistics: total, design, mean length, vocabulary size");
  data_flags(stats, false);
  stats->get_option("--data")->required();
  stats->add_flag("--json", o.json, "Print JSON instead of a table");
  stats->add_option("--out", o.out, "Also write stats.json into this directory");
  seed(stats);

  auto* run = app->add_subcommand("run", "Execute a protocol on one dataset");
  run->add_option("--protocol", o.protocol, "Preset name or protocol JSON file")->required();
  data_flags(run, false);
  run->get_option("--data")->required();
  run->add_option("--out", o.out, "Output directory for result.json and protocol.dot")->required();
  run->add_flag("--stamp", o.stamp, "Record a wall-clock timestamp in result.json");
  seed(run);

  auto* rep = app->add_subcommand("replicate", "Rerun the Brunet protocol and compare with reference values");
  rep->add_option("target", o.target, "What to replicate")->required()->check(CLI::IsMember({"brunet"}));
  data_flags(rep, false);
  rep->add_flag("--stratified", o.stratified, "Add the stratified decision-tree row");
  rep->add_option("--out", o.out, "Also write replicate.json into this directory");
  seed(rep);

  auto* cross = app->add_subcommand("crossdataset", "Train on each dataset, test on every other");
  cross->add_option("--protocol", o.protocol, "Preset name or protocol JSON file")->required();
  data_flags(cross, true);
  cross->add_option("--out", o.out, "Output directory for matrix.csv, matrix.json and heatmap.svg")->required();
  cross->add_option("--external", o.external, "Predictions CSV (model,dataset,id,score) added as extra rows");
  cross->add_option("--metric", o.metric, "Metric shown in the CSV and heat map")
      ->capture_default_str()
      ->check(CLI::IsMember({"accuracy", "precision", "recall", "f1", "balanced_accuracy", "roc_auc"}));
  cross->add_option("--diagonal", o.diagonal, "Diagonal cells: cv_within or train_test_same")
      ->capture_default_str()
      ->check(CLI::IsMember({"cv_within", "train_test_same"}));
  cross->add_option("--k", o.k, "Folds for cv_within diagonal cells")->capture_default_str();
  seed(cross);

  auto* dv = app->add_subcommand("train-docvec", "Train document vectors and save the model");
  data_flags(dv, false);
  dv->get_option("--data")->required();
  dv->add_option("--out", o.out, "Output directory for docvec.bin and docvec.json")->required();
  dv->add_option("--stopwords", o.stopwords, "Stopword set: none, english, english_plus_domain")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "english", "english_plus_domain"}));
  dv->add_option("--dim", o.dim, "Vector size")->capture_default_str();
  dv->add_option("--epochs", o.epochs, "Training passes")->capture_default_str();
  dv->add_option("--negative", o.negative, "Negative samples per token")->capture_default_str();
  dv->add_option("--min-count", o.min_count, "Token frequency floor")->capture_default_str();
  dv->add_option("--initial-lr", o.initial_lr, "Starting learning rate")->capture_default_str();
  dv->add_option("--final-lr", o.final_lr, "Final learning rate")->capture_default_str();
  seed(dv);

  auto* grid = app->add_subcommand("gridsearch", "Pick the best classifier from a grid by stratified CV");
  grid->add_option("--protocol", o.protocol, "Preset name or protocol JSON file for the other stages")->required();
  data_flags(grid, false);
  grid->get_option("--data")->required();
  grid->add_option("--grid", o.grid, "JSON list of classifier specs")->required();
  grid->add_option("--out", o.out, "Output directory for gridsearch.json")->required();
  grid->add_option("--metric", o.metric, "Selection metric")
      ->capture_default_str()
      ->check(CLI::IsMember({"accuracy", "precision", "recall", "f1", "balanced_accuracy", "roc_auc"}));
  grid->add_option("--k", o.k, "Folds")->capture_default_str();
  seed(grid);

  auto* render = app->add_subcommand("render", "Render a protocol as a DOT graph and resolved JSON");
  render->add_option("--protocol", o.protocol, "Preset name or protocol JSON file")->required();
  render->add_option("--out", o.out, "Output directory for protocol.dot and protocol.json; stdout when omitted");
  seed(render);

  return app;
}

namespace {

fs::path existing_or_data_dir(const std::string& path) {
  if (fs::exists(path)) return path;
  return resolve_data_path(path);
}

Dataset load_dataset(const std::string& path, const Options& o) {
  const fs::path p = existing_or_data_dir(path);
  if (!fs::exists(p)) throw DataError(fmt::format("dataset file '{}' not found", path));
  const std::string format = o.format.empty() ? (p.extension() == ".csv" ? "csv" : "jsonl") : o.format;
  if (format == "csv") return load_csv(p, CsvColumns{o.text_col, o.label_col, o.id_col});
  return load_jsonl(p);
}

ProtocolSpec load_spec(const Options& o) {
  ProtocolSpec spec = load_protocol(o.protocol);
  if (o.seed) {
    spec.seed = *o.seed;
    spec.classifier.seed = *o.seed;
    spec.vectorizer.docvec.seed = *o.seed;
    if (spec.balance.smote) spec.balance.smote->seed = *o.seed;
  }
  return spec;
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory '{}': {}", o.out, ec.message()));
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot write '{}'", path.string()));
  f << text;
  if (!f) throw DataError(fmt::format("cannot write '{}'", path.string()));
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const auto ds = load_dataset(o.data.at(0), o);
  const auto s = stats(ds, CleanOptions{});
  ordered_json j;
  j["dataset"] = ds.name();
  j["total"] = s.total;
  j["design"] = s.design;
  j["prevalence"] = ds.prevalence();
  j["mean_length"] = s.mean_length;
  j["vocab_size"] = s.vocab_size;
  if (o.json) {
    out << j.dump(2) << "\n";
  } else {
    out << fmt::format("{:<20} {:>8} {:>8} {:>11} {:>12} {:>11}\n", "dataset", "total", "design", "prevalence",
                       "mean_length", "vocab_size");
    out << fmt::format("{:<20} {:>8} {:>8} {:>11.4f} {:>12.2f} {:>11}\n", ds.name(), s.total, s.design,
                       ds.prevalence(), s.mean_length, s.vocab_size);
  }
  if (!o.out.empty()) write_file(out_dir(o) / "stats.json", j.dump(2) + "\n");
  return 0;
}

void print_summary(const EvalReport& r, const ProtocolSpec& spec, std::ostream& out) {
  out << render_table(r);
  if (spec.validation.kind == ValidationKind::kfold)
    out << fmt::format("mean roc_auc over {} folds: {:.4f}\n", spec.validation.k, r.roc_auc);
  else
    out << fmt::format("held-out test roc_auc: {:.4f}\n", r.roc_auc);
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  const auto spec = load_spec(o);
  const auto ds = load_dataset(o.data.at(0), o);
  auto result = execute(spec, ds);
  if (o.stamp) result.provenance.timestamp = utc_now();
  const auto dir = out_dir(o);
  write_file(dir / "result.json", to_json(result).dump(2) + "\n");
  write_file(dir / "protocol.dot", render_dot(result.spec));
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << fmt::format("protocol {} on {} (seed {})\n", spec.name, ds.name(), spec.seed);
  print_summary(result.report, spec, out);
  return 0;
}

int cmd_replicate(const Options& o, std::ostream& out) {
  const std::string path = o.data.empty() ? std::string("brunet2014.jsonl") : o.data.front();
  const fs::path resolved = existing_or_data_dir(path);
  if (!fs::exists(resolved))
    throw DataError(fmt::format(
        "brunet dataset '{}' not found. Obtain the 1,000 labeled pull-request discussions of the brunet corpus, "
        "convert them to JSONL (id, text, label, source) and pass --data or place them in $DESMINE_DATA_DIR.",
        path));
  const auto ds = load_dataset(resolved.string(), o);
  const auto refs = nlohmann::json::parse(embedded::references_json());

  struct Row {
    std::string preset, reference_key;
    Algorithm algorithm;
  };
  std::vector<Row> rows{{"brunet-strict", "brunet_strict_naive_bayes_accuracy", Algorithm::naive_bayes},
                        {"brunet-strict", "brunet_strict_decision_tree_accuracy", Algorithm::decision_tree}};
  if (o.stratified)
    rows.push_back({"brunet-stratified", "brunet_stratified_decision_tree_accuracy", Algorithm::decision_tree});

  ordered_json j = ordered_json::array();
  out << fmt::format("{:<18} {:<14} {:>9} {:>10} {:>9}  {}\n", "protocol", "classifier", "accuracy", "reference",
                     "delta", "status");
  for (const auto& row : rows) {
    Options local = o;
    local.protocol = row.preset;
    auto spec = load_spec(local);
    spec.classifier.algorithm = row.algorithm;
    const auto report = execute(spec, ds).report;
    const double ref = refs.at("values").at(row.reference_key).get<double>();
    const double tol = refs.at("tolerances").at(row.reference_key).get<double>();
    const double delta = report.accuracy - ref;
    const bool pass = std::abs(delta) <= tol;
    out << fmt::format("{:<18} {:<14} {:>9.4f} {:>10.3f} {:>+9.4f}  {}\n", row.preset, to_string(row.algorithm),
                       report.accuracy, ref, delta, pass ? "PASS" : "FAIL");
    ordered_json r;
    r["protocol"] = row.preset;
    r["classifier"] = std::string(to_string(row.algorithm));
    r["accuracy"] = report.accuracy;
    r["reference"] = ref;
    r["tolerance"] = tol;
    r["delta"] = delta;
    r["pass"] = pass;
    r["report"] = to_json(report);
    j.push_back(r);
  }
  if (!o.out.empty()) write_file(out_dir(o) / "replicate.json", j.dump(2) + "\n");
  return 0;
}

int cmd_crossdataset(const Options& o, std::ostream& out) {
  if (o.data.size() < 2)
    throw UsageError(fmt::format("crossdataset needs at least 2 --data files, got {}", o.data.size()));
  const auto spec = load_spec(o);
  std::vector<Dataset> datasets;
  for (const auto& p : o.data) datasets.push_back(load_dataset(p, o));
  TransferOptions topts;
  topts.diagonal_mode = parse_diagonal_mode(o.diagonal);
  topts.k = o.k;
  auto matrix = transfer_matrix(datasets, spec, spec.seed, topts);
  if (!o.external.empty())
    for (const auto& preds : ingest_predictions(existing_or_data_dir(o.external), datasets))
      add_external(matrix, datasets, preds);

  const Metric metric = parse_metric(o.metric);
  const auto dir = out_dir(o);
  write_csv(matrix, metric, dir / "matrix.csv");
  write_heatmap(matrix, metric, dir / "heatmap.svg");

  ordered_json j;
  j["protocol"] = to_json(spec);
  j["seed"] = spec.seed;
  j["diagonal_mode"] = std::string(to_string(matrix.diagonal_mode));
  j["datasets"] = matrix.datasets;
  ordered_json cells = ordered_json::array();
  for (std::size_t i = 0; i < matrix.size(); ++i)
    for (std::size_t k = 0; k < matrix.size(); ++k)
      cells.push_back({{"train", matrix.datasets[i]}, {"test", matrix.datasets[k]}, {"report", to_json(matrix.cell(i, k))}});
  j["cells"] = cells;
  ordered_json ext = ordered_json::array();
  for (const auto& row : matrix.external) {
    ordered_json r;
    r["model"] = row.model;
    ordered_json rc = ordered_json::array();
    for (std::size_t k = 0; k < row.cells.size(); ++k)
      rc.push_back({{"test", matrix.datasets[k]},
                    {"report", row.cells[k] ? to_json(*row.cells[k]) : ordered_json(nullptr)}});
    r["cells"] = rc;
    ext.push_back(r);
  }
  j["external"] = ext;
  write_file(dir / "matrix.json", j.dump(2) + "\n");
  out << export_csv(matrix, metric);
  return 0;
}

int cmd_train_docvec(const Options& o, std::ostream& out) {
  const auto ds = load_dataset(o.data.at(0), o);
  CleanOptions clean_opts;
  clean_opts.stopword_set = parse_stopword_set(o.stopwords);
  const StopwordFilter filter(clean_opts);
  TokenizedCorpus docs;
  std::vector<std::string> ids;
  for (const auto& d : ds.discussions()) {
    docs.push_back(remove_stopwords(tokenize(clean(d.text, clean_opts)), filter));
    ids.push_back(d.id);
  }
  DocVecParams p;
  p.dim = o.dim;
  p.epochs = o.epochs;
  p.negative = o.negative;
  p.min_count = o.min_count;
  p.initial_lr = o.initial_lr;
  p.final_lr = o.final_lr;
  p.seed = o.seed.value_or(0);
  p.validate();
  const auto model = train_docvec(docs, p, ids);
  const auto dir = out_dir(o);
  save_docvec(model, dir / "docvec.bin");
  ordered_json j;
  j["dataset"] = ds.name();
  j["documents"] = model.n_docs();
  j["vocab_size"] = model.vocab.size();
  j["params"] = {{"dim", p.dim},           {"epochs", p.epochs},         {"negative", p.negative},
                 {"min_count", p.min_count}, {"initial_lr", p.initial_lr}, {"final_lr", p.final_lr},
                 {"seed", p.seed}};
  j["epoch_loss"] = model.epoch_loss;
  write_file(dir / "docvec.json", j.dump(2) + "\n");
  out << fmt::format("trained {} document vectors (dim {}, vocab {}); final epoch loss {:.6f}\n", model.n_docs(),
                     p.dim, model.vocab.size(), model.epoch_loss.empty() ? 0.0 : model.epoch_loss.back());
  return 0;
}

int cmd_gridsearch(const Options& o, std::ostream& out) {
  const auto spec = load_spec(o);
  const auto ds = load_dataset(o.data.at(0), o);
  std::ifstream in(existing_or_data_dir(o.grid), std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open grid file '{}'", o.grid));
  nlohmann::json gj;
  try {
    gj = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("grid file is not valid JSON: {}", e.what()));
  }
  if (!gj.is_array() || gj.empty()) throw DataError("grid file must be a non-empty JSON list of classifier specs");
  std::vector<ClassifierSpec> grid;
  for (const auto& g : gj) grid.push_back(classifier_spec_from_json(g, spec.seed));
  const Metric metric = parse_metric(o.metric);
  const auto result = grid_search(grid, ds, spec, o.k, metric);

  ordered_json j;
  j["metric"] = o.metric;
  j["k"] = o.k;
  j["seed"] = spec.seed;
  j["best_index"] = result.best_index;
  j["best"] = to_json(result.best);
  ordered_json entries = ordered_json::array();
  for (std::size_t i = 0; i < grid.size(); ++i)
    entries.push_back({{"classifier", to_json(grid[i])}, {"report", to_json(result.reports[i])}});
  j["entries"] = entries;
  write_file(out_dir(o) / "gridsearch.json", j.dump(2) + "\n");

  for (std::size_t i = 0; i < grid.size(); ++i)
    out << fmt::format("{} {:<60} {}={:.4f}\n", i == result.best_index ? '*' : ' ', to_json(grid[i]).dump(), o.metric,
                       result.reports[i].get(metric));
  return 0;
}

int cmd_render(const Options& o, std::ostream& out) {
  const auto spec = load_spec(o);
  const auto dot = render_dot(spec);
  if (o.out.empty()) {
    out << dot;
    return 0;
  }
  const auto dir = out_dir(o);
  write_file(dir / "protocol.dot", dot);
  write_file(dir / "protocol.json", to_json(spec).dump(2) + "\n");
  out << fmt::format("wrote {} and {}\n", (dir / "protocol.dot").string(), (dir / "protocol.json").string());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  auto app = build_cli(o);
  try {
    app->parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    const auto* sub = app->get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "stats") return cmd_stats(o, out);
    if (name == "run") return cmd_run(o, out, err);
    if (name == "replicate") return cmd_replicate(o, out);
    if (name == "crossdataset") return cmd_crossdataset(o, out);
    if (name == "train-docvec") return cmd_train_docvec(o, out);
    if (name == "gridsearch") return cmd_gridsearch(o, out);
    if (name == "render") return cmd_render(o, out);
    throw InvariantError("unhandled subcommand " + name);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace desmine::cli
