#include "desmine/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <charconv>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "desmine/error.hpp"

namespace desmine {

std::string_view to_string(DiagonalMode mode) {
  return mode == DiagonalMode::cv_within ? "cv_within" : "train_test_same";
}

DiagonalMode parse_diagonal_mode(std::string_view name) {
  if (name == "cv_within") return DiagonalMode::cv_within;
  if (name == "train_test_same") return DiagonalMode::train_test_same;
  throw DataError(fmt::format("unknown diagonal mode '{}' (valid: cv_within, train_test_same)", name));
}

EvalReport transfer_cell(const Pipeline& pipeline, const Dataset& train, const Dataset& test, bool diagonal,
                         std::uint64_t seed, const TransferOptions& options) {
  try {
    if (diagonal && options.diagonal_mode == DiagonalMode::cv_within)
      return pipeline.cross_validate(train, options.k, seed);
    return pipeline.train_test(train, test, seed);
  } catch (const DataError& e) {
    throw DataError(fmt::format("cell (train={}, test={}): {}", train.name(), test.name(), e.what()));
  }
}

TransferMatrix transfer_matrix(const std::vector<Dataset>& datasets, const ProtocolSpec& protocol, std::uint64_t seed,
                               const TransferOptions& options) {
  if (datasets.size() < 2)
    throw DataError(fmt::format("a transfer matrix needs at least 2 datasets, got {}", datasets.size()));
  std::set<std::string> names;
  for (const auto& d : datasets)
    if (!names.insert(d.name()).second) throw DataError(fmt::format("dataset name '{}' appears twice", d.name()));

  std::vector<const Dataset*> corpora;
  for (const auto& d : datasets) corpora.push_back(&d);
  const Pipeline pipeline(protocol, corpora);

  const std::size_t n = datasets.size();
  TransferMatrix m;
  m.diagonal_mode = options.diagonal_mode;
  for (const auto& d : datasets) m.datasets.push_back(d.name());
  m.cells.assign(n, std::vector<EvalReport>(n));

  // Cells are pure, so evaluation order does not affect the result.
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n * n, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&] {
      for (std::size_t c = next++; c < n * n; c = next++) {
        const std::size_t i = c / n, j = c % n;
        m.cells[i][j] = transfer_cell(pipeline, datasets[i], datasets[j], i == j, seed, options);
      }
    }));
  }
  std::exception_ptr first;
  for (auto& job : jobs) {
    try {
      job.get();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
  return m;
}

std::vector<ExternalPredictions> parse_predictions(std::string_view content, const std::vector<Dataset>& datasets) {
  const auto records = parse_csv_records(content);
  if (records.empty()) throw DataError("predictions file is empty");
  const std::vector<std::string> expected{"model", "dataset", "id", "score"};
  if (records[0] != expected) throw DataError("predictions header must be exactly: model,dataset,id,score");

  std::vector<ExternalPredictions> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row = r + 1;
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != 4) throw DataError(fmt::format("predictions row {}: expected 4 fields, got {}", row, rec.size()));
    const auto ds = std::find_if(datasets.begin(), datasets.end(), [&](const Dataset& d) { return d.name() == rec[1]; });
    if (ds == datasets.end()) throw DataError(fmt::format("predictions row {}: unknown dataset '{}'", row, rec[1]));
    if (!ds->find(rec[2]))
      throw DataError(fmt::format("predictions row {}: id '{}' not found in dataset '{}'", row, rec[2], rec[1]));
    double score = 0.0;
    const char* begin = rec[3].data();
    const char* end = begin + rec[3].size();
    const auto [ptr, ec] = std::from_chars(begin, end, score);
    if (ec != std::errc() || ptr != end || !std::isfinite(score))
      throw DataError(fmt::format("predictions row {}: score '{}' is not a finite number", row, rec[3]));
    if (!seen.emplace(rec[0], rec[1], rec[2]).second)
      throw DataError(fmt::format("predictions row {}: duplicate row for model '{}', dataset '{}', id '{}'", row, rec[0],
                                  rec[1], rec[2]));
    auto it = std::find_if(out.begin(), out.end(), [&](const ExternalPredictions& p) { return p.model == rec[0]; });
    if (it == out.end()) {
      out.push_back({rec[0], {}});
      it = std::prev(out.end());
    }
    it->rows.push_back({rec[1], rec[2], score});
  }
  return out;
}

std::vector<ExternalPredictions> ingest_predictions(const std::filesystem::path& path,
                                                    const std::vector<Dataset>& datasets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open predictions file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_predictions(buf.str(), datasets);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void add_external(TransferMatrix& matrix, const std::vector<Dataset>& datasets, const ExternalPredictions& predictions) {
  TransferMatrix::ExternalRow row;
  row.model = predictions.model;
  for (const auto& name : matrix.datasets) {
    const auto ds = std::find_if(datasets.begin(), datasets.end(), [&](const Dataset& d) { return d.name() == name; });
    std::vector<int> labels, preds;
    std::vector<double> scores;
    for (const auto& r : predictions.rows) {
      if (r.dataset != name) continue;
      if (ds == datasets.end()) throw DataError(fmt::format("dataset '{}' not loaded", name));
      labels.push_back((*ds)[*ds->find(r.id)].is_design() ? 1 : 0);
      scores.push_back(r.score);
      preds.push_back(r.score >= 0.5 ? 1 : 0);
    }
    if (labels.empty()) row.cells.emplace_back(std::nullopt);
    else row.cells.emplace_back(evaluate_scores(labels, scores, preds));
  }
  matrix.external.push_back(std::move(row));
}

double heat_intensity(double value) { return std::clamp((value - 0.4) / 0.6, 0.0, 1.0); }

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Column {
  std::string label;
  std::vector<std::optional<double>> values;  // per test dataset
};

std::vector<Column> columns(const TransferMatrix& matrix, Metric metric) {
  std::vector<Column> cols;
  const auto name = to_string(metric);
  auto value = [&](const EvalReport& r) -> std::optional<double> {
    if (r.is_undefined(name)) return std::nullopt;
    return r.get(metric);
  };
  for (std::size_t train = 0; train < matrix.size(); ++train) {
    Column c{matrix.datasets[train], {}};
    for (std::size_t test = 0; test < matrix.size(); ++test) c.values.push_back(value(matrix.cell(train, test)));
    cols.push_back(std::move(c));
  }
  for (const auto& ext : matrix.external) {
    Column c{"external:" + ext.model, {}};
    for (const auto& cell : ext.cells) c.values.push_back(cell ? value(*cell) : std::nullopt);
    cols.push_back(std::move(c));
  }
  return cols;
}

void write_text(const std::string& text, const std::filesystem::path& out) {
  std::ofstream f(out, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot write '{}'", out.string()));
  f << text;
  if (!f) throw DataError(fmt::format("cannot write '{}'", out.string()));
}

}  // namespace

std::string render_heatmap(const TransferMatrix& matrix, Metric metric) {
  const auto cols = columns(matrix, metric);
  const int cell = 80, left = 150, top = 60, bottom = 110;
  const int width = left + cell * static_cast<int>(cols.size()) + 20;
  const int height = top + cell * static_cast<int>(matrix.size()) + bottom;

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);
  s += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", width / 2,
                   xml_escape(to_string(metric)));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      const int x = left + cell * static_cast<int>(c), y = top + cell * static_cast<int>(r);
      const auto& v = cols[c].values[r];
      if (!v) {
        s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#dddddd\" stroke=\"#ffffff\"/>\n",
                         x, y, cell, cell);
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#000000\">n/a</text>\n", x + cell / 2,
                         y + cell / 2 + 4);
        continue;
      }
      const double t = heat_intensity(*v);
      // White to dark blue.
      const auto mix = [&](int hi, int lo) { return static_cast<int>(std::lround(hi + (lo - hi) * t)); };
      const std::string fill = fmt::format("#{:02x}{:02x}{:02x}", mix(255, 8), mix(255, 48), mix(255, 107));
      s += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\" data-value=\"{:.3f}\"/>\n",
          x, y, cell, cell, fill, *v);
      s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{:.3f}</text>\n", x + cell / 2,
                       y + cell / 2 + 4, t > 0.55 ? "#ffffff" : "#000000", *v);
    }
  }
  for (std::size_t r = 0; r < matrix.size(); ++r)
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 8,
                     top + cell * static_cast<int>(r) + cell / 2 + 4, xml_escape(matrix.datasets[r]));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const int x = left + cell * static_cast<int>(c) + cell / 2, y = top + cell * static_cast<int>(matrix.size()) + 14;
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" transform=\"rotate(-40 {} {})\">{}</text>\n", x, y,
                     x, y, xml_escape(cols[c].label));
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Trained on</text>\n",
                   left + cell * static_cast<int>(cols.size()) / 2, height - 10);
  s += fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">Tested on</text>\n",
                   top + cell * static_cast<int>(matrix.size()) / 2, top + cell * static_cast<int>(matrix.size()) / 2);
  s += "</svg>\n";
  return s;
}

void write_heatmap(const TransferMatrix& matrix, Metric metric, const std::filesystem::path& out) {
  write_text(render_heatmap(matrix, metric), out);
}

std::string export_csv(const TransferMatrix& matrix, Metric metric) {
  const auto cols = columns(matrix, metric);
  std::string s = "test\\train";
  for (const auto& c : cols) s += "," + csv_escape(c.label);
  s += "\n";
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    s += csv_escape(matrix.datasets[r]);
    for (const auto& c : cols) s += c.values[r] ? fmt::format(",{:.3f}", *c.values[r]) : std::string(",");
    s += "\n";
  }
  return s;
}

void write_csv(const TransferMatrix& matrix, Metric metric, const std::filesystem::path& out) {
  write_text(export_csv(matrix, metric), out);
}

}  // namespace desmine
