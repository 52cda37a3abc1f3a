#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "desmine/corpus.hpp"
#include "desmine/evaluate.hpp"
#include "desmine/protocol.hpp"

namespace desmine {

enum class DiagonalMode { cv_within, train_test_same };

std::string_view to_string(DiagonalMode mode);
DiagonalMode parse_diagonal_mode(std::string_view name);

/// Scores supplied by a model run outside this tool.
struct ExternalPredictions {
  struct Row {
    std::string dataset;
    std::string id;
    double score = 0.0;
  };
  std::string model;
  std::vector<Row> rows;  // file order
};

struct TransferMatrix {
  std::vector<std::string> datasets;
  /// cells[train][test]
  std::vector<std::vector<EvalReport>> cells;
  DiagonalMode diagonal_mode = DiagonalMode::cv_within;
  /// Rows from external models; columns follow `datasets`.
  struct ExternalRow {
    std::string model;
    std::vector<std::optional<EvalReport>> cells;  // per test dataset
  };
  std::vector<ExternalRow> external;

  std::size_t size() const { return datasets.size(); }
  const EvalReport& cell(std::size_t train, std::size_t test) const { return cells[train][test]; }
};

struct TransferOptions {
  DiagonalMode diagonal_mode = DiagonalMode::cv_within;
  std::size_t k = 10;
};

/// Off-diagonal cells train on all of one dataset and score all of another.
TransferMatrix transfer_matrix(const std::vector<Dataset>& datasets, const ProtocolSpec& protocol, std::uint64_t seed,
                               const TransferOptions& options = {});

/// One cell, computed in isolation.
EvalReport transfer_cell(const Pipeline& pipeline, const Dataset& train, const Dataset& test, bool diagonal,
                         std::uint64_t seed, const TransferOptions& options = {});

/// CSV with header model,dataset,id,score. Several models may share a file.
std::vector<ExternalPredictions> ingest_predictions(const std::filesystem::path& path,
                                                    const std::vector<Dataset>& datasets);
std::vector<ExternalPredictions> parse_predictions(std::string_view content, const std::vector<Dataset>& datasets);

/// Adds one labeled row per external model. Datasets a model has no rows
/// for stay empty.
void add_external(TransferMatrix& matrix, const std::vector<Dataset>& datasets, const ExternalPredictions& predictions);

/// Self-contained SVG heat map: rows are test datasets, columns are
/// training datasets, external rows appended as extra columns.
std::string render_heatmap(const TransferMatrix& matrix, Metric metric);
void write_heatmap(const TransferMatrix& matrix, Metric metric, const std::filesystem::path& out);

/// Rows = test datasets, columns = training datasets, values to 3 decimals.
std::string export_csv(const TransferMatrix& matrix, Metric metric);
void write_csv(const TransferMatrix& matrix, Metric metric, const std::filesystem::path& out);

/// Fill fraction in [0, 1] for a metric value: linear over [0.4, 1.0],
/// clamped.
double heat_intensity(double value);

}  // namespace desmine
