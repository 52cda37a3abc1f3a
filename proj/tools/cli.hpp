#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace desmine::cli {

/// Every flag of every subcommand lands here.
struct Options {
  std::optional<std::uint64_t> seed;
  std::string out;

  // Data loading.
  std::vector<std::string> data;
  std::string format;  // jsonl, csv, or empty to infer from the extension
  std::string text_col = "text";
  std::string label_col = "label";
  std::string id_col = "id";

  std::string protocol;
  bool json = false;
  bool stamp = false;
  std::string stopwords = "english";

  // replicate
  std::string target;
  bool stratified = false;

  // crossdataset
  std::string external;
  std::string metric = "roc_auc";
  std::string diagonal = "cv_within";
  std::size_t k = 10;

  // train-docvec
  std::size_t dim = 100;
  std::size_t epochs = 20;
  std::size_t negative = 5;
  std::size_t min_count = 2;
  double initial_lr = 0.025;
  double final_lr = 0.0001;

  // gridsearch
  std::string grid;
};

/// The full command tree. Callers parse with it and then dispatch on the
/// parsed subcommand.
std::unique_ptr<CLI::App> build_cli(Options& opts);

/// Parses and runs. Returns the process exit code: 0 success, 1 usage
/// error, 2 data or validation error, 3 internal invariant breach.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace desmine::cli
