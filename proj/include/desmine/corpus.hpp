#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace desmine {

enum class ArtifactKind { pull_request, commit_message, code_comment, qa_post, chat, other };

std::string_view to_string(ArtifactKind kind);
ArtifactKind parse_artifact_kind(std::string_view name);

enum class Label : int { non_design = 0, design = 1 };

/// One labeled unit of analysis: a comment thread, commit message, code
/// comment, Q&A post or chat excerpt.
struct Discussion {
  std::string id;
  std::string text;
  Label label = Label::non_design;
  std::string source;
  ArtifactKind artifact_kind = ArtifactKind::other;

  bool is_design() const { return label == Label::design; }
  friend bool operator==(const Discussion&, const Discussion&) = default;
};

/// A named, ordered, immutable collection of discussions with unique ids.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DataError on duplicate ids or empty text.
  Dataset(std::string name, std::vector<Discussion> discussions);

  const std::string& name() const { return name_; }
  const std::vector<Discussion>& discussions() const { return discussions_; }
  std::size_t size() const { return discussions_.size(); }
  bool empty() const { return discussions_.empty(); }
  const Discussion& operator[](std::size_t i) const { return discussions_[i]; }

  std::size_t design_count() const;
  /// design_count / size; throws DataError when empty.
  double prevalence() const;
  std::vector<int> labels() const;

  /// Index of the discussion with this id, if any.
  std::optional<std::size_t> find(std::string_view id) const;

  /// Subset in the order given by `indices`.
  Dataset subset(const std::vector<std::size_t>& indices, std::string name) const;

 private:
  std::string name_;
  std::vector<Discussion> discussions_;
  std::vector<std::pair<std::string, std::size_t>> sorted_ids_;
};

enum class StopwordSet { none, english, english_plus_domain };

std::string_view to_string(StopwordSet set);
StopwordSet parse_stopword_set(std::string_view name);

struct CleanOptions {
  bool lowercase = true;
  bool strip_html_and_code = true;
  bool strip_punctuation = true;
  StopwordSet stopword_set = StopwordSet::english;
  std::vector<std::string> domain_stopwords = default_domain_stopwords();

  static std::vector<std::string> default_domain_stopwords();
  friend bool operator==(const CleanOptions&, const CleanOptions&) = default;
};

struct CorpusStats {
  std::size_t total = 0;
  std::size_t design = 0;
  double mean_length = 0.0;
  std::size_t vocab_size = 0;
};

// Loading. The dataset name is the file stem.
Dataset load_jsonl(const std::filesystem::path& path);
Dataset parse_jsonl(std::string_view content, std::string name);
std::string to_jsonl(const Dataset& dataset);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

struct CsvColumns {
  std::string text = "text";
  std::string label = "label";
  /// Row numbers (1-based) are used as ids when this column is absent.
  std::string id = "id";
};

Dataset load_csv(const std::filesystem::path& path, const CsvColumns& columns = {});
Dataset parse_csv(std::string_view content, std::string name, const CsvColumns& columns = {});

/// RFC-4180 records. Quoted fields may contain commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view content);
std::string csv_escape(std::string_view field);

// Text processing.
std::string clean(std::string_view text, const CleanOptions& opts);
std::vector<std::string> tokenize(std::string_view text);

/// The frozen English list shipped in data/stopwords/english.txt.
const std::unordered_set<std::string>& english_stopwords();
/// Parse a stopword file body: one token per line, '#' starts a comment.
std::vector<std::string> parse_stopword_lines(std::string_view content);

class StopwordFilter {
 public:
  explicit StopwordFilter(const CleanOptions& opts);
  bool contains(const std::string& token) const { return stop_.contains(token); }
  std::size_t size() const { return stop_.size(); }

 private:
  std::unordered_set<std::string> stop_;
};

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens, const CleanOptions& opts);
std::vector<std::string> remove_stopwords(std::vector<std::string> tokens, const StopwordFilter& filter);

/// Token counts use cleaned text before stopword removal.
CorpusStats stats(const Dataset& dataset, const CleanOptions& opts);

}  // namespace desmine
