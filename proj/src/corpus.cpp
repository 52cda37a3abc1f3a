#include "desmine/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "desmine/error.hpp"
#include "embedded_data.hpp"

namespace desmine {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return ascii_lower(x) == ascii_lower(y); });
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
         (c >= 0x7b && c <= 0x7e);
}

// Start of an HTML-ish tag: '<' followed by a letter, '/' or '!'.
bool tag_start(std::string_view s, std::size_t i) {
  if (s[i] != '<' || i + 1 >= s.size()) return false;
  const char c = s[i + 1];
  return c == '/' || c == '!' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool code_open_at(std::string_view s, std::size_t i) {
  if (i + 5 >= s.size() || s[i] != '<' || !iequals(s.substr(i + 1, 4), "code")) return false;
  const char c = s[i + 5];
  return c == '>' || is_space(c);
}

bool code_close_at(std::string_view s, std::size_t i) {
  return i + 7 <= s.size() && s[i] == '<' && iequals(s.substr(i, 7), "</code>");
}

// Drops <code ...> ... </code> including the content; an unterminated block
// runs to the end of the text. Every other tag becomes a space.
std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (code_open_at(s, i)) {
      std::size_t j = i + 5;
      while (j < s.size() && !code_close_at(s, j)) ++j;
      i = std::min(s.size(), j + 7);
      out.push_back(' ');
      continue;
    }
    if (tag_start(s, i)) {
      const std::size_t close = s.find_first_of("<>", i + 1);
      if (close != std::string_view::npos && s[close] == '>') {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

// Replaces ASCII punctuation and the U+2000..U+206F general punctuation block.
std::string strip_punct(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_ascii_punct(c)) {
      out.push_back(' ');
    } else if (c == 0xE2 && i + 2 < s.size() &&
               (static_cast<unsigned char>(s[i + 1]) == 0x80 || static_cast<unsigned char>(s[i + 1]) == 0x81)) {
      out.push_back(' ');
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

Label parse_label_value(const std::string& raw) {
  std::string v;
  for (char c : raw)
    if (!is_space(c)) v.push_back(ascii_lower(c));
  if (v == "1" || v == "design") return Label::design;
  if (v == "0" || v == "non-design" || v == "nondesign" || v == "non_design") return Label::non_design;
  throw DataError(fmt::format("unparseable label '{}'", raw));
}

}  // namespace

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::pull_request: return "pull_request";
    case ArtifactKind::commit_message: return "commit_message";
    case ArtifactKind::code_comment: return "code_comment";
    case ArtifactKind::qa_post: return "qa_post";
    case ArtifactKind::chat: return "chat";
    case ArtifactKind::other: return "other";
  }
  throw InvariantError("bad ArtifactKind");
}

ArtifactKind parse_artifact_kind(std::string_view name) {
  for (auto k : {ArtifactKind::pull_request, ArtifactKind::commit_message, ArtifactKind::code_comment,
                 ArtifactKind::qa_post, ArtifactKind::chat, ArtifactKind::other}) {
    if (to_string(k) == name) return k;
  }
  throw DataError(fmt::format("unknown artifact_kind '{}'", name));
}

std::string_view to_string(StopwordSet set) {
  switch (set) {
    case StopwordSet::none: return "none";
    case StopwordSet::english: return "english";
    case StopwordSet::english_plus_domain: return "english_plus_domain";
  }
  throw InvariantError("bad StopwordSet");
}

StopwordSet parse_stopword_set(std::string_view name) {
  if (name == "none") return StopwordSet::none;
  if (name == "english") return StopwordSet::english;
  if (name == "english_plus_domain") return StopwordSet::english_plus_domain;
  throw DataError(fmt::format("unknown stopword set '{}' (valid: none, english, english_plus_domain)", name));
}

std::vector<std::string> CleanOptions::default_domain_stopwords() {
  return parse_stopword_lines(embedded::domain_stopwords());
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::string name, std::vector<Discussion> discussions)
    : name_(std::move(name)), discussions_(std::move(discussions)) {
  sorted_ids_.reserve(discussions_.size());
  for (std::size_t i = 0; i < discussions_.size(); ++i) {
    if (discussions_[i].text.empty())
      throw DataError(fmt::format("discussion '{}' has empty text", discussions_[i].id));
    sorted_ids_.emplace_back(discussions_[i].id, i);
  }
  std::sort(sorted_ids_.begin(), sorted_ids_.end());
  for (std::size_t i = 1; i < sorted_ids_.size(); ++i) {
    if (sorted_ids_[i].first == sorted_ids_[i - 1].first)
      throw DataError(fmt::format("duplicate id '{}' in dataset '{}'", sorted_ids_[i].first, name_));
  }
}

std::size_t Dataset::design_count() const {
  return static_cast<std::size_t>(
      std::count_if(discussions_.begin(), discussions_.end(), [](const Discussion& d) { return d.is_design(); }));
}

double Dataset::prevalence() const {
  if (discussions_.empty()) throw DataError(fmt::format("dataset '{}' is empty; prevalence undefined", name_));
  return static_cast<double>(design_count()) / static_cast<double>(discussions_.size());
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(discussions_.size());
  for (const auto& d : discussions_) out.push_back(static_cast<int>(d.label));
  return out;
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  auto it = std::lower_bound(sorted_ids_.begin(), sorted_ids_.end(), id,
                             [](const auto& entry, std::string_view key) { return entry.first < key; });
  if (it == sorted_ids_.end() || it->first != id) return std::nullopt;
  return it->second;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, std::string name) const {
  std::vector<Discussion> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(discussions_.at(i));
  return Dataset(std::move(name), std::move(picked));
}

// ---------------------------------------------------------------------------
// JSONL

Dataset parse_jsonl(std::string_view content, std::string name) {
  std::vector<Discussion> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (std::all_of(line.begin(), line.end(), is_space)) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(fmt::format("{}: line {}: malformed JSON ({})", name, line_no, e.what()));
    }
    auto fail = [&](std::string_view why) {
      return DataError(fmt::format("{}: line {}: {}", name, line_no, why));
    };
    if (!obj.is_object()) throw fail("expected a JSON object");
    for (const char* key : {"id", "text", "label", "source"})
      if (!obj.contains(key)) throw fail(fmt::format("missing key '{}'", key));

    Discussion d;
    if (!obj["id"].is_string() || !obj["text"].is_string() || !obj["source"].is_string())
      throw fail("'id', 'text' and 'source' must be strings");
    d.id = obj["id"].get<std::string>();
    d.text = obj["text"].get<std::string>();
    d.source = obj["source"].get<std::string>();
    const auto& label = obj["label"];
    if (!label.is_number_integer() || (label.get<long long>() != 0 && label.get<long long>() != 1))
      throw fail(fmt::format("label must be 0 or 1, got {}", label.dump()));
    d.label = static_cast<Label>(label.get<int>());
    if (obj.contains("artifact_kind")) {
      try {
        d.artifact_kind = parse_artifact_kind(obj["artifact_kind"].get<std::string>());
      } catch (const std::exception& e) {
        throw fail(e.what());
      }
    }
    if (d.text.empty()) throw fail("empty text");
    rows.push_back(std::move(d));
  }
  return Dataset(std::move(name), std::move(rows));
}

Dataset load_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path), path.stem().string());
}

std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& d : dataset.discussions()) {
    nlohmann::ordered_json obj;
    obj["id"] = d.id;
    obj["text"] = d.text;
    obj["label"] = static_cast<int>(d.label);
    obj["source"] = d.source;
    obj["artifact_kind"] = std::string(to_string(d.artifact_kind));
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << to_jsonl(dataset);
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::vector<std::string>> parse_csv_records(std::string_view content) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  // Blank lines produce a single empty field; drop them.
  std::erase_if(records, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  return records;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Dataset parse_csv(std::string_view content, std::string name, const CsvColumns& columns) {
  auto records = parse_csv_records(content);
  if (records.empty()) throw DataError(fmt::format("{}: missing CSV header row", name));
  const auto& header = records.front();
  auto column = [&](const std::string& col) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto text_col = column(columns.text);
  if (!text_col) throw DataError(fmt::format("{}: column not found: '{}'", name, columns.text));
  const auto label_col = column(columns.label);
  if (!label_col) throw DataError(fmt::format("{}: column not found: '{}'", name, columns.label));
  const auto id_col = column(columns.id);

  std::vector<Discussion> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t needed = std::max({*text_col, *label_col, id_col.value_or(0)}) + 1;
    if (rec.size() < needed)
      throw DataError(fmt::format("{}: row {}: expected at least {} fields, got {}", name, r, needed, rec.size()));
    Discussion d;
    d.id = id_col ? rec[*id_col] : std::to_string(r);
    d.text = rec[*text_col];
    try {
      d.label = parse_label_value(rec[*label_col]);
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: row {}: {}", name, r, e.what()));
    }
    if (d.text.empty()) throw DataError(fmt::format("{}: row {}: empty text", name, r));
    d.source = name;
    rows.push_back(std::move(d));
  }
  return Dataset(std::move(name), std::move(rows));
}

Dataset load_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  return parse_csv(read_file(path), path.stem().string(), columns);
}

// ---------------------------------------------------------------------------
// Text processing

std::string clean(std::string_view text, const CleanOptions& opts) {
  std::string s(text);
  if (opts.strip_html_and_code) {
    // Removing one tag can splice a new one together ("<<b>b>"); iterate to
    // the fixed point so clean stays idempotent.
    for (;;) {
      std::string next = strip_markup(s);
      if (next == s) break;
      s = std::move(next);
    }
  }
  if (opts.lowercase) std::transform(s.begin(), s.end(), s.begin(), ascii_lower);
  if (opts.strip_punctuation) s = strip_punct(s);
  return collapse_whitespace(s);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::vector<std::string> parse_stopword_lines(std::string_view content) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    for (auto& tok : tokenize(line)) out.push_back(std::move(tok));
    if (end == content.size()) break;
  }
  return out;
}

const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words = [] {
    auto list = parse_stopword_lines(embedded::english_stopwords());
    return std::unordered_set<std::string>(list.begin(), list.end());
  }();
  return words;
}

StopwordFilter::StopwordFilter(const CleanOptions& opts) {
  if (opts.stopword_set == StopwordSet::none) return;
  stop_ = english_stopwords();
  if (opts.stopword_set == StopwordSet::english_plus_domain) stop_.insert(opts.domain_stopwords.begin(), opts.domain_stopwords.end());
}

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens, const StopwordFilter& filter) {
  std::erase_if(tokens, [&](const std::string& t) { return filter.contains(t); });
  return tokens;
}

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens, const CleanOptions& opts) {
  return remove_stopwords(std::move(tokens), StopwordFilter(opts));
}

CorpusStats stats(const Dataset& dataset, const CleanOptions& opts) {
  if (dataset.empty()) throw DataError(fmt::format("dataset '{}' is empty; no statistics", dataset.name()));
  CorpusStats s;
  s.total = dataset.size();
  s.design = dataset.design_count();
  std::unordered_set<std::string> vocab;
  std::size_t tokens = 0;
  for (const auto& d : dataset.discussions()) {
    auto toks = tokenize(clean(d.text, opts));
    tokens += toks.size();
    for (auto& t : toks) vocab.insert(std::move(t));
  }
  s.mean_length = static_cast<double>(tokens) / static_cast<double>(s.total);
  s.vocab_size = vocab.size();
  return s;
}

}  // namespace desmine
