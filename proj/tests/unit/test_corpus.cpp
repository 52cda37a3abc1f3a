#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "desmine/corpus.hpp"
#include "desmine/error.hpp"
#include "desmine/rng.hpp"

using namespace desmine;

namespace {

const std::string kFixtures = DESMINE_FIXTURES;

Discussion doc(std::string id, std::string text, int label = 0) {
  return {std::move(id), std::move(text), label ? Label::design : Label::non_design, "t", ArtifactKind::other};
}

// Random markup-ish text: words, tags, code blocks, punctuation, stray angle
// brackets and multi-byte characters.
std::string random_text(Rng& rng) {
  static const char* pieces[] = {"Design", "API", "<b>", "</b>", "<code>", "</code>", "x=1;", "<", ">", "<<b>b>",
                                 "  ", "\t", "\n", ",", "!", "it's", "café", "snake_case", "<!-- c -->", "lgtm",
                                 "<code class=\"a\">", "C++", "the", "42", "a-b", "<br/>"};
  std::string out;
  const auto n = rng.below(14);
  for (std::uint64_t i = 0; i < n; ++i) {
    out += pieces[rng.below(std::size(pieces))];
    if (rng.uniform() < 0.5) out += ' ';
  }
  return out;
}

CleanOptions random_options(Rng& rng) {
  CleanOptions o;
  o.lowercase = rng.uniform() < 0.5;
  o.strip_html_and_code = rng.uniform() < 0.5;
  o.strip_punctuation = rng.uniform() < 0.5;
  o.stopword_set = static_cast<StopwordSet>(rng.below(3));
  return o;
}

}  // namespace

TEST_CASE("clean examples") {
  const CleanOptions all;
  CHECK(clean("<code>x=1</code> My Design!", all) == "my design");
  CHECK(clean("design", all) == "design");
  CHECK(clean("<b>Move saveCallback</b>", all) == "move savecallback");
  CHECK(clean("", all).empty());
}

TEST_CASE("clean keeps code when stripping is off") {
  CleanOptions o;
  o.strip_html_and_code = false;
  o.strip_punctuation = false;
  CHECK(clean("<code>x</code>", o) == "<code>x</code>");
}

TEST_CASE("unterminated code block runs to the end") {
  CHECK(clean("keep <code>drop all of this", CleanOptions{}) == "keep");
}

TEST_CASE("tokenize examples") {
  CHECK(tokenize("move savecallback") == std::vector<std::string>{"move", "savecallback"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a  b") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("remove_stopwords examples") {
  CleanOptions o;
  o.stopword_set = StopwordSet::english_plus_domain;
  CHECK(remove_stopwords({"lgtm", "nice", "design"}, o) == std::vector<std::string>{"nice", "design"});
  o.stopword_set = StopwordSet::none;
  CHECK(remove_stopwords({"design"}, o) == std::vector<std::string>{"design"});
  o.stopword_set = StopwordSet::english;
  CHECK(remove_stopwords({"the", "design"}, o) == std::vector<std::string>{"design"});
}

TEST_CASE("domain stopwords") {
  const auto d = CleanOptions::default_domain_stopwords();
  CHECK(std::find(d.begin(), d.end(), "lgtm") != d.end());
  CHECK(std::find(d.begin(), d.end(), "pinging") != d.end());
  CHECK(english_stopwords().contains("the"));
  CHECK_FALSE(english_stopwords().contains("lgtm"));
}

TEST_CASE("stopword file parsing") {
  CHECK(parse_stopword_lines("# header\na\n b # trailing\n\nc") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("clean is idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto text = random_text(rng);
    const auto opts = random_options(rng);
    const auto once = clean(text, opts);
    INFO("text: " << text);
    CHECK(clean(once, opts) == once);
  }
}

TEST_CASE("remove_stopwords shrinks and is idempotent") {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto opts = random_options(rng);
    const auto tokens = tokenize(clean(random_text(rng), opts));
    const auto once = remove_stopwords(tokens, opts);
    CHECK(once.size() <= tokens.size());
    CHECK(remove_stopwords(once, opts) == once);
  }
}

TEST_CASE("stats examples") {
  CHECK_THROWS_AS(stats(Dataset("e", {}), CleanOptions{}), DataError);

  const auto one = stats(Dataset("one", {doc("1", "a b")}), CleanOptions{});
  CHECK(one.mean_length == 2.0);
  CHECK(one.vocab_size == 2);

  const auto two = stats(Dataset("two", {doc("1", "a"), doc("2", "a b c")}), CleanOptions{});
  CHECK(two.mean_length == 2.0);
  CHECK(two.vocab_size == 3);
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset("d", {doc("x", "a"), doc("x", "b")}), DataError);
  CHECK_THROWS_AS(Dataset("d", {doc("x", "")}), DataError);
  CHECK_THROWS_AS(Dataset("e", {}).prevalence(), DataError);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(60);
    std::vector<Discussion> ds;
    std::size_t design = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = rng.uniform() < 0.3;
      design += label;
      ds.push_back(doc(std::to_string(i), "t", label));
    }
    const Dataset d("r", std::move(ds));
    CHECK(d.design_count() == design);
    CHECK(d.prevalence() == static_cast<double>(design) / static_cast<double>(n));
    CHECK(d.find(std::to_string(n - 1)) == n - 1);
    CHECK_FALSE(d.find("missing"));
  }
}

TEST_CASE("jsonl errors") {
  CHECK_THROWS_WITH_AS(parse_jsonl("{\"id\":\"a\",\"text\":\"x\",\"label\":1,\"source\":\"s\"}\n{oops\n", "f"),
                       doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(parse_jsonl("{\"id\":\"a\",\"text\":\"x\",\"label\":2,\"source\":\"s\"}\n", "f"),
                       doctest::Contains("label"), DataError);
  CHECK_THROWS_AS(parse_jsonl("{\"id\":\"a\",\"text\":\"x\",\"label\":1,\"source\":\"s\"}\n"
                              "{\"id\":\"a\",\"text\":\"y\",\"label\":0,\"source\":\"s\"}\n",
                              "f"),
                  DataError);
  CHECK(parse_jsonl("", "empty").empty());
}

TEST_CASE("jsonl fixture loads and round-trips") {
  const auto d = load_jsonl(kFixtures + "/snippets.jsonl");
  CHECK(d.name() == "snippets");
  CHECK(d.size() == 8);
  CHECK(d.design_count() == 5);
  CHECK(d[4].artifact_kind == ArtifactKind::commit_message);

  const auto text = to_jsonl(d);
  const auto again = parse_jsonl(text, "snippets");
  CHECK(again.discussions() == d.discussions());
  CHECK(to_jsonl(again) == text);
}

TEST_CASE("jsonl round-trip on random datasets") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Discussion> ds;
    const auto n = 1 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) {
      auto text = random_text(rng) + "x";
      ds.push_back({"id\"" + std::to_string(i), text, rng.uniform() < 0.5 ? Label::design : Label::non_design,
                    "src", static_cast<ArtifactKind>(rng.below(6))});
    }
    const Dataset d("r", ds);
    CHECK(parse_jsonl(to_jsonl(d), "r").discussions() == d.discussions());
  }
}

TEST_CASE("csv loading") {
  const auto d = load_csv(kFixtures + "/two_rows.csv");
  CHECK(d.size() == 2);
  CHECK(d.design_count() == 1);
  CHECK(d[0].text == "Split the parser, into two layers");
  CHECK(d[1].text == "bump version \"1.2\"");

  CHECK_THROWS_WITH_AS(parse_csv("id,text\n1,x\n", "f"), doctest::Contains("column not found"), DataError);
  CHECK_THROWS_WITH_AS(parse_csv("text,label\nx,maybe\n", "f"), doctest::Contains("row 1"), DataError);

  const auto no_ids = parse_csv("body,y\nfirst,1\nsecond,0\n", "f", CsvColumns{"body", "y", "id"});
  CHECK(no_ids[0].id == "1");
  CHECK(no_ids[1].id == "2");
}

TEST_CASE("csv records") {
  const auto r = parse_csv_records("a,\"b,c\",\"d\"\"e\"\r\n\"multi\nline\",x\n");
  REQUIRE(r.size() == 2);
  CHECK(r[0] == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(r[1] == std::vector<std::string>{"multi\nline", "x"});
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK_THROWS_AS(parse_csv_records("\"open"), DataError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_jsonl("/nonexistent/x.jsonl"), DataError);
}
