#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "smrt/corpus.hpp"
#include "smrt/grammar.hpp"
#include "smrt/toyworld.hpp"
#include "smrt/vocab.hpp"

using namespace smrt;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& contents = "") : path(temp_path(name)) {
    if (!contents.empty()) {
      std::ofstream out(path, std::ios::binary);
      out << contents;
    }
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("vocabulary ids are frequency-ordered with reserved prefixes") {
  Vocabulary v = Vocabulary::build({{"b", "a", "b"}, {"c", "b", "a"}});
  REQUIRE(v.id("<pad>") == Vocabulary::kPad);
  REQUIRE(v.id("<bos>") == Vocabulary::kBos);
  REQUIRE(v.id("<eos>") == Vocabulary::kEos);
  REQUIRE(v.id("<unk>") == Vocabulary::kUnk);
  REQUIRE(v.id("b") == 4);  // freq 3
  REQUIRE(v.id("a") == 5);  // freq 2
  REQUIRE(v.id("c") == 6);  // freq 1
  REQUIRE(v.id("zebra") == Vocabulary::kUnk);
  REQUIRE(v.decode(v.encode({"a", "c"})) == std::vector<std::string>{"a", "c"});
}

TEST_CASE("vocabulary round-trips through disk with an identical hash") {
  Vocabulary v = Vocabulary::build({{"x", "y", "x", "z"}});
  TempFile f("smrt_test_vocab.txt");
  v.save(f.path);
  Vocabulary w = Vocabulary::load(f.path);
  REQUIRE(w.size() == v.size());
  REQUIRE(w.hash() == v.hash());
  for (int i = 0; i < v.size(); ++i) REQUIRE(w.token(i) == v.token(i));
}

TEST_CASE("grammar closure: synonyms, affixes, and reorders compose") {
  ParaphraseGrammar g;
  g.add_synonym_class({"like", "enjoy"});
  g.add_prefix({"oh"});
  ReorderRule r;
  r.lhs = {"%1", "is", "fun"};
  r.rhs = {"fun", "is", "what", "%1", "brings"};
  g.add_reorder_rule(r);

  auto set = g.paraphrases({"skiing", "is", "fun"});
  std::set<std::vector<std::string>> s(set.begin(), set.end());
  REQUIRE(s.count({"skiing", "is", "fun"}) == 1);  // original always kept
  REQUIRE(s.count({"oh", "skiing", "is", "fun"}) == 1);
  REQUIRE(s.count({"fun", "is", "what", "skiing", "brings"}) == 1);
  REQUIRE(s.count({"oh", "fun", "is", "what", "skiing", "brings"}) == 1);

  auto syn = g.paraphrases({"i", "like", "it"});
  std::set<std::vector<std::string>> s2(syn.begin(), syn.end());
  REQUIRE(s2.count({"i", "enjoy", "it"}) == 1);
  REQUIRE(s2.count({"oh", "i", "enjoy", "it"}) == 1);
}

TEST_CASE("paraphrase sets are sorted, deduplicated, and bounded") {
  ParaphraseGrammar g;
  g.add_synonym_class({"a1", "a2"});
  g.add_synonym_class({"b1", "b2"});
  g.set_closure_bound(3);
  auto set = g.paraphrases({"a1", "b1"});
  REQUIRE(static_cast<int>(set.size()) <= 3);
  // The original survives the cap.
  REQUIRE(std::find(set.begin(), set.end(), std::vector<std::string>{"a1", "b1"}) != set.end());
  REQUIRE(std::is_sorted(set.begin(), set.end()));
  for (size_t i = 1; i < set.size(); ++i) REQUIRE(set[i] != set[i - 1]);
}

TEST_CASE("an empty grammar maps every sentence to itself") {
  ParaphraseGrammar g;
  auto set = g.paraphrases({"hello", "there"});
  REQUIRE(set == std::vector<std::vector<std::string>>{{"hello", "there"}});
}

TEST_CASE("grammar persistence round-trips the full closure") {
  ParaphraseGrammar g = default_grammar();
  TempFile f("smrt_test_grammar.txt");
  g.save(f.path);
  ParaphraseGrammar h = ParaphraseGrammar::load(f.path);
  REQUIRE(h.closure_bound() == g.closure_bound());
  for (const auto& y : {std::vector<std::string>{"i", "like", "pizza"},
                        std::vector<std::string>{"yes", "i", "think", "it", "is", "great"}})
    REQUIRE(h.paraphrases(y) == g.paraphrases(y));
  REQUIRE(h.all_tokens() == g.all_tokens());
}

TEST_CASE("corpus generation: sizes, disjoint prompts, and determinism") {
  ParaphraseGrammar g = default_grammar();
  TemplateSet t = default_templates();
  REQUIRE(t.topic_count() >= 5);
  Corpus c = generate_corpus(g, t, 400, 11);
  REQUIRE(c.train.size() == 360);
  REQUIRE(c.valid.size() == 20);
  REQUIRE(c.test.size() == 20);

  std::set<std::vector<std::string>> prompts;
  for (const auto& p : c.train) REQUIRE(prompts.insert(p.prompt).second);
  for (const auto& p : c.valid) REQUIRE(prompts.insert(p.prompt).second);
  for (const auto& e : c.test) REQUIRE(prompts.insert(e.prompt).second);

  Corpus c2 = generate_corpus(g, t, 400, 11);
  REQUIRE(c2.train.size() == c.train.size());
  for (size_t i = 0; i < c.train.size(); ++i) {
    REQUIRE(c2.train[i].prompt == c.train[i].prompt);
    REQUIRE(c2.train[i].response == c.train[i].response);
  }
  Corpus c3 = generate_corpus(g, t, 400, 12);
  bool differs = false;
  for (size_t i = 0; i < c.train.size(); ++i)
    if (c3.train[i].prompt != c.train[i].prompt) differs = true;
  REQUIRE(differs);
}

TEST_CASE("multi-reference test sets start with the original and stay in-grammar") {
  ParaphraseGrammar g = default_grammar();
  Corpus c = generate_corpus(g, default_templates(), 300, 5);
  double total_refs = 0.0;
  for (const auto& ex : c.test) {
    REQUIRE_FALSE(ex.refs.empty());
    REQUIRE(static_cast<int>(ex.refs.size()) <= 8);
    auto set = g.paraphrases(ex.refs[0]);
    std::set<std::vector<std::string>> members(set.begin(), set.end());
    for (const auto& r : ex.refs) REQUIRE(members.count(r) == 1);
    std::set<std::vector<std::string>> uniq(ex.refs.begin(), ex.refs.end());
    REQUIRE(uniq.size() == ex.refs.size());
    total_refs += static_cast<double>(ex.refs.size());
  }
  REQUIRE(total_refs / c.test.size() >= 4.0);
}

TEST_CASE("corpus generation rejects degenerate inputs") {
  ParaphraseGrammar g = default_grammar();
  TemplateSet t = default_templates();
  REQUIRE_THROWS_AS(generate_corpus(g, t, 50, 1), std::invalid_argument);
  TemplateSet narrow;
  narrow.templates = {{"food", "do you like <food>", "i like <food>"}};
  narrow.slots["food"] = {"rice", "soup"};
  REQUIRE_THROWS_AS(generate_corpus(g, narrow, 100, 1), std::invalid_argument);
}

TEST_CASE("dialog pair files round-trip and report malformed lines precisely") {
  std::vector<DialogPair> pairs = {
      {{"hi", "there"}, {"hello"}, 0},
      {{"how", "are", "you"}, {"fine", "thanks"}, 1},
  };
  TempFile f("smrt_test_pairs.tsv");
  save_pairs(f.path, pairs);
  auto loaded = load_pairs(f.path);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].prompt == pairs[0].prompt);
  REQUIRE(loaded[1].response == pairs[1].response);
  REQUIRE(loaded[1].id == 1);

  TempFile bad("smrt_test_pairs_bad.tsv", "ok prompt\tok response\nmissing tab here\n");
  REQUIRE_THROWS_WITH(load_pairs(bad.path), Catch::Matchers::ContainsSubstring(":2"));

  TempFile crlf("smrt_test_pairs_crlf.tsv", "a b\tc d\r\n");
  auto win = load_pairs(crlf.path);
  REQUIRE(win.size() == 1);
  REQUIRE(win[0].response == std::vector<std::string>{"c", "d"});
}

TEST_CASE("multi-reference files round-trip") {
  std::vector<MultiRefExample> exs = {
      {{"q", "one"}, {{"r", "a"}, {"r", "b"}}},
      {{"q", "two"}, {{"only"}}},
  };
  TempFile f("smrt_test_multiref.tsv");
  save_multiref(f.path, exs);
  auto loaded = load_multiref(f.path);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].refs.size() == 2);
  REQUIRE(loaded[0].refs[1] == std::vector<std::string>{"r", "b"});
  REQUIRE(loaded[1].refs.size() == 1);

  TempFile bad("smrt_test_multiref_bad.tsv", "prompt without any reference\n");
  REQUIRE_THROWS_WITH(load_multiref(bad.path), Catch::Matchers::ContainsSubstring(":1"));
}

TEST_CASE("templates reject references to unknown slots") {
  ParaphraseGrammar g = default_grammar();
  TemplateSet t;
  for (int i = 0; i < 5; ++i)
    t.templates.push_back({"topic" + std::to_string(i), "q <mystery>", "a <mystery>"});
  REQUIRE_THROWS_WITH(generate_corpus(g, t, 100, 1),
                      Catch::Matchers::ContainsSubstring("mystery"));
}

TEST_CASE("reorder rules must preserve the slot set") {
  ParaphraseGrammar g;
  ReorderRule r;
  r.lhs = {"%1", "and", "%2"};
  r.rhs = {"%2", "and", "%1"};
  g.add_reorder_rule(r);  // fine
  ReorderRule bad;
  bad.lhs = {"%1", "x"};
  bad.rhs = {"%1", "%2"};
  REQUIRE_THROWS_AS(g.add_reorder_rule(bad), std::invalid_argument);
}
