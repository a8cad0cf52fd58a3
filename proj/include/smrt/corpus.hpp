#pragma once

// Synthetic micro-dialog corpus: template instantiation, 90/5/5 splits with
// disjoint prompts, multi-reference test sets from the paraphrase grammar,
// and tab-separated persistence.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrt/grammar.hpp"
#include "smrt/rng.hpp"
#include "smrt/vocab.hpp"

namespace smrt {

struct DialogPair {
  std::vector<std::string> prompt;
  std::vector<std::string> response;
  std::int64_t id = 0;
};

struct MultiRefExample {
  std::vector<std::string> prompt;
  // refs[0] is always the original reference response.
  std::vector<std::vector<std::string>> refs;
};

struct Corpus {
  std::vector<DialogPair> train;
  std::vector<DialogPair> valid;
  std::vector<MultiRefExample> test;
};

// A template pair; <slot> placeholders are filled from TemplateSet::slots,
// with the same slot name bound consistently across prompt and response.
struct DialogTemplate {
  std::string topic;
  std::string prompt_pattern;
  std::string response_pattern;
};

struct TemplateSet {
  std::vector<DialogTemplate> templates;
  std::map<std::string, std::vector<std::string>> slots;

  int topic_count() const {
    std::set<std::string> topics;
    for (const auto& t : templates) topics.insert(t.topic);
    return static_cast<int>(topics.size());
  }
};

namespace detail {

inline bool is_slot_ref(const std::string& tok) {
  return tok.size() > 2 && tok.front() == '<' && tok.back() == '>';
}

inline std::vector<std::string> slot_names(const DialogTemplate& t) {
  std::vector<std::string> names;
  for (const auto& pattern : {t.prompt_pattern, t.response_pattern})
    for (const auto& tok : tokenize(pattern))
      if (is_slot_ref(tok)) {
        const std::string name = tok.substr(1, tok.size() - 2);
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      }
  return names;
}

inline std::vector<std::string> fill(const std::string& pattern,
                                     const std::map<std::string, std::string>& binding) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(pattern)) {
    if (is_slot_ref(tok))
      out.push_back(binding.at(tok.substr(1, tok.size() - 2)));
    else
      out.push_back(tok);
  }
  return out;
}

}  // namespace detail

// Deterministic in (grammar, templates, n_pairs, seed). Prompts are unique
// across the whole corpus, so the train/test prompt sets are disjoint.
inline Corpus generate_corpus(const ParaphraseGrammar& grammar, const TemplateSet& templates,
                              int n_pairs, std::uint64_t seed, int max_seq_len = 64,
                              int multi_ref_cap = 8) {
  if (templates.topic_count() < 5)
    throw std::invalid_argument("generate_corpus: template set must cover at least 5 topics");
  if (n_pairs < 100) throw std::invalid_argument("generate_corpus: need n_pairs >= 100");

  std::vector<DialogPair> all;
  std::set<std::vector<std::string>> seen_prompts;
  for (const auto& tmpl : templates.templates) {
    const auto names = detail::slot_names(tmpl);
    for (const auto& name : names)
      if (!templates.slots.count(name))
        throw std::invalid_argument("generate_corpus: template '" + tmpl.prompt_pattern +
                                    "' references unknown slot <" + name + ">");
    // Odometer over slot bindings.
    std::vector<size_t> idx(names.size(), 0);
    while (true) {
      std::map<std::string, std::string> binding;
      for (size_t k = 0; k < names.size(); ++k)
        binding[names[k]] = templates.slots.at(names[k])[idx[k]];
      DialogPair p;
      p.prompt = detail::fill(tmpl.prompt_pattern, binding);
      p.response = detail::fill(tmpl.response_pattern, binding);
      if (static_cast<int>(p.prompt.size()) > max_seq_len ||
          static_cast<int>(p.response.size()) > max_seq_len)
        throw std::invalid_argument("generate_corpus: template '" + tmpl.prompt_pattern +
                                    "' expands past max sequence length " +
                                    std::to_string(max_seq_len));
      if (seen_prompts.insert(p.prompt).second) all.push_back(std::move(p));

      size_t k = 0;
      for (; k < idx.size(); ++k) {
        if (++idx[k] < templates.slots.at(names[k]).size()) break;
        idx[k] = 0;
      }
      if (names.empty() || k == idx.size()) break;
    }
  }
  if (static_cast<int>(all.size()) < n_pairs)
    throw std::invalid_argument("generate_corpus: templates yield only " +
                                std::to_string(all.size()) + " unique prompts, need " +
                                std::to_string(n_pairs));

  auto rng = make_rng(seed, "corpus-shuffle");
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n_pairs);
  for (size_t i = 0; i < all.size(); ++i) all[i].id = static_cast<std::int64_t>(i);

  const int n_train = n_pairs * 90 / 100;
  const int n_valid = n_pairs * 5 / 100;
  Corpus c;
  c.train.assign(all.begin(), all.begin() + n_train);
  c.valid.assign(all.begin() + n_train, all.begin() + n_train + n_valid);
  for (auto it = all.begin() + n_train + n_valid; it != all.end(); ++it) {
    MultiRefExample ex;
    ex.prompt = it->prompt;
    ex.refs.push_back(it->response);
    for (const auto& p : grammar.paraphrases(it->response)) {
      if (static_cast<int>(ex.refs.size()) >= multi_ref_cap) break;
      if (p != it->response) ex.refs.push_back(p);
    }
    c.test.push_back(std::move(ex));
  }
  return c;
}

// --- persistence ------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace detail

inline void save_pairs(const std::string& path, const std::vector<DialogPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("corpus: cannot write " + path);
  for (const auto& p : pairs)
    out << detokenize(p.prompt) << '\t' << detokenize(p.response) << '\n';
}

inline std::vector<DialogPair> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("corpus: cannot read " + path);
  std::vector<DialogPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected prompt<TAB>response, got " +
                               std::to_string(fields.size()) + " fields");
    DialogPair p;
    p.prompt = tokenize(fields[0]);
    p.response = tokenize(fields[1]);
    if (p.prompt.empty() || p.response.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty prompt or response");
    p.id = static_cast<std::int64_t>(pairs.size());
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void save_multiref(const std::string& path, const std::vector<MultiRefExample>& exs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("corpus: cannot write " + path);
  for (const auto& ex : exs) {
    out << detokenize(ex.prompt);
    for (const auto& r : ex.refs) out << '\t' << detokenize(r);
    out << '\n';
  }
}

inline std::vector<MultiRefExample> load_multiref(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("corpus: cannot read " + path);
  std::vector<MultiRefExample> exs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() < 2)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected prompt<TAB>ref1[<TAB>ref2...]");
    MultiRefExample ex;
    ex.prompt = tokenize(fields[0]);
    for (size_t i = 1; i < fields.size(); ++i) ex.refs.push_back(tokenize(fields[i]));
    exs.push_back(std::move(ex));
  }
  return exs;
}

}  // namespace smrt
