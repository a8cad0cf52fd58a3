#pragma once

// Paraphrase grammar: synonym classes, optional prefix/suffix phrases, and
// single-token reorder rules. The paraphrase set of a sentence is the finite,
// deterministic closure of these rewrites; it always contains the original.
//
// File format (comments start with '#'):
//   [synonyms]    one class per line, whitespace-separated tokens
//   [prefixes]    one optional prefix phrase per line
//   [suffixes]    one optional suffix phrase per line
//   [reorder]     lhs -> rhs, where %N slots each match a single token
//   closure_bound = 512

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "smrt/vocab.hpp"

namespace smrt {

struct ReorderRule {
  std::vector<std::string> lhs;
  std::vector<std::string> rhs;
};

class ParaphraseGrammar {
 public:
  void add_synonym_class(std::vector<std::string> members) {
    if (members.size() < 2)
      throw std::invalid_argument("grammar: synonym class needs at least 2 tokens");
    const int idx = static_cast<int>(classes_.size());
    for (const auto& t : members) {
      if (class_of_.count(t))
        throw std::invalid_argument("grammar: token '" + t + "' is in two synonym classes");
      class_of_[t] = idx;
    }
    classes_.push_back(std::move(members));
  }

  void add_prefix(std::vector<std::string> phrase) { prefixes_.push_back(std::move(phrase)); }
  void add_suffix(std::vector<std::string> phrase) { suffixes_.push_back(std::move(phrase)); }

  void add_reorder_rule(ReorderRule rule) {
    std::set<std::string> lslots, rslots;
    for (const auto& t : rule.lhs)
      if (is_slot(t)) lslots.insert(t);
    for (const auto& t : rule.rhs)
      if (is_slot(t)) rslots.insert(t);
    if (lslots != rslots)
      throw std::invalid_argument("grammar: reorder rule slot mismatch between sides");
    rules_.push_back(std::move(rule));
  }

  void set_closure_bound(int b) {
    if (b < 1) throw std::invalid_argument("grammar: closure bound must be >= 1");
    closure_bound_ = b;
  }
  int closure_bound() const { return closure_bound_; }

  // Enumerates the paraphrase set: reorder variants (identity plus one rule
  // application at any position), then synonym substitutions, then optional
  // prefix/suffix phrases. Sorted, deduplicated, capped at closure_bound with
  // the original always retained.
  std::vector<std::vector<std::string>> paraphrases(const std::vector<std::string>& y) const {
    std::set<std::vector<std::string>> out;

    std::vector<std::vector<std::string>> reordered{y};
    for (const auto& rule : rules_)
      for (size_t pos = 0; pos + rule.lhs.size() <= y.size(); ++pos) {
        std::unordered_map<std::string, std::string> binding;
        bool match = true;
        for (size_t k = 0; k < rule.lhs.size() && match; ++k) {
          const std::string& pat = rule.lhs[k];
          if (is_slot(pat))
            binding[pat] = y[pos + k];
          else if (pat != y[pos + k])
            match = false;
        }
        if (!match) continue;
        std::vector<std::string> variant(y.begin(), y.begin() + pos);
        for (const auto& pat : rule.rhs)
          variant.push_back(is_slot(pat) ? binding.at(pat) : pat);
        variant.insert(variant.end(), y.begin() + pos + rule.lhs.size(), y.end());
        reordered.push_back(std::move(variant));
      }

    const size_t enumeration_cap = static_cast<size_t>(closure_bound_) * 8;
    for (const auto& base : reordered) {
      std::vector<std::vector<std::string>> subs{{}};
      for (const auto& tok : base) {
        auto it = class_of_.find(tok);
        const std::vector<std::string> options =
            it == class_of_.end() ? std::vector<std::string>{tok} : classes_[it->second];
        std::vector<std::vector<std::string>> next;
        for (const auto& prefix : subs)
          for (const auto& opt : options) {
            next.push_back(prefix);
            next.back().push_back(opt);
            if (next.size() > enumeration_cap) break;
          }
        subs = std::move(next);
        if (subs.size() > enumeration_cap) subs.resize(enumeration_cap);
      }
      for (const auto& s : subs) {
        out.insert(s);
        for (const auto& p : prefixes_) {
          std::vector<std::string> v = p;
          v.insert(v.end(), s.begin(), s.end());
          out.insert(std::move(v));
        }
        for (const auto& suf : suffixes_) {
          std::vector<std::string> v = s;
          v.insert(v.end(), suf.begin(), suf.end());
          out.insert(std::move(v));
        }
        if (out.size() > enumeration_cap) break;
      }
    }
    out.insert(y);

    std::vector<std::vector<std::string>> result(out.begin(), out.end());
    if (static_cast<int>(result.size()) > closure_bound_) {
      std::vector<std::vector<std::string>> capped{y};
      for (const auto& s : result) {
        if (static_cast<int>(capped.size()) >= closure_bound_) break;
        if (s != y) capped.push_back(s);
      }
      std::sort(capped.begin(), capped.end());
      result = std::move(capped);
    }
    return result;
  }

  std::vector<std::string> all_tokens() const {
    std::set<std::string> toks;
    for (const auto& c : classes_)
      for (const auto& t : c) toks.insert(t);
    for (const auto& p : prefixes_)
      for (const auto& t : p) toks.insert(t);
    for (const auto& p : suffixes_)
      for (const auto& t : p) toks.insert(t);
    for (const auto& r : rules_) {
      for (const auto& t : r.lhs)
        if (!is_slot(t)) toks.insert(t);
      for (const auto& t : r.rhs)
        if (!is_slot(t)) toks.insert(t);
    }
    return {toks.begin(), toks.end()};
  }

  void save(const std::string& path) const {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw std::runtime_error("grammar: cannot write " + path);
    outf << "closure_bound = " << closure_bound_ << "\n";
    outf << "[synonyms]\n";
    for (const auto& c : classes_) outf << detokenize(c) << "\n";
    outf << "[prefixes]\n";
    for (const auto& p : prefixes_) outf << detokenize(p) << "\n";
    outf << "[suffixes]\n";
    for (const auto& p : suffixes_) outf << detokenize(p) << "\n";
    outf << "[reorder]\n";
    for (const auto& r : rules_) outf << detokenize(r.lhs) << " -> " << detokenize(r.rhs) << "\n";
  }

  static ParaphraseGrammar load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("grammar: cannot read " + path);
    ParaphraseGrammar g;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      auto toks = smrt::tokenize(line);
      if (toks.empty()) continue;
      if (toks[0].front() == '[') {
        section = toks[0];
        continue;
      }
      if (toks.size() == 3 && toks[0] == "closure_bound" && toks[1] == "=") {
        g.set_closure_bound(std::stoi(toks[2]));
        continue;
      }
      if (section == "[synonyms]") {
        g.add_synonym_class(toks);
      } else if (section == "[prefixes]") {
        g.add_prefix(toks);
      } else if (section == "[suffixes]") {
        g.add_suffix(toks);
      } else if (section == "[reorder]") {
        auto arrow = std::find(toks.begin(), toks.end(), "->");
        if (arrow == toks.end())
          throw std::runtime_error("grammar: line " + std::to_string(lineno) +
                                   ": reorder rule missing '->'");
        g.add_reorder_rule({{toks.begin(), arrow}, {arrow + 1, toks.end()}});
      } else {
        throw std::runtime_error("grammar: line " + std::to_string(lineno) +
                                 ": content outside any section");
      }
    }
    return g;
  }

 private:
  static bool is_slot(const std::string& t) { return t.size() >= 2 && t[0] == '%'; }

  std::vector<std::vector<std::string>> classes_;
  std::unordered_map<std::string, int> class_of_;
  std::vector<std::vector<std::string>> prefixes_;
  std::vector<std::vector<std::string>> suffixes_;
  std::vector<ReorderRule> rules_;
  int closure_bound_ = 512;
};

}  // namespace smrt
