#pragma once

// Metric reports: computing the full metric battery over a hypothesis file,
// plus a machine-readable on-disk format that keeps per-sentence score
// vectors so reports can be compared with the paired bootstrap later.

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrt/metrics.hpp"

namespace smrt {

struct MetricReport {
  std::string system;
  std::string ref_mode;  // "single" | "multi"
  int k = 1;
  int n_sentences = 0;
  std::vector<std::pair<std::string, double>> scores;
  std::vector<std::pair<std::string, std::vector<double>>> per_sentence;

  double score(const std::string& name) const {
    for (const auto& [n, v] : scores)
      if (n == name) return v;
    throw std::invalid_argument("report: no metric named '" + name + "'");
  }

  const std::vector<double>* sentence_scores(const std::string& name) const {
    for (const auto& [n, v] : per_sentence)
      if (n == name) return &v;
    return nullptr;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    char buf[64];
    out << "system = " << system << "\n";
    out << "ref_mode = " << ref_mode << "\n";
    out << "k = " << k << "\n";
    out << "sentences = " << n_sentences << "\n";
    out << "[scores]\n";
    for (const auto& [name, v] : scores) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << name << " = " << buf << "\n";
    }
    out << "[per-sentence]\n";
    for (const auto& [name, vec] : per_sentence) {
      out << name;
      for (double v : vec) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        out << ' ' << buf;
      }
      out << "\n";
    }
  }

  static MetricReport read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("report: cannot read " + path);
    MetricReport r;
    std::string line, section;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '[') {
        section = line;
        continue;
      }
      std::istringstream ls(line);
      if (section.empty()) {
        std::string key, eq, value;
        ls >> key >> eq >> value;
        if (eq != "=") throw std::runtime_error("report: malformed line '" + line + "'");
        if (key == "system") r.system = value;
        else if (key == "ref_mode") r.ref_mode = value;
        else if (key == "k") r.k = std::stoi(value);
        else if (key == "sentences") r.n_sentences = std::stoi(value);
        else throw std::runtime_error("report: unknown key '" + key + "'");
      } else if (section == "[scores]") {
        std::string name, eq;
        double v;
        ls >> name >> eq >> v;
        r.scores.emplace_back(name, v);
      } else if (section == "[per-sentence]") {
        std::string name;
        ls >> name;
        std::vector<double> vec;
        double v;
        while (ls >> v) vec.push_back(v);
        r.per_sentence.emplace_back(name, std::move(vec));
      } else {
        throw std::runtime_error("report: unknown section " + section);
      }
    }
    return r;
  }
};

// Scores hypotheses against reference sets (original reference first in each
// set). multi_ref=false restricts scoring to reference 0.
inline MetricReport evaluate_responses(const std::vector<TokenSeq>& hyps,
                                       const std::vector<std::vector<TokenSeq>>& refs,
                                       const EmbeddingTable& emb, bool multi_ref,
                                       const std::string& system_name) {
  if (hyps.size() != refs.size())
    throw std::invalid_argument("evaluate: " + std::to_string(hyps.size()) + " hypotheses vs " +
                                std::to_string(refs.size()) + " reference sets");
  if (hyps.empty()) throw std::invalid_argument("evaluate: nothing to score");

  MetricReport rep;
  rep.system = system_name;
  rep.ref_mode = multi_ref ? "multi" : "single";
  rep.n_sentences = static_cast<int>(hyps.size());
  for (const auto& rset : refs) {
    if (rset.empty()) throw std::invalid_argument("evaluate: reference set is empty");
    rep.k = std::max(rep.k, static_cast<int>(rset.size()));
  }
  const auto agg_mode = multi_ref ? RefAggregateMode::kMax : RefAggregateMode::kSingle;

  auto add_sentence_metric = [&](const std::string& name, auto&& score_one) {
    std::vector<double> per_sent;
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < hyps.size(); ++i) {
      std::vector<double> row;
      const size_t n_refs = multi_ref ? refs[i].size() : 1;
      for (size_t j = 0; j < n_refs; ++j) row.push_back(score_one(hyps[i], refs[i][j]));
      per_sent.push_back(multi_ref_aggregate({row}, agg_mode));
      rows.push_back(std::move(row));
    }
    rep.scores.emplace_back(name, multi_ref_aggregate(rows, agg_mode));
    rep.per_sentence.emplace_back(name, std::move(per_sent));
  };

  for (int n = 1; n <= 4; ++n)
    add_sentence_metric("sentence_bleu_" + std::to_string(n),
                        [n](const TokenSeq& h, const TokenSeq& r) {
                          return sentence_bleu(h, {r})[n - 1];
                        });
  add_sentence_metric("rouge_l", [](const TokenSeq& h, const TokenSeq& r) { return rouge_l(h, r); });
  add_sentence_metric("greedy_match", [&emb](const TokenSeq& h, const TokenSeq& r) {
    return greedy_matching(h, r, emb);
  });
  add_sentence_metric("embedding_average", [&emb](const TokenSeq& h, const TokenSeq& r) {
    return embedding_metric(h, r, emb, EmbeddingMetricMode::kAverage);
  });
  add_sentence_metric("vector_extrema", [&emb](const TokenSeq& h, const TokenSeq& r) {
    return embedding_metric(h, r, emb, EmbeddingMetricMode::kExtrema);
  });

  std::vector<std::vector<TokenSeq>> bleu_refs;
  for (const auto& rset : refs)
    bleu_refs.push_back(multi_ref ? rset : std::vector<TokenSeq>{rset[0]});
  const auto cb = corpus_bleu(hyps, bleu_refs);
  for (int n = 1; n <= 4; ++n)
    rep.scores.emplace_back("corpus_bleu_" + std::to_string(n), cb[n - 1]);

  for (int n = 1; n <= 3; ++n)
    rep.scores.emplace_back("distinct_" + std::to_string(n), distinct_n(hyps, n));
  return rep;
}

// Human-readable table form.
inline std::string format_report(const MetricReport& rep) {
  std::ostringstream os;
  os << "system: " << rep.system << "  (" << rep.ref_mode << "-ref, k=" << rep.k << ", "
     << rep.n_sentences << " sentences)\n";
  for (const auto& [name, v] : rep.scores) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %-20s %8.2f\n", name.c_str(), v);
    os << buf;
  }
  return os.str();
}

}  // namespace smrt
