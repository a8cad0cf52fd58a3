#pragma once

// Paraphraser teacher distributions q(y'_i = v | y, y'_{<i}): an exact
// grammar-backed oracle, a model-backed learned variant, top-N truncation,
// and per-epoch paraphrase path sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "smrt/grammar.hpp"
#include "smrt/model.hpp"
#include "smrt/rng.hpp"
#include "smrt/vocab.hpp"

namespace smrt {

struct TeacherStepDist {
  std::vector<double> probs;  // length |V|, sums to 1

  std::vector<int> support() const {
    std::vector<int> s;
    for (size_t v = 0; v < probs.size(); ++v)
      if (probs[v] > 0.0) s.push_back(static_cast<int>(v));
    return s;
  }

  double entropy() const {
    double h = 0.0;
    for (double p : probs)
      if (p > 0.0) h -= p * std::log(p);
    return h;
  }

  void check_normalized(double tol = 1e-9) const {
    const double s = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::fabs(s - 1.0) > tol)
      throw std::invalid_argument("teacher distribution sums to " + std::to_string(s) +
                                  ", expected 1");
  }
};

class Teacher {
 public:
  virtual ~Teacher() = default;
  virtual TeacherStepDist step_dist(const std::vector<int>& y,
                                    const std::vector<int>& prefix) const = 0;
  virtual std::uint64_t vocab_hash() const = 0;
};

// Uniform distribution over the exact paraphrase set of y; next-token
// probabilities are extension counts over paraphrases consistent with the
// prefix, with <eos> carrying the mass of paraphrases equal to the prefix.
class OracleTeacher : public Teacher {
 public:
  OracleTeacher(const ParaphraseGrammar& grammar, const Vocabulary& vocab)
      : grammar_(grammar), vocab_(vocab), vocab_hash_(vocab.hash()) {}

  TeacherStepDist step_dist(const std::vector<int>& y,
                            const std::vector<int>& prefix) const override {
    const auto& set = paraphrase_set(y);
    std::vector<double> counts(static_cast<size_t>(vocab_.size()), 0.0);
    double total = 0.0;
    for (const auto& p : set) {
      if (p.size() < prefix.size()) continue;
      if (!std::equal(prefix.begin(), prefix.end(), p.begin())) continue;
      total += 1.0;
      if (p.size() == prefix.size())
        counts[Vocabulary::kEos] += 1.0;
      else
        counts[p[prefix.size()]] += 1.0;
    }
    if (total == 0.0)
      throw std::invalid_argument(
          "oracle teacher: prefix is not consistent with any paraphrase of the reference");
    TeacherStepDist d;
    d.probs.resize(counts.size());
    for (size_t v = 0; v < counts.size(); ++v) d.probs[v] = counts[v] / total;
    return d;
  }

  std::uint64_t vocab_hash() const override { return vocab_hash_; }

  const std::vector<std::vector<int>>& paraphrase_set(const std::vector<int>& y) const {
    auto it = cache_.find(y);
    if (it != cache_.end()) return it->second;
    std::vector<std::vector<int>> ids;
    for (const auto& p : grammar_.paraphrases(vocab_.decode(y))) ids.push_back(vocab_.encode(p));
    return cache_.emplace(y, std::move(ids)).first->second;
  }

 private:
  const ParaphraseGrammar& grammar_;
  const Vocabulary& vocab_;
  std::uint64_t vocab_hash_;
  mutable std::map<std::vector<int>, std::vector<std::vector<int>>> cache_;
};

// Softmax of a trained paraphrase model's logits at the prefix position.
class LearnedTeacher : public Teacher {
 public:
  explicit LearnedTeacher(const CondSeqModel& model) : model_(model) {}

  TeacherStepDist step_dist(const std::vector<int>& y,
                            const std::vector<int>& prefix) const override {
    std::vector<int> dec_prefix;
    dec_prefix.push_back(Vocabulary::kBos);
    dec_prefix.insert(dec_prefix.end(), prefix.begin(), prefix.end());
    Tensor logits = model_.forward_logits(y, dec_prefix);
    const int v = model_.config().vocab_size;
    const int last = logits.rows() - 1;
    const double* row = &logits.values()[static_cast<size_t>(last) * v];
    double mx = row[0];
    for (int j = 1; j < v; ++j) mx = std::max(mx, row[j]);
    TeacherStepDist d;
    d.probs.resize(v);
    double z = 0.0;
    for (int j = 0; j < v; ++j) {
      d.probs[j] = std::exp(row[j] - mx);
      z += d.probs[j];
    }
    for (int j = 0; j < v; ++j) d.probs[j] /= z;
    return d;
  }

  std::uint64_t vocab_hash() const override { return model_.vocab_hash(); }

 private:
  const CondSeqModel& model_;
};

// Keeps the N most probable tokens (ties broken toward the smaller token id),
// zeroes the rest, renormalizes. Idempotent for fixed N.
inline TeacherStepDist truncate_top_n(const TeacherStepDist& dist, int n) {
  if (n < 1) throw std::invalid_argument("truncate_top_n: N must be >= 1");
  std::vector<int> order(dist.probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&dist](int a, int b) {
    if (dist.probs[a] != dist.probs[b]) return dist.probs[a] > dist.probs[b];
    return a < b;
  });
  TeacherStepDist out;
  out.probs.assign(dist.probs.size(), 0.0);
  double kept = 0.0;
  for (int i = 0; i < n && i < static_cast<int>(order.size()); ++i) {
    out.probs[order[i]] = dist.probs[order[i]];
    kept += dist.probs[order[i]];
  }
  if (kept <= 0.0) throw std::invalid_argument("truncate_top_n: no probability mass to keep");
  for (double& p : out.probs) p /= kept;
  return out;
}

struct SampledPath {
  std::vector<int> tokens;               // ends with <eos>
  std::vector<TeacherStepDist> dists;    // truncated, aligned with tokens
  int epoch = 0;
  std::uint64_t seed = 0;
  bool forced_eos = false;

  double mean_step_entropy() const {
    if (dists.empty()) return 0.0;
    double h = 0.0;
    for (const auto& d : dists) h += d.entropy();
    return h / static_cast<double>(dists.size());
  }
};

// Autoregressive draw from the top-N-truncated teacher. Deterministic in
// (seed, epoch, y); a path that hits max_len without <eos> is terminated with
// a forced one-hot <eos> step and flagged.
inline SampledPath sample_path(const Teacher& teacher, const std::vector<int>& y, int n,
                               std::uint64_t seed, int epoch, int max_len = 64) {
  if (n < 1) throw std::invalid_argument("sample_path: N must be >= 1");
  auto rng = make_rng(seed, "paraphrase-path", static_cast<std::uint64_t>(epoch), hash_tokens(y));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SampledPath path;
  path.epoch = epoch;
  path.seed = seed;
  for (int i = 0; i < max_len; ++i) {
    if (i == max_len - 1) {
      TeacherStepDist forced;
      const size_t vocab = path.dists.empty() ? teacher.step_dist(y, {}).probs.size()
                                              : path.dists.back().probs.size();
      forced.probs.assign(vocab, 0.0);
      forced.probs[Vocabulary::kEos] = 1.0;
      path.dists.push_back(std::move(forced));
      path.tokens.push_back(Vocabulary::kEos);
      path.forced_eos = true;
      break;
    }
    TeacherStepDist td = truncate_top_n(teacher.step_dist(y, path.tokens), n);
    const double r = u(rng);
    double cum = 0.0;
    int chosen = -1;
    for (size_t v = 0; v < td.probs.size(); ++v) {
      if (td.probs[v] <= 0.0) continue;
      cum += td.probs[v];
      chosen = static_cast<int>(v);
      if (r < cum) break;
    }
    path.tokens.push_back(chosen);
    path.dists.push_back(std::move(td));
    if (chosen == Vocabulary::kEos) break;
  }
  return path;
}

}  // namespace smrt
