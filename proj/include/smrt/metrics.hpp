#pragma once

// Word-overlap and embedding-based quality metrics, lexical diversity, and the
// paired bootstrap significance test. All scores are scaled to [0,100]; all
// functions are pure.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "smrt/rng.hpp"
#include "smrt/vocab.hpp"

namespace smrt {

using TokenSeq = std::vector<std::string>;

// 100 * distinct n-grams / total n-grams across all responses.
inline double distinct_n(const std::vector<TokenSeq>& responses, int n) {
  if (n < 1) throw std::invalid_argument("distinct_n: n must be >= 1");
  std::map<std::vector<std::string>, int> seen;
  std::int64_t total = 0;
  for (const auto& r : responses)
    for (size_t i = 0; i + n <= r.size(); ++i) {
      seen[{r.begin() + i, r.begin() + i + n}] = 1;
      ++total;
    }
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(seen.size()) / static_cast<double>(total);
}

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const TokenSeq& s, int n) {
  std::map<std::vector<std::string>, int> counts;
  for (size_t i = 0; i + n <= s.size(); ++i) ++counts[{s.begin() + i, s.begin() + i + n}];
  return counts;
}

// Clipped n-gram matches against the per-ngram max reference count.
inline std::pair<std::int64_t, std::int64_t> clipped_matches(const TokenSeq& hyp,
                                                             const std::vector<TokenSeq>& refs,
                                                             int n) {
  auto hyp_counts = ngram_counts(hyp, n);
  std::map<std::vector<std::string>, int> ref_max;
  for (const auto& r : refs)
    for (const auto& [ng, c] : ngram_counts(r, n)) ref_max[ng] = std::max(ref_max[ng], c);
  std::int64_t match = 0, total = 0;
  for (const auto& [ng, c] : hyp_counts) {
    auto it = ref_max.find(ng);
    match += std::min(c, it == ref_max.end() ? 0 : it->second);
    total += c;
  }
  return {match, total};
}

// Reference length closest to the hypothesis length; ties toward shorter.
inline std::int64_t closest_ref_len(size_t hyp_len, const std::vector<TokenSeq>& refs) {
  std::int64_t best = static_cast<std::int64_t>(refs[0].size());
  for (const auto& r : refs) {
    const auto len = static_cast<std::int64_t>(r.size());
    const auto h = static_cast<std::int64_t>(hyp_len);
    if (std::llabs(len - h) < std::llabs(best - h) ||
        (std::llabs(len - h) == std::llabs(best - h) && len < best))
      best = len;
  }
  return best;
}

inline double brevity_penalty(std::int64_t hyp_len, std::int64_t ref_len) {
  if (hyp_len >= ref_len) return 1.0;
  if (hyp_len == 0) return 0.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

inline std::array<double, 4> bleu_from_precisions(const std::array<double, 4>& prec, double bp,
                                                  int max_n) {
  std::array<double, 4> bleu{0.0, 0.0, 0.0, 0.0};
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    if (prec[n - 1] <= 0.0) zero = true;
    if (!zero) log_sum += std::log(prec[n - 1]);
    bleu[n - 1] = zero ? 0.0 : 100.0 * bp * std::exp(log_sum / n);
  }
  return bleu;
}

}  // namespace detail

// Sentence BLEU-1..4 with add-one smoothing on n>=2 precisions, multi-reference
// clipping, and brevity penalty against the closest reference length.
inline std::array<double, 4> sentence_bleu(const TokenSeq& hyp, const std::vector<TokenSeq>& refs,
                                           int max_n = 4) {
  if (refs.empty()) throw std::invalid_argument("sentence_bleu: no references");
  if (hyp.empty()) return {0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> prec{};
  for (int n = 1; n <= max_n; ++n) {
    auto [match, total] = detail::clipped_matches(hyp, refs, n);
    if (n == 1)
      prec[0] = total > 0 ? static_cast<double>(match) / total : 0.0;
    else
      prec[n - 1] = static_cast<double>(match + 1) / static_cast<double>(total + 1);
  }
  const double bp = detail::brevity_penalty(static_cast<std::int64_t>(hyp.size()),
                                            detail::closest_ref_len(hyp.size(), refs));
  return detail::bleu_from_precisions(prec, bp, max_n);
}

// Unsmoothed corpus BLEU-1..4 with per-sentence multi-reference clipping and
// closest-reference brevity penalty.
inline std::array<double, 4> corpus_bleu(const std::vector<TokenSeq>& hyps,
                                         const std::vector<std::vector<TokenSeq>>& multi_refs,
                                         int max_n = 4) {
  if (hyps.empty()) throw std::invalid_argument("corpus_bleu: empty hypothesis set");
  if (hyps.size() != multi_refs.size())
    throw std::invalid_argument("corpus_bleu: " + std::to_string(hyps.size()) +
                                " hypotheses vs " + std::to_string(multi_refs.size()) +
                                " reference sets");
  std::array<std::int64_t, 4> match{}, total{};
  std::int64_t hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    if (multi_refs[i].empty()) throw std::invalid_argument("corpus_bleu: empty reference set");
    for (int n = 1; n <= max_n; ++n) {
      auto [m, t] = detail::clipped_matches(hyps[i], multi_refs[i], n);
      match[n - 1] += m;
      total[n - 1] += t;
    }
    hyp_len += static_cast<std::int64_t>(hyps[i].size());
    ref_len += detail::closest_ref_len(hyps[i].size(), multi_refs[i]);
  }
  std::array<double, 4> prec{};
  for (int n = 1; n <= max_n; ++n)
    prec[n - 1] = total[n - 1] > 0 ? static_cast<double>(match[n - 1]) / total[n - 1] : 0.0;
  return detail::bleu_from_precisions(prec, detail::brevity_penalty(hyp_len, ref_len), max_n);
}

// 100 * LCS F-measure: P = LCS/|hyp|, R = LCS/|ref|.
inline double rouge_l(const TokenSeq& hyp, const TokenSeq& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const size_t m = hyp.size(), n = ref.size();
  std::vector<std::int64_t> prev(n + 1, 0), cur(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j)
      cur[j] = hyp[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / m, r = lcs / n;
  return 100.0 * 2.0 * p * r / (p + r);
}

// Token embeddings for the embedding-based metrics. Out-of-table tokens map to
// a fixed UNK vector.
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::vector<double> unk;

  const std::vector<double>& lookup(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? unk : it->second;
  }

  static EmbeddingTable seeded_random(const std::vector<std::string>& tokens, int dim,
                                      std::uint64_t seed) {
    EmbeddingTable t;
    t.dim = dim;
    auto rng = make_rng(seed, "embedding-table");
    std::normal_distribution<double> g(0.0, 1.0);
    t.unk.resize(dim);
    for (double& v : t.unk) v = g(rng);
    for (const auto& tok : tokens) {
      std::vector<double> vec(dim);
      for (double& v : vec) v = g(rng);
      t.vectors.emplace(tok, std::move(vec));
    }
    return t;
  }
};

namespace detail {

// Cosine clipped to [0,1]; zero-norm vectors score 0.
inline double cosine_clipped(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::max(0.0, dot / std::sqrt(na * nb));
}

inline double greedy_direction(const TokenSeq& from, const TokenSeq& to,
                               const EmbeddingTable& emb) {
  double acc = 0.0;
  for (const auto& ft : from) {
    double best = 0.0;
    for (const auto& tt : to)
      best = std::max(best, cosine_clipped(emb.lookup(ft), emb.lookup(tt)));
    acc += best;
  }
  return acc / static_cast<double>(from.size());
}

}  // namespace detail

// Mean of the two greedy matching directions, scaled to [0,100].
inline double greedy_matching(const TokenSeq& hyp, const TokenSeq& ref,
                              const EmbeddingTable& emb) {
  if (hyp.empty() || ref.empty()) return 0.0;
  return 100.0 * 0.5 *
         (detail::greedy_direction(ref, hyp, emb) + detail::greedy_direction(hyp, ref, emb));
}

enum class EmbeddingMetricMode { kAverage, kExtrema };

// average: cosine of mean token vectors. extrema: cosine of per-dimension
// max-magnitude vectors (ties toward the positive value).
inline double embedding_metric(const TokenSeq& hyp, const TokenSeq& ref, const EmbeddingTable& emb,
                               EmbeddingMetricMode mode) {
  if (hyp.empty() || ref.empty()) return 0.0;
  auto sentence_vec = [&emb, mode](const TokenSeq& s) {
    std::vector<double> v(emb.dim, 0.0);
    for (const auto& tok : s) {
      const auto& e = emb.lookup(tok);
      for (int d = 0; d < emb.dim; ++d) {
        if (mode == EmbeddingMetricMode::kAverage)
          v[d] += e[d] / static_cast<double>(s.size());
        else if (std::fabs(e[d]) > std::fabs(v[d]) || (std::fabs(e[d]) == std::fabs(v[d]) && e[d] > v[d]))
          v[d] = e[d];
      }
    }
    return v;
  };
  return 100.0 * detail::cosine_clipped(sentence_vec(hyp), sentence_vec(ref));
}

enum class RefAggregateMode { kMax, kSingle };

// per_ref_scores: one row per sentence, one column per reference (reference 0
// first). max mode picks each sentence's best reference, then averages.
inline double multi_ref_aggregate(const std::vector<std::vector<double>>& per_ref_scores,
                                  RefAggregateMode mode) {
  if (per_ref_scores.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& row : per_ref_scores) {
    if (row.empty()) throw std::invalid_argument("multi_ref_aggregate: sentence with no scores");
    acc += mode == RefAggregateMode::kSingle ? row[0] : *std::max_element(row.begin(), row.end());
  }
  return acc / static_cast<double>(per_ref_scores.size());
}

enum class BootstrapVerdict { kAWins, kBWins, kTie };

struct BootstrapResult {
  BootstrapVerdict verdict = BootstrapVerdict::kTie;
  double frac_a_wins = 0.0;
  double frac_b_wins = 0.0;
};

// Paired bootstrap over test items: resample indices with replacement, count
// how often each system's resampled mean beats the other's.
inline BootstrapResult pairwise_bootstrap(const std::vector<double>& a,
                                          const std::vector<double>& b, int resamples,
                                          double alpha, std::uint64_t seed) {
  if (a.size() != b.size())
    throw std::invalid_argument("pairwise_bootstrap: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " items");
  if (a.empty()) throw std::invalid_argument("pairwise_bootstrap: empty score vectors");
  if (resamples < 1) throw std::invalid_argument("pairwise_bootstrap: need resamples >= 1");
  auto rng = make_rng(seed, "bootstrap");
  std::uniform_int_distribution<size_t> pick(0, a.size() - 1);
  int wins_a = 0, wins_b = 0;
  for (int r = 0; r < resamples; ++r) {
    double sum_a = 0.0, sum_b = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const size_t j = pick(rng);
      sum_a += a[j];
      sum_b += b[j];
    }
    if (sum_a > sum_b) ++wins_a;
    else if (sum_b > sum_a) ++wins_b;
  }
  BootstrapResult res;
  res.frac_a_wins = static_cast<double>(wins_a) / resamples;
  res.frac_b_wins = static_cast<double>(wins_b) / resamples;
  if (res.frac_a_wins >= 1.0 - alpha) res.verdict = BootstrapVerdict::kAWins;
  else if (res.frac_b_wins >= 1.0 - alpha) res.verdict = BootstrapVerdict::kBWins;
  return res;
}

}  // namespace smrt
