#pragma once

// Generation: beam search without length penalty, n-best extraction, top-k
// sampling, and bidirectional mutual-information reranking with a reverse
// model. Ties everywhere break toward the lexicographically smaller token
// sequence so decoding is fully deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "smrt/model.hpp"
#include "smrt/rng.hpp"
#include "smrt/vocab.hpp"

namespace smrt {

struct Hypothesis {
  std::vector<int> tokens;  // ends with <eos>
  double forward_score = 0.0;
  std::optional<double> reverse_score;
  std::optional<double> combined_score;
  bool forced_eos = false;
};

namespace detail {

struct BeamItem {
  std::vector<int> tokens;  // no <bos>, no <eos> yet
  double score = 0.0;
};

inline bool better(double sa, const std::vector<int>& ta, double sb, const std::vector<int>& tb) {
  if (sa != sb) return sa > sb;
  return ta < tb;
}

inline void log_softmax_row(const double* row, int v, std::vector<double>& out) {
  double mx = row[0];
  for (int j = 1; j < v; ++j) mx = std::max(mx, row[j]);
  double z = 0.0;
  for (int j = 0; j < v; ++j) z += std::exp(row[j] - mx);
  const double lz = mx + std::log(z);
  out.resize(v);
  for (int j = 0; j < v; ++j) out[j] = row[j] - lz;
}

}  // namespace detail

// Standard beam search, no length normalization. Returns up to beam_size
// finished hypotheses sorted by forward score descending. If nothing finishes
// within max_len, the surviving beams are closed with their actual <eos>
// log-probability and flagged.
inline std::vector<Hypothesis> beam_search(const CondSeqModel& model, const std::vector<int>& x,
                                           int beam_size, int max_len) {
  if (beam_size < 1) throw std::invalid_argument("beam_search: beam size must be >= 1");
  const int v = model.config().vocab_size;
  Tensor enc_out = model.encode(x);

  std::vector<detail::BeamItem> live{{}};
  std::vector<Hypothesis> finished;
  std::vector<double> lp;

  auto sort_hyps = [](std::vector<Hypothesis>& hyps) {
    std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
      return detail::better(a.forward_score, a.tokens, b.forward_score, b.tokens);
    });
  };

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    struct Cand {
      int parent;
      int token;
      double score;
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * static_cast<size_t>(v));
    for (size_t b = 0; b < live.size(); ++b) {
      std::vector<int> prefix;
      prefix.push_back(Vocabulary::kBos);
      prefix.insert(prefix.end(), live[b].tokens.begin(), live[b].tokens.end());
      Tensor logits = model.decode_logits(enc_out, prefix);
      detail::log_softmax_row(&logits.values()[(logits.rows() - 1) * static_cast<size_t>(v)], v,
                              lp);
      for (int tok = Vocabulary::kBos; tok < v; ++tok)
        if (tok != Vocabulary::kBos)
          cands.push_back({static_cast<int>(b), tok, live[b].score + lp[tok]});
    }
    std::sort(cands.begin(), cands.end(), [&live](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (live[a.parent].tokens != live[b.parent].tokens)
        return live[a.parent].tokens < live[b.parent].tokens;
      return a.token < b.token;
    });

    std::vector<detail::BeamItem> next;
    for (const Cand& c : cands) {
      if (static_cast<int>(next.size()) >= beam_size) break;
      if (c.token == Vocabulary::kEos) {
        Hypothesis h;
        h.tokens = live[c.parent].tokens;
        h.tokens.push_back(Vocabulary::kEos);
        h.forward_score = c.score;
        finished.push_back(std::move(h));
      } else {
        detail::BeamItem item;
        item.tokens = live[c.parent].tokens;
        item.tokens.push_back(c.token);
        item.score = c.score;
        next.push_back(std::move(item));
      }
    }
    live = std::move(next);

    if (static_cast<int>(finished.size()) >= beam_size) {
      sort_hyps(finished);
      finished.resize(beam_size);
      const double worst_kept = finished.back().forward_score;
      bool improvable = false;
      for (const auto& item : live)
        if (item.score > worst_kept) improvable = true;
      if (!improvable) break;
    }
  }

  if (finished.empty()) {
    // Nothing terminated: close out the best survivors, flagged.
    for (const auto& item : live) {
      std::vector<int> prefix;
      prefix.push_back(Vocabulary::kBos);
      prefix.insert(prefix.end(), item.tokens.begin(), item.tokens.end());
      Tensor logits = model.decode_logits(enc_out, prefix);
      detail::log_softmax_row(&logits.values()[(logits.rows() - 1) * static_cast<size_t>(v)], v,
                              lp);
      Hypothesis h;
      h.tokens = item.tokens;
      h.tokens.push_back(Vocabulary::kEos);
      h.forward_score = item.score + lp[Vocabulary::kEos];
      h.forced_eos = true;
      finished.push_back(std::move(h));
    }
  }
  sort_hyps(finished);
  if (static_cast<int>(finished.size()) > beam_size) finished.resize(beam_size);
  return finished;
}

// Top-n distinct finished hypotheses; may return fewer when the beam does not
// finish n sequences.
inline std::vector<Hypothesis> nbest(const CondSeqModel& model, const std::vector<int>& x, int n,
                                     int beam_size) {
  if (beam_size < n) throw std::invalid_argument("nbest: beam size must be >= n");
  auto hyps = beam_search(model, x, beam_size, model.config().max_seq_len - 1);
  if (static_cast<int>(hyps.size()) > n) hyps.resize(n);
  return hyps;
}

// (1-lambda) log p(y|x) + lambda log p(x|y).
inline double mmi_combine(double forward, double reverse, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("mmi_combine: lambda must be in [0,1]");
  return (1.0 - lambda) * forward + lambda * reverse;
}

// Fills reverse scores log p(x|y) and combined scores
// (1-lambda) log p(y|x) + lambda log p(x|y), then re-sorts (stable).
// The output is a permutation of the input hypotheses.
inline std::vector<Hypothesis> mmi_rerank(std::vector<Hypothesis> hyps,
                                          const CondSeqModel& reverse_model,
                                          const std::vector<int>& x, double lambda,
                                          std::uint64_t forward_vocab_hash = 0) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("mmi_rerank: lambda must be in [0,1]");
  if (forward_vocab_hash != 0 && reverse_model.vocab_hash() != forward_vocab_hash)
    throw std::invalid_argument("mmi_rerank: reverse model vocabulary mismatch");
  std::vector<int> x_target = x;
  x_target.push_back(Vocabulary::kEos);
  for (auto& h : hyps) {
    std::vector<int> y_source(h.tokens.begin(), h.tokens.end() - 1);  // strip <eos>
    h.reverse_score = reverse_model.sequence_logprob(y_source, x_target);
    h.combined_score = mmi_combine(h.forward_score, *h.reverse_score, lambda);
  }
  std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return *a.combined_score > *b.combined_score;
  });
  return hyps;
}

// Samples each token from the renormalized top-k of the model distribution.
// Deterministic in (seed, x).
inline Hypothesis top_k_sample_decode(const CondSeqModel& model, const std::vector<int>& x, int k,
                                      std::uint64_t seed, int max_len) {
  if (k < 1) throw std::invalid_argument("top_k_sample_decode: k must be >= 1");
  const int v = model.config().vocab_size;
  Tensor enc_out = model.encode(x);
  auto rng = make_rng(seed, "topk-decode", hash_tokens(x));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> lp;

  Hypothesis h;
  for (int step = 0; step < max_len; ++step) {
    std::vector<int> prefix;
    prefix.push_back(Vocabulary::kBos);
    prefix.insert(prefix.end(), h.tokens.begin(), h.tokens.end());
    Tensor logits = model.decode_logits(enc_out, prefix);
    detail::log_softmax_row(&logits.values()[(logits.rows() - 1) * static_cast<size_t>(v)], v, lp);

    std::vector<int> order;
    for (int tok = 0; tok < v; ++tok)
      if (tok != Vocabulary::kBos && tok != Vocabulary::kPad) order.push_back(tok);
    std::sort(order.begin(), order.end(), [&lp](int a, int b) {
      if (lp[a] != lp[b]) return lp[a] > lp[b];
      return a < b;
    });
    const int kk = std::min<int>(k, static_cast<int>(order.size()));
    double z = 0.0;
    for (int i = 0; i < kk; ++i) z += std::exp(lp[order[i]]);
    const double r = u(rng) * z;
    double cum = 0.0;
    int chosen = order[kk - 1];
    for (int i = 0; i < kk; ++i) {
      cum += std::exp(lp[order[i]]);
      if (r < cum) {
        chosen = order[i];
        break;
      }
    }
    h.tokens.push_back(chosen);
    h.forward_score += lp[chosen];
    if (chosen == Vocabulary::kEos) return h;
  }
  // Ran out of room: force-terminate like beam search does.
  std::vector<int> prefix;
  prefix.push_back(Vocabulary::kBos);
  prefix.insert(prefix.end(), h.tokens.begin(), h.tokens.end());
  Tensor logits = model.decode_logits(enc_out, prefix);
  detail::log_softmax_row(&logits.values()[(logits.rows() - 1) * static_cast<size_t>(v)], v, lp);
  h.tokens.push_back(Vocabulary::kEos);
  h.forward_score += lp[Vocabulary::kEos];
  h.forced_eos = true;
  return h;
}

}  // namespace smrt
