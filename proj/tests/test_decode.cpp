#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "smrt/decode.hpp"

using namespace smrt;

namespace {

ModelConfig tiny_config(int vocab = 6) {
  ModelConfig cfg;
  cfg.encoder_layers = cfg.decoder_layers = 1;
  cfg.d_model = 8;
  cfg.attention_heads = 2;
  cfg.ffn_dim = 16;
  cfg.dropout = cfg.attention_dropout = cfg.relu_dropout = 0.0;
  cfg.vocab_size = vocab;
  cfg.max_seq_len = 16;
  return cfg;
}

// Every terminated sequence with body tokens drawn from {eos+1..V-1} up to
// max_body tokens, with its exact model score.
std::vector<Hypothesis> enumerate_all(const CondSeqModel& model, const std::vector<int>& x,
                                      int max_body) {
  std::vector<Hypothesis> all;
  const int v = model.config().vocab_size;
  std::vector<std::vector<int>> frontier{{}};
  for (int len = 0; len <= max_body; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& body : frontier) {
      Hypothesis h;
      h.tokens = body;
      h.tokens.push_back(Vocabulary::kEos);
      h.forward_score = model.sequence_logprob(x, h.tokens);
      all.push_back(h);
      if (len < max_body)
        for (int tok = Vocabulary::kEos + 1; tok < v; ++tok) {
          auto b = body;
          b.push_back(tok);
          next.push_back(std::move(b));
        }
    }
    frontier = std::move(next);
  }
  return all;
}

}  // namespace

TEST_CASE("beam search with a saturating beam matches exhaustive enumeration") {
  for (std::uint64_t seed : {1, 2, 3}) {
    CondSeqModel model(tiny_config(), seed, 0);
    const std::vector<int> x = {4, 5, 3};
    // 3 expandable non-eos tokens, depth <= 3: at most 27 live prefixes, so
    // beam 64 explores everything and must return the global argmax.
    auto beam = beam_search(model, x, 64, 4);
    auto all = enumerate_all(model, x, 3);
    std::sort(all.begin(), all.end(), [](const Hypothesis& a, const Hypothesis& b) {
      if (a.forward_score != b.forward_score) return a.forward_score > b.forward_score;
      return a.tokens < b.tokens;
    });
    REQUIRE_FALSE(beam.empty());
    REQUIRE(beam[0].tokens == all[0].tokens);
    REQUIRE(beam[0].forward_score == Catch::Approx(all[0].forward_score).margin(1e-9));
  }
}

TEST_CASE("beam scores equal independent sequence log-probabilities") {
  CondSeqModel model(tiny_config(), 7, 0);
  const std::vector<int> x = {4, 3};
  for (const auto& h : beam_search(model, x, 8, 6)) {
    REQUIRE(h.tokens.back() == Vocabulary::kEos);
    REQUIRE(h.forward_score ==
            Catch::Approx(model.sequence_logprob(x, h.tokens)).margin(1e-9));
  }
}

TEST_CASE("beam size 1 is greedy decoding") {
  CondSeqModel model(tiny_config(), 9, 0);
  const std::vector<int> x = {5, 4};
  auto beam = beam_search(model, x, 1, 8);
  REQUIRE(beam.size() == 1);

  // Greedy reference: argmax token at each step (excluding pad/bos).
  Tensor enc = model.encode(x);
  std::vector<int> greedy;
  for (int step = 0; step < 8; ++step) {
    std::vector<int> prefix{Vocabulary::kBos};
    prefix.insert(prefix.end(), greedy.begin(), greedy.end());
    Tensor logits = model.decode_logits(enc, prefix);
    const int v = logits.cols();
    const double* row = &logits.values()[static_cast<size_t>(logits.rows() - 1) * v];
    int best = Vocabulary::kEos;
    for (int tok = Vocabulary::kEos; tok < v; ++tok)
      if (row[tok] > row[best]) best = tok;
    greedy.push_back(best);
    if (best == Vocabulary::kEos) break;
  }
  // Like beam search, an unterminated greedy rollout is closed with <eos>.
  if (greedy.empty() || greedy.back() != Vocabulary::kEos) greedy.push_back(Vocabulary::kEos);
  REQUIRE(beam[0].tokens == greedy);
}

TEST_CASE("beam results are sorted, distinct, terminated, and deterministic") {
  CondSeqModel model(tiny_config(8), 11, 0);
  const std::vector<int> x = {4, 6, 7};
  auto a = beam_search(model, x, 6, 8);
  auto b = beam_search(model, x, 6, 8);
  REQUIRE(a.size() == b.size());
  std::set<std::vector<int>> seen;
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].tokens == b[i].tokens);
    REQUIRE(a[i].forward_score == b[i].forward_score);
    REQUIRE(a[i].tokens.back() == Vocabulary::kEos);
    REQUIRE(seen.insert(a[i].tokens).second);
    if (i > 0) REQUIRE(a[i - 1].forward_score >= a[i].forward_score);
  }
}

TEST_CASE("hypotheses that never emit <eos> are force-closed and flagged") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    CondSeqModel model(tiny_config(), seed, 0);
    const std::vector<int> x = {4};
    auto hyps = beam_search(model, x, 2, 1);  // one step only
    REQUIRE_FALSE(hyps.empty());
    for (const auto& h : hyps) {
      REQUIRE(h.tokens.back() == Vocabulary::kEos);
      // Forced or not, the reported score must still be the true model score.
      REQUIRE(h.forward_score ==
              Catch::Approx(model.sequence_logprob(x, h.tokens)).margin(1e-9));
      if (h.tokens.size() > 1) REQUIRE(h.forced_eos);
    }
  }
}

TEST_CASE("nbest returns at most n distinct hypotheses and validates beam size") {
  CondSeqModel model(tiny_config(), 13, 0);
  const std::vector<int> x = {5};
  auto hyps = nbest(model, x, 4, 16);
  REQUIRE(hyps.size() <= 4);
  REQUIRE_THROWS_AS(nbest(model, x, 8, 4), std::invalid_argument);
}

TEST_CASE("mmi_combine reproduces the worked example exactly") {
  // forward -1 with reverse -3 vs forward -2 with reverse -1, lambda 0.4:
  // pure forward ranking prefers the first, combined ranking flips it.
  REQUIRE(mmi_combine(-1.0, -3.0, 0.4) == Catch::Approx(-1.8).margin(1e-12));
  REQUIRE(mmi_combine(-2.0, -1.0, 0.4) == Catch::Approx(-1.6).margin(1e-12));
  REQUIRE(mmi_combine(-1.0, -3.0, 0.4) == 0.6 * -1.0 + 0.4 * -3.0);  // bit-exact
  REQUIRE(mmi_combine(-1.0, -3.0, 0.4) < mmi_combine(-2.0, -1.0, 0.4));  // order flips
  REQUIRE(mmi_combine(-1.0, -3.0, 0.0) == -1.0);
  REQUIRE(mmi_combine(-1.0, -3.0, 1.0) == -3.0);
  REQUIRE_THROWS_AS(mmi_combine(0.0, 0.0, 1.5), std::invalid_argument);
}

TEST_CASE("reranking is a permutation that fills exact reverse scores") {
  CondSeqModel fwd(tiny_config(), 17, 42);
  CondSeqModel rev(tiny_config(), 18, 42);
  const std::vector<int> x = {4, 5};
  auto base = nbest(fwd, x, 6, 16);
  REQUIRE(base.size() >= 2);
  auto ranked = mmi_rerank(base, rev, x, 0.4, fwd.vocab_hash());

  std::multiset<std::vector<int>> before, after;
  for (const auto& h : base) before.insert(h.tokens);
  for (const auto& h : ranked) after.insert(h.tokens);
  REQUIRE(before == after);

  std::vector<int> x_eos = x;
  x_eos.push_back(Vocabulary::kEos);
  for (const auto& h : ranked) {
    std::vector<int> body(h.tokens.begin(), h.tokens.end() - 1);
    REQUIRE(*h.reverse_score ==
            Catch::Approx(rev.sequence_logprob(body, x_eos)).margin(1e-9));
    REQUIRE(*h.combined_score ==
            Catch::Approx(mmi_combine(h.forward_score, *h.reverse_score, 0.4)).margin(1e-12));
  }
  for (size_t i = 1; i < ranked.size(); ++i)
    REQUIRE(*ranked[i - 1].combined_score >= *ranked[i].combined_score);
}

TEST_CASE("lambda boundaries: 0 keeps forward order, 1 sorts by reverse score") {
  CondSeqModel fwd(tiny_config(), 21, 7);
  CondSeqModel rev(tiny_config(), 22, 7);
  const std::vector<int> x = {5, 4};
  auto base = nbest(fwd, x, 5, 16);

  auto lam0 = mmi_rerank(base, rev, x, 0.0);
  for (size_t i = 0; i < base.size(); ++i) REQUIRE(lam0[i].tokens == base[i].tokens);

  auto lam1 = mmi_rerank(base, rev, x, 1.0);
  for (size_t i = 1; i < lam1.size(); ++i)
    REQUIRE(*lam1[i - 1].reverse_score >= *lam1[i].reverse_score);

  REQUIRE_THROWS_AS(mmi_rerank(base, rev, x, -0.1), std::invalid_argument);
  CondSeqModel other_vocab(tiny_config(), 23, 999);
  REQUIRE_THROWS_WITH(mmi_rerank(base, other_vocab, x, 0.1, fwd.vocab_hash()),
                      Catch::Matchers::ContainsSubstring("vocabulary"));
}

TEST_CASE("top-k sampling is deterministic in the seed and respects support") {
  CondSeqModel model(tiny_config(), 25, 0);
  const std::vector<int> x = {4, 5};
  Hypothesis a = top_k_sample_decode(model, x, 3, 7, 10);
  Hypothesis b = top_k_sample_decode(model, x, 3, 7, 10);
  REQUIRE(a.tokens == b.tokens);
  REQUIRE(a.forward_score == b.forward_score);
  REQUIRE(a.tokens.back() == Vocabulary::kEos);
  for (int t : a.tokens) {
    REQUIRE(t != Vocabulary::kPad);
    REQUIRE(t != Vocabulary::kBos);
  }

  // k=1 is greedy: identical across seeds and equal to beam-1.
  Hypothesis g1 = top_k_sample_decode(model, x, 1, 1, 10);
  Hypothesis g2 = top_k_sample_decode(model, x, 1, 991, 10);
  REQUIRE(g1.tokens == g2.tokens);
  auto beam = beam_search(model, x, 1, 10);
  REQUIRE(g1.tokens == beam[0].tokens);

  // Large k with different seeds eventually yields different sequences.
  std::set<std::vector<int>> distinct;
  for (std::uint64_t s = 0; s < 30; ++s)
    distinct.insert(top_k_sample_decode(model, x, 4, s, 10).tokens);
  REQUIRE(distinct.size() > 1);
}
