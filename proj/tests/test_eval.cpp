#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "smrt/metrics.hpp"
#include "smrt/report.hpp"

using namespace smrt;

namespace {

EmbeddingTable fixed_embeddings() {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors = {
      {"x", {1.0, 0.0}},
      {"y", {0.0, 1.0}},
      {"half", {1.0, 1.0}},  // cos(half, x) = cos(half, y) = 1/sqrt(2)
      {"negx", {-1.0, 0.0}},
  };
  t.unk = {0.0, 0.0};
  return t;
}

}  // namespace

TEST_CASE("distinct-n hand values and invariances") {
  REQUIRE(distinct_n({{"a", "a", "b"}}, 1) == Catch::Approx(100.0 * 2.0 / 3.0).epsilon(1e-9));
  REQUIRE(distinct_n({{"a", "b", "c"}}, 1) == 100.0);
  // m identical copies of length L: distinct stays at one copy's count.
  REQUIRE(distinct_n({{"p", "q"}, {"p", "q"}, {"p", "q"}}, 1) ==
          Catch::Approx(100.0 * 2.0 / 6.0).epsilon(1e-9));
  REQUIRE(distinct_n({{"a"}}, 2) == 0.0);
  // Reordering responses never changes the pool.
  REQUIRE(distinct_n({{"a", "b"}, {"b", "c"}}, 2) == distinct_n({{"b", "c"}, {"a", "b"}}, 2));
}

TEST_CASE("sentence BLEU hand values") {
  const std::vector<std::string> hyp = {"the", "cat"};
  const std::vector<TokenSeq> refs = {{"the", "cat", "sat"}};
  const auto b = sentence_bleu(hyp, refs);
  // p1 = 1, brevity penalty exp(1 - 3/2).
  REQUIRE(b[0] == Catch::Approx(100.0 * std::exp(1.0 - 1.5)).margin(1e-6));
  REQUIRE(b[0] == Catch::Approx(60.6531).margin(1e-3));

  const auto perfect = sentence_bleu({"a", "b", "c", "d", "e"}, {{"a", "b", "c", "d", "e"}});
  for (double v : perfect) REQUIRE(v == Catch::Approx(100.0).margin(1e-9));

  const auto disjoint = sentence_bleu({"x", "y"}, {{"a", "b"}});
  REQUIRE(disjoint[0] == 0.0);

  const auto empty = sentence_bleu({}, {{"a"}});
  for (double v : empty) REQUIRE(v == 0.0);
}

TEST_CASE("sentence BLEU clips against the best reference and picks closest length") {
  // "a a" against refs ["a"] and ["a a a a"]: clip of "a" is max(1, 4) = 2,
  // closest ref length to 2 is 1 (tie toward shorter not triggered here).
  const auto b = sentence_bleu({"a", "a"}, {{"a"}, {"a", "a", "a", "a"}});
  REQUIRE(b[0] == Catch::Approx(100.0).margin(1e-9));  // p1 = 2/2, BP = 1 (len 2 >= 1)
}

TEST_CASE("corpus BLEU equals an independent aggregate recomputation") {
  const std::vector<TokenSeq> hyps = {{"the", "cat"}, {"a", "b", "c"}};
  const std::vector<std::vector<TokenSeq>> refs = {{{"the", "cat", "sat"}}, {{"a", "b", "d"}}};
  const auto cb = corpus_bleu(hyps, refs);

  // Oracle: pooled clipped counts. 1-grams: sentence 1 matches 2/2, sentence 2
  // matches 2/3 -> p1 = 4/5. 2-grams: 1/1 and 1/2 -> p2 = 2/3.
  // Hyp length 5, closest ref lengths 3 + 3 = 6 -> BP = exp(1 - 6/5).
  const double bp = std::exp(1.0 - 6.0 / 5.0);
  REQUIRE(cb[0] == Catch::Approx(100.0 * bp * 4.0 / 5.0).margin(1e-6));
  REQUIRE(cb[1] == Catch::Approx(100.0 * bp * std::sqrt((4.0 / 5.0) * (2.0 / 3.0))).margin(1e-6));

  REQUIRE_THROWS_AS(corpus_bleu({}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(corpus_bleu(hyps, {{{"a"}}}), std::invalid_argument);

  const auto self = corpus_bleu({hyps[0]}, {{hyps[0]}});
  REQUIRE(self[0] == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("ROUGE-L hand values") {
  REQUIRE(rouge_l({"the", "cat"}, {"the", "cat", "sat"}) == Catch::Approx(80.0).margin(1e-6));
  REQUIRE(rouge_l({"a", "b", "c"}, {"a", "b", "c"}) == Catch::Approx(100.0).margin(1e-9));
  REQUIRE(rouge_l({"x", "y"}, {"a", "b"}) == 0.0);
  // Subsequences need not be contiguous: LCS("a c e", "a b c d e") = 3.
  const double p = 3.0 / 3.0, r = 3.0 / 5.0;
  REQUIRE(rouge_l({"a", "c", "e"}, {"a", "b", "c", "d", "e"}) ==
          Catch::Approx(100.0 * 2.0 * p * r / (p + r)).margin(1e-6));
}

TEST_CASE("greedy matching hand value: cosines {1.0, 0.5} average to 75") {
  EmbeddingTable h;
  h.dim = 3;
  h.vectors = {
      {"p", {1.0, 0.0, 0.0}}, {"q", {0.0, 1.0, 0.0}},
      {"u", {1.0, 0.0, 0.0}}, {"v", {0.0, 0.5, std::sqrt(0.75)}},
  };
  h.unk = {0.0, 0.0, 0.0};
  // hyp {p,q}, ref {u,v}: p<->u cos 1; q's best is v with cos 0.5 (q.v=0.5,
  // |q|=|v|=1); u's best is p (1); v's best is q (0.5). Both directions give
  // (1 + 0.5)/2 = 0.75.
  REQUIRE(greedy_matching({"p", "q"}, {"u", "v"}, h) == Catch::Approx(75.0).margin(1e-6));
  REQUIRE(greedy_matching({"p"}, {"p"}, h) == Catch::Approx(100.0).margin(1e-9));
  REQUIRE(greedy_matching({"p"}, {"q"}, h) == 0.0);
  REQUIRE(greedy_matching({}, {"p"}, h) == 0.0);
}

TEST_CASE("embedding average and vector extrema") {
  EmbeddingTable t = fixed_embeddings();
  REQUIRE(embedding_metric({"x", "y"}, {"half"}, t, EmbeddingMetricMode::kAverage) ==
          Catch::Approx(100.0).margin(1e-6));  // means are colinear
  REQUIRE(embedding_metric({"x"}, {"negx"}, t, EmbeddingMetricMode::kAverage) == 0.0);  // clipped
  REQUIRE(embedding_metric({"x"}, {"x"}, t, EmbeddingMetricMode::kExtrema) ==
          Catch::Approx(100.0).margin(1e-9));

  // Extrema of {(1,0),(0.5,2)} is (1,2): dim 0 keeps 1, dim 1 keeps 2.
  EmbeddingTable e;
  e.dim = 2;
  e.vectors = {{"m", {1.0, 0.0}}, {"n", {0.5, 2.0}}, {"probe", {1.0, 2.0}}};
  e.unk = {0.0, 0.0};
  REQUIRE(embedding_metric({"m", "n"}, {"probe"}, e, EmbeddingMetricMode::kExtrema) ==
          Catch::Approx(100.0).margin(1e-6));
  // Negative magnitude wins when larger in absolute value.
  EmbeddingTable e2;
  e2.dim = 1;
  e2.vectors = {{"m", {1.0}}, {"n", {-3.0}}, {"neg", {-1.0}}};
  e2.unk = {0.0};
  REQUIRE(embedding_metric({"m", "n"}, {"neg"}, e2, EmbeddingMetricMode::kExtrema) ==
          Catch::Approx(100.0).margin(1e-6));
}

TEST_CASE("multi-reference aggregation: hand values and max-dominance") {
  REQUIRE(multi_ref_aggregate({{10.0, 50.0, 30.0}}, RefAggregateMode::kMax) == 50.0);
  REQUIRE(multi_ref_aggregate({{10.0, 50.0, 30.0}}, RefAggregateMode::kSingle) == 10.0);
  REQUIRE(multi_ref_aggregate({{42.0}}, RefAggregateMode::kMax) ==
          multi_ref_aggregate({{42.0}}, RefAggregateMode::kSingle));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<double>> rows(1 + rng() % 5);
    for (auto& row : rows) {
      row.resize(1 + rng() % 6);
      for (double& v : row) v = u(rng);
    }
    REQUIRE(multi_ref_aggregate(rows, RefAggregateMode::kMax) >=
            multi_ref_aggregate(rows, RefAggregateMode::kSingle));
  }
}

TEST_CASE("pairwise bootstrap: ties, dominance, and determinism") {
  std::vector<double> a(50), b(50);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 50; ++i) a[i] = b[i] = u(rng);

  BootstrapResult tie = pairwise_bootstrap(a, b, 1000, 0.05, 1);
  REQUIRE(tie.verdict == BootstrapVerdict::kTie);

  for (int i = 0; i < 50; ++i) b[i] = a[i] + 10.0;
  BootstrapResult bwins = pairwise_bootstrap(a, b, 1000, 0.05, 1);
  REQUIRE(bwins.verdict == BootstrapVerdict::kBWins);
  REQUIRE(bwins.frac_b_wins == 1.0);

  BootstrapResult again = pairwise_bootstrap(a, b, 1000, 0.05, 1);
  REQUIRE(again.frac_b_wins == bwins.frac_b_wins);
  REQUIRE_THROWS_AS(pairwise_bootstrap(a, std::vector<double>(49, 0.0), 1000, 0.05, 1),
                    std::invalid_argument);
}

TEST_CASE("bootstrap power check: tiny true gaps usually tie") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 1.0);
  int wins = 0;
  for (int run = 0; run < 100; ++run) {
    std::vector<double> a(50), b(50);
    for (int i = 0; i < 50; ++i) {
      const double base = noise(rng);
      a[i] = base + noise(rng);
      b[i] = base + 0.1 + noise(rng);  // 0.1 sigma true gap
    }
    if (pairwise_bootstrap(a, b, 1000, 0.05, run).verdict == BootstrapVerdict::kBWins) ++wins;
  }
  REQUIRE(wins < 50);
}

TEST_CASE("metric report round-trips through disk") {
  const std::vector<TokenSeq> hyps = {{"the", "cat"}, {"a", "b"}};
  const std::vector<std::vector<TokenSeq>> refs = {{{"the", "cat", "sat"}, {"the", "cat"}},
                                                   {{"a", "b"}}};
  EmbeddingTable emb = EmbeddingTable::seeded_random({"the", "cat", "sat", "a", "b"}, 8, 3);
  MetricReport rep = evaluate_responses(hyps, refs, emb, true, "demo");
  REQUIRE(rep.n_sentences == 2);
  REQUIRE(rep.k == 2);
  REQUIRE(rep.score("sentence_bleu_1") >= rep.sentence_scores("sentence_bleu_1")->at(1) / 2.0);

  const std::string path =
      (std::filesystem::temp_directory_path() / "smrt_test_report.txt").string();
  rep.write(path);
  MetricReport back = MetricReport::read(path);
  REQUIRE(back.system == "demo");
  REQUIRE(back.ref_mode == "multi");
  REQUIRE(back.n_sentences == 2);
  for (const auto& [name, v] : rep.scores)
    REQUIRE(back.score(name) == Catch::Approx(v).margin(5e-7));
  REQUIRE(back.sentence_scores("rouge_l")->size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("multi-reference scoring dominates single-reference scoring") {
  const std::vector<TokenSeq> hyps = {{"the", "cat"}, {"b", "c"}};
  const std::vector<std::vector<TokenSeq>> refs = {{{"dog"}, {"the", "cat"}},
                                                   {{"b", "c", "d"}, {"b", "c"}}};
  EmbeddingTable emb = EmbeddingTable::seeded_random({"the", "cat", "dog", "b", "c", "d"}, 8, 3);
  MetricReport multi = evaluate_responses(hyps, refs, emb, true, "m");
  MetricReport single = evaluate_responses(hyps, refs, emb, false, "s");
  for (const auto& [name, _] : multi.per_sentence)
    REQUIRE(multi.score(name) >= single.score(name) - 1e-9);
}
