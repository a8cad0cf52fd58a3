// Command-line front end: synthetic data generation, training, generation,
// MMI reranking, metric evaluation, report comparison, and a gradient check.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smrt/gradcheck.hpp"
#include "smrt/runner.hpp"
#include "smrt/toyworld.hpp"

namespace {

int cmd_gen_data(const std::string& out_dir, int n_pairs, std::uint64_t seed, int multi_ref_cap) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  smrt::ParaphraseGrammar grammar = smrt::default_grammar();
  smrt::TemplateSet templates = smrt::default_templates();
  smrt::Corpus corpus = smrt::generate_corpus(grammar, templates, n_pairs, seed, 64, multi_ref_cap);

  grammar.save(out_dir + "/grammar.txt");
  smrt::save_pairs(out_dir + "/train.tsv", corpus.train);
  smrt::save_pairs(out_dir + "/valid.tsv", corpus.valid);
  smrt::save_multiref(out_dir + "/test.multi.tsv", corpus.test);
  {
    std::ofstream prompts(out_dir + "/test.prompts.txt", std::ios::binary);
    for (const auto& ex : corpus.test) prompts << smrt::detokenize(ex.prompt) << '\n';
  }
  smrt::Vocabulary vocab =
      smrt::load_or_build_vocab(out_dir + "/vocab.txt", corpus.train, corpus.valid, &grammar);

  std::int64_t ref_total = 0;
  for (const auto& ex : corpus.test) ref_total += static_cast<std::int64_t>(ex.refs.size());
  std::cout << "wrote " << out_dir << ": train " << corpus.train.size() << ", valid "
            << corpus.valid.size() << ", test " << corpus.test.size() << " (mean refs "
            << static_cast<double>(ref_total) / corpus.test.size() << "), vocab " << vocab.size()
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path) {
  smrt::RunConfig cfg = smrt::RunConfig::from_file(config_path);
  smrt::RunResult res = smrt::run_train(cfg);
  std::cout << "trained " << res.stopped_epoch << " epochs (" << res.stop_reason << "), best ppl "
            << res.best_valid_ppl << " at epoch " << res.best_epoch << "\n"
            << "best checkpoint: " << res.best_checkpoint << "\n";
  return 0;
}

int cmd_generate(const std::string& ckpt, const std::string& vocab_path,
                 const std::string& prompts_path, const std::string& out_path,
                 const std::string& nbest_path, const smrt::GenerateOptions& opt) {
  smrt::CondSeqModel model = smrt::CondSeqModel::load_checkpoint(ckpt);
  smrt::Vocabulary vocab = smrt::Vocabulary::load(vocab_path);
  if (model.vocab_hash() != vocab.hash())
    throw std::runtime_error("generate: checkpoint and vocabulary do not match");
  std::vector<std::vector<int>> prompts;
  for (const auto& p : smrt::load_prompts(prompts_path)) prompts.push_back(vocab.encode(p));
  auto hyps = smrt::generate_all(model, prompts, opt);
  smrt::write_responses(out_path, vocab, hyps);
  if (!nbest_path.empty()) smrt::write_nbest(nbest_path, vocab, hyps);
  std::cout << "decoded " << prompts.size() << " prompts (" << opt.mode << ") -> " << out_path
            << "\n";
  return 0;
}

int cmd_rerank(const std::string& fwd_ckpt, const std::string& rev_ckpt,
               const std::string& vocab_path, const std::string& prompts_path,
               const std::string& out_path, const std::string& nbest_path, int nbest,
               int beam_size, double lambda) {
  smrt::CondSeqModel fwd = smrt::CondSeqModel::load_checkpoint(fwd_ckpt);
  smrt::CondSeqModel rev = smrt::CondSeqModel::load_checkpoint(rev_ckpt);
  smrt::Vocabulary vocab = smrt::Vocabulary::load(vocab_path);
  if (fwd.vocab_hash() != vocab.hash())
    throw std::runtime_error("rerank: forward checkpoint and vocabulary do not match");
  std::vector<std::vector<int>> prompts;
  for (const auto& p : smrt::load_prompts(prompts_path)) prompts.push_back(vocab.encode(p));

  smrt::GenerateOptions opt;
  opt.mode = "beam";
  opt.beam_size = beam_size;
  opt.nbest = nbest;
  auto hyps = smrt::generate_all(fwd, prompts, opt);
  hyps = smrt::rerank_all(std::move(hyps), rev, prompts, lambda, fwd.vocab_hash());
  smrt::write_responses(out_path, vocab, hyps);
  if (!nbest_path.empty()) smrt::write_nbest(nbest_path, vocab, hyps);
  std::cout << "reranked " << prompts.size() << " prompts (lambda " << lambda << ") -> "
            << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& responses, const std::string& refs, const std::string& embeddings,
             const std::string& vocab_path, int emb_dim, std::uint64_t emb_seed, bool single_ref,
             const std::string& system_name, const std::string& out_path) {
  smrt::EmbeddingTable emb;
  if (embeddings == "random") {
    std::vector<std::string> tokens;
    for (const auto& ex : smrt::load_multiref(refs))
      for (const auto& r : ex.refs)
        for (const auto& t : r) tokens.push_back(t);
    emb = smrt::EmbeddingTable::seeded_random(tokens, emb_dim, emb_seed);
  } else {
    if (vocab_path.empty())
      throw std::runtime_error("eval: --vocab is required for model embeddings");
    smrt::CondSeqModel model = smrt::CondSeqModel::load_checkpoint(embeddings);
    smrt::Vocabulary vocab = smrt::Vocabulary::load(vocab_path);
    emb = smrt::embedding_table_from_model(model, vocab);
  }
  smrt::MetricReport rep = smrt::evaluate_files(responses, refs, emb, !single_ref, system_name);
  if (!out_path.empty()) rep.write(out_path);
  std::cout << smrt::format_report(rep);
  return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b,
                const smrt::CompareOptions& opt, const std::string& out_path) {
  smrt::MetricReport a = smrt::MetricReport::read(path_a);
  smrt::MetricReport b = smrt::MetricReport::read(path_b);
  const std::string table = smrt::compare_reports(a, b, opt);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    out << table;
  }
  std::cout << table;
  return 0;
}

int cmd_grad_check(int d_model, int layers, std::uint64_t seed, double threshold) {
  smrt::ModelConfig cfg;
  cfg.encoder_layers = cfg.decoder_layers = layers;
  cfg.d_model = d_model;
  cfg.attention_heads = 2;
  cfg.ffn_dim = 2 * d_model;
  cfg.dropout = cfg.attention_dropout = cfg.relu_dropout = 0.0;
  cfg.vocab_size = 12;
  cfg.max_seq_len = 16;
  smrt::CondSeqModel model(cfg, seed, /*vocab_hash=*/0);

  const std::vector<int> x = {5, 7, 4};
  const std::vector<int> target = {6, 8, smrt::Vocabulary::kEos};
  const std::vector<int> prefix = {smrt::Vocabulary::kBos, 6, 8};
  auto loss_fn = [&] {
    return smrt::nll_label_smoothed(model.forward_logits(x, prefix), target, 0.1);
  };
  smrt::GradCheckOptions opt;
  opt.max_coords_per_param = 4;
  opt.seed = seed;
  std::vector<smrt::Tensor> params;
  for (auto& p : model.parameters()) params.push_back(p.value);
  const double err = smrt::grad_check(loss_fn, params, opt);
  std::printf("max relative gradient error: %.3e (threshold %.3e)\n", err, threshold);
  return err <= threshold ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale lab for paraphrase-teacher sequence training"};
  app.require_subcommand(1);

  // gen-data
  std::string out_dir = "data";
  int n_pairs = 2000;
  std::uint64_t seed = 1;
  int multi_ref_cap = 8;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dialog corpus");
  gen->add_option("--out-dir", out_dir, "output directory");
  gen->add_option("--n-pairs", n_pairs, "total dialog pairs");
  gen->add_option("--seed", seed, "corpus shuffle seed");
  gen->add_option("--multi-ref-cap", multi_ref_cap, "max references per test prompt");

  // train
  std::string config_path;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "run config (key = value)")->required();

  // generate
  std::string ckpt, vocab_path, prompts_path, out_path, nbest_path;
  smrt::GenerateOptions gopt;
  auto* generate = app.add_subcommand("generate", "decode responses for a prompt file");
  generate->add_option("--checkpoint", ckpt)->required();
  generate->add_option("--vocab", vocab_path)->required();
  generate->add_option("--prompts", prompts_path)->required();
  generate->add_option("--out", out_path)->required();
  generate->add_option("--nbest-out", nbest_path, "optional n-best list file");
  generate->add_option("--mode", gopt.mode, "beam | sample");
  generate->add_option("--beam-size", gopt.beam_size);
  generate->add_option("--nbest", gopt.nbest, "hypotheses kept per prompt");
  generate->add_option("--top-k", gopt.top_k, "sampling pool size");
  generate->add_option("--seed", gopt.seed, "sampling seed");
  generate->add_option("--max-len", gopt.max_len, "0 = model max");

  // rerank
  std::string rev_ckpt;
  int rr_nbest = 100, rr_beam = 100;
  double rr_lambda = 0.1;
  auto* rerank = app.add_subcommand("rerank", "mutual-information rerank of beam n-best lists");
  rerank->add_option("--checkpoint", ckpt)->required();
  rerank->add_option("--reverse-checkpoint", rev_ckpt)->required();
  rerank->add_option("--vocab", vocab_path)->required();
  rerank->add_option("--prompts", prompts_path)->required();
  rerank->add_option("--out", out_path)->required();
  rerank->add_option("--nbest-out", nbest_path, "optional reranked n-best list file");
  rerank->add_option("--nbest", rr_nbest, "list size per prompt");
  rerank->add_option("--beam-size", rr_beam);
  rerank->add_option("--lambda", rr_lambda, "reverse-score weight in [0,1]");

  // eval
  std::string responses, refs, embeddings = "random", system_name = "system", report_out;
  int emb_dim = 32;
  std::uint64_t emb_seed = 7;
  bool single_ref = false;
  auto* eval = app.add_subcommand("eval", "score a response file against references");
  eval->add_option("--responses", responses)->required();
  eval->add_option("--refs", refs, "tab-separated multi-reference file")->required();
  eval->add_option("--embeddings", embeddings, "'random' or a model checkpoint");
  eval->add_option("--vocab", vocab_path, "needed with model embeddings");
  eval->add_option("--embedding-dim", emb_dim);
  eval->add_option("--embedding-seed", emb_seed);
  eval->add_flag("--single-ref", single_ref, "score against reference 0 only");
  eval->add_option("--system", system_name, "label stored in the report");
  eval->add_option("--out", report_out, "machine-readable report file");

  // compare
  std::string report_a, report_b, compare_out;
  smrt::CompareOptions copt;
  auto* compare = app.add_subcommand("compare", "paired bootstrap between two reports");
  compare->add_option("--report-a", report_a)->required();
  compare->add_option("--report-b", report_b)->required();
  compare->add_option("--resamples", copt.resamples);
  compare->add_option("--alpha", copt.alpha);
  compare->add_option("--seed", copt.seed);
  compare->add_option("--out", compare_out, "write the table here as well");

  // grad-check
  int gc_d = 16, gc_layers = 1;
  std::uint64_t gc_seed = 3;
  double gc_threshold = 1e-5;
  auto* gc = app.add_subcommand("grad-check", "finite-difference check of model gradients");
  gc->add_option("--d-model", gc_d);
  gc->add_option("--layers", gc_layers);
  gc->add_option("--seed", gc_seed);
  gc->add_option("--threshold", gc_threshold);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(out_dir, n_pairs, seed, multi_ref_cap);
    if (train->parsed()) return cmd_train(config_path);
    if (generate->parsed())
      return cmd_generate(ckpt, vocab_path, prompts_path, out_path, nbest_path, gopt);
    if (rerank->parsed())
      return cmd_rerank(ckpt, rev_ckpt, vocab_path, prompts_path, out_path, nbest_path, rr_nbest,
                        rr_beam, rr_lambda);
    if (eval->parsed())
      return cmd_eval(responses, refs, embeddings, vocab_path, emb_dim, emb_seed, single_ref,
                      system_name, report_out);
    if (compare->parsed()) return cmd_compare(report_a, report_b, copt, compare_out);
    if (gc->parsed()) return cmd_grad_check(gc_d, gc_layers, gc_seed, gc_threshold);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
