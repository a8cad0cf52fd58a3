#pragma once

// End-to-end runs: config-driven training with early stopping and
// checkpointing, pretrain/fine-tune chaining, batch generation, report
// evaluation, and paired-bootstrap comparison of two reports.
//
// Everything except wall-clock timestamps (which only appear in run.log) is
// deterministic in the config, so repeated runs produce byte-identical
// checkpoints, response files, and reports.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrt/adam.hpp"
#include "smrt/config.hpp"
#include "smrt/corpus.hpp"
#include "smrt/decode.hpp"
#include "smrt/grammar.hpp"
#include "smrt/model.hpp"
#include "smrt/objectives.hpp"
#include "smrt/report.hpp"
#include "smrt/rng.hpp"
#include "smrt/teacher.hpp"
#include "smrt/vocab.hpp"

namespace smrt {

struct RunConfig {
  // Data and artifact locations.
  std::string train_file;
  std::string valid_file;
  std::string grammar_file;  // required for the oracle teacher
  std::string vocab_file;    // loaded if present, otherwise built and saved
  std::string out_dir;
  std::string init_checkpoint;     // optional warm start
  std::string teacher_checkpoint;  // required for the learned teacher

  ModelConfig model;          // vocab_size is filled in at run time
  ObjectiveConfig objective;
  std::string teacher_kind = "oracle";  // oracle | learned | none
  AdamConfig adam;

  int epochs = 100;
  int patience = 50;
  int batch_size = 16;
  int update_freq = 1;
  int save_interval = 0;  // 0: only best/init checkpoints
  std::uint64_t seed = 1;

  static RunConfig from_file(const std::string& path) {
    KeyValueFile kv = KeyValueFile::parse_file(path);
    return from_kv(kv);
  }

  static RunConfig from_kv(KeyValueFile& kv) {
    RunConfig c;
    c.train_file = kv.take_required("train_file");
    c.valid_file = kv.take_required("valid_file");
    c.out_dir = kv.take_required("out_dir");
    c.grammar_file = kv.take_string("grammar_file", "");
    c.vocab_file = kv.take_required("vocab_file");
    c.init_checkpoint = kv.take_string("init_checkpoint", "");
    c.teacher_checkpoint = kv.take_string("teacher_checkpoint", "");

    c.model.encoder_layers = kv.take_int("encoder_layers", c.model.encoder_layers);
    c.model.decoder_layers = kv.take_int("decoder_layers", c.model.decoder_layers);
    c.model.d_model = kv.take_int("d_model", c.model.d_model);
    c.model.attention_heads = kv.take_int("attention_heads", c.model.attention_heads);
    c.model.ffn_dim = kv.take_int("ffn_dim", c.model.ffn_dim);
    c.model.dropout = kv.take_double("dropout", c.model.dropout);
    c.model.attention_dropout = kv.take_double("attention_dropout", c.model.attention_dropout);
    c.model.relu_dropout = kv.take_double("relu_dropout", c.model.relu_dropout);
    c.model.max_seq_len = kv.take_int("max_seq_len", c.model.max_seq_len);
    c.model.share_all_embeddings =
        kv.take_bool("share_all_embeddings", c.model.share_all_embeddings);

    const std::string obj = kv.take_string("objective", "nll");
    if (obj == "nll") c.objective.mode = ObjectiveMode::kNll;
    else if (obj == "smrt") c.objective.mode = ObjectiveMode::kSmrt;
    else if (obj == "mixed") c.objective.mode = ObjectiveMode::kMixed;
    else throw std::runtime_error("config: objective must be nll, smrt, or mixed, got '" + obj + "'");
    c.objective.p_use_smrt = kv.take_double("p_use_smrt", c.objective.p_use_smrt);
    c.objective.label_smoothing = kv.take_double("label_smoothing", c.objective.label_smoothing);
    c.model.label_smoothing = c.objective.label_smoothing;
    c.objective.top_n = kv.take_int("paraphraser_sample_top_n", c.objective.top_n);
    c.teacher_kind = kv.take_string("teacher", c.objective.mode == ObjectiveMode::kNll ? "none"
                                                                                       : "oracle");

    c.adam.peak_lr = kv.take_double("lr", c.adam.peak_lr);
    c.adam.beta1 = kv.take_double("adam_beta1", c.adam.beta1);
    c.adam.beta2 = kv.take_double("adam_beta2", c.adam.beta2);
    c.adam.eps = kv.take_double("adam_eps", c.adam.eps);
    c.adam.weight_decay = kv.take_double("weight_decay", c.adam.weight_decay);
    c.adam.clip_norm = kv.take_double("clip_norm", c.adam.clip_norm);
    c.adam.warmup_updates = kv.take_int("warmup_updates", c.adam.warmup_updates);
    c.adam.warmup_init_lr = kv.take_double("warmup_init_lr", c.adam.warmup_init_lr);
    c.adam.min_lr = kv.take_double("min_lr", c.adam.min_lr);

    c.epochs = kv.take_int("epochs", c.epochs);
    c.patience = kv.take_int("patience", c.patience);
    c.batch_size = kv.take_int("batch_size", c.batch_size);
    c.update_freq = kv.take_int("update_freq", c.update_freq);
    c.save_interval = kv.take_int("save_interval", c.save_interval);
    c.seed = static_cast<std::uint64_t>(kv.take_int("seed", static_cast<int>(c.seed)));

    kv.reject_unknown();
    c.validate();
    return c;
  }

  void validate() const {
    objective.validate();
    if (teacher_kind != "oracle" && teacher_kind != "learned" && teacher_kind != "none")
      throw std::runtime_error("config: teacher must be oracle, learned, or none");
    if (objective.mode != ObjectiveMode::kNll && teacher_kind == "none")
      throw std::runtime_error("config: objective '" +
                               std::string(objective.mode == ObjectiveMode::kSmrt ? "smrt"
                                                                                  : "mixed") +
                               "' requires a teacher");
    if (teacher_kind == "oracle" && grammar_file.empty())
      throw std::runtime_error("config: oracle teacher requires grammar_file");
    if (teacher_kind == "learned" && teacher_checkpoint.empty())
      throw std::runtime_error("config: learned teacher requires teacher_checkpoint");
    if (epochs < 0) throw std::runtime_error("config: epochs must be >= 0");
    if (patience < 1) throw std::runtime_error("config: patience must be >= 1");
    if (batch_size < 1 || update_freq < 1)
      throw std::runtime_error("config: batch_size and update_freq must be >= 1");
    if (save_interval < 0) throw std::runtime_error("config: save_interval must be >= 0");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_ppl = 0.0;
  double lr = 0.0;
  std::int64_t updates = 0;
  int smrt_examples = 0;
  double mean_path_len = 0.0;
  double mean_teacher_entropy = 0.0;
};

struct RunResult {
  CondSeqModel model;  // best-validation weights
  std::vector<EpochRecord> history;
  double best_valid_ppl = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;
  std::string stop_reason;  // max_epochs | patience | no_training
  std::string best_checkpoint;
  std::string init_checkpoint;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::vector<TrainExample> encode_pairs(const std::vector<DialogPair>& pairs,
                                              const Vocabulary& vocab) {
  std::vector<TrainExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    TrainExample ex;
    ex.prompt = vocab.encode(p.prompt);
    ex.response = vocab.encode(p.response);
    ex.id = p.id;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace detail

// Loads vocab_file if it exists; otherwise builds the vocabulary from the
// corpora plus every token the grammar can introduce (paraphrases may use
// synonyms or affix words that never occur verbatim in the corpus) and saves
// it to vocab_file.
inline Vocabulary load_or_build_vocab(const std::string& vocab_file,
                                      const std::vector<DialogPair>& train,
                                      const std::vector<DialogPair>& valid,
                                      const ParaphraseGrammar* grammar) {
  if (std::filesystem::exists(vocab_file)) return Vocabulary::load(vocab_file);
  std::vector<std::vector<std::string>> sentences;
  for (const auto* split : {&train, &valid})
    for (const auto& p : *split) {
      sentences.push_back(p.prompt);
      sentences.push_back(p.response);
    }
  if (grammar)
    for (const auto& tok : grammar->all_tokens()) sentences.push_back({tok});
  Vocabulary v = Vocabulary::build(sentences);
  if (!vocab_file.empty()) v.save(vocab_file);
  return v;
}

inline RunResult run_train(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  const auto train_pairs = load_pairs(cfg.train_file);
  const auto valid_pairs = load_pairs(cfg.valid_file);

  ParaphraseGrammar grammar;
  const bool use_oracle = cfg.teacher_kind == "oracle";
  if (!cfg.grammar_file.empty()) grammar = ParaphraseGrammar::load(cfg.grammar_file);

  Vocabulary vocab = load_or_build_vocab(cfg.vocab_file, train_pairs, valid_pairs,
                                         cfg.grammar_file.empty() ? nullptr : &grammar);

  ModelConfig mcfg = cfg.model;
  mcfg.vocab_size = vocab.size();

  CondSeqModel model;
  if (!cfg.init_checkpoint.empty()) {
    model = CondSeqModel::load_checkpoint(cfg.init_checkpoint);
    if (model.vocab_hash() != vocab.hash())
      throw std::runtime_error("run: init checkpoint " + cfg.init_checkpoint +
                               " was trained with a different vocabulary");
    const ModelConfig& loaded = model.config();
    if (loaded.encoder_layers != mcfg.encoder_layers ||
        loaded.decoder_layers != mcfg.decoder_layers || loaded.d_model != mcfg.d_model ||
        loaded.attention_heads != mcfg.attention_heads || loaded.ffn_dim != mcfg.ffn_dim ||
        loaded.share_all_embeddings != mcfg.share_all_embeddings)
      throw std::runtime_error("run: init checkpoint architecture does not match the config");
  } else {
    model = CondSeqModel(mcfg, cfg.seed, vocab.hash());
  }

  std::unique_ptr<Teacher> teacher;
  CondSeqModel teacher_model;
  if (use_oracle) {
    teacher = std::make_unique<OracleTeacher>(grammar, vocab);
  } else if (cfg.teacher_kind == "learned") {
    teacher_model = CondSeqModel::load_checkpoint(cfg.teacher_checkpoint);
    if (teacher_model.vocab_hash() != vocab.hash())
      throw std::runtime_error("run: teacher checkpoint " + cfg.teacher_checkpoint +
                               " was trained with a different vocabulary");
    teacher = std::make_unique<LearnedTeacher>(teacher_model);
  }

  auto train_ex = detail::encode_pairs(train_pairs, vocab);
  auto valid_ex = detail::encode_pairs(valid_pairs, vocab);
  if (train_ex.empty() || valid_ex.empty())
    throw std::runtime_error("run: empty train or valid split");

  RunResult res;
  res.init_checkpoint = cfg.out_dir + "/checkpoint_init.ckpt";
  res.best_checkpoint = cfg.out_dir + "/checkpoint_best.ckpt";
  model.save_checkpoint(res.init_checkpoint);

  std::ofstream log(cfg.out_dir + "/run.log", std::ios::binary);
  if (!log) throw std::runtime_error("run: cannot write " + cfg.out_dir + "/run.log");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  log << "seed = " << cfg.seed << "\n"
      << "objective = "
      << (cfg.objective.mode == ObjectiveMode::kNll
              ? "nll"
              : cfg.objective.mode == ObjectiveMode::kSmrt ? "smrt" : "mixed")
      << "\n"
      << "teacher = " << cfg.teacher_kind << "\n"
      << "train_examples = " << train_ex.size() << "\n"
      << "valid_examples = " << valid_ex.size() << "\n"
      << "vocab_size = " << vocab.size() << "\n\n";
  log.flush();

  AdamOptimizer opt(cfg.adam);
  double best_ppl = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  res.stop_reason = "no_training";

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<size_t> order(train_ex.size());
    std::iota(order.begin(), order.end(), size_t{0});
    auto shuffle_rng = make_rng(cfg.seed, "epoch-shuffle", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::int64_t token_sum = 0;
    int smrt_examples = 0;
    double path_len_sum = 0.0, entropy_sum = 0.0;

    const size_t n = order.size();
    const size_t group_span = static_cast<size_t>(cfg.batch_size) * cfg.update_freq;
    for (size_t g = 0; g < n; g += group_span) {
      model.zero_grad();
      const size_t g_end = std::min(n, g + group_span);
      const size_t n_batches = (g_end - g + cfg.batch_size - 1) / cfg.batch_size;
      for (size_t b = g; b < g_end; b += cfg.batch_size) {
        std::vector<TrainExample> batch;
        for (size_t i = b; i < std::min(g_end, b + cfg.batch_size); ++i)
          batch.push_back(train_ex[order[i]]);
        BatchLoss bl =
            training_objective(cfg.objective, model, batch, teacher.get(), epoch, cfg.seed);
        const double loss_value = bl.loss.item();
        if (!std::isfinite(loss_value)) {
          log << "epoch = " << epoch << "\ndiverged = true\nwall_seconds = "
              << detail::fmt(elapsed()) << "\n\n";
          log.flush();
          throw std::runtime_error("run: training loss diverged at epoch " +
                                   std::to_string(epoch));
        }
        loss_sum += loss_value * static_cast<double>(bl.total_tokens);
        token_sum += bl.total_tokens;
        smrt_examples += bl.smrt_examples;
        path_len_sum += bl.mean_path_len * bl.smrt_examples;
        entropy_sum += bl.mean_teacher_entropy * bl.smrt_examples;
        backward(scale(bl.loss, 1.0 / static_cast<double>(n_batches)));
      }
      opt.step(model.parameters());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(token_sum);
    rec.valid_ppl = validation_perplexity(model, valid_ex);
    rec.lr = opt.lr_at(opt.step_count());
    rec.updates = opt.step_count();
    rec.smrt_examples = smrt_examples;
    if (smrt_examples > 0) {
      rec.mean_path_len = path_len_sum / smrt_examples;
      rec.mean_teacher_entropy = entropy_sum / smrt_examples;
    }
    res.history.push_back(rec);

    log << "epoch = " << rec.epoch << "\n"
        << "train_loss = " << detail::fmt(rec.train_loss) << "\n"
        << "valid_ppl = " << detail::fmt(rec.valid_ppl) << "\n"
        << "lr = " << detail::fmt(rec.lr) << "\n"
        << "updates = " << rec.updates << "\n"
        << "smrt_examples = " << rec.smrt_examples << "\n"
        << "mean_path_len = " << detail::fmt(rec.mean_path_len) << "\n"
        << "mean_teacher_entropy = " << detail::fmt(rec.mean_teacher_entropy) << "\n"
        << "wall_seconds = " << detail::fmt(elapsed()) << "\n\n";
    log.flush();

    if (cfg.save_interval > 0 && epoch % cfg.save_interval == 0)
      model.save_checkpoint(cfg.out_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".ckpt");

    if (rec.valid_ppl < best_ppl) {
      best_ppl = rec.valid_ppl;
      res.best_epoch = epoch;
      bad_epochs = 0;
      model.save_checkpoint(res.best_checkpoint);
    } else if (++bad_epochs >= cfg.patience) {
      res.stopped_epoch = epoch;
      res.stop_reason = "patience";
      break;
    }
    res.stopped_epoch = epoch;
    res.stop_reason = "max_epochs";
  }

  if (res.best_epoch > 0) {
    res.best_valid_ppl = best_ppl;
    res.model = CondSeqModel::load_checkpoint(res.best_checkpoint);
  } else {
    // Zero-epoch run: the "best" model is the untouched initialization.
    model.save_checkpoint(res.best_checkpoint);
    res.model = std::move(model);
  }

  log << "best_epoch = " << res.best_epoch << "\n"
      << "best_valid_ppl = " << detail::fmt(res.best_valid_ppl) << "\n"
      << "stopped_epoch = " << res.stopped_epoch << "\n"
      << "stop_reason = " << res.stop_reason << "\n";
  return res;
}

// Train under `pretrain`, then continue from its best checkpoint under
// `finetune`. A zero-epoch pretrain stage reduces to a plain finetune run.
inline RunResult run_pretrain_finetune(const RunConfig& pretrain, RunConfig finetune) {
  if (pretrain.epochs == 0) return run_train(finetune);
  RunResult pre = run_train(pretrain);
  finetune.init_checkpoint = pre.best_checkpoint;
  return run_train(finetune);
}

// --- generation ------------------------------------------------------------

struct GenerateOptions {
  std::string mode = "beam";  // beam | sample
  int beam_size = 10;
  int nbest = 1;       // hypotheses kept per prompt (beam mode)
  int top_k = 10;      // sample mode
  std::uint64_t seed = 1;
  int max_len = 0;     // 0: model max_seq_len - 1
};

inline std::vector<std::vector<Hypothesis>> generate_all(const CondSeqModel& model,
                                                         const std::vector<std::vector<int>>& prompts,
                                                         const GenerateOptions& opt) {
  const int max_len = opt.max_len > 0 ? opt.max_len : model.config().max_seq_len - 1;
  std::vector<std::vector<Hypothesis>> out;
  out.reserve(prompts.size());
  for (size_t i = 0; i < prompts.size(); ++i) {
    if (opt.mode == "beam") {
      auto hyps = beam_search(model, prompts[i], std::max(opt.beam_size, opt.nbest), max_len);
      if (static_cast<int>(hyps.size()) > opt.nbest) hyps.resize(opt.nbest);
      out.push_back(std::move(hyps));
    } else if (opt.mode == "sample") {
      out.push_back({top_k_sample_decode(model, prompts[i], opt.top_k,
                                         mix_seed(opt.seed, static_cast<std::uint64_t>(i)),
                                         max_len)});
    } else {
      throw std::invalid_argument("generate: mode must be beam or sample, got '" + opt.mode + "'");
    }
  }
  return out;
}

// One top-ranked response per line (tokens without the trailing <eos>).
inline void write_responses(const std::string& path, const Vocabulary& vocab,
                            const std::vector<std::vector<Hypothesis>>& hyps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("generate: cannot write " + path);
  for (const auto& per_prompt : hyps) {
    if (per_prompt.empty()) throw std::runtime_error("generate: prompt with no hypotheses");
    std::vector<int> toks(per_prompt[0].tokens.begin(), per_prompt[0].tokens.end() - 1);
    out << detokenize(vocab.decode(toks)) << '\n';
  }
}

// prompt-index<TAB>rank<TAB>forward-score[<TAB>reverse<TAB>combined]<TAB>tokens
inline void write_nbest(const std::string& path, const Vocabulary& vocab,
                        const std::vector<std::vector<Hypothesis>>& hyps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("generate: cannot write " + path);
  for (size_t i = 0; i < hyps.size(); ++i)
    for (size_t r = 0; r < hyps[i].size(); ++r) {
      const Hypothesis& h = hyps[i][r];
      out << i << '\t' << r << '\t' << detail::fmt(h.forward_score);
      if (h.reverse_score)
        out << '\t' << detail::fmt(*h.reverse_score) << '\t' << detail::fmt(*h.combined_score);
      std::vector<int> toks(h.tokens.begin(), h.tokens.end() - 1);
      out << '\t' << detokenize(vocab.decode(toks)) << '\n';
    }
}

inline std::vector<std::vector<Hypothesis>> rerank_all(
    std::vector<std::vector<Hypothesis>> hyps, const CondSeqModel& reverse_model,
    const std::vector<std::vector<int>>& prompts, double lambda,
    std::uint64_t forward_vocab_hash) {
  if (hyps.size() != prompts.size())
    throw std::invalid_argument("rerank: hypothesis/prompt count mismatch");
  for (size_t i = 0; i < hyps.size(); ++i)
    hyps[i] = mmi_rerank(std::move(hyps[i]), reverse_model, prompts[i], lambda,
                         forward_vocab_hash);
  return hyps;
}

// One prompt per line, whitespace tokens.
inline std::vector<std::vector<std::string>> load_prompts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("generate: cannot read " + path);
  std::vector<std::vector<std::string>> prompts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    prompts.push_back(tokenize(line));
  }
  if (prompts.empty()) throw std::runtime_error("generate: no prompts in " + path);
  return prompts;
}

// --- evaluation ------------------------------------------------------------

// Token embeddings taken from a trained model's embedding matrix.
inline EmbeddingTable embedding_table_from_model(const CondSeqModel& model,
                                                 const Vocabulary& vocab) {
  if (model.vocab_hash() != vocab.hash())
    throw std::invalid_argument("eval: embedding model vocabulary mismatch");
  const Tensor* embed = nullptr;
  for (const auto& p : model.parameters())
    if (p.name == "embed") embed = &p.value;
  if (!embed) throw std::runtime_error("eval: model has no embedding parameter");
  EmbeddingTable t;
  t.dim = model.config().d_model;
  const auto& vals = embed->values();
  auto row = [&vals, &t](int id) {
    return std::vector<double>(vals.begin() + static_cast<size_t>(id) * t.dim,
                               vals.begin() + static_cast<size_t>(id + 1) * t.dim);
  };
  for (int id = 0; id < vocab.size(); ++id) t.vectors.emplace(vocab.token(id), row(id));
  t.unk = row(Vocabulary::kUnk);
  return t;
}

// One response per line; unlike prompts, a blank line is a legitimate (empty)
// response and is kept.
inline std::vector<std::vector<std::string>> load_response_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("eval: cannot read " + path);
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(tokenize(line));
  }
  return lines;
}

// Scores a response file against a multi-reference file; one report per call.
inline MetricReport evaluate_files(const std::string& hyp_file, const std::string& multiref_file,
                                   const EmbeddingTable& emb, bool multi_ref,
                                   const std::string& system_name) {
  const auto hyps = load_response_lines(hyp_file);
  const auto refs = load_multiref(multiref_file);
  if (hyps.size() != refs.size())
    throw std::runtime_error("eval: " + std::to_string(hyps.size()) + " responses in " + hyp_file +
                             " vs " + std::to_string(refs.size()) + " reference lines in " +
                             multiref_file);
  std::vector<std::vector<TokenSeq>> ref_sets;
  for (const auto& r : refs) ref_sets.push_back(r.refs);
  return evaluate_responses(hyps, ref_sets, emb, multi_ref, system_name);
}

// --- comparison ------------------------------------------------------------

struct CompareOptions {
  int resamples = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
};

// Paired bootstrap over every sentence-level metric; corpus-level metrics are
// listed with score deltas but no significance verdict.
inline std::string compare_reports(const MetricReport& a, const MetricReport& b,
                                   const CompareOptions& opt) {
  if (a.n_sentences != b.n_sentences)
    throw std::invalid_argument("compare: reports cover " + std::to_string(a.n_sentences) +
                                " vs " + std::to_string(b.n_sentences) + " sentences");
  if (a.ref_mode != b.ref_mode)
    throw std::invalid_argument("compare: reports use different reference modes");

  std::ostringstream os;
  os << "A: " << a.system << "  B: " << b.system << "  (" << a.ref_mode << "-ref, "
     << a.n_sentences << " sentences, " << opt.resamples << " resamples, alpha "
     << detail::fmt(opt.alpha) << ")\n";
  char buf[160];
  for (const auto& [name, va] : a.scores) {
    const double vb = b.score(name);
    const auto* sa = a.sentence_scores(name);
    const auto* sb = b.sentence_scores(name);
    if (sa && sb) {
      const BootstrapResult r =
          pairwise_bootstrap(*sa, *sb, opt.resamples, opt.alpha,
                             mix_seed(opt.seed, hash_tag(name)));
      const char* verdict = r.verdict == BootstrapVerdict::kAWins
                                ? "A wins"
                                : r.verdict == BootstrapVerdict::kBWins ? "B wins" : "tie";
      std::snprintf(buf, sizeof buf, "%-20s A %8.2f  B %8.2f  %-6s (A %.3f / B %.3f)\n",
                    name.c_str(), va, vb, verdict, r.frac_a_wins, r.frac_b_wins);
    } else {
      std::snprintf(buf, sizeof buf, "%-20s A %8.2f  B %8.2f  corpus-level, no test\n",
                    name.c_str(), va, vb);
    }
    os << buf;
  }
  return os.str();
}

}  // namespace smrt
