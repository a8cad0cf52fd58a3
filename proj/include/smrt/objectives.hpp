#pragma once

// Training losses: label-smoothed NLL against the single reference, and the
// paraphrase-teacher cross entropy over a freshly sampled path. Teacher
// probabilities enter the graph as constants, so gradient reaches the student
// only.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smrt/model.hpp"
#include "smrt/ops.hpp"
#include "smrt/rng.hpp"
#include "smrt/teacher.hpp"

namespace smrt {

enum class ObjectiveMode { kNll, kSmrt, kMixed };

struct ObjectiveConfig {
  ObjectiveMode mode = ObjectiveMode::kNll;
  double p_use_smrt = 1.0;
  double label_smoothing = 0.2;
  int top_n = 100;

  void validate() const {
    if (p_use_smrt < 0.0 || p_use_smrt > 1.0)
      throw std::invalid_argument("objective: p_use_smrt must be in [0,1]");
    if (mode == ObjectiveMode::kMixed && (p_use_smrt <= 0.0 || p_use_smrt >= 1.0))
      throw std::invalid_argument("objective: mixed mode requires 0 < p_use_smrt < 1");
    if (mode == ObjectiveMode::kSmrt && p_use_smrt != 1.0)
      throw std::invalid_argument("objective: smrt mode implies p_use_smrt = 1");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
      throw std::invalid_argument("objective: label smoothing must be in [0,1)");
    if (top_n < 1) throw std::invalid_argument("objective: top_n must be >= 1");
  }
};

namespace detail {

// -mean_i sum_v target[i][v] * log_softmax(logits)[i][v], target constant.
inline Tensor cross_entropy_vs_const(const Tensor& logits, std::vector<double> target_rows) {
  Tensor lp = log_softmax_rows(logits);
  Tensor target = Tensor::from_values(lp.shape(), std::move(target_rows));
  return scale(sum(mul(lp, target)), -1.0 / logits.rows());
}

}  // namespace detail

// Mean cross entropy between the smoothed one-hot reference distribution and
// the model's log-softmax: (1-eps) on the reference token, eps spread over the
// other |V|-1 tokens.
inline Tensor nll_label_smoothed(const Tensor& logits, const std::vector<int>& reference,
                                 double eps) {
  if (eps < 0.0 || eps >= 1.0)
    throw std::invalid_argument("nll_label_smoothed: eps must be in [0,1)");
  const int t = logits.rows(), v = logits.cols();
  if (static_cast<int>(reference.size()) != t)
    throw std::invalid_argument("nll_label_smoothed: " + std::to_string(reference.size()) +
                                " reference tokens vs " + std::to_string(t) + " logit rows");
  const double off = v > 1 ? eps / (v - 1) : 0.0;
  std::vector<double> target(static_cast<size_t>(t) * v, off);
  for (int i = 0; i < t; ++i) {
    if (reference[i] < 0 || reference[i] >= v)
      throw std::invalid_argument("nll_label_smoothed: reference token out of range");
    target[i * v + reference[i]] = 1.0 - eps;
  }
  return detail::cross_entropy_vs_const(logits, std::move(target));
}

// Mean over path positions of -sum_v q_i[v] log p_student(v); q_i rows are the
// path's (possibly interpolated) teacher distributions.
inline Tensor smrt_loss(const Tensor& logits, const SampledPath& path) {
  const int t = logits.rows(), v = logits.cols();
  if (static_cast<int>(path.tokens.size()) != t || path.dists.size() != path.tokens.size())
    throw std::invalid_argument("smrt_loss: path length " + std::to_string(path.tokens.size()) +
                                " does not match " + std::to_string(t) + " logit rows");
  std::vector<double> target(static_cast<size_t>(t) * v);
  for (int i = 0; i < t; ++i) {
    const auto& d = path.dists[i];
    if (static_cast<int>(d.probs.size()) != v)
      throw std::invalid_argument("smrt_loss: teacher row width mismatch");
    d.check_normalized(1e-6);
    std::copy(d.probs.begin(), d.probs.end(), target.begin() + static_cast<size_t>(i) * v);
  }
  return detail::cross_entropy_vs_const(logits, std::move(target));
}

struct TrainExample {
  std::vector<int> prompt;    // token ids, no <bos>/<eos>
  std::vector<int> response;  // token ids, no <eos>
  std::int64_t id = 0;
};

struct BatchLoss {
  Tensor loss;  // scalar, token-weighted mean over the batch
  std::int64_t total_tokens = 0;
  int smrt_examples = 0;
  double mean_path_len = 0.0;
  double mean_teacher_entropy = 0.0;
};

// Per example: with probability p_use_smrt, teacher-path cross entropy over a
// freshly sampled path for this epoch (teacher first interpolated with uniform
// mass eps/|V|); otherwise label-smoothed NLL on the original reference.
inline BatchLoss training_objective(const ObjectiveConfig& cfg, const CondSeqModel& model,
                                    const std::vector<TrainExample>& batch, const Teacher* teacher,
                                    int epoch, std::uint64_t run_seed, bool train_mode = true) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("training_objective: empty batch");
  if (cfg.mode != ObjectiveMode::kNll) {
    if (!teacher) throw std::invalid_argument("training_objective: objective requires a teacher");
    if (teacher->vocab_hash() != model.vocab_hash())
      throw std::invalid_argument("training_objective: teacher/student vocabulary hash mismatch");
  }
  const int v = model.config().vocab_size;
  const int max_len = model.config().max_seq_len;
  const double eps = cfg.label_smoothing;

  BatchLoss out;
  Tensor weighted_sum;
  double path_len_sum = 0.0, entropy_sum = 0.0;
  for (const auto& ex : batch) {
    bool use_smrt = cfg.mode == ObjectiveMode::kSmrt;
    if (cfg.mode == ObjectiveMode::kMixed) {
      auto rng = make_rng(run_seed, "objective-mix", static_cast<std::uint64_t>(epoch),
                          static_cast<std::uint64_t>(ex.id));
      use_smrt = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.p_use_smrt;
    }
    auto drop_rng = make_rng(run_seed, "dropout", static_cast<std::uint64_t>(epoch),
                             static_cast<std::uint64_t>(ex.id));
    std::mt19937_64* drop = train_mode ? &drop_rng : nullptr;

    Tensor ex_loss;
    int n_tokens;
    if (use_smrt) {
      SampledPath path =
          sample_path(*teacher, ex.response, cfg.top_n,
                      mix_seed(run_seed, static_cast<std::uint64_t>(ex.id)), epoch, max_len);
      path_len_sum += static_cast<double>(path.tokens.size());
      entropy_sum += path.mean_step_entropy();
      ++out.smrt_examples;
      if (eps > 0.0)
        for (auto& d : path.dists)
          for (double& p : d.probs) p = (1.0 - eps) * p + eps / v;
      std::vector<int> prefix;
      prefix.push_back(Vocabulary::kBos);
      prefix.insert(prefix.end(), path.tokens.begin(), path.tokens.end() - 1);
      ex_loss = smrt_loss(model.forward_logits(ex.prompt, prefix, drop), path);
      n_tokens = static_cast<int>(path.tokens.size());
    } else {
      std::vector<int> target = ex.response;
      target.push_back(Vocabulary::kEos);
      std::vector<int> prefix;
      prefix.push_back(Vocabulary::kBos);
      prefix.insert(prefix.end(), ex.response.begin(), ex.response.end());
      ex_loss = nll_label_smoothed(model.forward_logits(ex.prompt, prefix, drop), target, eps);
      n_tokens = static_cast<int>(target.size());
    }
    out.total_tokens += n_tokens;
    Tensor weighted = scale(ex_loss, static_cast<double>(n_tokens));
    weighted_sum = weighted_sum.defined() ? add(weighted_sum, weighted) : weighted;
  }
  out.loss = scale(weighted_sum, 1.0 / static_cast<double>(out.total_tokens));
  if (out.smrt_examples > 0) {
    out.mean_path_len = path_len_sum / out.smrt_examples;
    out.mean_teacher_entropy = entropy_sum / out.smrt_examples;
  }
  return out;
}

// exp(token-level mean NLL with eps=0), dropout disabled.
inline double validation_perplexity(const CondSeqModel& model,
                                    const std::vector<TrainExample>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("validation_perplexity: empty corpus");
  double nll = 0.0;
  std::int64_t tokens = 0;
  for (const auto& ex : corpus) {
    std::vector<int> y = ex.response;
    y.push_back(Vocabulary::kEos);
    nll -= model.sequence_logprob(ex.prompt, y);
    tokens += static_cast<std::int64_t>(y.size());
  }
  return std::exp(nll / static_cast<double>(tokens));
}

}  // namespace smrt
