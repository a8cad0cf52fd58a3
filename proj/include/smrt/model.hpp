#pragma once

// Pre-norm transformer encoder-decoder conditional language model with shared
// input/output embeddings, sinusoidal positions, and a binary checkpoint
// format (text header + named little-endian float64 parameter blocks).

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "smrt/adam.hpp"
#include "smrt/ops.hpp"
#include "smrt/rng.hpp"
#include "smrt/tensor.hpp"
#include "smrt/vocab.hpp"

namespace smrt {

struct ModelConfig {
  int encoder_layers = 2;
  int decoder_layers = 2;
  int d_model = 64;
  int attention_heads = 2;
  int ffn_dim = 128;
  double dropout = 0.1;
  double attention_dropout = 0.0;
  double relu_dropout = 0.0;
  double label_smoothing = 0.2;
  int max_seq_len = 64;
  int vocab_size = 0;
  bool share_all_embeddings = true;

  // Full-scale configuration (5 layers, d=512, ffn=2048, heavy dropout);
  // far above what the synthetic corpora need, but constructible.
  static ModelConfig full_scale() {
    ModelConfig c;
    c.encoder_layers = c.decoder_layers = 5;
    c.d_model = 512;
    c.attention_heads = 2;
    c.ffn_dim = 2048;
    c.dropout = 0.4;
    c.attention_dropout = 0.2;
    c.relu_dropout = 0.2;
    return c;
  }

  void validate() const {
    if (d_model <= 0 || attention_heads <= 0 || d_model % attention_heads != 0)
      throw std::invalid_argument("model: d_model " + std::to_string(d_model) +
                                  " not divisible by attention_heads " +
                                  std::to_string(attention_heads));
    if (encoder_layers < 1 || decoder_layers < 1)
      throw std::invalid_argument("model: need at least one encoder and decoder layer");
    if (ffn_dim < 1) throw std::invalid_argument("model: ffn_dim must be positive");
    if (vocab_size <= 0) throw std::invalid_argument("model: vocab_size must be positive");
    if (max_seq_len < 2) throw std::invalid_argument("model: max_seq_len too small");
    for (double r : {dropout, attention_dropout, relu_dropout, label_smoothing})
      if (r < 0.0 || r >= 1.0)
        throw std::invalid_argument("model: rates must be in [0,1)");
  }
};

namespace detail {

struct AttnParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};
struct LayerNormParams {
  Tensor gain, bias;
};
struct FfnParams {
  Tensor w1, b1, w2, b2;
};
struct EncoderLayer {
  LayerNormParams ln1, ln2;
  AttnParams self_attn;
  FfnParams ffn;
};
struct DecoderLayer {
  LayerNormParams ln1, ln2, ln3;
  AttnParams self_attn, cross_attn;
  FfnParams ffn;
};

}  // namespace detail

class CondSeqModel {
 public:
  CondSeqModel() = default;

  CondSeqModel(ModelConfig cfg, std::uint64_t init_seed, std::uint64_t vocab_hash)
      : cfg_(cfg), vocab_hash_(vocab_hash) {
    cfg_.validate();
    auto rng = make_rng(init_seed, "model-init");
    const int d = cfg_.d_model, v = cfg_.vocab_size, f = cfg_.ffn_dim;

    embed_ = normal_param("embed", {v, d}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    if (!cfg_.share_all_embeddings)
      out_proj_ = xavier_param("out_proj", {d, v}, rng);

    enc_.resize(cfg_.encoder_layers);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      init_ln(p + "ln1", enc_[l].ln1);
      init_attn(p + "self.", enc_[l].self_attn, rng);
      init_ln(p + "ln2", enc_[l].ln2);
      init_ffn(p + "ffn.", enc_[l].ffn, d, f, rng);
    }
    init_ln("enc.final_ln", enc_final_ln_);

    dec_.resize(cfg_.decoder_layers);
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string p = "dec" + std::to_string(l) + ".";
      init_ln(p + "ln1", dec_[l].ln1);
      init_attn(p + "self.", dec_[l].self_attn, rng);
      init_ln(p + "ln2", dec_[l].ln2);
      init_attn(p + "cross.", dec_[l].cross_attn, rng);
      init_ln(p + "ln3", dec_[l].ln3);
      init_ffn(p + "ffn.", dec_[l].ffn, d, f, rng);
    }
    init_ln("dec.final_ln", dec_final_ln_);
  }

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t vocab_hash() const { return vocab_hash_; }
  std::vector<NamedParam>& parameters() { return params_; }
  const std::vector<NamedParam>& parameters() const { return params_; }

  void zero_grad() {
    for (auto& p : params_) p.value.zero_grad();
  }

  Tensor encode(const std::vector<int>& x, std::mt19937_64* drop_rng = nullptr) const {
    check_tokens(x, "source");
    // An empty source (e.g. reverse-scoring an empty response) is encoded as
    // a single <pad> token so attention always has at least one position.
    Tensor h = embed_sequence(x.empty() ? std::vector<int>{Vocabulary::kPad} : x, drop_rng);
    for (const auto& layer : enc_) {
      Tensor normed = layer_norm(h, layer.ln1.gain, layer.ln1.bias);
      Tensor a = attention_core(layer.self_attn, normed, normed, /*causal=*/false, drop_rng);
      h = add(h, maybe_dropout(a, cfg_.dropout, drop_rng));
      Tensor f = ffn(layer.ffn, layer_norm(h, layer.ln2.gain, layer.ln2.bias), drop_rng);
      h = add(h, maybe_dropout(f, cfg_.dropout, drop_rng));
    }
    return layer_norm(h, enc_final_ln_.gain, enc_final_ln_.bias);
  }

  // Row i of the result holds logits over V for the token following
  // y_prefix[i]; causal masking keeps later prefix tokens out of row i.
  Tensor forward_logits(const std::vector<int>& x, const std::vector<int>& y_prefix,
                        std::mt19937_64* drop_rng = nullptr) const {
    Tensor enc_out = encode(x, drop_rng);
    return decode_logits(enc_out, y_prefix, drop_rng);
  }

  Tensor decode_logits(const Tensor& enc_out, const std::vector<int>& y_prefix,
                       std::mt19937_64* drop_rng = nullptr) const {
    check_tokens(y_prefix, "target prefix");
    if (y_prefix.empty() || y_prefix[0] != Vocabulary::kBos)
      throw std::invalid_argument("model: target prefix must begin with <bos>");
    Tensor h = embed_sequence(y_prefix, drop_rng);
    for (const auto& layer : dec_) {
      Tensor normed = layer_norm(h, layer.ln1.gain, layer.ln1.bias);
      Tensor a = attention_core(layer.self_attn, normed, normed, /*causal=*/true, drop_rng);
      h = add(h, maybe_dropout(a, cfg_.dropout, drop_rng));
      Tensor c = attention_core(layer.cross_attn, layer_norm(h, layer.ln2.gain, layer.ln2.bias),
                                enc_out, /*causal=*/false, drop_rng);
      h = add(h, maybe_dropout(c, cfg_.dropout, drop_rng));
      Tensor f = ffn(layer.ffn, layer_norm(h, layer.ln3.gain, layer.ln3.bias), drop_rng);
      h = add(h, maybe_dropout(f, cfg_.dropout, drop_rng));
    }
    h = layer_norm(h, dec_final_ln_.gain, dec_final_ln_.bias);
    if (cfg_.share_all_embeddings) return matmul(h, transpose(embed_));
    return matmul(h, out_proj_);
  }

  // Sum of per-position log p(y_i | x, y_{<i}); y must end with <eos>.
  double sequence_logprob(const std::vector<int>& x, const std::vector<int>& y) const {
    if (y.empty() || y.back() != Vocabulary::kEos)
      throw std::invalid_argument("model: sequence_logprob target must end with <eos>");
    std::vector<int> prefix;
    prefix.push_back(Vocabulary::kBos);
    prefix.insert(prefix.end(), y.begin(), y.end() - 1);
    Tensor lp = log_softmax_rows(forward_logits(x, prefix));
    double total = 0.0;
    const int v = cfg_.vocab_size;
    for (size_t i = 0; i < y.size(); ++i) total += lp.values()[i * v + y[i]];
    return total;
  }

  // --- checkpointing --------------------------------------------------------

  void save_checkpoint(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out << "SMRT-CKPT v1\n";
    out << "encoder_layers " << cfg_.encoder_layers << "\n";
    out << "decoder_layers " << cfg_.decoder_layers << "\n";
    out << "d_model " << cfg_.d_model << "\n";
    out << "attention_heads " << cfg_.attention_heads << "\n";
    out << "ffn_dim " << cfg_.ffn_dim << "\n";
    out << "dropout " << text_double(cfg_.dropout) << "\n";
    out << "attention_dropout " << text_double(cfg_.attention_dropout) << "\n";
    out << "relu_dropout " << text_double(cfg_.relu_dropout) << "\n";
    out << "label_smoothing " << text_double(cfg_.label_smoothing) << "\n";
    out << "max_seq_len " << cfg_.max_seq_len << "\n";
    out << "vocab_size " << cfg_.vocab_size << "\n";
    out << "share_all_embeddings " << (cfg_.share_all_embeddings ? 1 : 0) << "\n";
    out << "vocab_hash " << vocab_hash_ << "\n";
    out << "params " << params_.size() << "\n";
    for (const auto& p : params_) {
      out << p.name;
      for (int dim : p.value.shape()) out << ' ' << dim;
      out << "\n";
      static_assert(sizeof(double) == 8);
      out.write(reinterpret_cast<const char*>(p.value.values().data()),
                static_cast<std::streamsize>(p.value.values().size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
  }

  static CondSeqModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != "SMRT-CKPT v1")
      throw std::runtime_error("checkpoint: " + path + " has unknown format/version");

    ModelConfig cfg;
    std::uint64_t vocab_hash = 0;
    std::size_t n_params = 0;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "encoder_layers") ls >> cfg.encoder_layers;
      else if (key == "decoder_layers") ls >> cfg.decoder_layers;
      else if (key == "d_model") ls >> cfg.d_model;
      else if (key == "attention_heads") ls >> cfg.attention_heads;
      else if (key == "ffn_dim") ls >> cfg.ffn_dim;
      else if (key == "dropout") ls >> cfg.dropout;
      else if (key == "attention_dropout") ls >> cfg.attention_dropout;
      else if (key == "relu_dropout") ls >> cfg.relu_dropout;
      else if (key == "label_smoothing") ls >> cfg.label_smoothing;
      else if (key == "max_seq_len") ls >> cfg.max_seq_len;
      else if (key == "vocab_size") ls >> cfg.vocab_size;
      else if (key == "share_all_embeddings") { int b; ls >> b; cfg.share_all_embeddings = b != 0; }
      else if (key == "vocab_hash") ls >> vocab_hash;
      else if (key == "params") { ls >> n_params; break; }
      else throw std::runtime_error("checkpoint: unknown header key '" + key + "'");
      if (!ls) throw std::runtime_error("checkpoint: malformed header line '" + line + "'");
    }
    if (n_params == 0) throw std::runtime_error("checkpoint: missing parameter section");

    CondSeqModel model(cfg, /*init_seed=*/0, vocab_hash);
    if (model.params_.size() != n_params)
      throw std::runtime_error("checkpoint: expected " + std::to_string(model.params_.size()) +
                               " parameter blocks, file has " + std::to_string(n_params));
    std::unordered_map<std::string, Tensor> by_name;
    for (auto& p : model.params_) by_name.emplace(p.name, p.value);
    for (std::size_t i = 0; i < n_params; ++i) {
      if (!std::getline(in, line))
        throw std::runtime_error("checkpoint: truncated parameter headers");
      std::istringstream ls(line);
      std::string name;
      ls >> name;
      Shape shape;
      int dim;
      while (ls >> dim) shape.push_back(dim);
      auto it = by_name.find(name);
      if (it == by_name.end())
        throw std::runtime_error("checkpoint: unexpected parameter '" + name + "'");
      if (it->second.shape() != shape)
        throw std::runtime_error("checkpoint: parameter '" + name + "' has shape " +
                                 shape_str(shape) + ", model expects " +
                                 shape_str(it->second.shape()));
      auto& vals = it->second.values();
      in.read(reinterpret_cast<char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(double)));
      if (!in) throw std::runtime_error("checkpoint: truncated values for '" + name + "'");
    }
    return model;
  }

 private:
  static std::string text_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  Tensor register_param(const std::string& name, Tensor t) {
    params_.push_back({name, t});
    return t;
  }

  Tensor xavier_param(const std::string& name, Shape shape, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (shape[0] + shape[1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<double> vals(static_cast<size_t>(shape_numel(shape)));
    for (double& v : vals) v = u(rng);
    return register_param(name, Tensor::from_values(std::move(shape), std::move(vals)));
  }

  Tensor normal_param(const std::string& name, Shape shape, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, stddev);
    std::vector<double> vals(static_cast<size_t>(shape_numel(shape)));
    for (double& v : vals) v = n(rng);
    return register_param(name, Tensor::from_values(std::move(shape), std::move(vals)));
  }

  void init_ln(const std::string& name, detail::LayerNormParams& ln) {
    ln.gain = register_param(name + ".gain",
                             Tensor::from_values({cfg_.d_model},
                                                 std::vector<double>(cfg_.d_model, 1.0)));
    ln.bias = register_param(name + ".bias", Tensor::zeros({cfg_.d_model}));
  }

  void init_attn(const std::string& prefix, detail::AttnParams& a, std::mt19937_64& rng) {
    const int d = cfg_.d_model;
    a.wq = xavier_param(prefix + "wq", {d, d}, rng);
    a.bq = register_param(prefix + "bq", Tensor::zeros({d}));
    a.wk = xavier_param(prefix + "wk", {d, d}, rng);
    a.bk = register_param(prefix + "bk", Tensor::zeros({d}));
    a.wv = xavier_param(prefix + "wv", {d, d}, rng);
    a.bv = register_param(prefix + "bv", Tensor::zeros({d}));
    a.wo = xavier_param(prefix + "wo", {d, d}, rng);
    a.bo = register_param(prefix + "bo", Tensor::zeros({d}));
  }

  void init_ffn(const std::string& prefix, detail::FfnParams& f, int d, int ffn_dim,
                std::mt19937_64& rng) {
    f.w1 = xavier_param(prefix + "w1", {d, ffn_dim}, rng);
    f.b1 = register_param(prefix + "b1", Tensor::zeros({ffn_dim}));
    f.w2 = xavier_param(prefix + "w2", {ffn_dim, d}, rng);
    f.b2 = register_param(prefix + "b2", Tensor::zeros({d}));
  }

  void check_tokens(const std::vector<int>& toks, const char* what) const {
    if (static_cast<int>(toks.size()) > cfg_.max_seq_len)
      throw std::invalid_argument(std::string("model: ") + what + " length " +
                                  std::to_string(toks.size()) + " exceeds max_seq_len " +
                                  std::to_string(cfg_.max_seq_len));
    for (int t : toks)
      if (t < 0 || t >= cfg_.vocab_size)
        throw std::invalid_argument(std::string("model: ") + what + " token id " +
                                    std::to_string(t) + " out of range");
  }

  Tensor maybe_dropout(const Tensor& t, double rate, std::mt19937_64* rng) const {
    if (!rng || rate == 0.0) return t;
    return dropout(t, rate, *rng);
  }

  Tensor embed_sequence(const std::vector<int>& toks, std::mt19937_64* drop_rng) const {
    const int d = cfg_.d_model;
    Tensor e = scale(embedding_lookup(embed_, toks), std::sqrt(static_cast<double>(d)));
    // Fixed sinusoidal positions.
    std::vector<double> pos(toks.size() * static_cast<size_t>(d));
    for (size_t i = 0; i < toks.size(); ++i)
      for (int j = 0; j < d; j += 2) {
        const double angle = static_cast<double>(i) / std::pow(10000.0, static_cast<double>(j) / d);
        pos[i * d + j] = std::sin(angle);
        if (j + 1 < d) pos[i * d + j + 1] = std::cos(angle);
      }
    e = add(e, Tensor::from_values({static_cast<int>(toks.size()), d}, std::move(pos)));
    return maybe_dropout(e, cfg_.dropout, drop_rng);
  }

  Tensor attention_core(const detail::AttnParams& p, const Tensor& q_in, const Tensor& kv_in,
                        bool causal, std::mt19937_64* drop_rng) const {
    const int heads = cfg_.attention_heads;
    const int dh = cfg_.d_model / heads;
    Tensor q = add_bias(matmul(q_in, p.wq), p.bq);
    Tensor k = add_bias(matmul(kv_in, p.wk), p.bk);
    Tensor v = add_bias(matmul(kv_in, p.wv), p.bv);
    const int t = q.rows(), s = k.rows();

    Tensor mask;
    if (causal) {
      std::vector<double> m(static_cast<size_t>(t) * s, 0.0);
      for (int i = 0; i < t; ++i)
        for (int j = i + 1; j < s; ++j) m[i * s + j] = -1e9;
      mask = Tensor::from_values({t, s}, std::move(m));
    }

    std::vector<Tensor> head_outs;
    for (int h = 0; h < heads; ++h) {
      Tensor qh = slice_cols(q, h * dh, dh);
      Tensor kh = slice_cols(k, h * dh, dh);
      Tensor vh = slice_cols(v, h * dh, dh);
      Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
      if (causal) scores = add(scores, mask);
      Tensor probs = softmax_rows(scores);
      probs = maybe_dropout(probs, cfg_.attention_dropout, drop_rng);
      head_outs.push_back(matmul(probs, vh));
    }
    Tensor merged = heads == 1 ? head_outs[0] : concat_cols(head_outs);
    return add_bias(matmul(merged, p.wo), p.bo);
  }

  Tensor ffn(const detail::FfnParams& f, const Tensor& x, std::mt19937_64* drop_rng) const {
    Tensor h = relu(add_bias(matmul(x, f.w1), f.b1));
    h = maybe_dropout(h, cfg_.relu_dropout, drop_rng);
    return add_bias(matmul(h, f.w2), f.b2);
  }

  ModelConfig cfg_;
  std::uint64_t vocab_hash_ = 0;
  std::vector<NamedParam> params_;
  Tensor embed_;
  Tensor out_proj_;
  std::vector<detail::EncoderLayer> enc_;
  std::vector<detail::DecoderLayer> dec_;
  detail::LayerNormParams enc_final_ln_;
  detail::LayerNormParams dec_final_ln_;
};

}  // namespace smrt
