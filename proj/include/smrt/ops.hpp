#pragma once

// Differentiable primitives. Every op validates input shapes up front and
// throws std::invalid_argument naming the op and the offending shapes.

#include <algorithm>
#include <random>

#include "smrt/tensor.hpp"

namespace smrt {

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline Tensor make_result(Shape shape, std::vector<double> values,
                          std::vector<std::shared_ptr<TensorNode>> parents,
                          std::function<void(TensorNode&)> backprop) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  return Tensor(n);
}

}  // namespace detail

// C[m,n] = A[m,k] * B[k,n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require(a.shape().size() == 2 && b.shape().size() == 2 && a.cols() == b.rows(),
                  "matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                      shape_str(b.shape()));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* crow = &out[i * n];
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result(
      {m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](TensorNode& self) {
        an->ensure_grad();
        bn->ensure_grad();
        const auto& g = self.grad;
        // dA += dC * B^T
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* grow = &g[i * n];
            const double* brow = &bn->values[p * n];
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            an->grad[i * k + p] += acc;
          }
        // dB += A^T * dC
        for (int p = 0; p < k; ++p)
          for (int i = 0; i < m; ++i) {
            const double aip = an->values[i * k + p];
            if (aip == 0.0) continue;
            const double* grow = &g[i * n];
            double* brow = &bn->grad[p * n];
            for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
          }
      });
}

inline Tensor transpose(const Tensor& a) {
  detail::require(a.shape().size() == 2,
                  "transpose: expected rank-2 tensor, got " + shape_str(a.shape()));
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j * m + i] = a.values()[i * n + j];
  auto an = a.node();
  return detail::make_result({n, m}, std::move(out), {an}, [an, m, n](TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) an->grad[i * n + j] += self.grad[j * m + i];
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) +
                                              " vs " + shape_str(b.shape()));
  std::vector<double> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result(a.shape(), std::move(out), {an, bn}, [an, bn](TensorNode& self) {
    an->ensure_grad();
    bn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      an->grad[i] += self.grad[i];
      bn->grad[i] += self.grad[i];
    }
  });
}

// Adds a length-n bias vector to every row of a [m,n] matrix.
inline Tensor add_bias(const Tensor& a, const Tensor& b) {
  detail::require(a.shape().size() == 2 && static_cast<std::int64_t>(a.cols()) == b.numel(),
                  "add_bias: shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.values());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] += b.values()[j];
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result(a.shape(), std::move(out), {an, bn}, [an, bn, m, n](TensorNode& self) {
    an->ensure_grad();
    bn->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        an->grad[i * n + j] += self.grad[i * n + j];
        bn->grad[j] += self.grad[i * n + j];
      }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) +
                                              " vs " + shape_str(b.shape()));
  std::vector<double> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result(a.shape(), std::move(out), {an, bn}, [an, bn](TensorNode& self) {
    an->ensure_grad();
    bn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      an->grad[i] += self.grad[i] * bn->values[i];
      bn->grad[i] += self.grad[i] * an->values[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= c;
  auto an = a.node();
  return detail::make_result(a.shape(), std::move(out), {an}, [an, c](TensorNode& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  auto an = a.node();
  return detail::make_result(a.shape(), std::move(out), {an}, [an](TensorNode& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (an->values[i] > 0.0) an->grad[i] += self.grad[i];
  });
}

// Row-wise softmax of a [m,n] matrix, max-subtracted for stability.
inline Tensor softmax_rows(const Tensor& a) {
  detail::require(a.shape().size() == 2,
                  "softmax: expected rank-2 tensor, got " + shape_str(a.shape()));
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    const double* row = &a.values()[i * n];
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      z += out[i * n + j];
    }
    for (int j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  auto an = a.node();
  return detail::make_result({m, n}, std::move(out), {an}, [an, m, n](TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < m; ++i) {
      const double* p = &self.values[i * n];
      const double* g = &self.grad[i * n];
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += p[j] * g[j];
      for (int j = 0; j < n; ++j) an->grad[i * n + j] += p[j] * (g[j] - dot);
    }
  });
}

inline Tensor log_softmax_rows(const Tensor& a) {
  detail::require(a.shape().size() == 2,
                  "log_softmax: expected rank-2 tensor, got " + shape_str(a.shape()));
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    const double* row = &a.values()[i * n];
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < n; ++j) out[i * n + j] = row[j] - lz;
  }
  auto an = a.node();
  return detail::make_result({m, n}, std::move(out), {an}, [an, m, n](TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < m; ++i) {
      const double* lp = &self.values[i * n];
      const double* g = &self.grad[i * n];
      double gsum = 0.0;
      for (int j = 0; j < n; ++j) gsum += g[j];
      for (int j = 0; j < n; ++j) an->grad[i * n + j] += g[j] - std::exp(lp[j]) * gsum;
    }
  });
}

// Row-wise layer norm with learned gain and bias (each length n).
inline Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                         double eps = 1e-5) {
  detail::require(a.shape().size() == 2 && static_cast<std::int64_t>(a.cols()) == gain.numel() &&
                      gain.numel() == bias.numel(),
                  "layer_norm: shape mismatch " + shape_str(a.shape()) + " vs gain " +
                      shape_str(gain.shape()));
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<size_t>(m) * n);
  std::vector<double> xhat(static_cast<size_t>(m) * n);
  std::vector<double> inv_sigma(m);
  for (int i = 0; i < m; ++i) {
    const double* row = &a.values()[i * n];
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += row[j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = is;
    for (int j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * is;
      out[i * n + j] = gain.values()[j] * xhat[i * n + j] + bias.values()[j];
    }
  }
  auto an = a.node();
  auto gn = gain.node();
  auto bn = bias.node();
  return detail::make_result(
      {m, n}, std::move(out), {an, gn, bn},
      [an, gn, bn, m, n, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)](
          TensorNode& self) {
        an->ensure_grad();
        gn->ensure_grad();
        bn->ensure_grad();
        for (int i = 0; i < m; ++i) {
          const double* g = &self.grad[i * n];
          const double* xh = &xhat[i * n];
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (int j = 0; j < n; ++j) {
            const double dxhat = g[j] * gn->values[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xh[j];
            gn->grad[j] += g[j] * xh[j];
            bn->grad[j] += g[j];
          }
          for (int j = 0; j < n; ++j) {
            const double dxhat = g[j] * gn->values[j];
            an->grad[i * n + j] +=
                inv_sigma[i] * (dxhat - sum_dxhat / n - xh[j] * sum_dxhat_xhat / n);
          }
        }
      });
}

// Gathers rows of a [V,d] table by token id; gradient scatters back.
inline Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  detail::require(table.shape().size() == 2,
                  "embedding_lookup: table must be rank-2, got " + shape_str(table.shape()));
  const int v = table.rows(), d = table.cols();
  for (int id : ids)
    detail::require(id >= 0 && id < v, "embedding_lookup: token id " + std::to_string(id) +
                                           " out of range for table " + shape_str(table.shape()));
  const int t = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<size_t>(t) * d);
  for (int i = 0; i < t; ++i)
    std::copy_n(&table.values()[ids[i] * d], d, &out[i * d]);
  auto tn = table.node();
  return detail::make_result({t, d}, std::move(out), {tn}, [tn, ids, d](TensorNode& self) {
    tn->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j) tn->grad[ids[i] * d + j] += self.grad[i * d + j];
  });
}

// Inverted dropout: kept units are scaled by 1/(1-rate) so eval needs no
// rescaling. The mask is drawn from the caller's generator.
inline Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  detail::require(rate >= 0.0 && rate < 1.0,
                  "dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (rate == 0.0) return a;
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> mask(a.values().size());
  for (double& mv : mask) mv = u(rng) < keep ? 1.0 / keep : 0.0;
  std::vector<double> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  auto an = a.node();
  return detail::make_result(a.shape(), std::move(out), {an},
                             [an, mask = std::move(mask)](TensorNode& self) {
                               an->ensure_grad();
                               for (size_t i = 0; i < self.grad.size(); ++i)
                                 an->grad[i] += self.grad[i] * mask[i];
                             });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  detail::require(!parts.empty(), "concat: no inputs");
  const int m = parts[0].rows();
  int n = 0;
  for (const Tensor& p : parts) {
    detail::require(p.shape().size() == 2 && p.rows() == m,
                    "concat: row mismatch, " + shape_str(parts[0].shape()) + " vs " +
                        shape_str(p.shape()));
    n += p.cols();
  }
  std::vector<double> out(static_cast<size_t>(m) * n);
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::vector<int> widths;
  int off = 0;
  for (const Tensor& p : parts) {
    const int w = p.cols();
    for (int i = 0; i < m; ++i)
      std::copy_n(&p.values()[i * w], w, &out[i * n + off]);
    off += w;
    parents.push_back(p.node());
    widths.push_back(w);
  }
  return detail::make_result({m, n}, std::move(out), parents,
                             [parents, widths, m, n](TensorNode& self) {
                               int off2 = 0;
                               for (size_t k = 0; k < parents.size(); ++k) {
                                 parents[k]->ensure_grad();
                                 const int w = widths[k];
                                 for (int i = 0; i < m; ++i)
                                   for (int j = 0; j < w; ++j)
                                     parents[k]->grad[i * w + j] += self.grad[i * n + off2 + j];
                                 off2 += w;
                               }
                             });
}

inline Tensor slice_cols(const Tensor& a, int start, int count) {
  detail::require(a.shape().size() == 2 && start >= 0 && count > 0 && start + count <= a.cols(),
                  "slice_cols: range [" + std::to_string(start) + "," +
                      std::to_string(start + count) + ") invalid for " + shape_str(a.shape()));
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<size_t>(m) * count);
  for (int i = 0; i < m; ++i)
    std::copy_n(&a.values()[i * n + start], count, &out[i * count]);
  auto an = a.node();
  return detail::make_result({m, count}, std::move(out), {an},
                             [an, start, count, m, n](TensorNode& self) {
                               an->ensure_grad();
                               for (int i = 0; i < m; ++i)
                                 for (int j = 0; j < count; ++j)
                                   an->grad[i * n + start + j] += self.grad[i * count + j];
                             });
}

inline Tensor sum(const Tensor& a) {
  double s = std::accumulate(a.values().begin(), a.values().end(), 0.0);
  auto an = a.node();
  return detail::make_result({1}, {s}, {an}, [an](TensorNode& self) {
    an->ensure_grad();
    for (double& g : an->grad) g += self.grad[0];
  });
}

inline Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  double s = std::accumulate(a.values().begin(), a.values().end(), 0.0) * inv;
  auto an = a.node();
  return detail::make_result({1}, {s}, {an}, [an, inv](TensorNode& self) {
    an->ensure_grad();
    for (double& g : an->grad) g += self.grad[0] * inv;
  });
}

}  // namespace smrt
