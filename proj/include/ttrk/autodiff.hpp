#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ttrk/rng.hpp"
#include "ttrk/tensor.hpp"

namespace ttrk {

// Tape-based reverse-mode autodiff over dense tensors. A Graph owns every
// intermediate of one forward pass; backward() walks the tape in reverse
// creation order. Var is an index into the tape.
template <class T>
class Graph {
 public:
  using Var = int;
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Mat>;
  using CMatMap = Eigen::Map<const Mat>;

  struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    std::function<void(Graph&)> back;
  };

  const Tensor<T>& val(Var v) const { return nodes_[v].val; }
  Tensor<T>& grad(Var v) { return nodes_[v].grad; }

  Var leaf(Tensor<T> value) { return make_(std::move(value), nullptr); }

  // Leaf whose gradient is flushed into `grad_sink` after backward().
  Var param(const Tensor<T>& value, Tensor<T>* grad_sink) {
    Var v = leaf(value);
    sinks_.emplace_back(v, grad_sink);
    return v;
  }

  Var add(Var a, Var b) {
    assert(val(a).same_shape(val(b)));
    Tensor<T> out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += val(b).data[i];
    return make_(std::move(out), [a, b](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.grad(self).size(); ++i) {
        g.grad(a).data[i] += g.grad(self).data[i];
        g.grad(b).data[i] += g.grad(self).data[i];
      }
    });
  }

  Var sub(Var a, Var b) {
    assert(val(a).same_shape(val(b)));
    Tensor<T> out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= val(b).data[i];
    return make_(std::move(out), [a, b](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.grad(self).size(); ++i) {
        g.grad(a).data[i] += g.grad(self).data[i];
        g.grad(b).data[i] -= g.grad(self).data[i];
      }
    });
  }

  Var mul(Var a, Var b) {
    assert(val(a).same_shape(val(b)));
    Tensor<T> out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= val(b).data[i];
    return make_(std::move(out), [a, b](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.grad(self).size(); ++i) {
        g.grad(a).data[i] += g.grad(self).data[i] * g.val(b).data[i];
        g.grad(b).data[i] += g.grad(self).data[i] * g.val(a).data[i];
      }
    });
  }

  Var scale(Var a, T c) {
    Tensor<T> out = val(a);
    for (auto& x : out.data) x *= c;
    return make_(std::move(out), [a, c](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.grad(self).size(); ++i)
        g.grad(a).data[i] += c * g.grad(self).data[i];
    });
  }

  // A (m x n) + row vector b (n), broadcast over rows.
  Var add_rowvec(Var a, Var b) {
    const int m = val(a).rows(), n = val(a).cols();
    assert(val(b).shape == std::vector<int>{n});
    Tensor<T> out = val(a);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out(i, j) += val(b)(j);
    return make_(std::move(out), [a, b, m, n](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          g.grad(a)(i, j) += g.grad(self)(i, j);
          g.grad(b)(j) += g.grad(self)(i, j);
        }
    });
  }

  Var matmul(Var a, Var b) {
    const int m = val(a).rows(), k = val(a).cols(), n = val(b).cols();
    assert(val(b).rows() == k);
    Tensor<T> out = Tensor<T>::zeros({m, n});
    map_(out) = cmap_(val(a)) * cmap_(val(b));
    return make_(std::move(out), [a, b](Graph& g) {
      Var self = g.current_;
      map_(g.grad(a)) += cmap_(g.grad(self)) * cmap_(g.val(b)).transpose();
      map_(g.grad(b)) += cmap_(g.val(a)).transpose() * cmap_(g.grad(self));
    });
  }

  // A (m x k) * B^T where B is (n x k) -> (m x n)
  Var matmul_t(Var a, Var b) {
    const int m = val(a).rows(), k = val(a).cols(), n = val(b).rows();
    assert(val(b).cols() == k);
    Tensor<T> out = Tensor<T>::zeros({m, n});
    map_(out) = cmap_(val(a)) * cmap_(val(b)).transpose();
    return make_(std::move(out), [a, b](Graph& g) {
      Var self = g.current_;
      map_(g.grad(a)) += cmap_(g.grad(self)) * cmap_(g.val(b));
      map_(g.grad(b)) += cmap_(g.grad(self)).transpose() * cmap_(g.val(a));
    });
  }

  // A (m x n) * x (n) -> (m)
  Var matvec(Var a, Var x) {
    const int m = val(a).rows(), n = val(a).cols();
    assert(val(x).shape == std::vector<int>{n});
    Tensor<T> out = Tensor<T>::zeros({m});
    for (int i = 0; i < m; ++i) {
      T s = 0;
      for (int j = 0; j < n; ++j) s += val(a)(i, j) * val(x)(j);
      out(i) = s;
    }
    return make_(std::move(out), [a, x, m, n](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i) {
        const T gi = g.grad(self)(i);
        for (int j = 0; j < n; ++j) {
          g.grad(a)(i, j) += gi * g.val(x)(j);
          g.grad(x)(j) += gi * g.val(a)(i, j);
        }
      }
    });
  }

  // A^T (n x m) * x, i.e. A (m x n), x (m) -> (n)
  Var tmatvec(Var a, Var x) {
    const int m = val(a).rows(), n = val(a).cols();
    assert(val(x).shape == std::vector<int>{m});
    Tensor<T> out = Tensor<T>::zeros({n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out(j) += val(a)(i, j) * val(x)(i);
    return make_(std::move(out), [a, x, m, n](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          g.grad(a)(i, j) += g.grad(self)(j) * g.val(x)(i);
          g.grad(x)(i) += g.grad(self)(j) * g.val(a)(i, j);
        }
    });
  }

  Var dot(Var a, Var b) {
    assert(val(a).same_shape(val(b)));
    T s = 0;
    for (std::size_t i = 0; i < val(a).size(); ++i)
      s += val(a).data[i] * val(b).data[i];
    Tensor<T> out = Tensor<T>::vector({s});
    return make_(std::move(out), [a, b](Graph& g) {
      Var self = g.current_;
      const T gs = g.grad(self)(0);
      for (std::size_t i = 0; i < g.val(a).size(); ++i) {
        g.grad(a).data[i] += gs * g.val(b).data[i];
        g.grad(b).data[i] += gs * g.val(a).data[i];
      }
    });
  }

  Var tanh_op(Var a) {
    Tensor<T> out = val(a);
    for (auto& x : out.data) x = std::tanh(x);
    return make_(std::move(out), [a](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.val(self).size(); ++i) {
        const T y = g.val(self).data[i];
        g.grad(a).data[i] += g.grad(self).data[i] * (T(1) - y * y);
      }
    });
  }

  Var sigmoid_op(Var a) {
    Tensor<T> out = val(a);
    for (auto& x : out.data) x = T(1) / (T(1) + std::exp(-x));
    return make_(std::move(out), [a](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.val(self).size(); ++i) {
        const T y = g.val(self).data[i];
        g.grad(a).data[i] += g.grad(self).data[i] * y * (T(1) - y);
      }
    });
  }

  // exact GELU: x * Phi(x)
  Var gelu_op(Var a) {
    Tensor<T> out = val(a);
    for (auto& x : out.data) {
      x = x * T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
    }
    return make_(std::move(out), [a](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.val(a).size(); ++i) {
        const T x = g.val(a).data[i];
        const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
        const T pdf = std::exp(-x * x / T(2)) / std::sqrt(T(2) * T(M_PI));
        g.grad(a).data[i] += g.grad(self).data[i] * (cdf + x * pdf);
      }
    });
  }

  // Row-wise softmax over a matrix; columns where col_mask is 0 get weight 0.
  // col_mask may be empty (no masking); rows with no unmasked column are
  // rejected by the assert in callers (never produced by valid inputs).
  Var row_softmax(Var a, std::vector<std::uint8_t> col_mask = {}) {
    const int m = val(a).rows(), n = val(a).cols();
    assert(col_mask.empty() || static_cast<int>(col_mask.size()) == n);
    Tensor<T> out = val(a);
    for (int i = 0; i < m; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (int j = 0; j < n; ++j)
        if (col_mask.empty() || col_mask[j]) mx = std::max(mx, out(i, j));
      T z = 0;
      for (int j = 0; j < n; ++j) {
        if (col_mask.empty() || col_mask[j]) {
          out(i, j) = std::exp(out(i, j) - mx);
          z += out(i, j);
        } else {
          out(i, j) = 0;
        }
      }
      for (int j = 0; j < n; ++j) out(i, j) /= z;
    }
    return make_(std::move(out), [a, m, n](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i) {
        T acc = 0;
        for (int j = 0; j < n; ++j)
          acc += g.grad(self)(i, j) * g.val(self)(i, j);
        for (int j = 0; j < n; ++j) {
          g.grad(a)(i, j) +=
              g.val(self)(i, j) * (g.grad(self)(i, j) - acc);
        }
      }
    });
  }

  Var softmax_vec(Var a) {
    const int n = static_cast<int>(val(a).size());
    Tensor<T> out = val(a);
    T mx = -std::numeric_limits<T>::infinity();
    for (T x : out.data) mx = std::max(mx, x);
    T z = 0;
    for (auto& x : out.data) {
      x = std::exp(x - mx);
      z += x;
    }
    for (auto& x : out.data) x /= z;
    return make_(std::move(out), [a, n](Graph& g) {
      Var self = g.current_;
      T acc = 0;
      for (int j = 0; j < n; ++j) acc += g.grad(self)(j) * g.val(self)(j);
      for (int j = 0; j < n; ++j)
        g.grad(a)(j) += g.val(self)(j) * (g.grad(self)(j) - acc);
    });
  }

  // Row-wise layer norm (eps inside the sqrt), then per-column affine.
  Var layer_norm(Var x, Var gamma, Var beta, T eps = T(1e-5)) {
    const int m = val(x).rows(), n = val(x).cols();
    assert(val(gamma).shape == std::vector<int>{n});
    assert(val(beta).shape == std::vector<int>{n});
    Tensor<T> out = Tensor<T>::zeros({m, n});
    auto ctx = std::make_shared<LnCtx>();
    ctx->mean.resize(m);
    ctx->inv_std.resize(m);
    ctx->xhat = Tensor<T>::zeros({m, n});
    for (int i = 0; i < m; ++i) {
      T mu = 0;
      for (int j = 0; j < n; ++j) mu += val(x)(i, j);
      mu /= T(n);
      T var = 0;
      for (int j = 0; j < n; ++j) {
        const T d = val(x)(i, j) - mu;
        var += d * d;
      }
      var /= T(n);
      const T inv = T(1) / std::sqrt(var + eps);
      ctx->mean[i] = mu;
      ctx->inv_std[i] = inv;
      for (int j = 0; j < n; ++j) {
        const T xh = (val(x)(i, j) - mu) * inv;
        ctx->xhat(i, j) = xh;
        out(i, j) = val(gamma)(j) * xh + val(beta)(j);
      }
    }
    return make_(std::move(out), [x, gamma, beta, m, n, ctx](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i) {
        T sum_gdy = 0, sum_gdy_xhat = 0;
        for (int j = 0; j < n; ++j) {
          const T gdy = g.grad(self)(i, j) * g.val(gamma)(j);
          sum_gdy += gdy;
          sum_gdy_xhat += gdy * ctx->xhat(i, j);
          g.grad(gamma)(j) += g.grad(self)(i, j) * ctx->xhat(i, j);
          g.grad(beta)(j) += g.grad(self)(i, j);
        }
        for (int j = 0; j < n; ++j) {
          const T gdy = g.grad(self)(i, j) * g.val(gamma)(j);
          g.grad(x)(i, j) +=
              ctx->inv_std[i] *
              (gdy - sum_gdy / T(n) - ctx->xhat(i, j) * sum_gdy_xhat / T(n));
        }
      }
    });
  }

  // Sum of token, position and segment embedding rows -> (L x d).
  Var embedding_sum(Var tok_table, Var pos_table, Var seg_table,
                    std::vector<int> ids, std::vector<int> segs) {
    const int L = static_cast<int>(ids.size());
    const int d = val(tok_table).cols();
    assert(segs.size() == ids.size());
    Tensor<T> out = Tensor<T>::zeros({L, d});
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < d; ++j)
        out(i, j) = val(tok_table)(ids[i], j) + val(pos_table)(i, j) +
                    val(seg_table)(segs[i], j);
    return make_(std::move(out),
                 [tok_table, pos_table, seg_table, ids = std::move(ids),
                  segs = std::move(segs), L, d](Graph& g) {
                   Var self = g.current_;
                   for (int i = 0; i < L; ++i)
                     for (int j = 0; j < d; ++j) {
                       const T gij = g.grad(self)(i, j);
                       g.grad(tok_table)(ids[i], j) += gij;
                       g.grad(pos_table)(i, j) += gij;
                       g.grad(seg_table)(segs[i], j) += gij;
                     }
                 });
  }

  Var slice_cols(Var a, int start, int count) {
    const int m = val(a).rows();
    Tensor<T> out = Tensor<T>::zeros({m, count});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < count; ++j) out(i, j) = val(a)(i, start + j);
    return make_(std::move(out), [a, start, count, m](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < count; ++j)
          g.grad(a)(i, start + j) += g.grad(self)(i, j);
    });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    const int m = val(parts[0]).rows();
    int n = 0;
    for (Var p : parts) n += val(p).cols();
    Tensor<T> out = Tensor<T>::zeros({m, n});
    int off = 0;
    for (Var p : parts) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < val(p).cols(); ++j) out(i, off + j) = val(p)(i, j);
      off += val(p).cols();
    }
    return make_(std::move(out), [parts, m](Graph& g) {
      Var self = g.current_;
      int off = 0;
      for (Var p : parts) {
        const int pc = g.val(p).cols();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < pc; ++j)
            g.grad(p)(i, j) += g.grad(self)(i, off + j);
        off += pc;
      }
    });
  }

  // Concatenate rank-1 tensors into one longer rank-1 tensor.
  Var concat_vecs(const std::vector<Var>& parts) {
    int n = 0;
    for (Var p : parts) n += static_cast<int>(val(p).size());
    Tensor<T> out = Tensor<T>::zeros({n});
    int off = 0;
    for (Var p : parts) {
      for (std::size_t i = 0; i < val(p).size(); ++i)
        out(off + static_cast<int>(i)) = val(p).data[i];
      off += static_cast<int>(val(p).size());
    }
    return make_(std::move(out), [parts](Graph& g) {
      Var self = g.current_;
      int off = 0;
      for (Var p : parts) {
        for (std::size_t i = 0; i < g.val(p).size(); ++i)
          g.grad(p).data[i] += g.grad(self)(off + static_cast<int>(i));
        off += static_cast<int>(g.val(p).size());
      }
    });
  }

  // Stack rank-1 tensors of equal length as matrix rows.
  Var stack_rows(const std::vector<Var>& rows) {
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(val(rows[0]).size());
    Tensor<T> out = Tensor<T>::zeros({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = val(rows[i])(j);
    return make_(std::move(out), [rows, m, n](Graph& g) {
      Var self = g.current_;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g.grad(rows[i])(j) += g.grad(self)(i, j);
    });
  }

  Var row(Var a, int r) {
    const int n = val(a).cols();
    Tensor<T> out = Tensor<T>::zeros({n});
    for (int j = 0; j < n; ++j) out(j) = val(a)(r, j);
    return make_(std::move(out), [a, r, n](Graph& g) {
      Var self = g.current_;
      for (int j = 0; j < n; ++j) g.grad(a)(r, j) += g.grad(self)(j);
    });
  }

  Var gather_rows(Var a, std::vector<int> indices) {
    const int n = val(a).cols();
    const int m = static_cast<int>(indices.size());
    Tensor<T> out = Tensor<T>::zeros({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = val(a)(indices[i], j);
    return make_(std::move(out),
                 [a, indices = std::move(indices), m, n](Graph& g) {
                   Var self = g.current_;
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < n; ++j)
                       g.grad(a)(indices[i], j) += g.grad(self)(i, j);
                 });
  }

  // Column-wise max over rows (max pooling); gradient flows to the first
  // argmax row of each column.
  Var col_max(Var a) {
    const int m = val(a).rows(), n = val(a).cols();
    Tensor<T> out = Tensor<T>::zeros({n});
    auto argmax = std::make_shared<std::vector<int>>(n, 0);
    for (int j = 0; j < n; ++j) {
      T best = val(a)(0, j);
      for (int i = 1; i < m; ++i) {
        if (val(a)(i, j) > best) {
          best = val(a)(i, j);
          (*argmax)[j] = i;
        }
      }
      out(j) = best;
    }
    return make_(std::move(out), [a, n, argmax](Graph& g) {
      Var self = g.current_;
      for (int j = 0; j < n; ++j)
        g.grad(a)((*argmax)[j], j) += g.grad(self)(j);
    });
  }

  // Cross entropy of softmax(logits) against `target`; logits is rank-1.
  Var softmax_ce(Var logits, int target) {
    const int n = static_cast<int>(val(logits).size());
    assert(target >= 0 && target < n);
    T mx = -std::numeric_limits<T>::infinity();
    for (T x : val(logits).data) mx = std::max(mx, x);
    T z = 0;
    for (T x : val(logits).data) z += std::exp(x - mx);
    const T loss = std::log(z) + mx - val(logits)(target);
    return make_(Tensor<T>::vector({loss}), [logits, target, n, mx, z](Graph& g) {
      Var self = g.current_;
      const T gs = g.grad(self)(0);
      for (int j = 0; j < n; ++j) {
        const T p = std::exp(g.val(logits)(j) - mx) / z;
        g.grad(logits)(j) += gs * (p - (j == target ? T(1) : T(0)));
      }
    });
  }

  // Mean cross entropy over matrix rows against per-row targets.
  Var softmax_ce_rows(Var logits, std::vector<int> targets) {
    const int m = val(logits).rows(), n = val(logits).cols();
    assert(static_cast<int>(targets.size()) == m);
    T total = 0;
    for (int i = 0; i < m; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (int j = 0; j < n; ++j) mx = std::max(mx, val(logits)(i, j));
      T z = 0;
      for (int j = 0; j < n; ++j) z += std::exp(val(logits)(i, j) - mx);
      total += std::log(z) + mx - val(logits)(i, targets[i]);
    }
    return make_(Tensor<T>::vector({total / T(m)}),
                 [logits, targets = std::move(targets), m, n](Graph& g) {
                   Var self = g.current_;
                   const T gs = g.grad(self)(0) / T(m);
                   for (int i = 0; i < m; ++i) {
                     T mx = -std::numeric_limits<T>::infinity();
                     for (int j = 0; j < n; ++j)
                       mx = std::max(mx, g.val(logits)(i, j));
                     T z = 0;
                     for (int j = 0; j < n; ++j)
                       z += std::exp(g.val(logits)(i, j) - mx);
                     for (int j = 0; j < n; ++j) {
                       const T p = std::exp(g.val(logits)(i, j) - mx) / z;
                       g.grad(logits)(i, j) +=
                           gs * (p - (j == targets[i] ? T(1) : T(0)));
                     }
                   }
                 });
  }

  // Numerically stable binary cross entropy with a logit input.
  Var bce_logit(Var logit, int y) {
    const T z = val(logit)(0);
    const T loss = std::max(z, T(0)) - T(y) * z + std::log1p(std::exp(-std::abs(z)));
    return make_(Tensor<T>::vector({loss}), [logit, y, z](Graph& g) {
      Var self = g.current_;
      const T p = T(1) / (T(1) + std::exp(-z));
      g.grad(logit)(0) += g.grad(self)(0) * (p - T(y));
    });
  }

  // Inverted dropout; identity when prob == 0.
  Var dropout(Var a, T prob, Rng& rng) {
    if (prob <= T(0)) return a;
    Tensor<T> out = val(a);
    auto mask = std::make_shared<std::vector<T>>(out.size());
    const T keep = T(1) - prob;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const T m = rng.uniform() < static_cast<double>(prob) ? T(0) : T(1) / keep;
      (*mask)[i] = m;
      out.data[i] *= m;
    }
    return make_(std::move(out), [a, mask](Graph& g) {
      Var self = g.current_;
      for (std::size_t i = 0; i < g.val(a).size(); ++i)
        g.grad(a).data[i] += g.grad(self).data[i] * (*mask)[i];
    });
  }

  Var sum_scalars(const std::vector<Var>& vars) {
    T s = 0;
    for (Var v : vars) s += val(v)(0);
    return make_(Tensor<T>::vector({s}), [vars](Graph& g) {
      Var self = g.current_;
      for (Var v : vars) g.grad(v)(0) += g.grad(self)(0);
    });
  }

  Var mean_scalars(const std::vector<Var>& vars) {
    return scale(sum_scalars(vars), T(1) / T(vars.size()));
  }

  Var constant_scalar(T value) { return leaf(Tensor<T>::vector({value})); }

  // Runs reverse-mode accumulation from a scalar loss and flushes parameter
  // gradients into their sinks.
  void backward(Var loss) {
    assert(val(loss).size() == 1);
    for (auto& node : nodes_) {
      node.grad = Tensor<T>::zeros(node.val.shape);
    }
    nodes_[loss].grad(0) = T(1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[i].back) {
        current_ = i;
        nodes_[i].back(*this);
      }
    }
    for (auto& [v, sink] : sinks_) {
      if (!sink) continue;
      assert(sink->same_shape(nodes_[v].grad));
      for (std::size_t i = 0; i < sink->size(); ++i)
        sink->data[i] += nodes_[v].grad.data[i];
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct LnCtx {
    std::vector<T> mean, inv_std;
    Tensor<T> xhat;
  };

  Var make_(Tensor<T> val, std::function<void(Graph&)> back) {
    nodes_.push_back(Node{std::move(val), {}, std::move(back)});
    return static_cast<Var>(nodes_.size()) - 1;
  }

  static MatMap map_(Tensor<T>& t) {
    return MatMap(t.data.data(), t.rows(), t.cols());
  }
  static CMatMap cmap_(const Tensor<T>& t) {
    return CMatMap(t.data.data(), t.rows(), t.cols());
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<Var, Tensor<T>*>> sinks_;
  Var current_ = -1;
};

}  // namespace ttrk
