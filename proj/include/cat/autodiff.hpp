#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cat/errors.hpp"
#include "cat/rng.hpp"
#include "cat/tensor.hpp"

namespace cat {

/// Transformation applied to a parameter's gradient after backward and before
/// the optimizer step. Must never change the gradient's length.
using GradHook = std::function<void(std::vector<double>&)>;

/// A trainable tensor. The gradient lives in t.g (empty = not populated).
struct Parameter {
  Tensor t;
  GradHook hook;

  Parameter() = default;
  explicit Parameter(Tensor tensor) : t(std::move(tensor)) {}
};

/// Hook that multiplies gradient entry i by keep[i].
inline GradHook elementwise_keep_hook(std::vector<double> keep) {
  return [keep = std::move(keep)](std::vector<double>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= keep[i];
  };
}

/// Hook for an [in x out] weight matrix: multiplies column o by keep[o],
/// i.e. scales every incoming weight of output unit o at once.
inline GradHook column_keep_hook(std::vector<double> keep) {
  return [keep = std::move(keep)](std::vector<double>& g) {
    const std::size_t out = keep.size();
    for (std::size_t i = 0; i < g.size(); i += out)
      for (std::size_t o = 0; o < out; ++o) g[i + o] *= keep[o];
  };
}

namespace detail {

// c[m x n] += a[m x k] * b[k x n]
inline void mm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      if (av == 0.0) continue;
      const double* bk = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

// da[m x k] += dc[m x n] * b[k x n]^T
inline void mm_acc_bt(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
                      std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* dci = dc + i * n;
    double* dai = da + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double* bj = b + j * n;
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += dci[c] * bj[c];
      dai[j] += s;
    }
  }
}

// db[k x n] += a[m x k]^T * dc[m x n]
inline void mm_acc_at(const double* a, const double* dc, double* db, std::size_t m, std::size_t k,
                      std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* dci = dc + i * n;
    for (std::size_t j = 0; j < k; ++j) {
      const double av = ai[j];
      if (av == 0.0) continue;
      double* dbj = db + j * n;
      for (std::size_t c = 0; c < n; ++c) dbj[c] += av * dci[c];
    }
  }
}

}  // namespace detail

/// Define-by-run reverse-mode tape. A tape records one forward pass; backward
/// replays the recorded operations once, in reverse order, accumulating
/// gradients into the bound Parameters (and then applies their hooks).
/// Intended use is one backward per tape.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  /// Constant leaf; the tape owns a copy.
  Var input(Tensor t) {
    nodes_.push_back(Node{std::move(t), nullptr, {}, {}, nullptr});
    return Var{int(nodes_.size()) - 1};
  }

  /// Constant leaf borrowing the caller's tensor (must outlive the tape).
  Var input_view(const Tensor& t) {
    nodes_.push_back(Node{Tensor{}, &t, {}, {}, nullptr});
    return Var{int(nodes_.size()) - 1};
  }

  /// Differentiable leaf bound to a Parameter. Binding the same Parameter
  /// twice returns the original Var.
  Var param(Parameter& p) {
    auto it = bound_.find(&p);
    if (it != bound_.end()) return Var{it->second};
    nodes_.push_back(Node{Tensor{}, &p.t, {}, {}, &p});
    int id = int(nodes_.size()) - 1;
    bound_.emplace(&p, id);
    return Var{id};
  }

  const Tensor& val(Var x) const { return value_of(x.id); }

  // ---- primitives ----

  Var matmul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.is_matrix() || !tb.is_matrix() || ta.cols() != tb.rows())
      throw ShapeError("matmul: " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
    const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out(Shape{m, n});
    detail::mm_acc(ta.v.data(), tb.v.data(), out.v.data(), m, k, n);
    return record(std::move(out), [a, b, m, k, n](Tape& t, const std::vector<double>& go) {
      detail::mm_acc_bt(go.data(), t.value_of(b.id).v.data(), t.grad_of(a.id).data(), m, k, n);
      detail::mm_acc_at(t.value_of(a.id).v.data(), go.data(), t.grad_of(b.id).data(), m, k, n);
    });
  }

  Var transpose(Var x) {
    const Tensor& tx = val(x);
    if (!tx.is_matrix()) throw ShapeError("transpose: not a matrix " + shape_str(tx.shape));
    const std::size_t m = tx.rows(), n = tx.cols();
    Tensor out(Shape{n, m});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.v[j * m + i] = tx.v[i * n + j];
    return record(std::move(out), [x, m, n](Tape& t, const std::vector<double>& go) {
      auto& gx = t.grad_of(x.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += go[j * m + i];
    });
  }

  Var add(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb))
      throw ShapeError("add: " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = ta.v[i] + tb.v[i];
    return record(std::move(out), [a, b](Tape& t, const std::vector<double>& go) {
      auto& ga = t.grad_of(a.id);
      auto& gb = t.grad_of(b.id);
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] += go[i];
        gb[i] += go[i];
      }
    });
  }

  Var mul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb))
      throw ShapeError("mul: " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = ta.v[i] * tb.v[i];
    return record(std::move(out), [a, b](Tape& t, const std::vector<double>& go) {
      const auto& va = t.value_of(a.id).v;
      const auto& vb = t.value_of(b.id).v;
      auto& ga = t.grad_of(a.id);
      auto& gb = t.grad_of(b.id);
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] += go[i] * vb[i];
        gb[i] += go[i] * va[i];
      }
    });
  }

  /// m[r x n] + v[n], v broadcast over rows.
  Var add_rowvec(Var m, Var vvar) {
    const Tensor& tm = val(m);
    const Tensor& tv = val(vvar);
    if (!tm.is_matrix() || !tv.is_vector() || tv.size() != tm.cols())
      throw ShapeError("add_rowvec: " + shape_str(tm.shape) + " + " + shape_str(tv.shape));
    const std::size_t r = tm.rows(), n = tm.cols();
    Tensor out(tm.shape);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < n; ++j) out.v[i * n + j] = tm.v[i * n + j] + tv.v[j];
    return record(std::move(out), [m, vvar, r, n](Tape& t, const std::vector<double>& go) {
      auto& gm = t.grad_of(m.id);
      auto& gv = t.grad_of(vvar.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          gm[i * n + j] += go[i * n + j];
          gv[j] += go[i * n + j];
        }
    });
  }

  /// m[r x n] * v[n] elementwise, v broadcast over rows.
  Var mul_rowvec(Var m, Var vvar) {
    const Tensor& tm = val(m);
    const Tensor& tv = val(vvar);
    if (!tm.is_matrix() || !tv.is_vector() || tv.size() != tm.cols())
      throw ShapeError("mul_rowvec: " + shape_str(tm.shape) + " * " + shape_str(tv.shape));
    const std::size_t r = tm.rows(), n = tm.cols();
    Tensor out(tm.shape);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < n; ++j) out.v[i * n + j] = tm.v[i * n + j] * tv.v[j];
    return record(std::move(out), [m, vvar, r, n](Tape& t, const std::vector<double>& go) {
      const auto& vm = t.value_of(m.id).v;
      const auto& vv = t.value_of(vvar.id).v;
      auto& gm = t.grad_of(m.id);
      auto& gv = t.grad_of(vvar.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          gm[i * n + j] += go[i * n + j] * vv[j];
          gv[j] += go[i * n + j] * vm[i * n + j];
        }
    });
  }

  /// m[r x n] scaled per row by c (shape [r] or [r x 1]).
  Var mul_colvec(Var m, Var cvar) {
    const Tensor& tm = val(m);
    const Tensor& tc = val(cvar);
    const bool col_ok = (tc.is_vector() && tc.size() == tm.rows()) ||
                        (tc.is_matrix() && tc.rows() == tm.rows() && tc.cols() == 1);
    if (!tm.is_matrix() || !col_ok)
      throw ShapeError("mul_colvec: " + shape_str(tm.shape) + " * " + shape_str(tc.shape));
    const std::size_t r = tm.rows(), n = tm.cols();
    Tensor out(tm.shape);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < n; ++j) out.v[i * n + j] = tm.v[i * n + j] * tc.v[i];
    return record(std::move(out), [m, cvar, r, n](Tape& t, const std::vector<double>& go) {
      const auto& vm = t.value_of(m.id).v;
      const auto& vc = t.value_of(cvar.id).v;
      auto& gm = t.grad_of(m.id);
      auto& gc = t.grad_of(cvar.id);
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          gm[i * n + j] += go[i * n + j] * vc[i];
          s += go[i * n + j] * vm[i * n + j];
        }
        gc[i] += s;
      }
    });
  }

  Var scale(Var x, double k) {
    const Tensor& tx = val(x);
    Tensor out(tx.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = tx.v[i] * k;
    return record(std::move(out), [x, k](Tape& t, const std::vector<double>& go) {
      auto& gx = t.grad_of(x.id);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * k;
    });
  }

  Var sigmoid(Var x) {
    const Tensor& tx = val(x);
    Tensor out(tx.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = 1.0 / (1.0 + std::exp(-tx.v[i]));
    std::vector<double> y = out.v;
    return record(std::move(out), [x, y = std::move(y)](Tape& t, const std::vector<double>& go) {
      auto& gx = t.grad_of(x.id);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * y[i] * (1.0 - y[i]);
    });
  }

  Var relu(Var x) {
    const Tensor& tx = val(x);
    Tensor out(tx.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = tx.v[i] > 0.0 ? tx.v[i] : 0.0;
    return record(std::move(out), [x](Tape& t, const std::vector<double>& go) {
      const auto& vx = t.value_of(x.id).v;
      auto& gx = t.grad_of(x.id);
      for (std::size_t i = 0; i < go.size(); ++i)
        if (vx[i] > 0.0) gx[i] += go[i];
    });
  }

  Var slice_cols(Var x, std::size_t c0, std::size_t c1) {
    const Tensor& tx = val(x);
    if (!tx.is_matrix() || c0 >= c1 || c1 > tx.cols())
      throw ShapeError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                       ") of " + shape_str(tx.shape));
    const std::size_t r = tx.rows(), n = tx.cols(), w = c1 - c0;
    Tensor out(Shape{r, w});
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out.v[i * w + j] = tx.v[i * n + c0 + j];
    return record(std::move(out), [x, c0, r, n, w](Tape& t, const std::vector<double>& go) {
      auto& gx = t.grad_of(x.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) gx[i * n + c0 + j] += go[i * w + j];
    });
  }

  Var concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw InputError("concat_cols: empty list");
    const std::size_t r = val(xs[0]).rows();
    std::size_t total = 0;
    for (Var x : xs) {
      const Tensor& tx = val(x);
      if (!tx.is_matrix() || tx.rows() != r)
        throw ShapeError("concat_cols: row mismatch " + shape_str(tx.shape));
      total += tx.cols();
    }
    Tensor out(Shape{r, total});
    std::vector<std::size_t> offs;
    std::size_t off = 0;
    for (Var x : xs) {
      const Tensor& tx = val(x);
      const std::size_t n = tx.cols();
      offs.push_back(off);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) out.v[i * total + off + j] = tx.v[i * n + j];
      off += n;
    }
    return record(std::move(out),
                  [xs, offs, r, total](Tape& t, const std::vector<double>& go) {
                    for (std::size_t k = 0; k < xs.size(); ++k) {
                      auto& gx = t.grad_of(xs[k].id);
                      const std::size_t n = t.value_of(xs[k].id).cols();
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < n; ++j)
                          gx[i * n + j] += go[i * total + offs[k] + j];
                    }
                  });
  }

  /// Row-wise softmax, numerically stabilized by max subtraction.
  Var softmax_rows(Var x) {
    const Tensor& tx = val(x);
    if (!tx.is_matrix()) throw ShapeError("softmax_rows: not a matrix " + shape_str(tx.shape));
    const std::size_t r = tx.rows(), n = tx.cols();
    Tensor out(tx.shape);
    for (std::size_t i = 0; i < r; ++i) {
      double mx = tx.v[i * n];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, tx.v[i * n + j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out.v[i * n + j] = std::exp(tx.v[i * n + j] - mx);
        sum += out.v[i * n + j];
      }
      for (std::size_t j = 0; j < n; ++j) out.v[i * n + j] /= sum;
    }
    std::vector<double> y = out.v;
    return record(std::move(out),
                  [x, y = std::move(y), r, n](Tape& t, const std::vector<double>& go) {
                    auto& gx = t.grad_of(x.id);
                    for (std::size_t i = 0; i < r; ++i) {
                      double dot = 0.0;
                      for (std::size_t j = 0; j < n; ++j) dot += go[i * n + j] * y[i * n + j];
                      for (std::size_t j = 0; j < n; ++j)
                        gx[i * n + j] += (go[i * n + j] - dot) * y[i * n + j];
                    }
                  });
  }

  /// Per-row normalization to zero mean / unit variance (epsilon 1e-5),
  /// followed by an affine gain/bias.
  Var layer_norm(Var x, Var gain, Var bias) {
    constexpr double eps = 1e-5;
    const Tensor& tx = val(x);
    const Tensor& tg = val(gain);
    const Tensor& tb = val(bias);
    if (!tx.is_matrix() || tx.cols() < 1)
      throw ShapeError("layer_norm: need a matrix with >=1 feature, got " + shape_str(tx.shape));
    if (!tg.is_vector() || tg.size() != tx.cols() || !tb.is_vector() || tb.size() != tx.cols())
      throw ShapeError("layer_norm: gain/bias must be [" + std::to_string(tx.cols()) + "]");
    const std::size_t r = tx.rows(), n = tx.cols();
    Tensor out(tx.shape);
    std::vector<double> xhat(r * n);
    std::vector<double> inv_std(r);
    for (std::size_t i = 0; i < r; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < n; ++j) mean += tx.v[i * n + j];
      mean /= double(n);
      double var = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = tx.v[i * n + j] - mean;
        var += d * d;
      }
      var /= double(n);
      inv_std[i] = 1.0 / std::sqrt(var + eps);
      for (std::size_t j = 0; j < n; ++j) {
        xhat[i * n + j] = (tx.v[i * n + j] - mean) * inv_std[i];
        out.v[i * n + j] = xhat[i * n + j] * tg.v[j] + tb.v[j];
      }
    }
    return record(std::move(out),
                  [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), r,
                   n](Tape& t, const std::vector<double>& go) {
                    const auto& vg = t.value_of(gain.id).v;
                    auto& gx = t.grad_of(x.id);
                    auto& gg = t.grad_of(gain.id);
                    auto& gb = t.grad_of(bias.id);
                    for (std::size_t i = 0; i < r; ++i) {
                      double m1 = 0.0, m2 = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = go[i * n + j] * vg[j];
                        m1 += dxh;
                        m2 += dxh * xhat[i * n + j];
                        gg[j] += go[i * n + j] * xhat[i * n + j];
                        gb[j] += go[i * n + j];
                      }
                      m1 /= double(n);
                      m2 /= double(n);
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = go[i * n + j] * vg[j];
                        gx[i * n + j] += (dxh - m1 - xhat[i * n + j] * m2) * inv_std[i];
                      }
                    }
                  });
  }

  /// Inverted dropout: in training mode each element is zeroed with
  /// probability rate and survivors are scaled by 1/(1-rate); in eval mode
  /// the input passes through unchanged (no node recorded).
  Var dropout(Var x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0))
      throw InputError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;
    const Tensor& tx = val(x);
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(tx.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask[i] = rng.next_double() >= rate ? keep_scale : 0.0;
    Tensor out(tx.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = tx.v[i] * mask[i];
    return record(std::move(out),
                  [x, mask = std::move(mask)](Tape& t, const std::vector<double>& go) {
                    auto& gx = t.grad_of(x.id);
                    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * mask[i];
                  });
  }

  /// Mean over the batch of -log softmax(logits)[label]. Returns a scalar
  /// (shape [1]).
  Var softmax_cross_entropy(Var logits, const std::vector<std::size_t>& labels) {
    const Tensor& tl = val(logits);
    if (!tl.is_matrix() || tl.rows() != labels.size())
      throw ShapeError("softmax_cross_entropy: logits " + shape_str(tl.shape) + " vs " +
                       std::to_string(labels.size()) + " labels");
    const std::size_t b = tl.rows(), c = tl.cols();
    for (std::size_t i = 0; i < b; ++i)
      if (labels[i] >= c)
        throw InputError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                         " out of range [0," + std::to_string(c) + ")");
    std::vector<double> probs(b * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      std::size_t arg = 0;
      for (std::size_t j = 1; j < c; ++j)
        if (tl.v[i * c + j] > tl.v[i * c + arg]) arg = j;
      const double mx = tl.v[i * c + arg];
      // log(sum) = log1p(sum - 1) keeps precision when the loss is tiny;
      // the max term contributes exactly exp(0) = 1, so track the rest.
      double rest = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        probs[i * c + j] = std::exp(tl.v[i * c + j] - mx);
        if (j != arg) rest += probs[i * c + j];
      }
      const double sum = 1.0 + rest;
      for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= sum;
      loss += std::log1p(rest) - (tl.v[i * c + labels[i]] - mx);
    }
    loss /= double(b);
    Tensor out(Shape{1});
    out.v[0] = loss;
    return record(std::move(out), [logits, labels, probs = std::move(probs), b,
                                   c](Tape& t, const std::vector<double>& go) {
      auto& gl = t.grad_of(logits.id);
      const double gscale = go[0] / double(b);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < c; ++j) gl[i * c + j] += gscale * probs[i * c + j];
        gl[i * c + labels[i]] -= gscale;
      }
    });
  }

  /// Reverse sweep from a scalar loss. Gradients are accumulated into every
  /// bound Parameter's grad, then each parameter's hook (if any) runs once.
  void backward(Var loss) {
    if (!loss.valid() || val(loss).size() != 1)
      throw InputError("backward: loss must be a scalar");
    for (auto& n : nodes_) n.grad.assign(value_of_node(n).size(), 0.0);
    nodes_[std::size_t(loss.id)].grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].back) nodes_[i].back(*this, nodes_[i].grad);
    }
    for (auto& [p, id] : bound_) {
      auto& g = p->t.g;
      const auto& ng = nodes_[std::size_t(id)].grad;
      if (g.empty()) {
        g = ng;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += ng[i];
      }
      if (p->hook) p->hook(g);
    }
  }

  std::vector<double>& grad_of(int id) { return nodes_[std::size_t(id)].grad; }
  const Tensor& value_of(int id) const { return value_of_node(nodes_[std::size_t(id)]); }

 private:
  struct Node {
    Tensor own;
    const Tensor* view;
    std::vector<double> grad;
    std::function<void(Tape&, const std::vector<double>&)> back;
    Parameter* bound;
  };

  static const Tensor& value_of_node(const Node& n) { return n.view ? *n.view : n.own; }

  template <class F>
  Var record(Tensor out, F&& back) {
    nodes_.push_back(Node{std::move(out), nullptr, {}, std::forward<F>(back), nullptr});
    return Var{int(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> bound_;
};

/// value <- value - lr * grad for every parameter, then grads are cleared.
/// Hooks have already been applied by Tape::backward.
inline void sgd_step(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params)
    if (!p->t.has_grad()) throw StateError("sgd_step: parameter has no gradient");
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->t.v.size(); ++i) p->t.v[i] -= lr * p->t.g[i];
    p->t.drop_grad();
  }
}

}  // namespace cat
