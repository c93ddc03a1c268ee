#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/autograd.hpp"
#include "crisisspot/tensor.hpp"

// Differentiable ops over Var<T>. Each op computes its forward value eagerly
// and records a closure mapping the output gradient onto its inputs.
namespace crisisspot::ops {

enum class Activation { none, tanh, relu, sigmoid };

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    Matrix<T> out = crisisspot::matmul(a.value(), b.value());
    return a.tape->record(std::move(out), {a, b}, "matmul",
                          [a, b](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              if (t.requires_grad(a)) t.grad(a) += matmul_bt(g, b.value());
                              if (t.requires_grad(b)) t.grad(b) += matmul_at(a.value(), g);
                          });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    a.value().require_same_shape(b.value(), "add");
    Matrix<T> out = a.value();
    out += b.value();
    return a.tape->record(std::move(out), {a, b}, "add",
                          [a, b](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              if (t.requires_grad(a)) t.grad(a) += g;
                              if (t.requires_grad(b)) t.grad(b) += g;
                          });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
    Matrix<T> out = a.value();
    for (auto& v : out.data()) v *= s;
    return a.tape->record(std::move(out), {a}, "scale",
                          [a, s](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              auto& ga = t.grad(a);
                              for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
                          });
}

template <typename T>
Var<T> neg(Var<T> a) {
    return scale(a, T(-1));
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    return add(a, neg(b));
}

template <typename T>
Var<T> hadamard(Var<T> a, Var<T> b) {
    a.value().require_same_shape(b.value(), "hadamard");
    Matrix<T> out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return a.tape->record(std::move(out), {a, b}, "hadamard",
                          [a, b](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              if (t.requires_grad(a)) {
                                  auto& ga = t.grad(a);
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                      ga[i] += g[i] * b.value()[i];
                              }
                              if (t.requires_grad(b)) {
                                  auto& gb = t.grad(b);
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                      gb[i] += g[i] * a.value()[i];
                              }
                          });
}

/// X[n x c] + b[1 x c], bias broadcast over rows.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b) {
    const auto& xv = x.value();
    const auto& bv = b.value();
    require_shape(bv.rows() == 1 && bv.cols() == xv.cols(),
                  "add_bias: bias " + bv.shape_string() + " vs input " + xv.shape_string());
    Matrix<T> out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
    return x.tape->record(std::move(out), {x, b}, "add_bias",
                          [x, b](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              if (t.requires_grad(x)) t.grad(x) += g;
                              if (t.requires_grad(b)) {
                                  auto& gb = t.grad(b);
                                  for (std::size_t r = 0; r < g.rows(); ++r)
                                      for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                              }
                          });
}

template <typename T>
Var<T> tanh(Var<T> x) {
    Matrix<T> out = x.value();
    for (auto& v : out.data()) v = std::tanh(v);
    return x.tape->record(std::move(out), {x}, "tanh",
                          [x](Tape<T>& t, const Matrix<T>& g, const Matrix<T>& y) {
                              auto& gx = t.grad(x);
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  gx[i] += g[i] * (T(1) - y[i] * y[i]);
                          });
}

template <typename T>
Var<T> relu(Var<T> x) {
    Matrix<T> out = x.value();
    for (auto& v : out.data()) v = v > T(0) ? v : T(0);
    return x.tape->record(std::move(out), {x}, "relu",
                          [x](Tape<T>& t, const Matrix<T>& g, const Matrix<T>& y) {
                              auto& gx = t.grad(x);
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  if (y[i] > T(0)) gx[i] += g[i];
                          });
}

template <typename T>
T sigmoid_scalar(T z) {
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
    Matrix<T> out = x.value();
    for (auto& v : out.data()) v = sigmoid_scalar(v);
    return x.tape->record(std::move(out), {x}, "sigmoid",
                          [x](Tape<T>& t, const Matrix<T>& g, const Matrix<T>& y) {
                              auto& gx = t.grad(x);
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  gx[i] += g[i] * y[i] * (T(1) - y[i]);
                          });
}

template <typename T>
Var<T> activate(Var<T> x, Activation act) {
    switch (act) {
        case Activation::tanh: return tanh(x);
        case Activation::relu: return relu(x);
        case Activation::sigmoid: return sigmoid(x);
        case Activation::none: break;
    }
    return x;
}

/// Row-wise softmax of S / temperature, with max subtraction.
template <typename T>
Matrix<T> softmax_rows_value(const Matrix<T>& s, T temperature) {
    if (!(temperature > T(0))) {
        throw ParameterError("softmax temperature must be positive, got " +
                             std::to_string(static_cast<double>(temperature)));
    }
    Matrix<T> out(s.rows(), s.cols());
    for (std::size_t r = 0; r < s.rows(); ++r) {
        const auto in = s.row(r);
        auto o = out.row(r);
        if (in.empty()) continue;
        const T mx = *std::max_element(in.begin(), in.end());
        T z = T(0);
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp((in[c] - mx) / temperature);
            z += o[c];
        }
        for (auto& v : o) v /= z;
    }
    return out;
}

template <typename T>
Var<T> softmax_rows(Var<T> s, T temperature) {
    Matrix<T> out = softmax_rows_value(s.value(), temperature);
    return s.tape->record(std::move(out), {s}, "softmax_rows",
                          [s, temperature](Tape<T>& t, const Matrix<T>& g, const Matrix<T>& y) {
                              auto& gs = t.grad(s);
                              for (std::size_t r = 0; r < y.rows(); ++r) {
                                  T dot = T(0);
                                  for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                                  for (std::size_t c = 0; c < y.cols(); ++c)
                                      gs(r, c) += y(r, c) * (g(r, c) - dot) / temperature;
                              }
                          });
}

/// Unit-norm rows; all-zero rows pass through unchanged.
template <typename T>
Matrix<T> l2_normalize_rows_value(const Matrix<T>& x) {
    Matrix<T> out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        T n2 = T(0);
        for (T v : x.row(r)) n2 += v * v;
        if (n2 == T(0)) continue;
        const T n = std::sqrt(n2);
        for (auto& v : out.row(r)) v /= n;
    }
    return out;
}

template <typename T>
Var<T> l2_normalize_rows(Var<T> x) {
    Matrix<T> out = l2_normalize_rows_value(x.value());
    return x.tape->record(std::move(out), {x}, "l2_normalize_rows",
                          [x](Tape<T>& t, const Matrix<T>& g, const Matrix<T>& y) {
                              const auto& xv = x.value();
                              auto& gx = t.grad(x);
                              for (std::size_t r = 0; r < xv.rows(); ++r) {
                                  T n2 = T(0);
                                  for (T v : xv.row(r)) n2 += v * v;
                                  if (n2 == T(0)) {
                                      for (std::size_t c = 0; c < xv.cols(); ++c) gx(r, c) += g(r, c);
                                      continue;
                                  }
                                  const T n = std::sqrt(n2);
                                  T dot = T(0);
                                  for (std::size_t c = 0; c < xv.cols(); ++c) dot += y(r, c) * g(r, c);
                                  for (std::size_t c = 0; c < xv.cols(); ++c)
                                      gx(r, c) += (g(r, c) - y(r, c) * dot) / n;
                              }
                          });
}

/// [A | B | ...] along columns; all parts share the row count.
template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    require_shape(!parts.empty(), "concat_cols: no inputs");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    bool needs = false;
    for (const auto& p : parts) {
        require_shape(p.rows() == rows, "concat_cols: row counts differ (" +
                                            std::to_string(p.rows()) + " vs " +
                                            std::to_string(rows) + ")");
        cols += p.cols();
        needs = needs || p.tape->requires_grad(p);
    }
    Matrix<T> out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const auto& v = p.value();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + off);
        off += v.cols();
    }
    Tape<T>& tape = *parts.front().tape;
    return tape.record_if(std::move(out), needs, "concat_cols",
                          [parts](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              std::size_t off = 0;
                              for (const auto& p : parts) {
                                  const std::size_t c = p.cols();
                                  if (t.requires_grad(p)) {
                                      auto& gp = t.grad(p);
                                      for (std::size_t r = 0; r < g.rows(); ++r)
                                          for (std::size_t j = 0; j < c; ++j) gp(r, j) += g(r, off + j);
                                  }
                                  off += c;
                              }
                          });
}

/// Rows of X at `index`, in order; repeated indices accumulate gradient.
template <typename T>
Var<T> gather_rows(Var<T> x, std::vector<std::size_t> index) {
    const auto& xv = x.value();
    Matrix<T> out(index.size(), xv.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        require_shape(index[i] < xv.rows(), "gather_rows: index " + std::to_string(index[i]) +
                                                 " out of range " + std::to_string(xv.rows()));
        std::copy(xv.row(index[i]).begin(), xv.row(index[i]).end(), out.row(i).begin());
    }
    return x.tape->record(std::move(out), {x}, "gather_rows",
                          [x, index = std::move(index)](Tape<T>& t, const Matrix<T>& g,
                                                         const Matrix<T>&) {
                              auto& gx = t.grad(x);
                              for (std::size_t i = 0; i < index.size(); ++i)
                                  for (std::size_t c = 0; c < g.cols(); ++c) gx(index[i], c) += g(i, c);
                          });
}

/// Averages consecutive groups of `segment` rows: [(B*segment) x c] -> [B x c].
/// This is global average pooling over the token axis of a stacked batch.
template <typename T>
Var<T> segment_mean_rows(Var<T> x, std::size_t segment) {
    const auto& xv = x.value();
    require_shape(segment > 0 && xv.rows() % segment == 0,
                  "segment_mean_rows: " + std::to_string(xv.rows()) + " rows not divisible by " +
                      std::to_string(segment));
    const std::size_t groups = xv.rows() / segment;
    Matrix<T> out(groups, xv.cols());
    for (std::size_t b = 0; b < groups; ++b) {
        for (std::size_t r = 0; r < segment; ++r)
            for (std::size_t c = 0; c < xv.cols(); ++c) out(b, c) += xv(b * segment + r, c);
        for (auto& v : out.row(b)) v /= static_cast<T>(segment);
    }
    return x.tape->record(std::move(out), {x}, "segment_mean_rows",
                          [x, segment](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              auto& gx = t.grad(x);
                              const T inv = T(1) / static_cast<T>(segment);
                              for (std::size_t r = 0; r < gx.rows(); ++r)
                                  for (std::size_t c = 0; c < gx.cols(); ++c)
                                      gx(r, c) += g(r / segment, c) * inv;
                          });
}

/// Block-diagonal product: A is a stack of B square [n x n] blocks, X a stack
/// of B [n x c] blocks; block b of the output is A_b * X_b.
template <typename T>
Var<T> block_matmul(Var<T> a, Var<T> x, std::size_t block) {
    const auto& av = a.value();
    const auto& xv = x.value();
    require_shape(block > 0 && av.cols() == block && av.rows() % block == 0 &&
                      xv.rows() == av.rows(),
                  "block_matmul: A " + av.shape_string() + ", X " + xv.shape_string() +
                      ", block " + std::to_string(block));
    const std::size_t groups = av.rows() / block;
    const std::size_t c = xv.cols();
    Matrix<T> out(xv.rows(), c);
    for (std::size_t b = 0; b < groups; ++b) {
        const std::size_t o = b * block;
        for (std::size_t i = 0; i < block; ++i)
            for (std::size_t j = 0; j < block; ++j) {
                const T w = av(o + i, j);
                if (w == T(0)) continue;
                for (std::size_t k = 0; k < c; ++k) out(o + i, k) += w * xv(o + j, k);
            }
    }
    return a.tape->record(
        std::move(out), {a, x}, "block_matmul",
        [a, x, block, groups, c](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
            const auto& av = a.value();
            const auto& xv = x.value();
            const bool ga_needed = t.requires_grad(a);
            const bool gx_needed = t.requires_grad(x);
            for (std::size_t b = 0; b < groups; ++b) {
                const std::size_t o = b * block;
                for (std::size_t i = 0; i < block; ++i)
                    for (std::size_t j = 0; j < block; ++j) {
                        if (ga_needed) {
                            T s = T(0);
                            for (std::size_t k = 0; k < c; ++k) s += g(o + i, k) * xv(o + j, k);
                            t.grad(a)(o + i, j) += s;
                        }
                        if (gx_needed) {
                            const T w = av(o + i, j);
                            auto& gx = t.grad(x);
                            for (std::size_t k = 0; k < c; ++k) gx(o + j, k) += w * g(o + i, k);
                        }
                    }
            }
        });
}

/// Block-diagonal Q K^T: Q and K are stacks of B [n x z] blocks; output block
/// b is the [n x n] matrix Q_b K_b^T.
template <typename T>
Var<T> block_matmul_bt(Var<T> q, Var<T> k, std::size_t block) {
    const auto& qv = q.value();
    const auto& kv = k.value();
    require_shape(block > 0 && qv.same_shape(kv) && qv.rows() % block == 0,
                  "block_matmul_bt: Q " + qv.shape_string() + ", K " + kv.shape_string());
    const std::size_t groups = qv.rows() / block;
    const std::size_t z = qv.cols();
    Matrix<T> out(qv.rows(), block);
    for (std::size_t b = 0; b < groups; ++b) {
        const std::size_t o = b * block;
        for (std::size_t i = 0; i < block; ++i)
            for (std::size_t j = 0; j < block; ++j) {
                T s = T(0);
                for (std::size_t p = 0; p < z; ++p) s += qv(o + i, p) * kv(o + j, p);
                out(o + i, j) = s;
            }
    }
    return q.tape->record(
        std::move(out), {q, k}, "block_matmul_bt",
        [q, k, block, groups, z](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
            const auto& qv = q.value();
            const auto& kv = k.value();
            for (std::size_t b = 0; b < groups; ++b) {
                const std::size_t o = b * block;
                for (std::size_t i = 0; i < block; ++i)
                    for (std::size_t j = 0; j < block; ++j) {
                        const T w = g(o + i, j);
                        if (w == T(0)) continue;
                        if (t.requires_grad(q)) {
                            auto& gq = t.grad(q);
                            for (std::size_t p = 0; p < z; ++p) gq(o + i, p) += w * kv(o + j, p);
                        }
                        if (t.requires_grad(k)) {
                            auto& gk = t.grad(k);
                            for (std::size_t p = 0; p < z; ++p) gk(o + j, p) += w * qv(o + i, p);
                        }
                    }
            }
        });
}

/// Y[i, k] = sum_m X[i, m] for every k in [0, width).
template <typename T>
Var<T> row_sum_broadcast(Var<T> x, std::size_t width) {
    const auto& xv = x.value();
    Matrix<T> out(xv.rows(), width);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        T s = T(0);
        for (T v : xv.row(r)) s += v;
        for (auto& o : out.row(r)) o = s;
    }
    return x.tape->record(std::move(out), {x}, "row_sum_broadcast",
                          [x](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              auto& gx = t.grad(x);
                              for (std::size_t r = 0; r < g.rows(); ++r) {
                                  T s = T(0);
                                  for (T v : g.row(r)) s += v;
                                  for (auto& v : gx.row(r)) v += s;
                              }
                          });
}

/// Row v of the output is the mean of the rows of X listed in neighbors[v];
/// empty neighborhoods aggregate to the zero vector.
template <typename T>
Var<T> neighbor_mean(Var<T> x, std::vector<std::vector<std::size_t>> neighbors) {
    const auto& xv = x.value();
    Matrix<T> out(neighbors.size(), xv.cols());
    for (std::size_t v = 0; v < neighbors.size(); ++v) {
        const auto& nb = neighbors[v];
        if (nb.empty()) continue;
        for (std::size_t u : nb) {
            require_shape(u < xv.rows(), "neighbor_mean: neighbor index out of range");
            for (std::size_t c = 0; c < xv.cols(); ++c) out(v, c) += xv(u, c);
        }
        for (auto& o : out.row(v)) o /= static_cast<T>(nb.size());
    }
    return x.tape->record(std::move(out), {x}, "neighbor_mean",
                          [x, neighbors = std::move(neighbors)](Tape<T>& t, const Matrix<T>& g,
                                                                 const Matrix<T>&) {
                              auto& gx = t.grad(x);
                              for (std::size_t v = 0; v < neighbors.size(); ++v) {
                                  const auto& nb = neighbors[v];
                                  if (nb.empty()) continue;
                                  const T inv = T(1) / static_cast<T>(nb.size());
                                  for (std::size_t u : nb)
                                      for (std::size_t c = 0; c < g.cols(); ++c) gx(u, c) += g(v, c) * inv;
                              }
                          });
}

/// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
template <typename T>
Var<T> dropout(Var<T> x, T p, std::mt19937_64& rng) {
    if (p < T(0) || p >= T(1)) {
        throw ParameterError("dropout probability must be in [0, 1), got " +
                             std::to_string(static_cast<double>(p)));
    }
    if (p == T(0)) return x;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix<T> mask(x.rows(), x.cols());
    const T keep_scale = T(1) / (T(1) - p);
    for (auto& m : mask.data()) m = unif(rng) >= static_cast<double>(p) ? keep_scale : T(0);
    Matrix<T> out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return x.tape->record(std::move(out), {x}, "dropout",
                          [x, mask = std::move(mask)](Tape<T>& t, const Matrix<T>& g,
                                                       const Matrix<T>&) {
                              auto& gx = t.grad(x);
                              for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
                          });
}

template <typename T>
Var<T> sum(Var<T> x) {
    T s = T(0);
    for (T v : x.value().data()) s += v;
    return x.tape->record(Matrix<T>(1, 1, s), {x}, "sum",
                          [x](Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                              auto& gx = t.grad(x);
                              for (auto& v : gx.data()) v += g(0, 0);
                          });
}

template <typename T>
Var<T> sum_squares(Var<T> x) {
    return sum(hadamard(x, x));
}

/// Probability clipping bound shared by both losses.
template <typename T>
constexpr T kProbClip = T(1e-7);

/// Mean binary cross-entropy of probs[N x 1] against labels in {0, 1}.
template <typename T>
Var<T> bce_loss(Var<T> probs, std::vector<T> labels) {
    const auto& p = probs.value();
    require_shape(p.cols() == 1 && p.rows() == labels.size() && !labels.empty(),
                  "bce_loss: probs " + p.shape_string() + " vs " + std::to_string(labels.size()) +
                      " labels");
    const T lo = kProbClip<T>, hi = T(1) - kProbClip<T>;
    const T n = static_cast<T>(labels.size());
    T loss = T(0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const T q = std::clamp(p(i, 0), lo, hi);
        loss -= labels[i] * std::log(q) + (T(1) - labels[i]) * std::log(T(1) - q);
    }
    loss /= n;
    return probs.tape->record(Matrix<T>(1, 1, loss), {probs}, "bce_loss",
                              [probs, labels = std::move(labels), lo, hi, n](
                                  Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                                  const auto& p = probs.value();
                                  auto& gp = t.grad(probs);
                                  for (std::size_t i = 0; i < labels.size(); ++i) {
                                      const T q = p(i, 0);
                                      if (q < lo || q > hi) continue;
                                      const T y = labels[i];
                                      gp(i, 0) += g(0, 0) * -(y / q - (T(1) - y) / (T(1) - q)) / n;
                                  }
                              });
}

/// Mean categorical cross-entropy of probs[N x C] against class indices.
template <typename T>
Var<T> cce_loss(Var<T> probs, std::vector<std::size_t> labels) {
    const auto& p = probs.value();
    require_shape(p.rows() == labels.size() && !labels.empty(),
                  "cce_loss: probs " + p.shape_string() + " vs " + std::to_string(labels.size()) +
                      " labels");
    const T lo = kProbClip<T>, hi = T(1) - kProbClip<T>;
    const T n = static_cast<T>(labels.size());
    T loss = T(0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require_shape(labels[i] < p.cols(), "cce_loss: label index out of range");
        loss -= std::log(std::clamp(p(i, labels[i]), lo, hi));
    }
    loss /= n;
    return probs.tape->record(Matrix<T>(1, 1, loss), {probs}, "cce_loss",
                              [probs, labels = std::move(labels), lo, hi, n](
                                  Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
                                  const auto& p = probs.value();
                                  auto& gp = t.grad(probs);
                                  for (std::size_t i = 0; i < labels.size(); ++i) {
                                      const T q = p(i, labels[i]);
                                      if (q < lo || q > hi) continue;
                                      gp(i, labels[i]) -= g(0, 0) / (n * q);
                                  }
                              });
}

}  // namespace crisisspot::ops
