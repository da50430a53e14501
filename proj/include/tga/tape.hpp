#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tga/mat.hpp"
#include "tga/params.hpp"

namespace tga {

/// Reverse-mode tape over matrix-granularity primitives. A forward pass
/// records one node per primitive; backward() replays adjoints in exact
/// reverse execution order, accumulating additively. Parameter leaves hold a
/// pointer into the ParameterStore (no copy); their adjoints are flushed into
/// a GradBuffer when the leaf is visited.
///
/// Multiply-add counts of every primitive (forward and backward) accumulate
/// in macs() for complexity instrumentation.
template <typename T>
class Tape {
 public:
  using Id = int32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- leaves ----

  Id input(Mat<T> v) {
    Node n;
    n.value = std::move(v);
    return push(std::move(n));
  }

  Id param(const ParameterStore<T>& ps, int pid) {
    Node n;
    n.ext = &ps.value(pid);
    n.param_id = pid;
    return push(std::move(n));
  }

  Id param(const ParameterStore<T>& ps, const std::string& name) {
    return param(ps, ps.id(name));
  }

  // ---- primitive set ----

  /// C = A * B
  Id matmul(Id a, Id b) {
    const Mat<T>&A = val(a), &B = val(b);
    if (A.cols != B.rows) shape_fail("matmul", A.rows, A.cols, B.rows, B.cols);
    Mat<T> C(A.rows, B.cols);
    gemm_nn(A, B, C);
    macs_ += gemm_macs(A, B.cols);
    Id out = push_val(std::move(C));
    set_back(out, [this, a, b, out] {
      const Mat<T>& dC = nodes_[out].grad;
      gemm_nt(dC, val(b), grad(a));
      gemm_tn(val(a), dC, grad(b));
      macs_ += 2 * gemm_macs(dC, val(a).cols);
    });
    return out;
  }

  /// C = A * B^T. Weight matrices are stored [out_dim x in_dim], so the
  /// common "rows of X through a linear map" case is matmul_nt(x, W).
  Id matmul_nt(Id a, Id b) {
    const Mat<T>&A = val(a), &B = val(b);
    if (A.cols != B.cols) shape_fail("matmul_nt", A.rows, A.cols, B.rows, B.cols);
    Mat<T> C(A.rows, B.rows);
    gemm_nt(A, B, C);
    macs_ += gemm_macs(A, B.rows);
    Id out = push_val(std::move(C));
    set_back(out, [this, a, b, out] {
      const Mat<T>& dC = nodes_[out].grad;
      gemm_nn(dC, val(b), grad(a));
      gemm_tn(dC, val(a), grad(b));
      macs_ += 2 * gemm_macs(dC, val(a).cols);
    });
    return out;
  }

  Id add(Id a, Id b) {
    const Mat<T>&A = val(a), &B = val(b);
    if (!A.same_shape(B)) shape_fail("add", A.rows, A.cols, B.rows, B.cols);
    Mat<T> C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, b, out] {
      const Mat<T>& dC = nodes_[out].grad;
      accumulate(grad(a), dC);
      accumulate(grad(b), dC);
    });
    return out;
  }

  Id sub(Id a, Id b) {
    const Mat<T>&A = val(a), &B = val(b);
    if (!A.same_shape(B)) shape_fail("sub", A.rows, A.cols, B.rows, B.cols);
    Mat<T> C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, b, out] {
      const Mat<T>& dC = nodes_[out].grad;
      accumulate(grad(a), dC);
      Mat<T>& db = grad(b);
      for (size_t i = 0; i < db.a.size(); ++i) db.a[i] -= dC.a[i];
    });
    return out;
  }

  /// Elementwise product.
  Id mul(Id a, Id b) {
    const Mat<T>&A = val(a), &B = val(b);
    if (!A.same_shape(B)) shape_fail("mul", A.rows, A.cols, B.rows, B.cols);
    Mat<T> C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] *= B.a[i];
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, b, out] {
      const Mat<T>& dC = nodes_[out].grad;
      Mat<T>&da = grad(a), &db = grad(b);
      const Mat<T>&A2 = val(a), &B2 = val(b);
      for (size_t i = 0; i < dC.a.size(); ++i) {
        da.a[i] += dC.a[i] * B2.a[i];
        db.a[i] += dC.a[i] * A2.a[i];
      }
      macs_ += 2 * dC.a.size();
    });
    return out;
  }

  /// Broadcast-add a 1 x n row vector to every row.
  Id add_rowvec(Id a, Id bias) {
    const Mat<T>&A = val(a), &B = val(bias);
    if (B.rows != 1 || B.cols != A.cols)
      shape_fail("add_rowvec", A.rows, A.cols, B.rows, B.cols);
    Mat<T> C = A;
    for (int i = 0; i < C.rows; ++i) {
      T* ci = C.row(i);
      for (int j = 0; j < C.cols; ++j) ci[j] += B.a[j];
    }
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, bias, out] {
      const Mat<T>& dC = nodes_[out].grad;
      accumulate(grad(a), dC);
      Mat<T>& db = grad(bias);
      for (int i = 0; i < dC.rows; ++i) {
        const T* di = dC.row(i);
        for (int j = 0; j < dC.cols; ++j) db.a[j] += di[j];
      }
    });
    return out;
  }

  Id scale(Id a, T c) {
    Mat<T> C = val(a);
    for (auto& v : C.a) v *= c;
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, c, out] {
      const Mat<T>& dC = nodes_[out].grad;
      Mat<T>& da = grad(a);
      for (size_t i = 0; i < dC.a.size(); ++i) da.a[i] += c * dC.a[i];
      macs_ += dC.a.size();
    });
    return out;
  }

  Id concat_cols(std::span<const Id> ids) {
    if (ids.empty()) throw std::logic_error("concat_cols: no inputs");
    const int rows = val(ids[0]).rows;
    int cols = 0;
    for (Id id : ids) {
      const Mat<T>& m = val(id);
      if (m.rows != rows) shape_fail("concat_cols", rows, cols, m.rows, m.cols);
      cols += m.cols;
    }
    Mat<T> C(rows, cols);
    int off = 0;
    for (Id id : ids) {
      const Mat<T>& m = val(id);
      for (int i = 0; i < rows; ++i)
        std::copy(m.row(i), m.row(i) + m.cols, C.row(i) + off);
      off += m.cols;
    }
    Id out = push_val(std::move(C));
    std::vector<Id> in(ids.begin(), ids.end());
    set_back(out, [this, in = std::move(in), out] {
      const Mat<T>& dC = nodes_[out].grad;
      int off2 = 0;
      for (Id id : in) {
        Mat<T>& d = grad(id);
        for (int i = 0; i < d.rows; ++i) {
          const T* src = dC.row(i) + off2;
          T* dst = d.row(i);
          for (int j = 0; j < d.cols; ++j) dst[j] += src[j];
        }
        off2 += d.cols;
      }
    });
    return out;
  }

  Id concat_cols(std::initializer_list<Id> ids) {
    return concat_cols(std::span<const Id>(ids.begin(), ids.size()));
  }

  Id relu(Id a) {
    Mat<T> C = val(a);
    for (auto& v : C.a) v = v > T(0) ? v : T(0);
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, out] {
      const Mat<T>&dC = nodes_[out].grad, &Y = val(out);
      Mat<T>& da = grad(a);
      for (size_t i = 0; i < dC.a.size(); ++i)
        if (Y.a[i] > T(0)) da.a[i] += dC.a[i];
    });
    return out;
  }

  Id sigmoid(Id a) {
    Mat<T> C = val(a);
    for (auto& v : C.a) v = sigmoid_scalar(v);
    macs_ += C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, out] {
      const Mat<T>&dC = nodes_[out].grad, &Y = val(out);
      Mat<T>& da = grad(a);
      for (size_t i = 0; i < dC.a.size(); ++i)
        da.a[i] += dC.a[i] * Y.a[i] * (T(1) - Y.a[i]);
      macs_ += 2 * dC.a.size();
    });
    return out;
  }

  /// Softmax over each row.
  Id row_softmax(Id a) {
    Mat<T> C = val(a);
    for (int i = 0; i < C.rows; ++i) softmax_row(C.row(i), C.cols);
    macs_ += 3 * C.a.size();
    Id out = push_val(std::move(C));
    set_back(out, [this, a, out] { softmax_backward(a, out); });
    return out;
  }

  /// Softmax over each row restricted to unmasked entries (mask != 0).
  /// Fully-masked rows produce all-zero output.
  Id masked_row_softmax(Id a, std::vector<uint8_t> mask) {
    const Mat<T>& A = val(a);
    if (mask.size() != A.a.size())
      throw std::logic_error("masked_row_softmax: mask size mismatch");
    Mat<T> C(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      const T* x = A.row(i);
      const uint8_t* m = mask.data() + static_cast<size_t>(i) * A.cols;
      T* y = C.row(i);
      T mx = std::numeric_limits<T>::lowest();
      bool any = false;
      for (int j = 0; j < A.cols; ++j)
        if (m[j]) {
          any = true;
          mx = std::max(mx, x[j]);
        }
      if (!any) continue;
      T sum = T(0);
      for (int j = 0; j < A.cols; ++j) {
        y[j] = m[j] ? std::exp(x[j] - mx) : T(0);
        sum += y[j];
      }
      for (int j = 0; j < A.cols; ++j) y[j] /= sum;
    }
    macs_ += 3 * C.a.size();
    Id out = push_val(std::move(C));
    // Masked entries have weight 0, so the standard softmax adjoint already
    // sends them zero gradient.
    set_back(out, [this, a, out] { softmax_backward(a, out); });
    return out;
  }

  /// Per-row normalization to mean 0 / variance 1 (epsilon 1e-5 inside the
  /// square root), then affine scale and shift. gamma/beta are 1 x cols.
  Id layer_norm(Id x, Id gamma, Id beta) {
    const Mat<T>&X = val(x), &G = val(gamma), &Bt = val(beta);
    if (G.rows != 1 || G.cols != X.cols) shape_fail("layer_norm", X.rows, X.cols, G.rows, G.cols);
    if (Bt.rows != 1 || Bt.cols != X.cols)
      shape_fail("layer_norm", X.rows, X.cols, Bt.rows, Bt.cols);
    const T eps = T(1e-5);
    auto xhat = std::make_shared<Mat<T>>(X.rows, X.cols);
    auto inv = std::make_shared<std::vector<T>>(X.rows);
    Mat<T> Y(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i) {
      const T* xi = X.row(i);
      T mu = T(0);
      for (int j = 0; j < X.cols; ++j) mu += xi[j];
      mu /= T(X.cols);
      T var = T(0);
      for (int j = 0; j < X.cols; ++j) var += (xi[j] - mu) * (xi[j] - mu);
      var /= T(X.cols);
      const T iv = T(1) / std::sqrt(var + eps);
      (*inv)[i] = iv;
      T* hi = xhat->row(i);
      T* yi = Y.row(i);
      for (int j = 0; j < X.cols; ++j) {
        hi[j] = (xi[j] - mu) * iv;
        yi[j] = hi[j] * G.a[j] + Bt.a[j];
      }
    }
    macs_ += 6 * X.a.size();
    Id out = push_val(std::move(Y));
    set_back(out, [this, x, gamma, beta, out, xhat, inv] {
      const Mat<T>& dY = nodes_[out].grad;
      const Mat<T>& G = val(gamma);
      Mat<T>&dX = grad(x), &dG = grad(gamma), &dB = grad(beta);
      const int cols = dY.cols;
      for (int i = 0; i < dY.rows; ++i) {
        const T* dyi = dY.row(i);
        const T* hi = xhat->row(i);
        T* dxi = dX.row(i);
        T m1 = T(0), m2 = T(0);
        for (int j = 0; j < cols; ++j) {
          dG.a[j] += dyi[j] * hi[j];
          dB.a[j] += dyi[j];
          const T dh = dyi[j] * G.a[j];
          m1 += dh;
          m2 += dh * hi[j];
        }
        m1 /= T(cols);
        m2 /= T(cols);
        const T iv = (*inv)[i];
        for (int j = 0; j < cols; ++j)
          dxi[j] += iv * (dyi[j] * G.a[j] - m1 - hi[j] * m2);
      }
      macs_ += 8 * dY.a.size();
    });
    return out;
  }

  /// out[i] = src[idx[i]]. Gradient scatter-adds to the gathered rows; when
  /// src is a parameter leaf the rows go straight into the GradBuffer so a
  /// large embedding table never materializes a dense gradient.
  Id gather_rows(Id src, std::vector<int> idx) {
    const Mat<T>& S = val(src);
    Mat<T> C(static_cast<int>(idx.size()), S.cols);
    for (size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= S.rows)
        throw std::out_of_range("gather_rows: index " + std::to_string(idx[i]) +
                                " out of range for " + shape_str(S.rows, S.cols));
      std::copy(S.row(idx[i]), S.row(idx[i]) + S.cols, C.row(i));
    }
    Id out = push_val(std::move(C));
    set_back(out, [this, src, idx = std::move(idx), out] {
      const Mat<T>& dC = nodes_[out].grad;
      const int pid = nodes_[src].param_id;
      Mat<T>& dst = (pid >= 0 && gb_ != nullptr) ? gb_->g[pid] : grad(src);
      if (pid >= 0 && gb_ == nullptr) return;
      for (size_t i = 0; i < idx.size(); ++i) {
        const T* s = dC.row(static_cast<int>(i));
        T* d = dst.row(idx[i]);
        for (int j = 0; j < dC.cols; ++j) d[j] += s[j];
      }
    });
    return out;
  }

  /// Builds a rows x cols matrix by adding src rows at target positions:
  /// out[dst_rows[k][i]] += srcs[k].row(i). Positions may repeat.
  Id scatter_rows(std::vector<Id> srcs, std::vector<std::vector<int>> dst_rows, int out_rows,
                  int out_cols) {
    if (srcs.size() != dst_rows.size()) throw std::logic_error("scatter_rows: arity mismatch");
    Mat<T> C(out_rows, out_cols);
    for (size_t k = 0; k < srcs.size(); ++k) {
      const Mat<T>& S = val(srcs[k]);
      if (S.cols != out_cols || S.rows != static_cast<int>(dst_rows[k].size()))
        shape_fail("scatter_rows", S.rows, S.cols, static_cast<int>(dst_rows[k].size()), out_cols);
      for (size_t i = 0; i < dst_rows[k].size(); ++i) {
        const T* s = S.row(static_cast<int>(i));
        T* d = C.row(dst_rows[k][i]);
        for (int j = 0; j < out_cols; ++j) d[j] += s[j];
      }
    }
    Id out = push_val(std::move(C));
    set_back(out, [this, srcs = std::move(srcs), dst_rows = std::move(dst_rows), out] {
      const Mat<T>& dC = nodes_[out].grad;
      for (size_t k = 0; k < srcs.size(); ++k) {
        Mat<T>& d = grad(srcs[k]);
        for (size_t i = 0; i < dst_rows[k].size(); ++i) {
          const T* s = dC.row(dst_rows[k][i]);
          T* di = d.row(static_cast<int>(i));
          for (int j = 0; j < dC.cols; ++j) di[j] += s[j];
        }
      }
    });
    return out;
  }

  /// Per-node dot products against a slot grid: keys is (L*S) x dk with S
  /// consecutive rows per node, q is L x dk. out[c][s] = keys[c*S+s] . q[c].
  Id slot_scores(Id keys, Id q, int S) {
    const Mat<T>&K = val(keys), &Q = val(q);
    if (K.rows != Q.rows * S || K.cols != Q.cols)
      shape_fail("slot_scores", K.rows, K.cols, Q.rows, Q.cols);
    Mat<T> C(Q.rows, S);
    for (int c = 0; c < Q.rows; ++c) {
      const T* qc = Q.row(c);
      T* oc = C.row(c);
      for (int s = 0; s < S; ++s) {
        const T* kr = K.row(c * S + s);
        T acc = T(0);
        for (int j = 0; j < Q.cols; ++j) acc += kr[j] * qc[j];
        oc[s] = acc;
      }
    }
    macs_ += static_cast<uint64_t>(K.rows) * K.cols;
    Id out = push_val(std::move(C));
    set_back(out, [this, keys, q, S, out] {
      const Mat<T>& dC = nodes_[out].grad;
      const Mat<T>&K = val(keys), &Q = val(q);
      Mat<T>&dK = grad(keys), &dQ = grad(q);
      for (int c = 0; c < Q.rows; ++c) {
        const T* qc = Q.row(c);
        T* dqc = dQ.row(c);
        for (int s = 0; s < S; ++s) {
          const T g = dC(c, s);
          if (g == T(0)) continue;
          const T* kr = K.row(c * S + s);
          T* dkr = dK.row(c * S + s);
          for (int j = 0; j < Q.cols; ++j) {
            dkr[j] += g * qc[j];
            dqc[j] += g * kr[j];
          }
        }
      }
      macs_ += 2 * static_cast<uint64_t>(K.rows) * K.cols;
    });
    return out;
  }

  /// out[c] = sum_s alpha[c][s] * vals[c*S+s]; alpha is L x S, vals (L*S) x dv.
  Id slot_weighted_sum(Id alpha, Id vals) {
    const Mat<T>&A = val(alpha), &V = val(vals);
    const int S = A.cols;
    if (V.rows != A.rows * S) shape_fail("slot_weighted_sum", A.rows, A.cols, V.rows, V.cols);
    Mat<T> C(A.rows, V.cols);
    for (int c = 0; c < A.rows; ++c) {
      const T* ac = A.row(c);
      T* oc = C.row(c);
      for (int s = 0; s < S; ++s) {
        const T w = ac[s];
        if (w == T(0)) continue;
        const T* vr = V.row(c * S + s);
        for (int j = 0; j < V.cols; ++j) oc[j] += w * vr[j];
      }
    }
    macs_ += static_cast<uint64_t>(V.rows) * V.cols;
    Id out = push_val(std::move(C));
    set_back(out, [this, alpha, vals, out] {
      const Mat<T>& dC = nodes_[out].grad;
      const Mat<T>&A = val(alpha), &V = val(vals);
      const int S = A.cols;
      Mat<T>&dA = grad(alpha), &dV = grad(vals);
      for (int c = 0; c < A.rows; ++c) {
        const T* dc = dC.row(c);
        const T* ac = A.row(c);
        T* dac = dA.row(c);
        for (int s = 0; s < S; ++s) {
          const T* vr = V.row(c * S + s);
          T* dvr = dV.row(c * S + s);
          T acc = T(0);
          for (int j = 0; j < V.cols; ++j) {
            acc += dc[j] * vr[j];
            dvr[j] += ac[s] * dc[j];
          }
          dac[s] += acc;
        }
      }
      macs_ += 2 * static_cast<uint64_t>(V.rows) * V.cols;
    });
    return out;
  }

  Id sum_all(Id a) {
    const Mat<T>& A = val(a);
    T s = T(0);
    for (T v : A.a) s += v;
    macs_ += A.a.size();
    Mat<T> C(1, 1);
    C(0, 0) = s;
    Id out = push_val(std::move(C));
    set_back(out, [this, a, out] {
      const T g = nodes_[out].grad(0, 0);
      Mat<T>& da = grad(a);
      for (auto& v : da.a) v += g;
    });
    return out;
  }

  /// Numerically stable mean binary cross-entropy from logits (n x 1).
  Id mean_bce_with_logits(Id logits, std::vector<T> labels) {
    const Mat<T>& Z = val(logits);
    if (Z.cols != 1 || Z.rows != static_cast<int>(labels.size()))
      throw std::logic_error("mean_bce_with_logits: want n x 1 logits matching labels");
    const int n = Z.rows;
    T loss = T(0);
    for (int i = 0; i < n; ++i) {
      const T z = Z(i, 0);
      const T y = labels[i];
      loss += std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= T(n);
    macs_ += 4 * static_cast<uint64_t>(n);
    Mat<T> C(1, 1);
    C(0, 0) = loss;
    Id out = push_val(std::move(C));
    set_back(out, [this, logits, labels = std::move(labels), out] {
      const T g = nodes_[out].grad(0, 0);
      const Mat<T>& Z = val(logits);
      Mat<T>& dz = grad(logits);
      const int n = Z.rows;
      for (int i = 0; i < n; ++i)
        dz(i, 0) += g * (sigmoid_scalar(Z(i, 0)) - labels[i]) / T(n);
      macs_ += 3 * static_cast<uint64_t>(n);
    });
    return out;
  }

  // ---- access & backward ----

  const Mat<T>& val(Id id) const {
    const Node& n = nodes_.at(static_cast<size_t>(id));
    return n.ext ? *n.ext : n.value;
  }

  /// Adjoint of a node; valid after backward(..., free_memory=false).
  const Mat<T>& grad_of(Id id) {
    return grad(id);
  }

  /// Replays adjoints from `root` (a 1x1 scalar) back to the leaves. `seed`
  /// is the adjoint of the root (1/batch for mean-reduced losses). When
  /// free_memory is set, node values and adjoints are released as soon as
  /// they can no longer be needed.
  void backward(Id root, GradBuffer<T>* gb, T seed = T(1), bool free_memory = true) {
    if (nodes_.empty()) throw std::logic_error("backward without a recorded forward pass");
    if (root < 0 || root >= static_cast<Id>(nodes_.size()))
      throw std::logic_error("backward: invalid root id");
    const Mat<T>& rv = val(root);
    if (rv.rows != 1 || rv.cols != 1) throw std::logic_error("backward: root must be a scalar");
    if (backward_done_) throw std::logic_error("backward already run on this tape");
    backward_done_ = true;
    gb_ = gb;
    grad(root)(0, 0) = seed;
    for (Id i = root; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.grad_live) {
        if (n.back) n.back();
        if (n.param_id >= 0 && gb_ != nullptr) {
          Mat<T>& dst = gb_->g[n.param_id];
          for (size_t k = 0; k < n.grad.a.size(); ++k) dst.a[k] += n.grad.a[k];
        }
      }
      if (free_memory) {
        n.value.release();
        if (n.grad_live) {
          n.grad.release();
          n.grad_live = false;
        }
        n.back = nullptr;
      }
    }
    gb_ = nullptr;
  }

  uint64_t macs() const { return macs_; }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Mat<T> value;
    const Mat<T>* ext = nullptr;  // parameter leaves alias the store
    Mat<T> grad;
    bool grad_live = false;
    int param_id = -1;
    std::function<void()> back;
  };

  static T sigmoid_scalar(T v) {
    return v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                     : std::exp(v) / (T(1) + std::exp(v));
  }

  Id push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id push_val(Mat<T> v) {
    Node n;
    n.value = std::move(v);
    return push(std::move(n));
  }

  void set_back(Id id, std::function<void()> f) { nodes_[id].back = std::move(f); }

  Mat<T>& grad(Id id) {
    Node& n = nodes_[id];
    if (!n.grad_live) {
      const Mat<T>& v = n.ext ? *n.ext : n.value;
      n.grad = Mat<T>(v.rows, v.cols);
      n.grad_live = true;
    }
    return n.grad;
  }

  static void accumulate(Mat<T>& dst, const Mat<T>& src) {
    for (size_t i = 0; i < dst.a.size(); ++i) dst.a[i] += src.a[i];
  }

  void softmax_row(T* x, int n) {
    T mx = std::numeric_limits<T>::lowest();
    for (int j = 0; j < n; ++j) mx = std::max(mx, x[j]);
    T sum = T(0);
    for (int j = 0; j < n; ++j) {
      x[j] = std::exp(x[j] - mx);
      sum += x[j];
    }
    for (int j = 0; j < n; ++j) x[j] /= sum;
  }

  void softmax_backward(Id a, Id out) {
    const Mat<T>&dC = nodes_[out].grad, &Y = val(out);
    Mat<T>& da = grad(a);
    for (int i = 0; i < Y.rows; ++i) {
      const T* yi = Y.row(i);
      const T* di = dC.row(i);
      T* dai = da.row(i);
      T dot = T(0);
      for (int j = 0; j < Y.cols; ++j) dot += yi[j] * di[j];
      for (int j = 0; j < Y.cols; ++j) dai[j] += yi[j] * (di[j] - dot);
    }
    macs_ += 2 * Y.a.size();
  }

  std::vector<Node> nodes_;
  GradBuffer<T>* gb_ = nullptr;
  bool backward_done_ = false;
  uint64_t macs_ = 0;
};

}  // namespace tga
