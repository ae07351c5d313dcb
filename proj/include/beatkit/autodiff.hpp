#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "beatkit/tensor.hpp"

namespace beatkit::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; values and gradients live on the tape.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  int id() const { return idx_; }

 private:
  friend class Tape;
  Var(Tape* t, int i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

// Reverse-mode tape over dense real tensors. One forward graph, one backward pass.
// Complex quantities are carried as paired real tensors by the callers.
class Tape {
  using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<const EMat>;
  using MMap = Eigen::Map<EMat>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;  // empty for leaves and pure constants
  };

 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf insertion. Constants never receive gradients.
  Var leaf(Tensor value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, nullptr});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

  const Tensor& value(Var v) const { return nodes_[v.idx_].value; }
  const Tensor& grad(Var v) const {
    if (!nodes_[v.idx_].requires_grad) throw std::logic_error("grad of non-grad node");
    return nodes_[v.idx_].grad;
  }
  bool requires_grad(Var v) const { return nodes_[v.idx_].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // True whenever some op evaluated on a non-differentiable boundary
  // (exact min==max tie, relu kink at 0). Finite-difference checks use
  // this to exclude degenerate points.
  bool hit_nondiff_boundary() const { return nondiff_boundary_; }

  // ---- elementwise binary ----
  Var add(Var a, Var b) { return ewise(a, b, [](double x, double y) { return x + y; }, Ewise::Add); }
  Var sub(Var a, Var b) { return ewise(a, b, [](double x, double y) { return x - y; }, Ewise::Sub); }
  Var mul(Var a, Var b) { return ewise(a, b, [](double x, double y) { return x * y; }, Ewise::Mul); }
  Var div(Var a, Var b) {
    const Tensor& tb = val(b);
    for (double y : tb.data)
      if (y == 0.0) throw std::domain_error("div: division by zero (no epsilon guard)");
    return ewise(a, b, [](double x, double y) { return x / y; }, Ewise::Div);
  }

  // ---- matmul: alpha * op(A) * op(B) ----
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false, double alpha = 1.0) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    const int ar = trans_a ? ta.cols : ta.rows, ac = trans_a ? ta.rows : ta.cols;
    const int br = trans_b ? tb.cols : tb.rows, bc = trans_b ? tb.rows : tb.cols;
    if (ac != br) throw std::invalid_argument("matmul: inner dimensions disagree");
    Tensor out(ar, bc);
    {
      CMap A(ta.data.data(), ta.rows, ta.cols);
      CMap B(tb.data.data(), tb.rows, tb.cols);
      MMap C(out.data.data(), ar, bc);
      if (!trans_a && !trans_b) C.noalias() = alpha * (A * B);
      else if (!trans_a && trans_b) C.noalias() = alpha * (A * B.transpose());
      else if (trans_a && !trans_b) C.noalias() = alpha * (A.transpose() * B);
      else C.noalias() = alpha * (A.transpose() * B.transpose());
    }
    Var r = result(std::move(out), {a, b});
    if (requires_grad(r))
      node(r).back = [a, b, r, trans_a, trans_b, alpha](Tape& t) {
        const Tensor& ga = t.val(a);
        const Tensor& gb = t.val(b);
        CMap A(ga.data.data(), ga.rows, ga.cols);
        CMap B(gb.data.data(), gb.rows, gb.cols);
        CMap G(t.node(r).grad.data.data(), t.node(r).grad.rows, t.node(r).grad.cols);
        if (t.requires_grad(a)) {
          MMap dA(t.grad_buf(a), ga.rows, ga.cols);
          if (!trans_a && !trans_b) dA.noalias() += alpha * (G * B.transpose());
          else if (!trans_a && trans_b) dA.noalias() += alpha * (G * B);
          else if (trans_a && !trans_b) dA.noalias() += alpha * (B * G.transpose());
          else dA.noalias() += alpha * (B.transpose() * G.transpose());
        }
        if (t.requires_grad(b)) {
          MMap dB(t.grad_buf(b), gb.rows, gb.cols);
          if (!trans_a && !trans_b) dB.noalias() += alpha * (A.transpose() * G);
          else if (!trans_a && trans_b) dB.noalias() += alpha * (G.transpose() * A);
          else if (trans_a && !trans_b) dB.noalias() += alpha * (A * G);
          else dB.noalias() += alpha * (G.transpose() * A.transpose());
        }
      };
    return r;
  }

  Var transpose(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.cols, ta.rows);
    for (int r = 0; r < ta.rows; ++r)
      for (int c = 0; c < ta.cols; ++c) out.at(c, r) = ta.at(r, c);
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r](Tape& t) {
        const Tensor& g = t.node(r).grad;
        Tensor& da = t.grad_ref(a);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) da.at(j, i) += g.at(i, j);
      };
    return r;
  }

  // ---- row concatenation / slicing ----
  Var concat_rows(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.cols != tb.cols) throw std::invalid_argument("concat_rows: column mismatch");
    Tensor out(ta.rows + tb.rows, ta.cols);
    std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
    std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + ta.numel());
    Var r = result(std::move(out), {a, b});
    if (requires_grad(r))
      node(r).back = [a, b, r](Tape& t) {
        const Tensor& g = t.node(r).grad;
        const size_t na = t.val(a).numel();
        if (t.requires_grad(a)) {
          Tensor& da = t.grad_ref(a);
          for (size_t i = 0; i < na; ++i) da.data[i] += g.data[i];
        }
        if (t.requires_grad(b)) {
          Tensor& db = t.grad_ref(b);
          for (size_t i = 0; i < db.numel(); ++i) db.data[i] += g.data[na + i];
        }
      };
    return r;
  }

  // Rows [r0, r1) of a. Splitting a tensor is two slices.
  Var slice_rows(Var a, int r0, int r1) {
    const Tensor& ta = val(a);
    if (r0 < 0 || r1 > ta.rows || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
    Tensor out(r1 - r0, ta.cols);
    std::copy(ta.data.begin() + static_cast<size_t>(r0) * ta.cols,
              ta.data.begin() + static_cast<size_t>(r1) * ta.cols, out.data.begin());
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r, r0](Tape& t) {
        const Tensor& g = t.node(r).grad;
        Tensor& da = t.grad_ref(a);
        const size_t off = static_cast<size_t>(r0) * da.cols;
        for (size_t i = 0; i < g.numel(); ++i) da.data[off + i] += g.data[i];
      };
    return r;
  }

  // Zero-pad a into a total_rows-tall tensor at a row offset.
  Var embed_rows(Var a, int total_rows, int offset) {
    const Tensor& ta = val(a);
    if (offset < 0 || offset + ta.rows > total_rows)
      throw std::invalid_argument("embed_rows: window does not fit");
    Tensor out(total_rows, ta.cols);
    std::copy(ta.data.begin(), ta.data.end(),
              out.data.begin() + static_cast<size_t>(offset) * ta.cols);
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r, offset](Tape& t) {
        const Tensor& g = t.node(r).grad;
        Tensor& da = t.grad_ref(a);
        const size_t off = static_cast<size_t>(offset) * da.cols;
        for (size_t i = 0; i < da.numel(); ++i) da.data[i] += g.data[off + i];
      };
    return r;
  }

  // ---- reductions ----
  Var sum(Var a) { return reduce_linear(a, 1.0); }
  Var mean(Var a) { return reduce_linear(a, 1.0 / static_cast<double>(val(a).numel())); }

  Var min_reduce(Var a) { return extremum(a, /*want_max=*/false); }
  Var max_reduce(Var a) { return extremum(a, /*want_max=*/true); }

  // Column vector of per-row sums.
  Var row_sum(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.rows, 1);
    for (int r = 0; r < ta.rows; ++r) {
      double s = 0;
      for (int c = 0; c < ta.cols; ++c) s += ta.at(r, c);
      out.data[r] = s;
    }
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r](Tape& t) {
        const Tensor& g = t.node(r).grad;
        Tensor& da = t.grad_ref(a);
        for (int i = 0; i < da.rows; ++i)
          for (int c = 0; c < da.cols; ++c) da.at(i, c) += g.data[i];
      };
    return r;
  }

  // ---- elementwise unary ----
  Var square(Var a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
  }
  Var sqrt_op(Var a) {
    const Tensor& ta = val(a);
    for (double x : ta.data)
      if (x < 0) throw std::domain_error("sqrt of negative value");
    return unary(a, [](double x) { return std::sqrt(x); },
                 [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
  }
  Var abs_op(Var a) {
    for (double x : val(a).data)
      if (x == 0.0) nondiff_boundary_ = true;
    return unary(a, [](double x) { return std::fabs(x); },
                 [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
  }
  Var gelu(Var a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    return unary(a, [=](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
                 [=](double x, double) {
                   const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
                   return cdf + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
                 });
  }
  // max(0, x); the hinge used by the contrastive loss.
  Var relu(Var a) {
    for (double x : val(a).data)
      if (x == 0.0) nondiff_boundary_ = true;
    return unary(a, [](double x) { return x > 0 ? x : 0.0; },
                 [](double x, double) { return x > 0 ? 1.0 : 0.0; });
  }
  // c0 * x + c1 with compile-time constants; covers scale and epsilon shifts.
  Var affine(Var a, double c0, double c1) {
    return unary(a, [=](double x) { return c0 * x + c1; }, [=](double, double) { return c0; });
  }
  Var scale(Var a, double c) { return affine(a, c, 0.0); }

  // Cumulative sum over the flat (row-major) order; used for spectral CDFs.
  Var cumsum(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.rows, ta.cols);
    double acc = 0;
    for (size_t i = 0; i < ta.numel(); ++i) out.data[i] = (acc += ta.data[i]);
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r](Tape& t) {
        const Tensor& g = t.node(r).grad;
        Tensor& da = t.grad_ref(a);
        double acc = 0;
        for (size_t i = g.numel(); i-- > 0;) da.data[i] += (acc += g.data[i]);
      };
    return r;
  }

  // ---- broadcasts ----
  // [Rx1] -> [RxC]
  Var broadcast_cols(Var a, int cols) {
    const Tensor& ta = val(a);
    if (ta.cols != 1) throw std::invalid_argument("broadcast_cols expects a column vector");
    Tensor out(ta.rows, cols);
    for (int r = 0; r < ta.rows; ++r)
      for (int c = 0; c < cols; ++c) out.at(r, c) = ta.data[r];
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r](Tape& t) {
        const Tensor& g = t.node(r).grad;
        Tensor& da = t.grad_ref(a);
        for (int i = 0; i < g.rows; ++i)
          for (int c = 0; c < g.cols; ++c) da.data[i] += g.at(i, c);
      };
    return r;
  }

  // Add a [1xC] row vector to every row of a [RxC] tensor.
  Var add_rowvec(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (tb.rows != 1 || tb.cols != ta.cols) throw std::invalid_argument("add_rowvec: shape");
    Tensor out = ta;
    for (int r = 0; r < ta.rows; ++r)
      for (int c = 0; c < ta.cols; ++c) out.at(r, c) += tb.data[c];
    Var r = result(std::move(out), {a, b});
    if (requires_grad(r))
      node(r).back = [a, b, r](Tape& t) {
        const Tensor& g = t.node(r).grad;
        if (t.requires_grad(a)) {
          Tensor& da = t.grad_ref(a);
          for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
        }
        if (t.requires_grad(b)) {
          Tensor& db = t.grad_ref(b);
          for (int i = 0; i < g.rows; ++i)
            for (int c = 0; c < g.cols; ++c) db.data[c] += g.at(i, c);
        }
      };
    return r;
  }

  // Scalar-node broadcasts: s is a 1x1 node.
  Var add_scalar(Var a, Var s) { return scalar_bcast(a, s, SB::Add); }
  Var sub_scalar(Var a, Var s) { return scalar_bcast(a, s, SB::Sub); }
  Var mul_scalar(Var a, Var s) { return scalar_bcast(a, s, SB::Mul); }
  Var div_scalar(Var a, Var s) {
    if (val(s).item() == 0.0) throw std::domain_error("div_scalar: zero denominator");
    return scalar_bcast(a, s, SB::Div);
  }

  // Per-row min-max normalization of attention scores: row -> (row - min) / (max - min),
  // degenerate rows (max == min) map to zeros. Ties route to the first extremal index.
  Var minmax_rows(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.rows, ta.cols);
    std::vector<int> amin(ta.rows), amax(ta.rows);
    std::vector<double> range(ta.rows);
    for (int r = 0; r < ta.rows; ++r) {
      int imin = 0, imax = 0;
      for (int c = 1; c < ta.cols; ++c) {
        if (ta.at(r, c) < ta.at(r, imin)) imin = c;
        if (ta.at(r, c) > ta.at(r, imax)) imax = c;
      }
      for (int c = 0; c < ta.cols; ++c) {
        if (c != imin && ta.at(r, c) == ta.at(r, imin)) nondiff_boundary_ = true;
        if (c != imax && ta.at(r, c) == ta.at(r, imax)) nondiff_boundary_ = true;
      }
      const double mn = ta.at(r, imin), mx = ta.at(r, imax);
      const double rg = mx - mn;
      amin[r] = imin;
      amax[r] = imax;
      range[r] = rg;
      if (rg > 0) {
        const double inv = 1.0 / rg;
        for (int c = 0; c < ta.cols; ++c) out.at(r, c) = (ta.at(r, c) - mn) * inv;
      }  // else the row stays zero
      if (rg == 0) nondiff_boundary_ = true;
    }
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r, amin = std::move(amin), amax = std::move(amax),
                      range = std::move(range)](Tape& t) {
        const Tensor& g = t.node(r).grad;
        const Tensor& y = t.node(r).value;
        Tensor& da = t.grad_ref(a);
        for (int i = 0; i < g.rows; ++i) {
          if (range[i] <= 0) continue;  // degenerate rows: zero output, zero gradient
          const double inv = 1.0 / range[i];
          double gsum = 0, gysum = 0;
          for (int c = 0; c < g.cols; ++c) {
            const double gv = g.at(i, c);
            da.at(i, c) += gv * inv;
            gsum += gv;
            gysum += gv * y.at(i, c);
          }
          da.at(i, amin[i]) += (gysum - gsum) * inv;
          da.at(i, amax[i]) -= gysum * inv;
        }
      };
    return r;
  }

  // ---- backward ----
  void backward(Var out) {
    if (backward_done_) throw std::logic_error("backward: tape already consumed");
    if (!val(out).is_scalar()) throw std::logic_error("backward: output must be scalar");
    backward_done_ = true;
    for (Node& n : nodes_)
      if (n.requires_grad) n.grad = Tensor(n.value.rows, n.value.cols);
    if (!nodes_[out.idx_].requires_grad) return;  // nothing depends on a parameter
    nodes_[out.idx_].grad.data[0] = 1.0;
    for (int i = out.idx_; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this);
  }

 private:
  enum class Ewise { Add, Sub, Mul, Div };
  enum class SB { Add, Sub, Mul, Div };

  Node& node(Var v) { return nodes_[v.idx_]; }
  const Tensor& val(Var v) const { return nodes_[v.idx_].value; }
  Tensor& grad_ref(Var v) { return nodes_[v.idx_].grad; }
  double* grad_buf(Var v) { return nodes_[v.idx_].grad.data.data(); }

  Var result(Tensor value, std::initializer_list<Var> inputs) {
    bool rg = false;
    for (Var v : inputs) {
      if (v.tape_ != this) throw std::logic_error("op inputs must live on the same tape");
      rg = rg || nodes_[v.idx_].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, rg, nullptr});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  template <class F>
  Var ewise(Var a, Var b, F f, Ewise kind) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("elementwise op: shape mismatch");
    Tensor out(ta.rows, ta.cols);
    for (size_t i = 0; i < ta.numel(); ++i) out.data[i] = f(ta.data[i], tb.data[i]);
    Var r = result(std::move(out), {a, b});
    if (requires_grad(r))
      node(r).back = [a, b, r, kind](Tape& t) {
        const Tensor& g = t.node(r).grad;
        const Tensor& va = t.val(a);
        const Tensor& vb = t.val(b);
        const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
        for (size_t i = 0; i < g.numel(); ++i) {
          const double gv = g.data[i];
          switch (kind) {
            case Ewise::Add:
              if (ga) t.grad_ref(a).data[i] += gv;
              if (gb) t.grad_ref(b).data[i] += gv;
              break;
            case Ewise::Sub:
              if (ga) t.grad_ref(a).data[i] += gv;
              if (gb) t.grad_ref(b).data[i] -= gv;
              break;
            case Ewise::Mul:
              if (ga) t.grad_ref(a).data[i] += gv * vb.data[i];
              if (gb) t.grad_ref(b).data[i] += gv * va.data[i];
              break;
            case Ewise::Div:
              if (ga) t.grad_ref(a).data[i] += gv / vb.data[i];
              if (gb) t.grad_ref(b).data[i] -= gv * va.data[i] / (vb.data[i] * vb.data[i]);
              break;
          }
        }
      };
    return r;
  }

  template <class F, class DF>
  Var unary(Var a, F f, DF df) {
    const Tensor& ta = val(a);
    Tensor out(ta.rows, ta.cols);
    for (size_t i = 0; i < ta.numel(); ++i) out.data[i] = f(ta.data[i]);
    Var r = result(std::move(out), {a});
    if (requires_grad(r))
      node(r).back = [a, r, df](Tape& t) {
        const Tensor& g = t.node(r).grad;
        const Tensor& x = t.val(a);
        const Tensor& y = t.node(r).value;
        Tensor& da = t.grad_ref(a);
        for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i] * df(x.data[i], y.data[i]);
      };
    return r;
  }

  Var reduce_linear(Var a, double w) {
    const Tensor& ta = val(a);
    double s = 0;
    for (double x : ta.data) s += x;
    Var r = result(Tensor::scalar(s * w), {a});
    if (requires_grad(r))
      node(r).back = [a, r, w](Tape& t) {
        const double g = t.node(r).grad.data[0] * w;
        Tensor& da = t.grad_ref(a);
        for (double& d : da.data) d += g;
      };
    return r;
  }

  Var extremum(Var a, bool want_max) {
    const Tensor& ta = val(a);
    if (ta.numel() == 0) throw std::invalid_argument("reduction over empty tensor");
    size_t best = 0;
    for (size_t i = 1; i < ta.numel(); ++i) {
      if (want_max ? ta.data[i] > ta.data[best] : ta.data[i] < ta.data[best]) best = i;
    }
    for (size_t i = 0; i < ta.numel(); ++i)
      if (i != best && ta.data[i] == ta.data[best]) nondiff_boundary_ = true;
    Var r = result(Tensor::scalar(ta.data[best]), {a});
    if (requires_grad(r))
      node(r).back = [a, r, best](Tape& t) {
        t.grad_ref(a).data[best] += t.node(r).grad.data[0];
      };
    return r;
  }

  Var scalar_bcast(Var a, Var s, SB kind) {
    const Tensor& ta = val(a);
    if (!val(s).is_scalar()) throw std::invalid_argument("scalar broadcast: s must be 1x1");
    const double sv = val(s).item();
    Tensor out(ta.rows, ta.cols);
    for (size_t i = 0; i < ta.numel(); ++i) {
      switch (kind) {
        case SB::Add: out.data[i] = ta.data[i] + sv; break;
        case SB::Sub: out.data[i] = ta.data[i] - sv; break;
        case SB::Mul: out.data[i] = ta.data[i] * sv; break;
        case SB::Div: out.data[i] = ta.data[i] / sv; break;
      }
    }
    Var r = result(std::move(out), {a, s});
    if (requires_grad(r))
      node(r).back = [a, s, r, kind](Tape& t) {
        const Tensor& g = t.node(r).grad;
        const Tensor& va = t.val(a);
        const double sv = t.val(s).item();
        const bool ga = t.requires_grad(a), gs = t.requires_grad(s);
        double acc = 0;
        for (size_t i = 0; i < g.numel(); ++i) {
          const double gv = g.data[i];
          switch (kind) {
            case SB::Add:
              if (ga) t.grad_ref(a).data[i] += gv;
              acc += gv;
              break;
            case SB::Sub:
              if (ga) t.grad_ref(a).data[i] += gv;
              acc -= gv;
              break;
            case SB::Mul:
              if (ga) t.grad_ref(a).data[i] += gv * sv;
              acc += gv * va.data[i];
              break;
            case SB::Div:
              if (ga) t.grad_ref(a).data[i] += gv / sv;
              acc -= gv * va.data[i] / (sv * sv);
              break;
          }
        }
        if (gs) t.grad_ref(s).data[0] += acc;
      };
    return r;
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  bool nondiff_boundary_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }
inline const Tensor& Var::grad() const { return tape_->grad(*this); }
inline bool Var::requires_grad() const { return tape_->requires_grad(*this); }

// Result of a finite-difference gradient audit.
struct GradCheckResult {
  double max_rel_err = 0.0;
  bool degenerate = false;  // evaluation hit a kink or tie; errors are not meaningful there
};

// Central-difference check of d f / d x against the tape gradient.
// f builds the scalar output from a leaf var; it is re-run per perturbed coordinate.
inline GradCheckResult grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x,
                                  double h = 1e-5) {
  GradCheckResult res;
  Tensor analytic;
  {
    Tape tape;
    Var leaf = tape.leaf(x, true);
    Var out = f(tape, leaf);
    if (!out.value().is_scalar()) throw std::logic_error("grad_check: f must be scalar-valued");
    tape.backward(out);
    analytic = leaf.grad();
    res.degenerate = tape.hit_nondiff_boundary();
  }
  auto eval = [&](const Tensor& xp) {
    Tape tape;
    Var leaf = tape.leaf(xp, false);
    Var out = f(tape, leaf);
    if (tape.hit_nondiff_boundary()) res.degenerate = true;
    return out.value().item();
  };
  Tensor xp = x;
  for (size_t i = 0; i < x.numel(); ++i) {
    const double step = h * std::max(1.0, std::fabs(x.data[i]));
    xp.data[i] = x.data[i] + step;
    const double fp = eval(xp);
    xp.data[i] = x.data[i] - step;
    const double fm = eval(xp);
    xp.data[i] = x.data[i];
    const double num = (fp - fm) / (2.0 * step);
    const double rel =
        std::fabs(analytic.data[i] - num) / (std::fabs(analytic.data[i]) + std::fabs(num) + 1e-12);
    res.max_rel_err = std::max(res.max_rel_err, rel);
  }
  return res;
}

}  // namespace beatkit::ad
