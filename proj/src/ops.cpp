#include "mvr/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvr::nn {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool want_grad(const Tensor& t) { return grad_enabled() && t.requires_grad(); }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) +
                              " vs " + shape_str(b));
}

enum class Bcast { same, a_scalar, b_scalar, b_row };

Bcast bcast_kind(const char* op, const Tensor& a, const Tensor& b, bool allow_row) {
  if (a.shape() == b.shape()) return Bcast::same;
  if (b.numel() == 1) return Bcast::b_scalar;
  if (a.numel() == 1) return Bcast::a_scalar;
  if (allow_row && b.rank() == 1 && a.rank() >= 2 && b.dim(0) == a.shape().back()) {
    return Bcast::b_row;
  }
  shape_error(op, a.shape(), b.shape());
}

Shape bcast_shape(Bcast k, const Tensor& a, const Tensor& b) {
  return k == Bcast::a_scalar ? b.shape() : a.shape();
}

// Index of each operand for flat output index i.
inline size_t a_index(Bcast k, size_t i) { return k == Bcast::a_scalar ? 0 : i; }
inline size_t b_index(Bcast k, size_t i, size_t cols) {
  switch (k) {
    case Bcast::b_scalar: return 0;
    case Bcast::b_row: return i % cols;
    case Bcast::a_scalar: return i;
    default: return i;
  }
}

template <typename Fwd, typename Bwd>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, bool allow_row,
                 Fwd fwd, Bwd bwd) {
  const Bcast k = bcast_kind(name, a, b, allow_row);
  Shape out_shape = bcast_shape(k, a, b);
  const size_t cols = k == Bcast::b_row ? static_cast<size_t>(a.shape().back()) : 0;
  const bool rg = want_grad(a) || want_grad(b);

  Tensor out = make_op_output(out_shape, rg, {a, b}, [k, cols, bwd](Node& n) {
    const Tensor& pa = n.parents[0];
    const Tensor& pb = n.parents[1];
    const bool ga = pa.requires_grad();
    const bool gb = pb.requires_grad();
    if (ga) pa.node()->ensure_grad();
    if (gb) pb.node()->ensure_grad();
    const size_t m = n.data.size();
    for (size_t i = 0; i < m; ++i) {
      const size_t ia = a_index(k, i);
      const size_t ib = b_index(k, i, cols);
      double da = 0.0, db = 0.0;
      bwd(n.grad[i], pa.data()[ia], pb.data()[ib], da, db);
      if (ga) pa.node()->grad[ia] += da;
      if (gb) pb.node()->grad[ib] += db;
    }
  });

  const size_t m = static_cast<size_t>(out.numel());
  for (size_t i = 0; i < m; ++i) {
    out.data()[i] = fwd(a.data()[a_index(k, i)], b.data()[b_index(k, i, cols)]);
  }
  return out;
}

template <typename Fwd, typename Deriv>
Tensor unary_op(const Tensor& a, Fwd fwd, Deriv deriv) {
  Tensor out = make_op_output(a.shape(), want_grad(a), {a}, [deriv](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (size_t i = 0; i < n.data.size(); ++i) {
      pa.node()->grad[i] += n.grad[i] * deriv(pa.data()[i], n.data[i]);
    }
  });
  for (size_t i = 0; i < a.data().size(); ++i) out.data()[i] = fwd(a.data()[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op("add", a, b, true,
                   [](double x, double y) { return x + y; },
                   [](double g, double, double, double& da, double& db) { da = g; db = g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op("sub", a, b, true,
                   [](double x, double y) { return x - y; },
                   [](double g, double, double, double& da, double& db) { da = g; db = -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op("mul", a, b, true,
                   [](double x, double y) { return x * y; },
                   [](double g, double x, double y, double& da, double& db) {
                     da = g * y;
                     db = g * x;
                   });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op("div", a, b, false,
                   [](double x, double y) { return x / y; },
                   [](double g, double x, double y, double& da, double& db) {
                     da = g / y;
                     db = -g * x / (y * y);
                   });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    shape_error("matmul", a.shape(), b.shape());
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = make_op_output({m, n}, want_grad(a) || want_grad(b), {a, b}, [m, k, n](Node& nd) {
    const Tensor& pa = nd.parents[0];
    const Tensor& pb = nd.parents[1];
    Eigen::Map<const EMat> A(pa.data().data(), m, k);
    Eigen::Map<const EMat> B(pb.data().data(), k, n);
    Eigen::Map<const EMat> G(nd.grad.data(), m, n);
    if (pa.requires_grad()) {
      pa.node()->ensure_grad();
      Eigen::Map<EMat> dA(pa.node()->grad.data(), m, k);
      dA.noalias() += G * B.transpose();
    }
    if (pb.requires_grad()) {
      pb.node()->ensure_grad();
      Eigen::Map<EMat> dB(pb.node()->grad.data(), k, n);
      dB.noalias() += A.transpose() * G;
    }
  });
  Eigen::Map<const EMat> A(a.data().data(), m, k);
  Eigen::Map<const EMat> B(b.data().data(), k, n);
  Eigen::Map<EMat> C(out.data().data(), m, n);
  C.noalias() = A * B;
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) {
    throw std::invalid_argument("transpose: expected rank-2 tensor, got " + shape_str(a.shape()));
  }
  const int r = a.dim(0), c = a.dim(1);
  Tensor out = make_op_output({c, r}, want_grad(a), {a}, [r, c](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < r; ++j) {
        pa.node()->grad[static_cast<size_t>(j) * c + i] += n.grad[static_cast<size_t>(i) * r + j];
      }
    }
  });
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      out.data()[static_cast<size_t>(j) * r + i] = a.data()[static_cast<size_t>(i) * c + j];
    }
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    shape_error("reshape", a.shape(), shape);
  }
  Tensor out = make_op_output(shape, want_grad(a), {a}, [](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (size_t i = 0; i < n.data.size(); ++i) pa.node()->grad[i] += n.grad[i];
  });
  out.data() = a.data();
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& ref = parts[0].shape();
  const int rank = static_cast<int>(ref.size());
  if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: bad axis");
  Shape out_shape = ref;
  out_shape[static_cast<size_t>(axis)] = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    if (p.rank() != rank) shape_error("concat", ref, p.shape());
    for (int d = 0; d < rank; ++d) {
      if (d != axis && p.dim(d) != ref[static_cast<size_t>(d)]) shape_error("concat", ref, p.shape());
    }
    out_shape[static_cast<size_t>(axis)] += p.dim(axis);
    rg = rg || want_grad(p);
  }
  size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= static_cast<size_t>(ref[static_cast<size_t>(d)]);
  for (int d = axis + 1; d < rank; ++d) inner *= static_cast<size_t>(ref[static_cast<size_t>(d)]);
  const size_t out_axis = static_cast<size_t>(out_shape[static_cast<size_t>(axis)]);

  std::vector<Tensor> parents(parts.begin(), parts.end());
  Tensor out = make_op_output(out_shape, rg, parents, [axis, outer, inner, out_axis](Node& n) {
    size_t off = 0;
    for (Tensor& p : n.parents) {
      const size_t e = static_cast<size_t>(p.dim(axis));
      if (p.requires_grad()) {
        p.node()->ensure_grad();
        for (size_t o = 0; o < outer; ++o) {
          const double* src = n.grad.data() + (o * out_axis + off) * inner;
          double* dst = p.node()->grad.data() + o * e * inner;
          for (size_t i = 0; i < e * inner; ++i) dst[i] += src[i];
        }
      }
      off += e;
    }
  });

  size_t off = 0;
  for (const Tensor& p : parts) {
    const size_t e = static_cast<size_t>(p.dim(axis));
    for (size_t o = 0; o < outer; ++o) {
      const double* src = p.data().data() + o * e * inner;
      double* dst = out.data().data() + (o * out_axis + off) * inner;
      std::copy(src, src + e * inner, dst);
    }
    off += e;
  }
  return out;
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
  const int rank = a.rank();
  if (axis < 0 || axis >= rank) throw std::invalid_argument("slice: bad axis");
  const int extent = a.dim(axis);
  if (start < 0 || len <= 0 || start + len > extent) {
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") outside extent " +
                                std::to_string(extent));
  }
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = len;
  size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= static_cast<size_t>(a.dim(d));
  for (int d = axis + 1; d < rank; ++d) inner *= static_cast<size_t>(a.dim(d));
  const size_t e = static_cast<size_t>(extent), l = static_cast<size_t>(len),
               s = static_cast<size_t>(start);

  Tensor out = make_op_output(out_shape, want_grad(a), {a}, [outer, inner, e, l, s](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (size_t o = 0; o < outer; ++o) {
      const double* src = n.grad.data() + o * l * inner;
      double* dst = pa.node()->grad.data() + (o * e + s) * inner;
      for (size_t i = 0; i < l * inner; ++i) dst[i] += src[i];
    }
  });
  for (size_t o = 0; o < outer; ++o) {
    const double* src = a.data().data() + (o * e + s) * inner;
    double* dst = out.data().data() + o * l * inner;
    std::copy(src, src + l * inner, dst);
  }
  return out;
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& rows) {
  if (a.rank() != 2) throw std::invalid_argument("gather_rows: expected rank-2 tensor");
  const int r = a.dim(0), c = a.dim(1);
  for (int idx : rows) {
    if (idx < 0 || idx >= r) throw std::invalid_argument("gather_rows: index out of range");
  }
  Tensor out = make_op_output({static_cast<int>(rows.size()), c}, want_grad(a), {a},
                              [rows, c](Node& n) {
                                const Tensor& pa = n.parents[0];
                                pa.node()->ensure_grad();
                                for (size_t i = 0; i < rows.size(); ++i) {
                                  const double* src = n.grad.data() + i * static_cast<size_t>(c);
                                  double* dst = pa.node()->grad.data() +
                                                static_cast<size_t>(rows[i]) * c;
                                  for (int j = 0; j < c; ++j) dst[j] += src[j];
                                }
                              });
  for (size_t i = 0; i < rows.size(); ++i) {
    const double* src = a.data().data() + static_cast<size_t>(rows[i]) * c;
    std::copy(src, src + c, out.data().data() + i * static_cast<size_t>(c));
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op_output({1}, want_grad(a), {a}, [](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (double& g : pa.node()->grad) g += n.grad[0];
  });
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  out.data()[0] = acc;
  return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum_axis(const Tensor& a, int axis) {
  if (a.rank() != 2 || (axis != 0 && axis != 1)) {
    throw std::invalid_argument("sum_axis: expected rank-2 tensor and axis 0 or 1");
  }
  const int r = a.dim(0), c = a.dim(1);
  const int out_len = axis == 0 ? c : r;
  Tensor out = make_op_output({out_len}, want_grad(a), {a}, [axis, r, c](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        pa.node()->grad[static_cast<size_t>(i) * c + j] +=
            n.grad[static_cast<size_t>(axis == 0 ? j : i)];
      }
    }
  });
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      out.data()[static_cast<size_t>(axis == 0 ? j : i)] += a.data()[static_cast<size_t>(i) * c + j];
    }
  }
  return out;
}

Tensor mean_axis(const Tensor& a, int axis) {
  const double n = static_cast<double>(axis == 0 ? a.dim(0) : a.dim(1));
  return scale(sum_axis(a, axis), 1.0 / n);
}

Tensor relu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary_op(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Tensor sin(const Tensor& a) {
  return unary_op(a, [](double x) { return std::sin(x); },
                  [](double x, double) { return std::cos(x); });
}

Tensor cos(const Tensor& a) {
  return unary_op(a, [](double x) { return std::cos(x); },
                  [](double x, double) { return -std::sin(x); });
}

Tensor abs(const Tensor& a) {
  return unary_op(a, [](double x) { return std::abs(x); },
                  [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return binary_op("maximum", a, b, false,
                   [](double x, double y) { return x >= y ? x : y; },
                   [](double g, double x, double y, double& da, double& db) {
                     if (x >= y) da = g; else db = g;
                   });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  return binary_op("minimum", a, b, false,
                   [](double x, double y) { return x <= y ? x : y; },
                   [](double g, double x, double y, double& da, double& db) {
                     if (x <= y) da = g; else db = g;
                   });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary_op(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                  [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& a) {
  const int cols = a.shape().back();
  const size_t rows = static_cast<size_t>(a.numel()) / cols;
  Tensor out = make_op_output(a.shape(), want_grad(a), {a}, [rows, cols](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      const double* y = n.data.data() + r * cols;
      const double* g = n.grad.data() + r * cols;
      double gy = 0.0;
      for (int j = 0; j < cols; ++j) gy += g[j] * y[j];
      double* dst = pa.node()->grad.data() + r * cols;
      for (int j = 0; j < cols; ++j) dst[j] += y[j] * (g[j] - gy);
    }
  });
  for (size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double* y = out.data().data() + r * cols;
    double mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (int j = 0; j < cols; ++j) y[j] /= z;
  }
  return out;
}

Tensor layer_norm(const Tensor& a, double eps) {
  const int cols = a.shape().back();
  const size_t rows = static_cast<size_t>(a.numel()) / cols;
  // Save inverse std per row for backward.
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  Tensor out = make_op_output(a.shape(), want_grad(a), {a}, [rows, cols, inv_std](Node& n) {
    const Tensor& pa = n.parents[0];
    pa.node()->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      const double* y = n.data.data() + r * cols;
      const double* g = n.grad.data() + r * cols;
      double gm = 0.0, gym = 0.0;
      for (int j = 0; j < cols; ++j) {
        gm += g[j];
        gym += g[j] * y[j];
      }
      gm /= cols;
      gym /= cols;
      const double is = (*inv_std)[r];
      double* dst = pa.node()->grad.data() + r * cols;
      for (int j = 0; j < cols; ++j) dst[j] += is * (g[j] - gm - y[j] * gym);
    }
  });
  for (size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double* y = out.data().data() + r * cols;
    double mu = 0.0;
    for (int j = 0; j < cols; ++j) mu += x[j];
    mu /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= cols;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int j = 0; j < cols; ++j) y[j] = (x[j] - mu) * is;
  }
  return out;
}

Tensor im2col(const Tensor& x, int kh, int kw, int stride, int pad) {
  if (x.rank() != 3) throw std::invalid_argument("im2col: expected [C,H,W] input");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int Hout = (H + 2 * pad - kh) / stride + 1;
  const int Wout = (W + 2 * pad - kw) / stride + 1;
  if (Hout <= 0 || Wout <= 0) {
    throw std::invalid_argument("im2col: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                                " does not fit input " + shape_str(x.shape()));
  }
  const int patch = C * kh * kw;

  auto for_each_cell = [=](auto&& body) {
    for (int oy = 0; oy < Hout; ++oy) {
      for (int ox = 0; ox < Wout; ++ox) {
        const size_t row = static_cast<size_t>(oy) * Wout + ox;
        for (int c = 0; c < C; ++c) {
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= W) continue;
              const size_t col = (static_cast<size_t>(c) * kh + ky) * kw + kx;
              const size_t src = (static_cast<size_t>(c) * H + iy) * W + ix;
              body(row * patch + col, src);
            }
          }
        }
      }
    }
  };

  Tensor out = make_op_output({Hout * Wout, patch}, want_grad(x), {x}, [for_each_cell](Node& n) {
    const Tensor& px = n.parents[0];
    px.node()->ensure_grad();
    for_each_cell([&](size_t dst, size_t src) { px.node()->grad[src] += n.grad[dst]; });
  });
  for_each_cell([&](size_t dst, size_t src) { out.data()[dst] = x.data()[src]; });
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (w.rank() != 4) throw std::invalid_argument("conv2d: expected [Cout,Cin,kh,kw] weight");
  const int Cout = w.dim(0), Cin = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (x.rank() != 3 || x.dim(0) != Cin) shape_error("conv2d", x.shape(), w.shape());
  const int H = x.dim(1), W = x.dim(2);
  const int Hout = (H + 2 * pad - kh) / stride + 1;
  const int Wout = (W + 2 * pad - kw) / stride + 1;

  Tensor cols = im2col(x, kh, kw, stride, pad);                    // [Hout*Wout, Cin*kh*kw]
  Tensor wmat = transpose(reshape(w, {Cout, Cin * kh * kw}));      // [Cin*kh*kw, Cout]
  Tensor out = add(matmul(cols, wmat), b);                         // [Hout*Wout, Cout]
  return reshape(transpose(out), {Cout, Hout, Wout});
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add(matmul(x, w), b);
}

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

}  // namespace mvr::nn
