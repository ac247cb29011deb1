#pragma once

#include "mvr/tensor.hpp"

namespace mvr::nn {

// Elementwise arithmetic. Shapes must match, except: a scalar (numel==1)
// operand broadcasts against anything, and for add/mul a rank-1 tensor whose
// length equals the other operand's last extent broadcasts across rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n] -> [m,n]
Tensor transpose(const Tensor& a);                // 2D

Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor gather_rows(const Tensor& a, const std::vector<int>& rows);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);   // 2D
Tensor mean_axis(const Tensor& a, int axis);  // 2D

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor abs(const Tensor& a);

Tensor maximum(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor clamp(const Tensor& a, double lo, double hi);

/// softmax over the last axis; rows sum to 1.
Tensor softmax(const Tensor& a);
/// layer normalization over the last axis, no affine terms. A constant row
/// normalizes to zeros (variance epsilon keeps the quotient finite).
Tensor layer_norm(const Tensor& a, double eps = 1e-5);

/// Unfold [C,H,W] into [Hout*Wout, C*kh*kw] patch rows for conv-as-matmul.
Tensor im2col(const Tensor& x, int kh, int kw, int stride, int pad);
/// Strided 2D convolution: x [Cin,H,W], w [Cout,Cin,kh,kw], b [Cout].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

/// x [rows,in] * w [in,out] + b [out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor dot(const Tensor& a, const Tensor& b);  // sum(a*b), any matching shape

}  // namespace mvr::nn
