#include "mvr/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace mvr::dsp {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(std::vector<cplx>& x) {
  const size_t n = x.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const cplx u = x[i + j];
        const cplx v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

void dft_naive(std::vector<cplx>& x) {
  const size_t n = x.size();
  std::vector<cplx> out(n, cplx(0.0, 0.0));
  for (size_t k = 0; k < n; ++k) {
    for (size_t m = 0; m < n; ++m) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * m % n) / static_cast<double>(n);
      out[k] += x[m] * cplx(std::cos(ang), std::sin(ang));
    }
  }
  x = std::move(out);
}

}  // namespace

void fft(std::vector<cplx>& x) {
  if (x.empty()) return;
  if (is_pow2(x.size())) {
    fft_pow2(x);
  } else {
    dft_naive(x);
  }
}

void fft_axis(std::vector<cplx>& data, int n0, int n1, int n2, int axis) {
  if (static_cast<size_t>(n0) * n1 * n2 != data.size()) {
    throw std::invalid_argument("fft_axis: dims do not match data size");
  }
  const int dims[3] = {n0, n1, n2};
  const int len = dims[axis];
  std::vector<cplx> line(static_cast<size_t>(len));

  const size_t stride2 = 1;
  const size_t stride1 = static_cast<size_t>(n2);
  const size_t stride0 = static_cast<size_t>(n1) * n2;
  const size_t strides[3] = {stride0, stride1, stride2};
  const size_t step = strides[axis];

  const int outer_a = axis == 0 ? n1 : n0;
  const int outer_b = axis == 2 ? n1 : n2;
  for (int a = 0; a < outer_a; ++a) {
    for (int b = 0; b < outer_b; ++b) {
      size_t base;
      if (axis == 0) base = static_cast<size_t>(a) * stride1 + b;
      else if (axis == 1) base = static_cast<size_t>(a) * stride0 + b;
      else base = static_cast<size_t>(a) * stride0 + static_cast<size_t>(b) * stride1;
      for (int i = 0; i < len; ++i) line[static_cast<size_t>(i)] = data[base + i * step];
      fft(line);
      for (int i = 0; i < len; ++i) data[base + i * step] = line[static_cast<size_t>(i)];
    }
  }
}

}  // namespace mvr::dsp
