#include "mvr/tpe.hpp"

#include <cmath>
#include <stdexcept>

#include "mvr/ops.hpp"

namespace mvr::tpe {

int TPEConfig::d_dep() const {
  if (d_pos <= 0 || d_pos % 2 != 0) {
    throw std::invalid_argument("TPEConfig: d_pos must be positive and even");
  }
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("TPEConfig: alpha must lie in [0,1]");
  }
  return 2 * static_cast<int>(std::floor(alpha * d_pos / 2.0));
}

std::vector<double> encode_sinusoid(double pos_norm, int dim, const TPEConfig& cfg) {
  std::vector<double> out(static_cast<size_t>(dim));
  const double x = pos_norm * cfg.pos_scale;
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = 1.0 / std::pow(cfg.tau, (2.0 * i) / dim);
    out[static_cast<size_t>(2 * i)] = std::sin(x * freq);
    out[static_cast<size_t>(2 * i + 1)] = std::cos(x * freq);
  }
  return out;
}

std::vector<double> encode_depth(double p_dep, const TPEConfig& cfg) {
  return encode_sinusoid(p_dep, cfg.d_dep(), cfg);
}

std::vector<double> encode_angle(double p_ang, const TPEConfig& cfg) {
  return encode_sinusoid(p_ang, cfg.d_ang(), cfg);
}

std::vector<double> PosEmbed::concat() const {
  std::vector<double> out;
  out.reserve(depth.size() + angle.size());
  out.insert(out.end(), depth.begin(), depth.end());
  out.insert(out.end(), angle.begin(), angle.end());
  return out;
}

PosEmbed token_pe(int angle_idx, int depth_idx, int n_angle, int n_depth, const TPEConfig& cfg) {
  if (angle_idx < 0 || angle_idx >= n_angle || depth_idx < 0 || depth_idx >= n_depth) {
    throw std::invalid_argument("token_pe: grid index outside feature map");
  }
  PosEmbed pe;
  pe.depth = encode_depth((depth_idx + 0.5) / n_depth, cfg);
  pe.angle = encode_angle((angle_idx + 0.5) / n_angle, cfg);
  return pe;
}

nn::Tensor token_pe_grid(int n_angle, int n_depth, const TPEConfig& cfg) {
  nn::Tensor out = nn::Tensor::zeros({n_angle * n_depth, cfg.d_pos});
  for (int a = 0; a < n_angle; ++a) {
    for (int d = 0; d < n_depth; ++d) {
      const std::vector<double> row = token_pe(a, d, n_angle, n_depth, cfg).concat();
      std::copy(row.begin(), row.end(),
                out.data().begin() + (static_cast<size_t>(a) * n_depth + d) * cfg.d_pos);
    }
  }
  return out;
}

namespace {

// freq[2i] = freq[2i+1] = tau^(-2i/dim); shift turns the odd slots into cos.
void sinusoid_tables(int dim, const TPEConfig& cfg, std::vector<double>& freq,
                     std::vector<double>& shift) {
  freq.assign(static_cast<size_t>(dim), 0.0);
  shift.assign(static_cast<size_t>(dim), 0.0);
  for (int i = 0; i < dim / 2; ++i) {
    const double f = 1.0 / std::pow(cfg.tau, (2.0 * i) / dim);
    freq[static_cast<size_t>(2 * i)] = f;
    freq[static_cast<size_t>(2 * i + 1)] = f;
    shift[static_cast<size_t>(2 * i + 1)] = M_PI / 2.0;
  }
}

nn::Tensor encode_column_t(const nn::Tensor& pos_col, int dim, const TPEConfig& cfg) {
  using namespace nn;
  std::vector<double> freq, shift;
  sinusoid_tables(dim, cfg, freq, shift);
  Tensor freq_row = Tensor::from({1, dim}, freq);
  Tensor shift_row = Tensor::from({dim}, shift);
  Tensor phases = add(matmul(scale(pos_col, cfg.pos_scale), freq_row), shift_row);
  return sin(phases);
}

}  // namespace

nn::Tensor query_pe_t(const nn::Tensor& refs, const TPEConfig& cfg) {
  using namespace nn;
  if (refs.rank() != 2 || refs.dim(1) != 2) {
    throw std::invalid_argument("query_pe_t: refs must be [N,2]");
  }
  Tensor s = sigmoid(refs);
  std::vector<Tensor> parts;
  if (cfg.d_dep() > 0) parts.push_back(encode_column_t(slice(s, 1, 0, 1), cfg.d_dep(), cfg));
  if (cfg.d_ang() > 0) parts.push_back(encode_column_t(slice(s, 1, 1, 1), cfg.d_ang(), cfg));
  if (parts.empty()) throw std::logic_error("query_pe_t: d_pos is zero");
  return parts.size() == 1 ? parts[0] : concat(parts, 1);
}

}  // namespace mvr::tpe
