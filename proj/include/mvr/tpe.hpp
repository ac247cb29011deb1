#pragma once

#include <vector>

#include "mvr/tensor.hpp"

namespace mvr::tpe {

/// Split of the positional dimension between depth and angle. d_dep rounds
/// down to the nearest even value so sin/cos pairing stays intact.
struct TPEConfig {
  int d_pos = 256;
  double alpha = 0.6;
  double tau = 10000.0;
  /// Normalized positions are multiplied by this before the sinusoid so a
  /// coarse grid still spans several periods of the fastest component.
  double pos_scale = 1000.0;

  int d_dep() const;
  int d_ang() const { return d_pos - d_dep(); }
};

/// Sinusoidal embedding of one normalized position into `dim` values,
/// interleaved sin/cos per frequency.
std::vector<double> encode_sinusoid(double pos_norm, int dim, const TPEConfig& cfg);
std::vector<double> encode_depth(double p_dep, const TPEConfig& cfg);
std::vector<double> encode_angle(double p_ang, const TPEConfig& cfg);

struct PosEmbed {
  std::vector<double> depth;
  std::vector<double> angle;
  std::vector<double> concat() const;
};

/// Token embedding for a feature-map cell. Both views use the same encoders,
/// so depth similarity is comparable across views. Bin index i maps to
/// normalized position (i + 0.5) / n.
PosEmbed token_pe(int angle_idx, int depth_idx, int n_angle, int n_depth, const TPEConfig& cfg);

/// All token embeddings of an (n_angle x n_depth) grid as a constant
/// [n_angle*n_depth, d_pos] tensor, row index = angle_idx * n_depth + depth_idx.
nn::Tensor token_pe_grid(int n_angle, int n_depth, const TPEConfig& cfg);

/// Differentiable query embeddings from raw reference parameters [N,2]
/// (depth, angle). Sigmoid maps the refs into [0,1]; the same sinusoid
/// encoders as token_pe make query-key depth similarity meaningful.
nn::Tensor query_pe_t(const nn::Tensor& refs, const TPEConfig& cfg);

}  // namespace mvr::tpe
