#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mvr/geometry.hpp"
#include "mvr/rng.hpp"

namespace mvr::sim {

constexpr double kSpeedOfLight = 299792458.0;

enum class View { hor, ver };

/// FMCW front-end and grid geometry for one two-view radar.
/// The polar steering grid spans w_bins (h_bins) angle bins of az_res
/// (el_res) degrees centered on boresight and d_bins range bins of
/// range_res meters; Cartesian maps cover [x|y]_min..max laterally and
/// 0..d_bins*range_res in depth with the same bin counts.
struct RadarConfig {
  int n_ant = 32;  // elements per virtual array
  int k_p = 64;    // samples per FMCW sweep
  double f0 = 77e9;
  std::vector<double> wavelengths;   // per-sample; fill with derive_wavelengths
  double element_spacing = 0.0;      // meters; 0 resolves to half center wavelength

  double range_res = 0.1;            // m/bin
  double az_res = 1.6, el_res = 1.6; // deg/bin
  int w_bins = 64, h_bins = 64, d_bins = 64;

  int n_pulses = 16;
  double pulse_interval = 5e-4;  // slow-time spacing, s
  double noise_rel = 0.01;       // complex-noise sigma as a fraction of the peak echo

  double x_min = -2.0, x_max = 2.0;   // Cartesian lateral extent (hor)
  double y_min = -1.4, y_max = 1.4;   // Cartesian height extent (ver)

  /// Sweep bandwidth c/(2*range_res) so FFT range bins land on range_res.
  void derive_wavelengths();
  void validate() const;

  double center_wavelength() const;
  double spacing() const;
  double z_max() const { return d_bins * range_res; }
  double angle_of_bin(View v, int idx) const;   // degrees
  double range_of_bin(int idx) const { return (idx + 0.5) * range_res; }
  int n_angle_bins(View v) const { return v == View::hor ? w_bins : h_bins; }

  geom::SceneBounds bounds() const;
};

struct Scatterer {
  Eigen::Vector3d pos;       // radar coordinates, meters
  double reflectivity = 1.0; // nonnegative amplitude scale
  double radial_velocity = 0.0;
};

struct SubjectBox {
  Eigen::Vector3d center;
  Eigen::Vector3d size;
};

struct Scene {
  std::vector<Scatterer> scatterers;
  std::vector<SubjectBox> boxes;
  std::vector<int> subject_of;  // scatterer index -> subject index
};

/// Throws when a scatterer escapes its subject box or the grid coverage.
void validate_scene(const Scene& scene, const RadarConfig& cfg);

/// Heatmap over (angle, range) with explicit bin-center values, so maps from
/// the steering grid and from FFT bins resample the same way.
struct PolarMap {
  int n_angle = 0, n_range = 0;
  std::vector<double> data;        // [n_angle][n_range]
  std::vector<double> angles_deg;  // ascending
  std::vector<double> ranges_m;    // ascending
  double at(int a, int r) const { return data[static_cast<size_t>(a) * n_range + r]; }
  std::pair<int, int> argmax() const;
};

/// Matched-filter beamforming of the scene echo on the steering grid,
/// magnitude output. Noise is drawn per (sample, element) when noise_rng is
/// given and cfg.noise_rel > 0.
PolarMap beamform_direct(const Scene& scene, const RadarConfig& cfg, View view,
                         Rng* noise_rng = nullptr);

/// Raw MIMO-FMCW data cube [n_ant][k_p][n_pulses] for one view.
struct Cube {
  int n_ant = 0, k_p = 0, n_pulses = 0;
  std::vector<std::complex<double>> data;
};
Cube synth_cube(const Scene& scene, const RadarConfig& cfg, View view, Rng* noise_rng = nullptr);

/// 3D FFT magnitude spectrum of a cube, [angle][range][doppler], angle axis
/// fftshifted to ascending sine.
std::vector<double> cube_spectrum(const Cube& cube, const RadarConfig& cfg);

/// 3D FFT, magnitude, then integration over the Doppler axis; output polar
/// (angle, range) with FFT-derived bin values.
PolarMap fft_pipeline(const Cube& cube, const RadarConfig& cfg, View view);

/// Nearest-neighbor resampling of a polar map onto the Cartesian grid of the
/// given view (W x D laterally-by-depth for hor, H x D for ver). Cells
/// outside the polar field of view are 0.
std::vector<double> polar_to_cartesian(const PolarMap& polar, const RadarConfig& cfg, View view);

}  // namespace mvr::sim
