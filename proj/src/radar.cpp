#include "mvr/radar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvr/dsp.hpp"

namespace mvr::sim {

namespace {

constexpr double kDeg = M_PI / 180.0;

double bandwidth(const RadarConfig& cfg) { return kSpeedOfLight / (2.0 * cfg.range_res); }

Eigen::Vector3d element_pos(const RadarConfig& cfg, View view, int m) {
  const double coord = (m - (cfg.n_ant - 1) / 2.0) * cfg.spacing();
  return view == View::hor ? Eigen::Vector3d(coord, 0, 0) : Eigen::Vector3d(0, coord, 0);
}

// Round trip: element -> point -> array phase center at the origin.
double round_trip(const Eigen::Vector3d& p, const Eigen::Vector3d& elem) {
  return (p - elem).norm() + p.norm();
}

double peak_amplitude(const Scene& scene) {
  double peak = 0.0;
  for (const auto& s : scene.scatterers) {
    peak = std::max(peak, s.reflectivity / s.pos.squaredNorm());
  }
  return peak;
}

}  // namespace

void RadarConfig::derive_wavelengths() {
  wavelengths.resize(static_cast<size_t>(k_p));
  const double bw = bandwidth(*this);
  for (int k = 0; k < k_p; ++k) {
    wavelengths[static_cast<size_t>(k)] = kSpeedOfLight / (f0 + bw * k / k_p);
  }
}

void RadarConfig::validate() const {
  if (n_ant < 2) throw std::invalid_argument("RadarConfig: n_ant must be >= 2");
  if (range_res <= 0 || az_res <= 0 || el_res <= 0) {
    throw std::invalid_argument("RadarConfig: resolutions must be positive");
  }
  if (w_bins < 8 || h_bins < 8 || d_bins < 8) {
    throw std::invalid_argument("RadarConfig: W, H, D must be >= 8");
  }
  if (wavelengths.empty() || static_cast<int>(wavelengths.size()) != k_p) {
    throw std::invalid_argument("RadarConfig: wavelengths not derived (need k_p entries)");
  }
  for (double l : wavelengths) {
    if (l <= 0) throw std::invalid_argument("RadarConfig: wavelengths must be positive");
  }
  if (n_pulses < 1 || k_p < 1) throw std::invalid_argument("RadarConfig: counts must be >= 1");
}

double RadarConfig::center_wavelength() const {
  return kSpeedOfLight / (f0 + bandwidth(*this) * 0.5);
}

double RadarConfig::spacing() const {
  return element_spacing > 0.0 ? element_spacing : 0.5 * center_wavelength();
}

double RadarConfig::angle_of_bin(View v, int idx) const {
  const int n = n_angle_bins(v);
  const double res = v == View::hor ? az_res : el_res;
  return (idx - (n - 1) / 2.0) * res;
}

geom::SceneBounds RadarConfig::bounds() const {
  geom::SceneBounds b;
  b.min = {x_min, y_min, 0.0};
  b.max = {x_max, y_max, z_max()};
  return b;
}

void validate_scene(const Scene& scene, const RadarConfig& cfg) {
  if (scene.subject_of.size() != scene.scatterers.size()) {
    throw std::invalid_argument("scene: subject_of size mismatch");
  }
  const double max_az = (cfg.w_bins / 2.0) * cfg.az_res;
  const double max_el = (cfg.h_bins / 2.0) * cfg.el_res;
  for (size_t i = 0; i < scene.scatterers.size(); ++i) {
    const auto& s = scene.scatterers[i];
    if (s.reflectivity < 0) throw std::invalid_argument("scene: negative reflectivity");
    const double r = s.pos.norm();
    if (r >= cfg.z_max() || r <= cfg.range_res) {
      throw std::invalid_argument("scene: scatterer outside range coverage");
    }
    const double az = std::asin(std::clamp(s.pos.x() / r, -1.0, 1.0)) / kDeg;
    const double el = std::asin(std::clamp(s.pos.y() / r, -1.0, 1.0)) / kDeg;
    if (std::abs(az) > max_az || std::abs(el) > max_el) {
      throw std::invalid_argument("scene: scatterer outside angular field of view");
    }
    const int subj = scene.subject_of[i];
    if (subj < 0 || subj >= static_cast<int>(scene.boxes.size())) {
      throw std::invalid_argument("scene: bad subject index");
    }
    const auto& box = scene.boxes[static_cast<size_t>(subj)];
    const Eigen::Vector3d rel = (s.pos - box.center).cwiseAbs() - 0.5 * box.size;
    if (rel.maxCoeff() > 1e-9) {
      throw std::invalid_argument("scene: scatterer outside its subject box");
    }
  }
}

std::pair<int, int> PolarMap::argmax() const {
  int best = 0;
  for (size_t i = 1; i < data.size(); ++i) {
    if (data[i] > data[static_cast<size_t>(best)]) best = static_cast<int>(i);
  }
  return {best / n_range, best % n_range};
}

namespace {

// Echo samples s[k][m] for one pulse: sum over scatterers of
// amplitude * exp(-j 2 pi (d_m + path_shift) f_k / c), plus noise.
std::vector<std::complex<double>> echo_samples(const Scene& scene, const RadarConfig& cfg,
                                               View view, double slow_time, Rng* noise_rng) {
  using cplx = std::complex<double>;
  const int M = cfg.n_ant, K = cfg.k_p;
  std::vector<cplx> s(static_cast<size_t>(K) * M, cplx(0, 0));
  const double bw = bandwidth(cfg);
  const double df = bw / K;

  for (const auto& sc : scene.scatterers) {
    const double amp = sc.reflectivity / sc.pos.squaredNorm();
    const double shift = 2.0 * sc.radial_velocity * slow_time;
    for (int m = 0; m < M; ++m) {
      const double d = round_trip(sc.pos, element_pos(cfg, view, m)) + shift;
      // exp(-j 2 pi d f_k / c) via incremental rotation over k.
      const double a0 = -2.0 * M_PI * d * cfg.f0 / kSpeedOfLight;
      const double ad = -2.0 * M_PI * d * df / kSpeedOfLight;
      cplx w(std::cos(a0), std::sin(a0));
      const cplx step(std::cos(ad), std::sin(ad));
      for (int k = 0; k < K; ++k) {
        s[static_cast<size_t>(k) * M + m] += amp * w;
        w *= step;
      }
    }
  }
  if (noise_rng && cfg.noise_rel > 0.0 && !scene.scatterers.empty()) {
    const double sigma = cfg.noise_rel * peak_amplitude(scene) / std::sqrt(2.0);
    for (auto& v : s) v += cplx(noise_rng->normal(0.0, sigma), noise_rng->normal(0.0, sigma));
  }
  return s;
}

}  // namespace

PolarMap beamform_direct(const Scene& scene, const RadarConfig& cfg, View view, Rng* noise_rng) {
  using cplx = std::complex<double>;
  cfg.validate();
  validate_scene(scene, cfg);

  const int M = cfg.n_ant, K = cfg.k_p;
  const int A = cfg.n_angle_bins(view), R = cfg.d_bins;
  const auto s = echo_samples(scene, cfg, view, 0.0, noise_rng);

  PolarMap out;
  out.n_angle = A;
  out.n_range = R;
  out.data.assign(static_cast<size_t>(A) * R, 0.0);
  out.angles_deg.resize(static_cast<size_t>(A));
  out.ranges_m.resize(static_cast<size_t>(R));
  for (int a = 0; a < A; ++a) out.angles_deg[static_cast<size_t>(a)] = cfg.angle_of_bin(view, a);
  for (int r = 0; r < R; ++r) out.ranges_m[static_cast<size_t>(r)] = cfg.range_of_bin(r);

  const double bw = bandwidth(cfg);
  const double df = bw / K;
  for (int a = 0; a < A; ++a) {
    const double theta = out.angles_deg[static_cast<size_t>(a)] * kDeg;
    for (int r = 0; r < R; ++r) {
      const double range = out.ranges_m[static_cast<size_t>(r)];
      const Eigen::Vector3d g = view == View::hor
          ? Eigen::Vector3d(range * std::sin(theta), 0, range * std::cos(theta))
          : Eigen::Vector3d(0, range * std::sin(theta), range * std::cos(theta));
      cplx acc(0, 0);
      for (int m = 0; m < M; ++m) {
        const double d = round_trip(g, element_pos(cfg, view, m));
        const double a0 = 2.0 * M_PI * d * cfg.f0 / kSpeedOfLight;
        const double ad = 2.0 * M_PI * d * df / kSpeedOfLight;
        cplx w(std::cos(a0), std::sin(a0));
        const cplx step(std::cos(ad), std::sin(ad));
        for (int k = 0; k < K; ++k) {
          acc += s[static_cast<size_t>(k) * M + m] * w;
          w *= step;
        }
      }
      out.data[static_cast<size_t>(a) * R + r] = std::abs(acc);
    }
  }
  return out;
}

Cube synth_cube(const Scene& scene, const RadarConfig& cfg, View view, Rng* noise_rng) {
  cfg.validate();
  validate_scene(scene, cfg);
  Cube cube;
  cube.n_ant = cfg.n_ant;
  cube.k_p = cfg.k_p;
  cube.n_pulses = cfg.n_pulses;
  cube.data.assign(static_cast<size_t>(cfg.n_ant) * cfg.k_p * cfg.n_pulses, {0, 0});
  for (int t = 0; t < cfg.n_pulses; ++t) {
    const auto s = echo_samples(scene, cfg, view, t * cfg.pulse_interval, noise_rng);
    for (int m = 0; m < cfg.n_ant; ++m) {
      for (int k = 0; k < cfg.k_p; ++k) {
        cube.data[(static_cast<size_t>(m) * cfg.k_p + k) * cfg.n_pulses + t] =
            s[static_cast<size_t>(k) * cfg.n_ant + m];
      }
    }
  }
  return cube;
}

std::vector<double> cube_spectrum(const Cube& cube, const RadarConfig& cfg) {
  if (cube.n_ant != cfg.n_ant || cube.k_p != cfg.k_p || cube.n_pulses != cfg.n_pulses) {
    throw std::invalid_argument("cube dims do not match config");
  }
  std::vector<std::complex<double>> spec = cube.data;
  dsp::fft_axis(spec, cube.n_ant, cube.k_p, cube.n_pulses, 0);
  dsp::fft_axis(spec, cube.n_ant, cube.k_p, cube.n_pulses, 1);
  dsp::fft_axis(spec, cube.n_ant, cube.k_p, cube.n_pulses, 2);

  // fftshift along the angle axis: ascending spatial frequency.
  std::vector<double> mag(spec.size());
  const int M = cube.n_ant;
  const int half = (M + 1) / 2;  // index of the most negative frequency
  const size_t plane = static_cast<size_t>(cube.k_p) * cube.n_pulses;
  for (int a = 0; a < M; ++a) {
    const int src = (a + half) % M;
    for (size_t i = 0; i < plane; ++i) {
      mag[static_cast<size_t>(a) * plane + i] = std::abs(spec[static_cast<size_t>(src) * plane + i]);
    }
  }
  return mag;
}

PolarMap fft_pipeline(const Cube& cube, const RadarConfig& cfg, View view) {
  (void)view;
  // Mix-down convention: echoes carry exp(-j.) phases, so conjugate before
  // the FFT to land beat frequencies on ascending range bins.
  Cube mixed = cube;
  for (auto& v : mixed.data) v = std::conj(v);
  const std::vector<double> spec = cube_spectrum(mixed, cfg);
  const int M = cube.n_ant, K = cube.k_p, P = cube.n_pulses;

  PolarMap out;
  out.n_angle = M;
  out.n_range = K;
  out.data.assign(static_cast<size_t>(M) * K, 0.0);
  out.angles_deg.resize(static_cast<size_t>(M));
  out.ranges_m.resize(static_cast<size_t>(K));

  const int half = (M + 1) / 2;
  const double lam = cfg.center_wavelength();
  for (int i = 0; i < M; ++i) {
    // Conjugation flips the spatial frequency axis; reading the shifted
    // spectrum in reverse restores ascending sine of the arrival angle.
    const int a = M - 1 - i;
    const double f = static_cast<double>(a - (M - half)) / M;
    const double s = std::clamp(-f * lam / cfg.spacing(), -1.0, 1.0);
    out.angles_deg[static_cast<size_t>(i)] = std::asin(s) / kDeg;
  }
  for (int r = 0; r < K; ++r) out.ranges_m[static_cast<size_t>(r)] = r * cfg.range_res;

  // Doppler integration.
  for (int i = 0; i < M; ++i) {
    const int a = M - 1 - i;
    for (int r = 0; r < K; ++r) {
      double acc = 0.0;
      for (int p = 0; p < P; ++p) {
        acc += spec[(static_cast<size_t>(a) * K + r) * P + p];
      }
      out.data[static_cast<size_t>(i) * K + r] = acc;
    }
  }
  return out;
}

std::vector<double> polar_to_cartesian(const PolarMap& polar, const RadarConfig& cfg, View view) {
  for (double v : polar.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("polar_to_cartesian: non-finite input");
  }
  const int lat_bins = cfg.n_angle_bins(view);
  const int D = cfg.d_bins;
  const double lat_min = view == View::hor ? cfg.x_min : cfg.y_min;
  const double lat_max = view == View::hor ? cfg.x_max : cfg.y_max;
  const double dl = (lat_max - lat_min) / lat_bins;
  const double dz = cfg.z_max() / D;

  auto nearest = [](const std::vector<double>& vals, double x) -> int {
    if (vals.empty()) return -1;
    const auto it = std::lower_bound(vals.begin(), vals.end(), x);
    int idx;
    if (it == vals.begin()) idx = 0;
    else if (it == vals.end()) idx = static_cast<int>(vals.size()) - 1;
    else {
      const int hi = static_cast<int>(it - vals.begin());
      idx = (x - vals[static_cast<size_t>(hi - 1)] <= vals[static_cast<size_t>(hi)] - x) ? hi - 1 : hi;
    }
    // Reject when farther than the local half bin width.
    const int n = static_cast<int>(vals.size());
    const double lo_w = idx > 0 ? vals[static_cast<size_t>(idx)] - vals[static_cast<size_t>(idx - 1)]
                                : (n > 1 ? vals[1] - vals[0] : 0.0);
    const double hi_w = idx < n - 1 ? vals[static_cast<size_t>(idx + 1)] - vals[static_cast<size_t>(idx)]
                                    : lo_w;
    const double half = 0.5 * std::max(lo_w, hi_w) + 1e-12;
    if (std::abs(x - vals[static_cast<size_t>(idx)]) > half) return -1;
    return idx;
  };

  std::vector<double> out(static_cast<size_t>(lat_bins) * D, 0.0);
  for (int l = 0; l < lat_bins; ++l) {
    const double lat = lat_min + (l + 0.5) * dl;
    for (int d = 0; d < D; ++d) {
      const double z = (d + 0.5) * dz;
      const double r = std::hypot(lat, z);
      const double ang = std::atan2(lat, z) / kDeg;
      const int ai = nearest(polar.angles_deg, ang);
      const int ri = nearest(polar.ranges_m, r);
      if (ai < 0 || ri < 0) continue;
      out[static_cast<size_t>(l) * D + d] = polar.at(ai, ri);
    }
  }
  return out;
}

}  // namespace mvr::sim
