#include <cmath>

#include "doctest.h"
#include "mvr/dsp.hpp"
#include "mvr/radar.hpp"
#include "mvr/rng.hpp"

using namespace mvr;
using namespace mvr::sim;

namespace {

RadarConfig desk_config() {
  RadarConfig cfg;
  cfg.derive_wavelengths();
  return cfg;
}

Scene point_scene(const Eigen::Vector3d& pos, double reflectivity = 1.0, double vel = 0.0) {
  Scene s;
  s.scatterers.push_back({pos, reflectivity, vel});
  s.boxes.push_back({pos, {0.2, 0.2, 0.2}});
  s.subject_of.push_back(0);
  return s;
}

// Geometric bin oracle: where a scatterer should land on the steering grid.
std::pair<int, int> oracle_bins(const Eigen::Vector3d& p, const RadarConfig& cfg, View v) {
  const double r = p.norm();
  const double lateral = v == View::hor ? p.x() : p.y();
  const double ang = std::asin(lateral / r) * 180.0 / M_PI;
  const int n = cfg.n_angle_bins(v);
  const int ai = static_cast<int>(std::lround(ang / (v == View::hor ? cfg.az_res : cfg.el_res) +
                                              (n - 1) / 2.0));
  const int ri = static_cast<int>(std::lround(r / cfg.range_res - 0.5));
  return {ai, ri};
}

}  // namespace

TEST_CASE("fft agrees with a naive DFT") {
  Rng rng(3);
  for (int n : {8, 16, 12, 7}) {
    std::vector<dsp::cplx> x(static_cast<size_t>(n));
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<dsp::cplx> ref(static_cast<size_t>(n), {0, 0});
    for (int k = 0; k < n; ++k) {
      for (int m = 0; m < n; ++m) {
        const double ang = -2.0 * M_PI * k * m / n;
        ref[static_cast<size_t>(k)] += x[static_cast<size_t>(m)] * dsp::cplx(std::cos(ang), std::sin(ang));
      }
    }
    dsp::fft(x);
    for (int k = 0; k < n; ++k) {
      CHECK(std::abs(x[static_cast<size_t>(k)] - ref[static_cast<size_t>(k)]) <= 1e-9);
    }
  }
}

TEST_CASE("empty scene with zero noise gives all-zero heatmaps") {
  RadarConfig cfg = desk_config();
  Scene empty;
  PolarMap hor = beamform_direct(empty, cfg, View::hor, nullptr);
  PolarMap ver = beamform_direct(empty, cfg, View::ver, nullptr);
  for (double v : hor.data) CHECK(v == 0.0);
  for (double v : ver.data) CHECK(v == 0.0);
}

TEST_CASE("single scatterer peaks at the geometric bin") {
  RadarConfig cfg = desk_config();
  Scene s = point_scene({0.0, 0.0, 3.0});
  PolarMap hor = beamform_direct(s, cfg, View::hor, nullptr);
  auto [ai, ri] = hor.argmax();
  auto [oa, orr] = oracle_bins({0, 0, 3.0}, cfg, View::hor);
  CHECK(std::abs(ai - oa) <= 1);
  CHECK(std::abs(ri - orr) <= 1);
  // Boresight is the center bin, 3 m the 30th range bin at 0.1 m/bin.
  CHECK(std::abs(ai - 31.5) <= 1.0);
  CHECK(std::abs(ri - 29.5) <= 1.0);
}

TEST_CASE("two scatterers well separated in range produce two local maxima") {
  RadarConfig cfg = desk_config();
  Scene s;
  s.scatterers.push_back({{0.5, 0.0, 2.5}, 1.0, 0.0});
  s.scatterers.push_back({{-0.8, 0.0, 4.5}, 1.0, 0.0});
  s.boxes.push_back({{0.5, 0.0, 2.5}, {0.2, 0.2, 0.2}});
  s.boxes.push_back({{-0.8, 0.0, 4.5}, {0.2, 0.2, 0.2}});
  s.subject_of = {0, 1};
  PolarMap hor = beamform_direct(s, cfg, View::hor, nullptr);

  for (size_t i = 0; i < s.scatterers.size(); ++i) {
    auto [oa, orr] = oracle_bins(s.scatterers[i].pos, cfg, View::hor);
    // Local argmax within a 3x3 window around the oracle bin must sit at
    // most one bin from it.
    double best = -1.0;
    int ba = -9, br = -9;
    for (int a = oa - 3; a <= oa + 3; ++a) {
      for (int r = orr - 3; r <= orr + 3; ++r) {
        if (a < 0 || a >= hor.n_angle || r < 0 || r >= hor.n_range) continue;
        if (hor.at(a, r) > best) {
          best = hor.at(a, r);
          ba = a;
          br = r;
        }
      }
    }
    CHECK(std::abs(ba - oa) <= 1);
    CHECK(std::abs(br - orr) <= 1);
  }
}

TEST_CASE("zero cube maps to a zero polar heatmap") {
  RadarConfig cfg = desk_config();
  Cube cube;
  cube.n_ant = cfg.n_ant;
  cube.k_p = cfg.k_p;
  cube.n_pulses = cfg.n_pulses;
  cube.data.assign(static_cast<size_t>(cfg.n_ant) * cfg.k_p * cfg.n_pulses, {0, 0});
  PolarMap out = fft_pipeline(cube, cfg, View::hor);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("static scatterer concentrates at DC Doppler and the right range bin") {
  RadarConfig cfg = desk_config();
  Scene s = point_scene({0.0, 0.0, 3.2});
  Cube cube = synth_cube(s, cfg, View::hor, nullptr);
  const auto spec = cube_spectrum(cube, cfg);

  // argmax over the full 3D spectrum.
  size_t best = 0;
  for (size_t i = 1; i < spec.size(); ++i) {
    if (spec[i] > spec[best]) best = i;
  }
  const int P = cfg.n_pulses, K = cfg.k_p;
  const int doppler = static_cast<int>(best % static_cast<size_t>(P));
  const int range_bin_fwd = static_cast<int>((best / static_cast<size_t>(P)) % static_cast<size_t>(K));
  CHECK(doppler == 0);
  // Forward FFT of exp(-j.) data: beat appears at K - r/range_res.
  const int expect = K - static_cast<int>(std::lround(3.2 / cfg.range_res));
  CHECK(std::abs(range_bin_fwd - expect) <= 1);

  // After the pipeline's mix-down the polar map peaks at ascending range.
  PolarMap polar = fft_pipeline(cube, cfg, View::hor);
  auto [ai, ri] = polar.argmax();
  CHECK(std::abs(polar.ranges_m[static_cast<size_t>(ri)] - 3.2) <= cfg.range_res);
  CHECK(std::abs(polar.angles_deg[static_cast<size_t>(ai)]) <= 2.0 * cfg.az_res);
}

TEST_CASE("fft pipeline and direct beamforming agree within one bin on 50 scenes") {
  RadarConfig cfg = desk_config();
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    // Stay inside both the angular FOV and the range window.
    const double r = rng.uniform(1.5, 5.5);
    const double az = rng.uniform(-35.0, 35.0) * M_PI / 180.0;
    const Eigen::Vector3d pos(r * std::sin(az), 0.0, r * std::cos(az));
    Scene s = point_scene(pos);

    PolarMap direct = beamform_direct(s, cfg, View::hor, nullptr);
    auto [da, dr] = direct.argmax();

    Cube cube = synth_cube(s, cfg, View::hor, nullptr);
    PolarMap fftp = fft_pipeline(cube, cfg, View::hor);
    auto [fa, fr] = fftp.argmax();

    // Map the FFT peak's physical coordinates onto the steering grid.
    const double ang = fftp.angles_deg[static_cast<size_t>(fa)];
    const double range = fftp.ranges_m[static_cast<size_t>(fr)];
    const int ma = static_cast<int>(std::lround(ang / cfg.az_res + (cfg.w_bins - 1) / 2.0));
    const int mr = static_cast<int>(std::lround(range / cfg.range_res - 0.5));
    CAPTURE(trial);
    CHECK(std::abs(ma - da) <= 1);
    CHECK(std::abs(mr - dr) <= 1);
  }
}

TEST_CASE("shared depth axis: hor and ver range argmax agree") {
  RadarConfig cfg = desk_config();
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d pos(rng.uniform(-1.5, 1.5), rng.uniform(-1.0, 1.0),
                              rng.uniform(1.5, 5.5));
    Scene s = point_scene(pos);
    auto [ha, hr] = beamform_direct(s, cfg, View::hor, nullptr).argmax();
    auto [va, vr] = beamform_direct(s, cfg, View::ver, nullptr).argmax();
    (void)ha;
    (void)va;
    CHECK(std::abs(hr - vr) <= 1);
  }
}

TEST_CASE("superposition magnitudes obey the triangle inequality") {
  RadarConfig cfg = desk_config();
  Scene a = point_scene({0.5, 0.2, 2.5});
  Scene b = point_scene({-0.7, -0.3, 4.0});
  Scene both;
  both.scatterers = {a.scatterers[0], b.scatterers[0]};
  both.boxes = {a.boxes[0], b.boxes[0]};
  both.subject_of = {0, 1};

  PolarMap ha = beamform_direct(a, cfg, View::hor, nullptr);
  PolarMap hb = beamform_direct(b, cfg, View::hor, nullptr);
  PolarMap hab = beamform_direct(both, cfg, View::hor, nullptr);
  for (size_t i = 0; i < hab.data.size(); ++i) {
    CHECK(hab.data[i] <= ha.data[i] + hb.data[i] + 1e-9);
  }
}

TEST_CASE("polar_to_cartesian maps boresight onto the central column") {
  RadarConfig cfg = desk_config();
  Scene s = point_scene({0.0, 0.0, 3.0});
  PolarMap hor = beamform_direct(s, cfg, View::hor, nullptr);
  const auto cart = polar_to_cartesian(hor, cfg, View::hor);

  size_t best = 0;
  for (size_t i = 1; i < cart.size(); ++i) {
    if (cart[i] > cart[best]) best = i;
  }
  const int col = static_cast<int>(best / static_cast<size_t>(cfg.d_bins));
  const double x = cfg.x_min + (col + 0.5) * (cfg.x_max - cfg.x_min) / cfg.w_bins;
  CHECK(std::abs(x) <= 0.1);  // one lateral bin of boresight

  // All-zero input stays zero.
  PolarMap zero = hor;
  std::fill(zero.data.begin(), zero.data.end(), 0.0);
  for (double v : polar_to_cartesian(zero, cfg, View::hor)) CHECK(v == 0.0);
}

TEST_CASE("nearest-neighbor resampling preserves a mid-range delta's energy") {
  RadarConfig cfg = desk_config();
  PolarMap delta;
  delta.n_angle = cfg.w_bins;
  delta.n_range = cfg.d_bins;
  delta.data.assign(static_cast<size_t>(cfg.w_bins) * cfg.d_bins, 0.0);
  delta.angles_deg.resize(static_cast<size_t>(cfg.w_bins));
  delta.ranges_m.resize(static_cast<size_t>(cfg.d_bins));
  for (int a = 0; a < cfg.w_bins; ++a) delta.angles_deg[static_cast<size_t>(a)] = cfg.angle_of_bin(View::hor, a);
  for (int r = 0; r < cfg.d_bins; ++r) delta.ranges_m[static_cast<size_t>(r)] = cfg.range_of_bin(r);

  // Boresight bin near r = 2.25 m, where the angular arc matches the lateral
  // cell size and cells cover polar bins 1:1; the resampling oracle counts
  // the receiving cells.
  const int a0 = cfg.w_bins / 2, r0 = 22;
  delta.data[static_cast<size_t>(a0) * cfg.d_bins + r0] = 7.0;

  const auto cart = polar_to_cartesian(delta, cfg, View::hor);
  double in = 0.0, out = 0.0;
  for (double v : delta.data) in += v;
  for (double v : cart) out += v;

  int receiving_cells = 0;
  for (double v : cart) receiving_cells += v > 0.0 ? 1 : 0;
  CHECK(receiving_cells >= 1);
  CHECK(out == doctest::Approx(7.0 * receiving_cells));
  CHECK(out >= 0.9 * in);
  CHECK(out <= 1.1 * in);
}

TEST_CASE("scene validation rejects out-of-coverage scatterers") {
  RadarConfig cfg = desk_config();
  CHECK_THROWS_AS(beamform_direct(point_scene({0, 0, 9.5}), cfg, View::hor, nullptr),
                  std::invalid_argument);
  CHECK_THROWS_AS(beamform_direct(point_scene({5.0, 0, 1.0}), cfg, View::hor, nullptr),
                  std::invalid_argument);
  Scene bad = point_scene({0, 0, 3.0});
  bad.boxes[0].center.z() = 4.0;  // scatterer no longer inside its box
  CHECK_THROWS_AS(beamform_direct(bad, cfg, View::hor, nullptr), std::invalid_argument);
}
