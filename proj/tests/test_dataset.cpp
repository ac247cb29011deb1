#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mvr/dataset.hpp"

using namespace mvr;
using namespace mvr::sim;
namespace fs = std::filesystem;

namespace {

DatasetConfig tiny_config() {
  DatasetConfig cfg;
  cfg.radar.n_ant = 8;
  cfg.radar.k_p = 16;
  cfg.radar.n_pulses = 4;
  cfg.radar.w_bins = 32;
  cfg.radar.h_bins = 32;
  cfg.radar.d_bins = 32;
  cfg.radar.range_res = 0.2;  // depth to 6.4 m
  cfg.radar.az_res = 3.2;
  cfg.radar.el_res = 3.2;
  cfg.radar.derive_wavelengths();
  cfg.transform = geom::ground_truth_transform();
  cfg.n_subjects = 2;
  cfg.t_window = 2;
  cfg.n_samples = 4;
  cfg.seed = 99;
  return cfg;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("mvrh files round-trip") {
  const fs::path dir = fs::temp_directory_path() / "mvr_mvrh_test";
  fs::create_directories(dir);
  std::vector<float> payload = {0.5f, 1.25f, -3.0f, 0.0f, 7.5f, 2.0f};
  write_mvrh((dir / "x.mvrh").string(), 1, 2, 3, payload);
  MvrhData m = read_mvrh((dir / "x.mvrh").string());
  CHECK(m.d0 == 1);
  CHECK(m.d1 == 2);
  CHECK(m.d2 == 3);
  CHECK(m.payload == payload);

  std::ofstream bad(dir / "bad.mvrh", std::ios::binary);
  bad << "NOPE";
  bad.close();
  CHECK_THROWS(read_mvrh((dir / "bad.mvrh").string()));
  fs::remove_all(dir);
}

TEST_CASE("generation is deterministic and files are byte-identical") {
  const DatasetConfig cfg = tiny_config();
  Dataset a = generate_dataset(cfg);
  Dataset b = generate_dataset(cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  REQUIRE(!a.samples.empty());
  CHECK(a.samples[0].hor == b.samples[0].hor);
  CHECK(a.meta.norm_scale == b.meta.norm_scale);

  const fs::path da = fs::temp_directory_path() / "mvr_ds_a";
  const fs::path db = fs::temp_directory_path() / "mvr_ds_b";
  fs::remove_all(da);
  fs::remove_all(db);
  write_dataset(a, da.string());
  write_dataset(b, db.string());
  CHECK(read_file(da / "annotations.jsonl") == read_file(db / "annotations.jsonl"));
  const auto first_hor = a.samples[0].frame_id;
  char name[64];
  std::snprintf(name, sizeof(name), "heatmaps/frame_%06d_hor.mvrh", first_hor);
  CHECK(read_file(da / name) == read_file(db / name));
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST_CASE("dataset round-trips through its files") {
  const DatasetConfig cfg = tiny_config();
  Dataset ds = generate_dataset(cfg);
  const fs::path dir = fs::temp_directory_path() / "mvr_ds_rt";
  fs::remove_all(dir);
  write_dataset(ds, dir.string());
  Dataset back = load_dataset(dir.string());

  REQUIRE(back.samples.size() == ds.samples.size());
  CHECK(back.meta.norm_scale == ds.meta.norm_scale);
  CHECK(back.meta.t_window == ds.meta.t_window);
  CHECK(back.meta.bounds.max.z() == ds.meta.bounds.max.z());
  CHECK(back.samples[1].hor == ds.samples[1].hor);
  CHECK(back.samples[1].boxes3d.size() == ds.samples[1].boxes3d.size());
  CHECK(back.samples[1].boxes_image[0].cx == doctest::Approx(ds.samples[1].boxes_image[0].cx));
  fs::remove_all(dir);
}

TEST_CASE("every sample carries one ground-truth box per subject") {
  DatasetConfig cfg = tiny_config();
  Dataset ds = generate_dataset(cfg);
  CHECK(ds.samples.size() == static_cast<size_t>(cfg.n_samples));
  for (const auto& s : ds.samples) {
    CHECK(s.boxes3d.size() == 2);
    CHECK(s.boxes_image.size() == 2);
    for (const auto& b : s.boxes3d) {
      CHECK(b.cx >= 0.0);
      CHECK(b.cx <= 1.0);
      CHECK(b.cz >= 0.0);
      CHECK(b.cz <= 1.0);
    }
    for (float v : s.hor) CHECK(v >= 0.0f);
  }
}

TEST_CASE("depth walk shrinks the image box while its vertical center stays put") {
  DatasetConfig cfg = tiny_config();
  cfg.n_subjects = 1;
  cfg.n_samples = 10;
  cfg.t_window = 1;
  cfg.frame_dt = 0.25;
  SubjectScript walk;
  walk.start = {0.0, -0.1, 2.5};
  walk.velocity = {0.0, 0.0, 1.0};  // straight down the depth axis
  cfg.subjects = {walk};
  Dataset ds = generate_dataset(cfg);
  REQUIRE(ds.samples.size() == 10);

  // Pinhole oracle: height scales as 1/z, vertical center converges slowly.
  double prev_h = 1e9;
  double min_cy = 1e9, max_cy = -1e9;
  for (const auto& s : ds.samples) {
    REQUIRE(s.boxes_image.size() == 1);
    const auto& b = s.boxes_image[0];
    CHECK(b.h < prev_h);
    prev_h = b.h;
    min_cy = std::min(min_cy, b.cy);
    max_cy = std::max(max_cy, b.cy);
  }
  CHECK(ds.samples.front().boxes_image[0].h > 1.5 * ds.samples.back().boxes_image[0].h);
  CHECK(max_cy - min_cy < 0.15);
}

TEST_CASE("subjects that leave coverage drop frames with a warning") {
  DatasetConfig cfg = tiny_config();
  cfg.n_subjects = 1;
  cfg.n_samples = 6;
  cfg.t_window = 1;
  cfg.roam.min = {-0.5, -0.1, 4.0};
  cfg.roam.max = {0.5, -0.1, 8.0};  // walks past the 6.4 m range limit
  SubjectScript s;
  s.start = {0.0, -0.1, 5.2};
  s.velocity = {0.0, 0.0, 2.0};
  cfg.subjects = {s};
  cfg.frame_dt = 0.2;
  Dataset ds = generate_dataset(cfg);
  CHECK(ds.samples.size() < 6);
}
