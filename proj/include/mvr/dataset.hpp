#pragma once

#include <string>
#include <vector>

#include "mvr/radar.hpp"

namespace mvr::sim {

/// Deterministic walker: the torso center starts at `start`, moves with
/// `velocity`, and reflects off the roam-box walls.
struct SubjectScript {
  Eigen::Vector3d start;
  Eigen::Vector3d velocity;
  Eigen::Vector3d box_size{0.6, 1.8, 0.5};
};

struct RoamBox {
  Eigen::Vector3d min{-1.2, -0.1, 2.3};
  Eigen::Vector3d max{1.2, -0.1, 5.2};
};

struct DatasetConfig {
  RadarConfig radar;
  geom::RigidTransform transform;  // ground-truth extrinsics for image boxes
  geom::CameraIntrinsics intrinsics;
  int n_subjects = 2;
  int t_window = 4;   // frames stacked per sample
  int n_samples = 64;
  double frame_dt = 0.1;
  uint64_t seed = 1;
  bool log_scale = true;
  bool p99_normalize = true;
  int scatterers_per_subject = 12;
  RoamBox roam;
  /// When non-empty, overrides the seeded random subjects.
  std::vector<SubjectScript> subjects;
};

struct FrameSample {
  int frame_id = 0;
  int scene_id = 0;
  std::vector<float> hor;  // [T][W][D]
  std::vector<float> ver;  // [T][H][D]
  std::vector<geom::Box3D> boxes3d;
  std::vector<geom::Box2D> boxes_image;
};

struct DatasetMeta {
  int t_window = 4, w = 0, h = 0, d = 0;
  geom::SceneBounds bounds;
  geom::CameraIntrinsics intrinsics;
  geom::RigidTransform transform;
  bool log_scale = true;
  double norm_scale = 1.0;
  uint64_t seed = 0;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<FrameSample> samples;
};

/// Simulate, log-scale, normalize, and window the frames. Frames whose
/// subjects leave coverage are dropped with a warning on stderr; windows
/// only span consecutive surviving frames.
Dataset generate_dataset(const DatasetConfig& cfg);

void write_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Heatmap container: magic "MVRH", version u16, three little-endian u32 dims,
// then row-major little-endian f32 payload.
void write_mvrh(const std::string& path, int d0, int d1, int d2,
                const std::vector<float>& payload);
struct MvrhData {
  int d0 = 0, d1 = 0, d2 = 0;
  std::vector<float> payload;
};
MvrhData read_mvrh(const std::string& path);

}  // namespace mvr::sim
