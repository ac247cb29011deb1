#pragma once

#include <Eigen/Dense>
#include <array>

#include "mvr/tensor.hpp"

namespace mvr::geom {

/// 3D box in normalized radar coordinates; every field lives in [0,1]
/// (post-sigmoid contract for predictions, bounds-relative for ground truth).
struct Box3D {
  double cx = 0, cy = 0, cz = 0, w = 0, h = 0, d = 0;
};

/// 2D box (cx, cy, w, h) normalized to its plane.
struct Box2D {
  double cx = 0, cy = 0, w = 0, h = 0;
};

/// Metric extents of the radar scene; maps normalized boxes to meters.
/// Axes: x lateral (azimuth), y height (elevation), z depth.
struct SceneBounds {
  Eigen::Vector3d min{-2.0, -1.4, 0.0};
  Eigen::Vector3d max{2.0, 1.4, 6.4};
};

/// Radar-to-camera extrinsics as an axis-angle vector and translation.
struct RigidTransform {
  Eigen::Vector3d omega{0, 0, 0};
  Eigen::Vector3d t{0, 0, 0};
  bool learnable = false;
};

struct CameraIntrinsics {
  double fx = 140.0, fy = 140.0;
  double cx0 = 128.0, cy0 = 128.0;
  int image_w = 256, image_h = 256;
};

// Synthetic ground-truth extrinsics: camera 0.3 m above the radar origin,
// pitched down 10 degrees. Fixed so transform-recovery runs have a target.
RigidTransform ground_truth_transform();

Eigen::Matrix3d so3_hat(const Eigen::Vector3d& omega);
/// Rodrigues exponential map; Taylor branch below phi=1e-6 keeps the map and
/// its gradient finite at zero rotation.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);
/// Angle in degrees between two rotations.
double so3_geodesic_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

using Corners = std::array<Eigen::Vector3d, 8>;

/// Normalized box -> 8 metric corners. Corner order is fixed: lexicographic
/// over the (+-d, +-h, +-w) sign triple, minus before plus.
Corners denormalize(const Box3D& box, const SceneBounds& bounds);
Box3D normalize_box(const Eigen::Vector3d& center, const Eigen::Vector3d& size,
                    const SceneBounds& bounds);

Corners radar_to_camera(const Corners& corners, const RigidTransform& T);

struct PinholeResult {
  Box2D box;
  bool valid = false;  // false when any corner depth <= eps_z
};
constexpr double kEpsZ = 1e-3;
/// Axis-aligned hull of the 8 projected corners, normalized by image size.
PinholeResult project_pinhole(const Corners& cam, const CameraIntrinsics& K);

/// Drop elevation: (cx, cz, w, d).
Box2D proj_hor(const Box3D& box);
/// Drop azimuth: (cy, cz, h, d).
Box2D proj_ver(const Box3D& box);

// ---------------------------------------------------------------------------
// Differentiable mirrors of the chain above, expressed in recorded tensor ops
// so gradients reach omega, t and the box head. Layouts: omega/t are [3],
// boxes [6] or [4], corner sets [8,3]. The plain versions are the oracle for
// these in tests.

nn::Tensor so3_exp_t(const nn::Tensor& omega);
nn::Tensor denormalize_t(const nn::Tensor& box6, const SceneBounds& bounds);
nn::Tensor transform_points_t(const nn::Tensor& pts, const nn::Tensor& R, const nn::Tensor& t);

struct PinholeResultT {
  nn::Tensor box;  // [4], defined only when valid
  bool valid = false;
};
PinholeResultT project_pinhole_t(const nn::Tensor& cam_pts, const CameraIntrinsics& K);

nn::Tensor proj_hor_t(const nn::Tensor& box6);
nn::Tensor proj_ver_t(const nn::Tensor& box6);

}  // namespace mvr::geom
