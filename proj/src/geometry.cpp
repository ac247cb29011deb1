#include "mvr/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "mvr/ops.hpp"

namespace mvr::geom {

namespace {
constexpr double kDeg = M_PI / 180.0;
constexpr double kSmallAngle = 1e-6;
}  // namespace

RigidTransform ground_truth_transform() {
  RigidTransform T;
  T.omega = Eigen::Vector3d(-10.0 * kDeg, 0.0, 0.0);
  const Eigen::Vector3d camera_center(0.0, 0.3, 0.0);
  T.t = -so3_exp(T.omega) * camera_center;
  return T;
}

Eigen::Matrix3d so3_hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0, -w.z(), w.y(),
       w.z(), 0, -w.x(),
      -w.y(), w.x(), 0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double phi2 = omega.squaredNorm();
  double a, b;  // sin(phi)/phi and (1-cos(phi))/phi^2
  if (phi2 < kSmallAngle * kSmallAngle) {
    a = 1.0 - phi2 / 6.0;
    b = 0.5 - phi2 / 24.0;
  } else {
    const double phi = std::sqrt(phi2);
    a = std::sin(phi) / phi;
    b = (1.0 - std::cos(phi)) / phi2;
  }
  const Eigen::Matrix3d hat = so3_hat(omega);
  return Eigen::Matrix3d::Identity() + a * hat + b * hat * hat;
}

double so3_geodesic_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) / kDeg;
}

Corners denormalize(const Box3D& box, const SceneBounds& bounds) {
  const Eigen::Vector3d span = bounds.max - bounds.min;
  const Eigen::Vector3d center =
      bounds.min + Eigen::Vector3d(box.cx, box.cy, box.cz).cwiseProduct(span);
  const Eigen::Vector3d size = Eigen::Vector3d(box.w, box.h, box.d).cwiseProduct(span);
  Corners out;
  for (int i = 0; i < 8; ++i) {
    const double sd = (i & 4) ? 0.5 : -0.5;
    const double sh = (i & 2) ? 0.5 : -0.5;
    const double sw = (i & 1) ? 0.5 : -0.5;
    out[i] = center + Eigen::Vector3d(sw * size.x(), sh * size.y(), sd * size.z());
  }
  return out;
}

Box3D normalize_box(const Eigen::Vector3d& center, const Eigen::Vector3d& size,
                    const SceneBounds& bounds) {
  const Eigen::Vector3d span = bounds.max - bounds.min;
  Box3D b;
  b.cx = (center.x() - bounds.min.x()) / span.x();
  b.cy = (center.y() - bounds.min.y()) / span.y();
  b.cz = (center.z() - bounds.min.z()) / span.z();
  b.w = size.x() / span.x();
  b.h = size.y() / span.y();
  b.d = size.z() / span.z();
  return b;
}

Corners radar_to_camera(const Corners& corners, const RigidTransform& T) {
  const Eigen::Matrix3d R = so3_exp(T.omega);
  Corners out;
  for (int i = 0; i < 8; ++i) out[i] = R * corners[i] + T.t;
  return out;
}

PinholeResult project_pinhole(const Corners& cam, const CameraIntrinsics& K) {
  PinholeResult res;
  double umin = 0, umax = 0, vmin = 0, vmax = 0;
  for (int i = 0; i < 8; ++i) {
    if (cam[i].z() <= kEpsZ) return res;  // behind (or at) the camera plane
    const double u = K.fx * cam[i].x() / cam[i].z() + K.cx0;
    const double v = K.fy * cam[i].y() / cam[i].z() + K.cy0;
    if (i == 0) {
      umin = umax = u;
      vmin = vmax = v;
    } else {
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  res.valid = true;
  res.box.cx = 0.5 * (umin + umax) / K.image_w;
  res.box.cy = 0.5 * (vmin + vmax) / K.image_h;
  res.box.w = (umax - umin) / K.image_w;
  res.box.h = (vmax - vmin) / K.image_h;
  return res;
}

Box2D proj_hor(const Box3D& box) { return {box.cx, box.cz, box.w, box.d}; }

Box2D proj_ver(const Box3D& box) { return {box.cy, box.cz, box.h, box.d}; }

// --------------------------- tensor-graph mirrors ---------------------------

namespace {

using nn::Tensor;

Tensor constant3x3(std::initializer_list<double> vals) {
  return Tensor::from({3, 3}, std::vector<double>(vals));
}

const Tensor& gen_x() {
  static const Tensor g = constant3x3({0, 0, 0, 0, 0, -1, 0, 1, 0});
  return g;
}
const Tensor& gen_y() {
  static const Tensor g = constant3x3({0, 0, 1, 0, 0, 0, -1, 0, 0});
  return g;
}
const Tensor& gen_z() {
  static const Tensor g = constant3x3({0, -1, 0, 1, 0, 0, 0, 0, 0});
  return g;
}
const Tensor& identity3() {
  static const Tensor g = constant3x3({1, 0, 0, 0, 1, 0, 0, 0, 1});
  return g;
}

}  // namespace

Tensor so3_exp_t(const Tensor& omega) {
  if (omega.numel() != 3) {
    throw std::invalid_argument("so3_exp_t: omega must have 3 elements");
  }
  using namespace nn;
  Tensor w = reshape(omega, {3});
  Tensor hat = add(add(mul(slice(w, 0, 0, 1), gen_x()), mul(slice(w, 0, 1, 1), gen_y())),
                   mul(slice(w, 0, 2, 1), gen_z()));
  Tensor phi2 = dot(w, w);
  Tensor a, b;
  if (phi2.value() < kSmallAngle * kSmallAngle) {
    a = add_scalar(scale(phi2, -1.0 / 6.0), 1.0);
    b = add_scalar(scale(phi2, -1.0 / 24.0), 0.5);
  } else {
    Tensor phi = sqrt(phi2);
    a = div(sin(phi), phi);
    b = div(add_scalar(neg(cos(phi)), 1.0), phi2);
  }
  return add(identity3(), add(mul(a, hat), mul(b, matmul(hat, hat))));
}

Tensor denormalize_t(const Tensor& box6, const SceneBounds& bounds) {
  using namespace nn;
  const Eigen::Vector3d span = bounds.max - bounds.min;
  Tensor span_t = Tensor::from({3}, {span.x(), span.y(), span.z()});
  Tensor min_t = Tensor::from({3}, {bounds.min.x(), bounds.min.y(), bounds.min.z()});
  Tensor b = reshape(box6, {6});
  Tensor center = add(mul(slice(b, 0, 0, 3), span_t), min_t);
  Tensor half = scale(mul(slice(b, 0, 3, 3), span_t), 0.5);

  std::vector<Tensor> rows;
  rows.reserve(8);
  for (int i = 0; i < 8; ++i) {
    const double sd = (i & 4) ? 1.0 : -1.0;
    const double sh = (i & 2) ? 1.0 : -1.0;
    const double sw = (i & 1) ? 1.0 : -1.0;
    Tensor signs = Tensor::from({3}, {sw, sh, sd});
    rows.push_back(reshape(add(center, mul(half, signs)), {1, 3}));
  }
  return concat(rows, 0);
}

Tensor transform_points_t(const Tensor& pts, const Tensor& R, const Tensor& t) {
  using namespace nn;
  return add(matmul(pts, transpose(R)), reshape(t, {3}));
}

PinholeResultT project_pinhole_t(const Tensor& cam_pts, const CameraIntrinsics& K) {
  using namespace nn;
  PinholeResultT res;
  const int n = cam_pts.dim(0);
  Tensor z = slice(cam_pts, 1, 2, 1);
  for (int i = 0; i < n; ++i) {
    if (z.at(i) <= kEpsZ) return res;
  }
  Tensor u = add_scalar(scale(div(slice(cam_pts, 1, 0, 1), z), K.fx), K.cx0);
  Tensor v = add_scalar(scale(div(slice(cam_pts, 1, 1, 1), z), K.fy), K.cy0);

  auto fold = [n](const Tensor& col, bool is_min) {
    Tensor acc = reshape(slice(col, 0, 0, 1), Shape{1});
    for (int i = 1; i < n; ++i) {
      Tensor e = reshape(slice(col, 0, i, 1), Shape{1});
      acc = is_min ? minimum(acc, e) : maximum(acc, e);
    }
    return acc;
  };
  Tensor umin = fold(u, true), umax = fold(u, false);
  Tensor vmin = fold(v, true), vmax = fold(v, false);

  Tensor cx = scale(add(umin, umax), 0.5 / K.image_w);
  Tensor cy = scale(add(vmin, vmax), 0.5 / K.image_h);
  Tensor w = scale(sub(umax, umin), 1.0 / K.image_w);
  Tensor h = scale(sub(vmax, vmin), 1.0 / K.image_h);
  res.box = concat({cx, cy, w, h}, 0);
  res.valid = true;
  return res;
}

namespace {
Tensor pick4(const Tensor& box6, int a, int b, int c, int d) {
  using namespace nn;
  Tensor v = reshape(box6, {6});
  return concat({slice(v, 0, a, 1), slice(v, 0, b, 1), slice(v, 0, c, 1), slice(v, 0, d, 1)}, 0);
}
}  // namespace

Tensor proj_hor_t(const Tensor& box6) { return pick4(box6, 0, 2, 3, 5); }

Tensor proj_ver_t(const Tensor& box6) { return pick4(box6, 1, 2, 4, 5); }

}  // namespace mvr::geom
