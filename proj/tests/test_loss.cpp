#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mvr/gradcheck.hpp"
#include "mvr/loss.hpp"
#include "mvr/ops.hpp"
#include "mvr/rng.hpp"

using namespace mvr;
using namespace mvr::loss;
using geom::Box2D;

namespace {

nn::Tensor boxt(const Box2D& b) {
  return nn::Tensor::from({4}, {b.cx, b.cy, b.w, b.h});
}

Box2D random_box(Rng& rng) {
  return {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.4),
          rng.uniform(0.05, 0.4)};
}

// Exhaustive-permutation minimum, the oracle for hungarian.
double brute_force_min(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += cost[perm[j]][j];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

PredView make_pred(const GtBoxes& boxes, double p_person) {
  PredView pv;
  pv.class_probs = nn::Tensor::from({2}, {p_person, 1.0 - p_person});
  pv.b_hor = boxt(boxes.hor);
  pv.b_ver = boxt(boxes.ver);
  pv.b_image = boxt(boxes.image);
  pv.valid = true;
  return pv;
}

}  // namespace

TEST_CASE("iou_2d hand cases") {
  Box2D a{0.5, 0.5, 1.0, 1.0};
  CHECK(iou_2d(a, a) == 1.0);
  CHECK(iou_2d(a, Box2D{3.0, 3.0, 1.0, 1.0}) == 0.0);
  // (0,0)-(1,1) vs (0.5,0.5)-(1.5,1.5): quarter overlap, union 1.75.
  CHECK(iou_2d(a, Box2D{1.0, 1.0, 1.0, 1.0}) == 0.25 / 1.75);
  CHECK(iou_2d(a, Box2D{1.0, 1.0, 1.0, 1.0}) == doctest::Approx(1.0 / 7.0));
  CHECK_THROWS_AS(iou_2d(a, Box2D{0, 0, -1, 1}), std::invalid_argument);
  // Zero-area union convention.
  CHECK(iou_2d(Box2D{0.5, 0.5, 0, 0}, Box2D{0.5, 0.5, 0, 0}) == 0.0);
}

TEST_CASE("giou_loss hand cases and monotone growth with separation") {
  Box2D a{0.0, 0.0, 1.0, 1.0};
  CHECK(giou_loss(a, a) == 0.0);
  // Corner-touching unit boxes: IoU 0, union 2, enclosing 4 -> loss 1.5.
  CHECK(giou_loss(a, Box2D{1.0, 1.0, 1.0, 1.0}) == 1.5);

  double prev = 0.0;
  for (int k = 1; k <= 40; ++k) {
    const double sep = 0.5 * k;
    const double l = giou_loss(a, Box2D{sep, 0.0, 1.0, 1.0});
    if (k > 2) CHECK(l > prev);
    prev = l;
    CHECK(l <= 2.0);
  }
  CHECK(prev > 1.9);
}

TEST_CASE("bbox_loss composition") {
  Box2D a{0.5, 0.5, 0.4, 0.4};
  CHECK(bbox_loss(a, a, 1.0, 1.0) == 0.0);

  Box2D b{0.6, 0.5, 0.4, 0.4};
  CHECK(bbox_loss(a, b, 0.7, 0.0) == doctest::Approx(0.7 * giou_loss(a, b)));
  CHECK(l1_loss(a, b) == doctest::Approx(0.1));
  CHECK(bbox_loss(a, b, 1.0, 1.0) == doctest::Approx(0.1 + giou_loss(a, b)));
}

TEST_CASE("tensor giou/l1 agree with the plain versions") {
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    Box2D a = random_box(rng), b = random_box(rng);
    CHECK(giou_loss_t(boxt(a), boxt(b)).value() == doctest::Approx(giou_loss(a, b)).epsilon(1e-12));
    CHECK(l1_loss_t(boxt(a), boxt(b)).value() == doctest::Approx(l1_loss(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("giou gradient matches finite differences at generic pairs") {
  Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    Box2D b = random_box(rng);
    nn::Tensor target = boxt(b);
    nn::Tensor start = boxt(random_box(rng));
    const double err = nn::grad_check(
        [&](const nn::Tensor& t) { return giou_loss_t(t, target); }, start, 1e-6);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("class cost and loss") {
  CHECK(class_cost(1.0) == -1.0);
  CHECK(class_cost(0.5) == -0.5);

  LossWeights w;
  double prev = 1e18;
  for (double p = 0.1; p <= 0.95; p += 0.05) {
    nn::Tensor probs = nn::Tensor::from({2}, {p, 1.0 - p});
    const double l = class_loss_t(probs, 0, w).value();
    CHECK(l < prev);
    prev = l;
  }
  nn::Tensor probs = nn::Tensor::from({2}, {0.3, 0.7});
  CHECK(class_loss_t(probs, 1, w).value() ==
        doctest::Approx(-w.no_object_weight * std::log(0.7)));
}

TEST_CASE("hungarian hand cases") {
  Assignment a = hungarian({{1, 2}, {2, 1}});
  CHECK(a.pred_for_gt == std::vector<int>{0, 1});
  CHECK(a.total_cost == 2.0);

  Assignment single = hungarian({{5}, {2}, {9}});
  CHECK(single.pred_for_gt == std::vector<int>{1});
  CHECK(single.total_cost == 2.0);

  CHECK_THROWS_AS(hungarian({{1.0, 2.0}}), std::invalid_argument);  // G > N
}

TEST_CASE("hungarian equals the exhaustive minimum on 100 random 6x6 fixtures") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> cost(6, std::vector<double>(6));
    for (auto& row : cost) {
      for (auto& c : row) c = rng.uniform(0.0, 10.0);
    }
    Assignment a = hungarian(cost);
    CHECK(a.total_cost == brute_force_min(cost));
  }
}

TEST_CASE("hungarian beats 1000 sampled permutations on rectangular fixtures") {
  Rng rng(61);
  std::vector<std::vector<double>> cost(8, std::vector<double>(5));
  for (auto& row : cost) {
    for (auto& c : row) c = rng.uniform(0.0, 10.0);
  }
  Assignment a = hungarian(cost);
  std::vector<int> preds(8);
  std::iota(preds.begin(), preds.end(), 0);
  for (int s = 0; s < 1000; ++s) {
    for (int i = 7; i > 0; --i) std::swap(preds[i], preds[rng.next_int(i + 1)]);
    double total = 0.0;
    for (int j = 0; j < 5; ++j) total += cost[preds[j]][j];
    CHECK(a.total_cost <= total + 1e-12);
  }
}

TEST_CASE("triplane loss structure") {
  LossWeights w;
  GtBoxes gt;
  gt.hor = {0.4, 0.5, 0.2, 0.1};
  gt.ver = {0.5, 0.5, 0.3, 0.1};
  gt.image = {0.45, 0.5, 0.25, 0.35};

  PredView perfect = make_pred(gt, 0.99);
  CHECK(triplane_loss_t(perfect, gt, w).value() == 0.0);

  // Elevation-only error: horizontal plane unaffected.
  PredView elev = make_pred(gt, 0.99);
  elev.b_ver = boxt({0.58, 0.5, 0.3, 0.1});
  elev.b_image = boxt({0.45, 0.56, 0.25, 0.35});
  const double tri = triplane_loss_t(elev, gt, w).value();
  LossWeights only_hor = w;
  only_hor.use_ver = only_hor.use_image = false;
  CHECK(triplane_loss_t(elev, gt, only_hor).value() == 0.0);
  CHECK(tri > 0.0);

  // Bi-plane drops the vertical term exactly.
  LossWeights bi = w;
  bi.use_ver = false;
  const double ver_term = bbox_loss(geom::Box2D{0.58, 0.5, 0.3, 0.1}, gt.ver, w.giou_ver, w.l1_ver);
  CHECK(triplane_loss_t(elev, gt, bi).value() == doctest::Approx(tri - ver_term).epsilon(1e-12));
  CHECK(tri > triplane_loss_t(elev, gt, bi).value());

  // Invalid geometry swaps the image term for the fixed penalty.
  PredView invalid = make_pred(gt, 0.99);
  invalid.valid = false;
  CHECK(triplane_loss_t(invalid, gt, w).value() == kInvalidImagePenalty);
}

TEST_CASE("set prediction loss basics") {
  LossWeights w;
  GtBoxes g1;
  g1.hor = {0.3, 0.4, 0.2, 0.1};
  g1.ver = {0.5, 0.4, 0.25, 0.1};
  g1.image = {0.35, 0.45, 0.2, 0.3};
  GtBoxes g2;
  g2.hor = {0.7, 0.6, 0.15, 0.12};
  g2.ver = {0.45, 0.6, 0.2, 0.12};
  g2.image = {0.65, 0.5, 0.18, 0.28};

  // Zero ground truths: pure (down-weighted) no-object loss.
  std::vector<PredView> preds = {make_pred(g1, 0.2), make_pred(g2, 0.7)};
  const double expect = -w.no_object_weight * (std::log(0.8) + std::log(0.3));
  CHECK(set_prediction_loss(preds, {}, w).value() == doctest::Approx(expect).epsilon(1e-12));

  // Perfect predictions with confident classes: bounded by no-object terms.
  std::vector<PredView> good = {make_pred(g1, 0.999), make_pred(g2, 0.999),
                                make_pred(g2, 0.001)};
  Assignment assign;
  const double l = set_prediction_loss(good, {g1, g2}, w, &assign).value();
  CHECK(l <= 0.01);
  CHECK(assign.pred_for_gt == std::vector<int>{0, 1});

  // Swapping ground-truth order leaves the loss unchanged.
  const double swapped = set_prediction_loss(good, {g2, g1}, w).value();
  CHECK(std::abs(l - swapped) <= 1e-12);
}

TEST_CASE("set loss invariant under consistent prediction permutation") {
  LossWeights w;
  Rng rng(91);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GtBoxes> gts;
    for (int j = 0; j < 3; ++j) {
      GtBoxes g;
      g.hor = random_box(rng);
      g.ver = random_box(rng);
      g.image = random_box(rng);
      gts.push_back(g);
    }
    std::vector<PredView> preds;
    for (int i = 0; i < 6; ++i) {
      GtBoxes p;
      p.hor = random_box(rng);
      p.ver = random_box(rng);
      p.image = random_box(rng);
      preds.push_back(make_pred(p, rng.uniform(0.05, 0.95)));
    }
    const double base = set_prediction_loss(preds, gts, w).value();
    std::vector<PredView> rotated(preds.begin() + 2, preds.end());
    rotated.insert(rotated.end(), preds.begin(), preds.begin() + 2);
    const double rot = set_prediction_loss(rotated, gts, w).value();
    CHECK(std::abs(base - rot) <= 1e-9);
  }
}

TEST_CASE("tri-plane is strictly more sensitive to elevation error than bi-plane") {
  LossWeights tri;
  LossWeights bi;
  bi.use_ver = false;
  GtBoxes gt;
  gt.hor = {0.5, 0.5, 0.2, 0.2};
  gt.ver = {0.5, 0.5, 0.3, 0.2};
  gt.image = {0.5, 0.5, 0.2, 0.3};

  PredView p = make_pred(gt, 0.9);
  p.b_ver = boxt({0.5, 0.5, 0.36, 0.2});  // elevation-height error only
  CHECK(triplane_loss_t(p, gt, tri).value() > triplane_loss_t(p, gt, bi).value());
}

TEST_CASE("full tri-plane loss gradient through the geometry chain") {
  // One query, one target, through denormalize -> SO(3) -> pinhole.
  geom::SceneBounds bounds;
  geom::CameraIntrinsics K;
  nn::Tensor omega = nn::Tensor::from({3}, {-0.15, 0.08, -0.05});
  nn::Tensor trans = nn::Tensor::from({3}, {0.03, -0.28, 0.05});

  geom::Box3D gt3{0.5, 0.52, 0.55, 0.1, 0.3, 0.07};
  GtBoxes gt;
  gt.hor = geom::proj_hor(gt3);
  gt.ver = geom::proj_ver(gt3);
  {
    geom::RigidTransform T;
    T.omega = {-0.15, 0.08, -0.05};
    T.t = {0.03, -0.28, 0.05};
    gt.image = geom::project_pinhole(geom::radar_to_camera(geom::denormalize(gt3, bounds), T), K).box;
  }

  LossWeights w;
  auto loss_of = [&](const nn::Tensor& box6, const nn::Tensor& om, const nn::Tensor& tr) {
    PredView pv;
    pv.class_probs = nn::Tensor::from({2}, {0.9, 0.1});
    pv.b_hor = geom::proj_hor_t(box6);
    pv.b_ver = geom::proj_ver_t(box6);
    geom::PinholeResultT pr = geom::project_pinhole_t(
        geom::transform_points_t(geom::denormalize_t(box6, bounds), geom::so3_exp_t(om), tr), K);
    REQUIRE(pr.valid);
    pv.b_image = pr.box;
    return triplane_loss_t(pv, gt, w);
  };

  // Irregular values: round ones can make box extents tie exactly, where
  // the interval max is legitimately non-differentiable.
  nn::Tensor box6 = nn::Tensor::from({6}, {0.471, 0.503, 0.582, 0.123, 0.264, 0.091});
  CHECK(nn::grad_check([&](const nn::Tensor& b) { return loss_of(b, omega, trans); }, box6, 1e-6) <= 1e-4);
  CHECK(nn::grad_check([&](const nn::Tensor& o) { return loss_of(box6, o, trans); }, omega, 1e-6) <= 1e-4);
  CHECK(nn::grad_check([&](const nn::Tensor& t) { return loss_of(box6, omega, t); }, trans, 1e-6) <= 1e-4);
}
