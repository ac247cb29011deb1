#pragma once

#include <vector>

#include "mvr/geometry.hpp"
#include "mvr/tensor.hpp"

namespace mvr::loss {

struct LossWeights {
  double giou_hor = 0.5, l1_hor = 0.5;
  double giou_ver = 0.5, l1_ver = 0.5;
  double giou_image = 1.0, l1_image = 1.0;
  double class_weight = 1.0;      // weight of the class cost in matching
  double no_object_weight = 0.1;  // down-weight of no-object rows in the loss
  // Plane ablation mask; bi-plane (hor+image) drops the vertical term.
  bool use_hor = true, use_ver = true, use_image = true;
};

/// Fixed penalty standing in for the image-plane term of a prediction whose
/// geometry is invalid (a corner behind the camera); keeps costs finite.
constexpr double kInvalidImagePenalty = 2.0;

double iou_2d(const geom::Box2D& a, const geom::Box2D& b);
double giou(const geom::Box2D& a, const geom::Box2D& b);
double giou_loss(const geom::Box2D& a, const geom::Box2D& b);  // 1 - GIoU, in [0,2]
double l1_loss(const geom::Box2D& a, const geom::Box2D& b);
double bbox_loss(const geom::Box2D& a, const geom::Box2D& b, double w_giou, double w_l1);

// Differentiable twins on [4] tensors laid out (cx, cy, w, h).
nn::Tensor giou_loss_t(const nn::Tensor& a, const nn::Tensor& b);
nn::Tensor l1_loss_t(const nn::Tensor& a, const nn::Tensor& b);
nn::Tensor bbox_loss_t(const nn::Tensor& a, const nn::Tensor& b, double w_giou, double w_l1);

/// What the set loss needs from one decoded query.
struct PredView {
  nn::Tensor class_probs;  // [2]: (person, no-object)
  nn::Tensor b_hor, b_ver; // [4]
  nn::Tensor b_image;      // [4]; undefined when !valid
  bool valid = true;
};

struct GtBoxes {
  geom::Box2D hor, ver, image;
};

nn::Tensor triplane_loss_t(const PredView& pred, const GtBoxes& gt, const LossWeights& w);
/// Detached value of the tri-plane loss, used for cost matrices.
double triplane_cost(const PredView& pred, const GtBoxes& gt, const LossWeights& w);

double class_cost(double p_person);
/// Cross-entropy toward `target` (0 = person, 1 = no-object), no-object rows
/// scaled by no_object_weight.
nn::Tensor class_loss_t(const nn::Tensor& class_probs, int target, const LossWeights& w);

/// Injective min-cost assignment of ground truths to predictions.
struct Assignment {
  std::vector<int> pred_for_gt;  // size G, values in [0,N)
  double total_cost = 0.0;
};
/// cost is N x G (rows = predictions, columns = ground truths), G <= N.
Assignment hungarian(const std::vector<std::vector<double>>& cost);

/// Matching cost = class_weight * (-p_person) + tri-plane loss; Hungarian
/// assignment; final loss = matched tri-plane losses + classification loss
/// over every query (unmatched queries target no-object).
nn::Tensor set_prediction_loss(const std::vector<PredView>& preds,
                               const std::vector<GtBoxes>& gts, const LossWeights& w,
                               Assignment* out_assignment = nullptr);

}  // namespace mvr::loss
