#include "mvr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvr/ops.hpp"

namespace mvr::loss {

namespace {

struct Extents {
  double x1, y1, x2, y2;
};

Extents extents(const geom::Box2D& b) {
  if (b.w < 0 || b.h < 0) throw std::invalid_argument("box has negative size");
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

}  // namespace

double iou_2d(const geom::Box2D& a, const geom::Box2D& b) {
  const Extents ea = extents(a), eb = extents(b);
  const double iw = std::max(0.0, std::min(ea.x2, eb.x2) - std::max(ea.x1, eb.x1));
  const double ih = std::max(0.0, std::min(ea.y2, eb.y2) - std::max(ea.y1, eb.y1));
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double giou(const geom::Box2D& a, const geom::Box2D& b) {
  const Extents ea = extents(a), eb = extents(b);
  const double iw = std::max(0.0, std::min(ea.x2, eb.x2) - std::max(ea.x1, eb.x1));
  const double ih = std::max(0.0, std::min(ea.y2, eb.y2) - std::max(ea.y1, eb.y1));
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  const double cw = std::max(ea.x2, eb.x2) - std::min(ea.x1, eb.x1);
  const double ch = std::max(ea.y2, eb.y2) - std::min(ea.y1, eb.y1);
  const double cbox = cw * ch;
  const double iou = uni > 0.0 ? inter / uni : 0.0;
  return cbox > 0.0 ? iou - (cbox - uni) / cbox : iou;
}

double giou_loss(const geom::Box2D& a, const geom::Box2D& b) { return 1.0 - giou(a, b); }

double l1_loss(const geom::Box2D& a, const geom::Box2D& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

double bbox_loss(const geom::Box2D& a, const geom::Box2D& b, double w_giou, double w_l1) {
  return w_giou * giou_loss(a, b) + w_l1 * l1_loss(a, b);
}

// --------------------------- differentiable twins ---------------------------

namespace {

using nn::Tensor;

struct ExtentsT {
  Tensor x1, y1, x2, y2, area;
};

ExtentsT extents_t(const Tensor& box) {
  using namespace nn;
  Tensor cx = slice(box, 0, 0, 1), cy = slice(box, 0, 1, 1);
  Tensor w = slice(box, 0, 2, 1), h = slice(box, 0, 3, 1);
  Tensor hw = scale(w, 0.5), hh = scale(h, 0.5);
  return {sub(cx, hw), sub(cy, hh), add(cx, hw), add(cy, hh), mul(w, h)};
}

}  // namespace

Tensor giou_loss_t(const Tensor& a, const Tensor& b) {
  using namespace nn;
  const ExtentsT ea = extents_t(a), eb = extents_t(b);
  Tensor zero = Tensor::scalar(0.0);
  Tensor iw = maximum(zero, sub(minimum(ea.x2, eb.x2), maximum(ea.x1, eb.x1)));
  Tensor ih = maximum(zero, sub(minimum(ea.y2, eb.y2), maximum(ea.y1, eb.y1)));
  Tensor inter = mul(iw, ih);
  Tensor uni = sub(add(ea.area, eb.area), inter);
  Tensor cw = sub(maximum(ea.x2, eb.x2), minimum(ea.x1, eb.x1));
  Tensor ch = sub(maximum(ea.y2, eb.y2), minimum(ea.y1, eb.y1));
  Tensor cbox = mul(cw, ch);

  Tensor iou = uni.value() > 0.0 ? div(inter, uni) : zero;
  Tensor g = cbox.value() > 0.0 ? sub(iou, div(sub(cbox, uni), cbox)) : iou;
  return reshape(add_scalar(neg(g), 1.0), {1});
}

Tensor l1_loss_t(const Tensor& a, const Tensor& b) {
  return nn::sum(nn::abs(nn::sub(a, b)));
}

Tensor bbox_loss_t(const Tensor& a, const Tensor& b, double w_giou, double w_l1) {
  using namespace nn;
  return add(scale(giou_loss_t(a, b), w_giou), scale(l1_loss_t(a, b), w_l1));
}

namespace {

Tensor box_const(const geom::Box2D& b) {
  return Tensor::from({4}, {b.cx, b.cy, b.w, b.h});
}

}  // namespace

Tensor triplane_loss_t(const PredView& pred, const GtBoxes& gt, const LossWeights& w) {
  using namespace nn;
  Tensor total = Tensor::scalar(0.0);
  if (w.use_hor) {
    total = add(total, bbox_loss_t(pred.b_hor, box_const(gt.hor), w.giou_hor, w.l1_hor));
  }
  if (w.use_ver) {
    total = add(total, bbox_loss_t(pred.b_ver, box_const(gt.ver), w.giou_ver, w.l1_ver));
  }
  if (w.use_image) {
    if (pred.valid) {
      total = add(total, bbox_loss_t(pred.b_image, box_const(gt.image), w.giou_image, w.l1_image));
    } else {
      total = add_scalar(total, kInvalidImagePenalty);
    }
  }
  return total;
}

double triplane_cost(const PredView& pred, const GtBoxes& gt, const LossWeights& w) {
  nn::NoGradGuard no_grad;
  return triplane_loss_t(pred, gt, w).value();
}

double class_cost(double p_person) { return -p_person; }

Tensor class_loss_t(const Tensor& class_probs, int target, const LossWeights& w) {
  using namespace nn;
  if (target != 0 && target != 1) throw std::invalid_argument("class_loss_t: target must be 0 or 1");
  Tensor p = clamp(slice(reshape(class_probs, {2}), 0, target, 1), 1e-12, 1.0);
  Tensor ce = neg(log(p));
  return target == 1 ? scale(ce, w.no_object_weight) : ce;
}

Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  const int n_pred = static_cast<int>(cost.size());
  const int n_gt = n_pred > 0 ? static_cast<int>(cost[0].size()) : 0;
  if (n_gt > n_pred) {
    throw std::invalid_argument("hungarian: more ground truths (" + std::to_string(n_gt) +
                                ") than predictions (" + std::to_string(n_pred) + ")");
  }
  Assignment out;
  if (n_gt == 0) return out;
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != n_gt) throw std::invalid_argument("hungarian: ragged cost matrix");
    for (double c : row) {
      if (!std::isfinite(c)) throw std::invalid_argument("hungarian: non-finite cost");
    }
  }

  // Jonker-Volgenant style shortest augmenting paths with potentials,
  // 1-indexed; rows are ground truths, columns are predictions.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n_gt + 1, 0.0), v(n_pred + 1, 0.0);
  std::vector<int> p(n_pred + 1, 0), way(n_pred + 1, 0);
  for (int i = 1; i <= n_gt; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n_pred + 1, inf);
    std::vector<char> used(n_pred + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n_pred; ++j) {
        if (used[j]) continue;
        const double cur = cost[j - 1][i0 - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n_pred; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.pred_for_gt.assign(n_gt, -1);
  for (int j = 1; j <= n_pred; ++j) {
    if (p[j] != 0) out.pred_for_gt[p[j] - 1] = j - 1;
  }
  for (int g = 0; g < n_gt; ++g) {
    out.total_cost += cost[out.pred_for_gt[g]][g];
  }
  return out;
}

Tensor set_prediction_loss(const std::vector<PredView>& preds, const std::vector<GtBoxes>& gts,
                           const LossWeights& w, Assignment* out_assignment) {
  using namespace nn;
  const int n = static_cast<int>(preds.size());
  const int g = static_cast<int>(gts.size());

  Assignment assign;
  if (g > 0) {
    std::vector<std::vector<double>> cost(n, std::vector<double>(g, 0.0));
    for (int i = 0; i < n; ++i) {
      const double p_person = preds[i].class_probs.at(0);
      for (int j = 0; j < g; ++j) {
        cost[i][j] = w.class_weight * class_cost(p_person) + triplane_cost(preds[i], gts[j], w);
      }
    }
    assign = hungarian(cost);
  }
  if (out_assignment) *out_assignment = assign;

  std::vector<int> target(n, 1);  // no-object unless matched
  Tensor total = Tensor::scalar(0.0);
  for (int j = 0; j < g; ++j) {
    const int i = assign.pred_for_gt[j];
    target[i] = 0;
    total = add(total, triplane_loss_t(preds[i], gts[j], w));
  }
  for (int i = 0; i < n; ++i) {
    total = add(total, class_loss_t(preds[i].class_probs, target[i], w));
  }
  return total;
}

}  // namespace mvr::loss
