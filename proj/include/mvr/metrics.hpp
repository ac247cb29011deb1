#pragma once

#include <string>
#include <vector>

#include "mvr/geometry.hpp"

namespace mvr::metrics {

struct Detection {
  int frame_id = 0;
  geom::Box2D box;          // image plane, normalized
  double confidence = 0.0;  // p(person)
};

struct GtBox {
  int frame_id = 0;
  geom::Box2D box;
};

struct PrCurve {
  double iou_thresh = 0.0;
  std::vector<double> recall;
  std::vector<double> precision;
};

struct EvalReport {
  double ap = 0.0, ap50 = 0.0, ap75 = 0.0;
  double ar1 = 0.0, ar10 = 0.0;
  double mean_iou = 0.0;
  std::vector<PrCurve> curves;
};

struct EvalConfig {
  /// Confidence filter applied before recall metrics.
  double conf_threshold = 0.5;
};

/// Interpolated AP at one IoU threshold. Detections are matched greedily in
/// descending confidence, each ground truth consumed at most once; a match
/// requires IoU >= iou_thresh (inclusive). With neither detections nor
/// ground truths the result is vacuously 1.
double average_precision(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                         double iou_thresh, PrCurve* curve = nullptr);

struct ApSummary {
  double ap = 0.0, ap50 = 0.0, ap75 = 0.0;
};
/// AP = mean over thresholds 0.50:0.05:0.95.
ApSummary ap_summary(const std::vector<Detection>& dets, const std::vector<GtBox>& gts);

/// Hinge recall: (2/n) * sum max(IoU(gt_i) - 0.5, 0) with IoU(gt_i) the best
/// overlap among the top `max_dets` detections (by confidence) of its frame.
double average_recall(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                      int max_dets);

EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                    const EvalConfig& cfg = {});

// File formats: detections as JSON lines, report as a single JSON document.
std::vector<Detection> read_detections_jsonl(const std::string& path);
void write_detections_jsonl(const std::string& path, const std::vector<Detection>& dets);
EvalReport read_report_json(const std::string& path);
void write_report_json(const std::string& path, const EvalReport& report);

}  // namespace mvr::metrics
