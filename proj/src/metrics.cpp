#include "mvr/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "mvr/loss.hpp"

namespace mvr::metrics {

namespace {

using json = nlohmann::json;

std::vector<size_t> confidence_order(const std::vector<Detection>& dets) {
  std::vector<size_t> order(dets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (dets[a].confidence != dets[b].confidence) return dets[a].confidence > dets[b].confidence;
    if (dets[a].frame_id != dets[b].frame_id) return dets[a].frame_id < dets[b].frame_id;
    return a < b;
  });
  return order;
}

std::map<int, std::vector<size_t>> by_frame(const std::vector<GtBox>& gts) {
  std::map<int, std::vector<size_t>> m;
  for (size_t i = 0; i < gts.size(); ++i) m[gts[i].frame_id].push_back(i);
  return m;
}

struct MatchResult {
  std::vector<char> det_is_tp;     // per detection in confidence order
  std::vector<double> matched_iou; // IoU of each TP, aligned with det order
};

MatchResult greedy_match(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                         const std::vector<size_t>& order, double iou_thresh) {
  MatchResult res;
  res.det_is_tp.assign(order.size(), 0);
  res.matched_iou.assign(order.size(), 0.0);
  auto frames = by_frame(gts);
  std::vector<char> gt_used(gts.size(), 0);
  for (size_t k = 0; k < order.size(); ++k) {
    const Detection& det = dets[order[k]];
    auto it = frames.find(det.frame_id);
    if (it == frames.end()) continue;
    double best = -1.0;
    size_t best_gt = 0;
    for (size_t gi : it->second) {
      if (gt_used[gi]) continue;
      const double iou = loss::iou_2d(det.box, gts[gi].box);
      if (iou > best) {
        best = iou;
        best_gt = gi;
      }
    }
    if (best >= iou_thresh && best >= 0.0) {
      gt_used[best_gt] = 1;
      res.det_is_tp[k] = 1;
      res.matched_iou[k] = best;
    }
  }
  return res;
}

}  // namespace

double average_precision(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                         double iou_thresh, PrCurve* curve) {
  if (curve) {
    curve->iou_thresh = iou_thresh;
    curve->recall.clear();
    curve->precision.clear();
  }
  if (gts.empty()) return dets.empty() ? 1.0 : 0.0;
  if (dets.empty()) return 0.0;

  const auto order = confidence_order(dets);
  const MatchResult match = greedy_match(dets, gts, order, iou_thresh);

  std::vector<double> recall, precision;
  int tp = 0, fp = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    match.det_is_tp[k] ? ++tp : ++fp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  if (curve) {
    curve->recall = recall;
    curve->precision = precision;
  }

  // p_interp(r) = max precision at any recall >= r; recall is nondecreasing,
  // so a suffix max suffices.
  std::vector<double> interp(precision.size());
  double running = 0.0;
  for (size_t k = precision.size(); k-- > 0;) {
    running = std::max(running, precision[k]);
    interp[k] = running;
  }
  double ap = 0.0;
  double prev_r = 0.0;
  for (size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev_r) * interp[k];
    prev_r = recall[k];
  }
  return ap;
}

ApSummary ap_summary(const std::vector<Detection>& dets, const std::vector<GtBox>& gts) {
  ApSummary s;
  double acc = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double thresh = static_cast<double>(50 + 5 * k) / 100.0;
    const double ap = average_precision(dets, gts, thresh);
    acc += ap;
    if (k == 0) s.ap50 = ap;
    if (k == 5) s.ap75 = ap;
  }
  s.ap = acc / 10.0;
  return s;
}

double average_recall(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                      int max_dets) {
  if (gts.empty()) return 0.0;
  // Keep the top max_dets detections per frame.
  std::map<int, std::vector<Detection>> frames;
  for (const Detection& d : dets) frames[d.frame_id].push_back(d);
  for (auto& [fid, v] : frames) {
    std::sort(v.begin(), v.end(),
              [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    if (static_cast<int>(v.size()) > max_dets) v.resize(static_cast<size_t>(max_dets));
  }
  double acc = 0.0;
  for (const GtBox& gt : gts) {
    double best = 0.0;
    auto it = frames.find(gt.frame_id);
    if (it != frames.end()) {
      for (const Detection& d : it->second) best = std::max(best, loss::iou_2d(d.box, gt.box));
    }
    acc += std::max(best - 0.5, 0.0);
  }
  return 2.0 * acc / static_cast<double>(gts.size());
}

EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GtBox>& gts,
                    const EvalConfig& cfg) {
  EvalReport rep;
  double acc = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double thresh = static_cast<double>(50 + 5 * k) / 100.0;
    PrCurve curve;
    const double ap = average_precision(dets, gts, thresh, &curve);
    acc += ap;
    rep.curves.push_back(std::move(curve));
    if (k == 0) rep.ap50 = ap;
    if (k == 5) rep.ap75 = ap;
  }
  rep.ap = acc / 10.0;

  std::vector<Detection> confident;
  for (const Detection& d : dets) {
    if (d.confidence >= cfg.conf_threshold) confident.push_back(d);
  }
  rep.ar1 = average_recall(confident, gts, 1);
  rep.ar10 = average_recall(confident, gts, 10);

  // Mean IoU over matched pairs at threshold 0.5.
  const auto order = confidence_order(dets);
  const MatchResult match = greedy_match(dets, gts, order, 0.5);
  double iou_acc = 0.0;
  int n_matched = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (match.det_is_tp[k]) {
      iou_acc += match.matched_iou[k];
      ++n_matched;
    }
  }
  rep.mean_iou = n_matched > 0 ? iou_acc / n_matched : 0.0;
  return rep;
}

std::vector<Detection> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detections file " + path);
  std::vector<Detection> dets;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    Detection d;
    d.frame_id = j.at("frame_id").get<int>();
    const auto& b = j.at("box");
    d.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
             b.at(3).get<double>()};
    d.confidence = j.at("confidence").get<double>();
    dets.push_back(d);
  }
  return dets;
}

void write_detections_jsonl(const std::string& path, const std::vector<Detection>& dets) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write detections file " + path);
  for (const Detection& d : dets) {
    json j;
    j["frame_id"] = d.frame_id;
    j["box"] = {d.box.cx, d.box.cy, d.box.w, d.box.h};
    j["confidence"] = d.confidence;
    out << j.dump() << "\n";
  }
}

namespace {

json report_to_json(const EvalReport& r) {
  json j;
  j["ap"] = r.ap;
  j["ap50"] = r.ap50;
  j["ap75"] = r.ap75;
  j["ar1"] = r.ar1;
  j["ar10"] = r.ar10;
  j["mean_iou"] = r.mean_iou;
  j["curves"] = json::array();
  for (const PrCurve& c : r.curves) {
    j["curves"].push_back({{"iou_thresh", c.iou_thresh},
                           {"recall", c.recall},
                           {"precision", c.precision}});
  }
  return j;
}

}  // namespace

EvalReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report file " + path);
  const json j = json::parse(in);
  EvalReport r;
  r.ap = j.at("ap").get<double>();
  r.ap50 = j.at("ap50").get<double>();
  r.ap75 = j.at("ap75").get<double>();
  r.ar1 = j.at("ar1").get<double>();
  r.ar10 = j.at("ar10").get<double>();
  r.mean_iou = j.at("mean_iou").get<double>();
  for (const auto& c : j.at("curves")) {
    PrCurve curve;
    curve.iou_thresh = c.at("iou_thresh").get<double>();
    curve.recall = c.at("recall").get<std::vector<double>>();
    curve.precision = c.at("precision").get<std::vector<double>>();
    r.curves.push_back(std::move(curve));
  }
  return r;
}

void write_report_json(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file " + path);
  out << report_to_json(report).dump(2) << "\n";
}

}  // namespace mvr::metrics
