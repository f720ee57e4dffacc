#include "mfgnet/metrics.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace mfg {

namespace {

void CheckLengths(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("prediction has " + std::to_string(pred.size()) +
                                " boxes, ground truth " + std::to_string(gt.size()));
  }
  if (gt.empty()) throw std::invalid_argument("evaluation needs at least one frame");
}

}  // namespace

std::vector<double> CenterErrors(const std::vector<BoundingBox>& pred,
                                 const std::vector<BoundingBox>& gt) {
  CheckLengths(pred, gt);
  std::vector<double> e(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) e[i] = CenterDistance(pred[i], gt[i]);
  return e;
}

std::vector<double> Overlaps(const std::vector<BoundingBox>& pred,
                             const std::vector<BoundingBox>& gt) {
  CheckLengths(pred, gt);
  std::vector<double> o(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) o[i] = Iou(pred[i], gt[i]);
  return o;
}

double PrecisionRate(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                     double threshold_px) {
  std::vector<double> e = CenterErrors(pred, gt);
  std::size_t hit = 0;
  for (double v : e) hit += v <= threshold_px;
  return static_cast<double>(hit) / e.size();
}

std::vector<double> SuccessThresholds() {
  std::vector<double> t(21);
  for (int i = 0; i <= 20; ++i) t[i] = i / 20.0;
  return t;
}

std::vector<double> SuccessCurve(const std::vector<BoundingBox>& pred,
                                 const std::vector<BoundingBox>& gt) {
  std::vector<double> o = Overlaps(pred, gt);
  std::vector<double> curve;
  for (double thr : SuccessThresholds()) {
    std::size_t hit = 0;
    for (double v : o) hit += v > thr;
    curve.push_back(static_cast<double>(hit) / o.size());
  }
  return curve;
}

EvalResult Evaluate(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                    double pr_threshold) {
  EvalResult r;
  r.frames = static_cast<int>(gt.size());
  for (int t = 0; t <= 50; ++t) {
    r.pr_thresholds.push_back(t);
    r.pr_curve.push_back(PrecisionRate(pred, gt, t));
  }
  r.sr_thresholds = SuccessThresholds();
  r.sr_curve = SuccessCurve(pred, gt);
  r.pr_at = PrecisionRate(pred, gt, pr_threshold);
  r.sr_auc = std::accumulate(r.sr_curve.begin(), r.sr_curve.end(), 0.0) / r.sr_curve.size();
  r.sr_at_06 = r.sr_curve[12];
  return r;
}

}  // namespace mfg
