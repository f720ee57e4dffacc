#ifndef MFGNET_METRICS_HPP_
#define MFGNET_METRICS_HPP_

#include <vector>

#include "mfgnet/box.hpp"

namespace mfg {

// Per-frame centre distances and overlaps; lengths must match.
std::vector<double> CenterErrors(const std::vector<BoundingBox>& pred,
                                 const std::vector<BoundingBox>& gt);
std::vector<double> Overlaps(const std::vector<BoundingBox>& pred,
                             const std::vector<BoundingBox>& gt);

// Fraction of frames whose centre error is <= threshold_px.
double PrecisionRate(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                     double threshold_px);

// Overlap thresholds 0, 0.05, ..., 1 (21 points).
std::vector<double> SuccessThresholds();
// Fraction of frames with IoU > threshold for every success threshold.
std::vector<double> SuccessCurve(const std::vector<BoundingBox>& pred,
                                 const std::vector<BoundingBox>& gt);

struct EvalResult {
  int frames = 0;
  std::vector<double> pr_thresholds;  // 0..50 px
  std::vector<double> pr_curve;
  std::vector<double> sr_thresholds;
  std::vector<double> sr_curve;
  double pr_at = 0.0;   // at the requested pixel threshold
  double sr_auc = 0.0;  // mean of the success curve
  double sr_at_06 = 0.0;
};

EvalResult Evaluate(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                    double pr_threshold = 20.0);

}  // namespace mfg

#endif  // MFGNET_METRICS_HPP_
