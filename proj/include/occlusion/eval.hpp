#pragma once

#include "occlusion/edgelet.hpp"
#include "occlusion/image.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace occlusion {

struct MatchCounts {
  std::int64_t tp_pred = 0;  ///< predicted pixels inside the dilated ground truth
  std::int64_t fp = 0;
  std::int64_t tp_gt = 0;  ///< ground-truth pixels inside the dilated prediction
  std::int64_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o);
  bool operator==(const MatchCounts&) const = default;
  /// 1 for an empty prediction.
  double precision() const;
  double recall() const;
  double f1() const;
};

/// Square (2*dilation+1) dilation of `mask`.
Mask dilate(const Mask& mask, int radius);

/// Symmetric tolerance matching: each side is checked against the other side
/// dilated by `dilation` pixels (Chebyshev distance).
MatchCounts match_boundaries(const Mask& pred, const Mask& gt, int dilation = 1);

struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0, recall = 0.0, f1 = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;  ///< thresholds descending
  double best_f1 = 0.0;
  double best_threshold = 0.0;
};

/// n evenly spaced thresholds over [0,1], descending.
std::vector<double> pr_thresholds(int n = 50);

/// Match counts per threshold for one video, summed over its frames.
std::vector<MatchCounts> sweep_counts(const EdgeletSet& set, std::span<const double> p,
                                      const std::vector<Mask>& gt, std::span<const double> thresholds,
                                      int dilation = 1);

PRCurve curve_from_counts(std::span<const double> thresholds, std::span<const MatchCounts> counts);

/// Single-video convenience over pr_thresholds(n).
PRCurve pr_curve(const EdgeletSet& set, std::span<const double> p, const std::vector<Mask>& gt,
                 int n_thresholds = 50);

/// Largest precision over sweep points whose recall reaches `recall`; 0 if none does.
double precision_at_recall(const PRCurve& curve, double recall);

/// Test folds of whole videos; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t videos, int k, std::uint64_t seed);

/// threshold,precision,recall,f1
std::string pr_curve_to_csv(const PRCurve& curve);

}  // namespace occlusion
