#include "occlusion/eval.hpp"

#include "occlusion/csv.hpp"
#include "occlusion/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace occlusion {

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  tp_pred += o.tp_pred;
  fp += o.fp;
  tp_gt += o.tp_gt;
  fn += o.fn;
  return *this;
}

double MatchCounts::precision() const {
  const std::int64_t n = tp_pred + fp;
  return n == 0 ? 1.0 : static_cast<double>(tp_pred) / static_cast<double>(n);
}

double MatchCounts::recall() const {
  const std::int64_t n = tp_gt + fn;
  return n == 0 ? 1.0 : static_cast<double>(tp_gt) / static_cast<double>(n);
}

double MatchCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

Mask dilate(const Mask& mask, int radius) {
  const Eigen::Index h = mask.rows(), w = mask.cols();
  Mask rows = Mask::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      if (mask(y, x))
        for (Eigen::Index dx = std::max<Eigen::Index>(0, x - radius); dx <= std::min<Eigen::Index>(w - 1, x + radius); ++dx)
          rows(y, dx) = 1;
  Mask out = Mask::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      if (rows(y, x))
        for (Eigen::Index dy = std::max<Eigen::Index>(0, y - radius); dy <= std::min<Eigen::Index>(h - 1, y + radius); ++dy)
          out(dy, x) = 1;
  return out;
}

MatchCounts match_boundaries(const Mask& pred, const Mask& gt, int dilation) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ValidationError("match_boundaries: prediction and ground truth differ in size");
  if (dilation < 0) throw ParameterError("dilation must be >= 0");
  const Mask gt_wide = dilate(gt, dilation);
  const Mask pred_wide = dilate(pred, dilation);
  MatchCounts c;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (pred.data()[i]) (gt_wide.data()[i] ? c.tp_pred : c.fp) += 1;
    if (gt.data()[i]) (pred_wide.data()[i] ? c.tp_gt : c.fn) += 1;
  }
  return c;
}

std::vector<double> pr_thresholds(int n) {
  if (n < 2) throw ParameterError("need at least two thresholds");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(n - 1 - i) / (n - 1);
  return t;
}

std::vector<MatchCounts> sweep_counts(const EdgeletSet& set, std::span<const double> p,
                                      const std::vector<Mask>& gt, std::span<const double> thresholds,
                                      int dilation) {
  if (p.size() != set.instances.size()) throw ValidationError("pr sweep: one probability per instance");
  if (static_cast<int>(gt.size()) != set.frames) throw ValidationError("pr sweep: one ground-truth map per frame");
  std::vector<MatchCounts> counts(thresholds.size());
  for (int t = 0; t < set.frames; ++t) {
    const Mask& g = gt[static_cast<std::size_t>(t)];
    const Mask g_wide = dilate(g, dilation);
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      const double tau = thresholds[k];
      const Mask pred = splat_instances(set, t, [&](std::size_t i) { return p[i] >= tau; });
      const Mask pred_wide = dilate(pred, dilation);
      MatchCounts c;
      for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (pred.data()[i]) (g_wide.data()[i] ? c.tp_pred : c.fp) += 1;
        if (g.data()[i]) (pred_wide.data()[i] ? c.tp_gt : c.fn) += 1;
      }
      counts[k] += c;
    }
  }
  return counts;
}

PRCurve curve_from_counts(std::span<const double> thresholds, std::span<const MatchCounts> counts) {
  if (thresholds.size() != counts.size()) throw ValidationError("pr curve: size mismatch");
  PRCurve curve;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const PRPoint pt{thresholds[k], counts[k].precision(), counts[k].recall(), counts[k].f1()};
    curve.points.push_back(pt);
    if (pt.f1 > curve.best_f1) {
      curve.best_f1 = pt.f1;
      curve.best_threshold = pt.threshold;
    }
  }
  return curve;
}

PRCurve pr_curve(const EdgeletSet& set, std::span<const double> p, const std::vector<Mask>& gt, int n_thresholds) {
  const auto t = pr_thresholds(n_thresholds);
  const auto c = sweep_counts(set, p, gt, t);
  return curve_from_counts(t, c);
}

double precision_at_recall(const PRCurve& curve, double recall) {
  double best = 0.0;
  for (const PRPoint& pt : curve.points)
    if (pt.recall >= recall) best = std::max(best, pt.precision);
  return best;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t videos, int k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("k-fold needs k >= 2");
  if (videos < static_cast<std::size_t>(k)) throw ParameterError("fewer videos than folds");
  std::vector<std::size_t> order(videos);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < videos; ++i) folds[i % folds.size()].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::string pr_curve_to_csv(const PRCurve& curve) {
  std::string out = "threshold,precision,recall,f1\n";
  for (const PRPoint& p : curve.points)
    out += csv::number(p.threshold) + "," + csv::number(p.precision) + "," + csv::number(p.recall) + "," +
           csv::number(p.f1) + "\n";
  return out;
}

}  // namespace occlusion
