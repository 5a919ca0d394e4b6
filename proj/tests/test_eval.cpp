#include "helpers.hpp"

#include "occlusion/edgelet.hpp"
#include "occlusion/error.hpp"
#include "occlusion/eval.hpp"
#include "occlusion/segment.hpp"
#include "occlusion/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace occlusion;

namespace {

Mask random_mask(int w, int h, double density, std::mt19937_64& rng) {
  Mask m(h, w);
  std::bernoulli_distribution b(density);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = b(rng) ? 1 : 0;
  return m;
}

// Each pixel of `a` checked against the nearest pixel of `b` by direct search.
std::pair<std::int64_t, std::int64_t> brute_side(const Mask& a, const Mask& b, int r) {
  std::int64_t hit = 0, miss = 0;
  for (int y = 0; y < a.rows(); ++y)
    for (int x = 0; x < a.cols(); ++x) {
      if (!a(y, x)) continue;
      int best = 1 << 20;
      for (int v = 0; v < b.rows(); ++v)
        for (int u = 0; u < b.cols(); ++u)
          if (b(v, u)) best = std::min(best, std::max(std::abs(u - x), std::abs(v - y)));
      (best <= r ? hit : miss)++;
    }
  return {hit, miss};
}

struct Scene {
  RenderedScene r;
  LabelVideo labels;
  EdgeletSet set;
  std::vector<int> y;
};

Scene small_scene(std::uint64_t seed) {
  Scene s{render_scene(random_scene(seed, 48, 40, 4)), {}, {}, {}};
  SegParams p;
  p.k = 60;
  p.min_size = 20;
  s.labels = oversegment(s.r.frames, p);
  s.set = extract_edgelets(s.labels);
  s.y = label_edgelets(s.set, s.r.truth.gt_object_ids);
  return s;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("perfect, shifted and empty predictions") {
    Mask gt = Mask::Zero(12, 12);
    gt.col(5).setConstant(1);
    const MatchCounts same = match_boundaries(gt, gt);
    CHECK(same.precision() == 1.0);
    CHECK(same.recall() == 1.0);
    Mask shifted = Mask::Zero(12, 12);
    shifted.col(6).setConstant(1);
    const MatchCounts sh = match_boundaries(shifted, gt);
    CHECK(sh.precision() == 1.0);
    CHECK(sh.recall() == 1.0);
    Mask far = Mask::Zero(12, 12);
    far.col(7).setConstant(1);
    CHECK(match_boundaries(far, gt).precision() == 0.0);
    const MatchCounts empty = match_boundaries(Mask::Zero(12, 12), gt);
    CHECK(empty.precision() == 1.0);
    CHECK(empty.recall() == 0.0);
    CHECK(empty.f1() == 0.0);
    CHECK_THROWS_AS(match_boundaries(Mask::Zero(3, 4), gt), ValidationError);
  }

  TEST_CASE("matching agrees with a brute-force Chebyshev search") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 40; ++k) {
      const int w = std::uniform_int_distribution<int>(1, 16)(rng), h = std::uniform_int_distribution<int>(1, 16)(rng);
      const Mask a = random_mask(w, h, 0.1, rng), b = random_mask(w, h, 0.15, rng);
      const MatchCounts c = match_boundaries(a, b, 1);
      const auto [tp, fp] = brute_side(a, b, 1);
      const auto [tg, fn] = brute_side(b, a, 1);
      CHECK(c.tp_pred == tp);
      CHECK(c.fp == fp);
      CHECK(c.tp_gt == tg);
      CHECK(c.fn == fn);
    }
  }

  TEST_CASE("counts are additive over frames") {
    std::mt19937_64 rng(4);
    MatchCounts summed;
    Mask pred_all(30, 10), gt_all(30, 10);
    for (int t = 0; t < 3; ++t) {
      const Mask p = random_mask(10, 8, 0.2, rng), g = random_mask(10, 8, 0.2, rng);
      summed += match_boundaries(p, g);
      // Frames stacked with a blank separator row so dilation cannot cross them.
      pred_all.block(t * 10, 0, 10, 10).setZero();
      gt_all.block(t * 10, 0, 10, 10).setZero();
      pred_all.block(t * 10, 0, 8, 10) = p;
      gt_all.block(t * 10, 0, 8, 10) = g;
    }
    CHECK(summed == match_boundaries(pred_all, gt_all));
  }

  TEST_CASE("dilation") {
    Mask m = Mask::Zero(5, 5);
    m(2, 2) = 1;
    CHECK(dilate(m, 1).count() == 9);
    CHECK(dilate(m, 2).count() == 25);
    CHECK((dilate(m, 0) == m).all());
  }

  TEST_CASE("thresholds") {
    const auto t = pr_thresholds(5);
    CHECK(t == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
    CHECK(pr_thresholds().size() == 50);
  }

  TEST_CASE("recall never drops as the threshold falls") {
    const Scene s = small_scene(3);
    std::mt19937_64 rng(1);
    std::vector<double> p(s.set.instances.size());
    for (double& v : p) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const PRCurve c = pr_curve(s.set, p, s.r.truth.occlusion_mask);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      CHECK(c.points[i].threshold < c.points[i - 1].threshold);
      CHECK(c.points[i].recall >= c.points[i - 1].recall);
    }
  }

  TEST_CASE("oracle probabilities pin the curve") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 10);
    p.rightCols(5).setConstant(1);
    LabelVideo l(10, 10, 2);
    for (auto& f : l.frames) f = p;
    const EdgeletSet s = extract_edgelets(l);
    const std::vector<Mask> gt(2, region_boundaries(p));
    const PRCurve c = pr_curve(s, std::vector<double>(2, 1.0), gt);
    for (const auto& pt : c.points) {
      CHECK(pt.precision == 1.0);
      CHECK(pt.recall == 1.0);
    }
    CHECK(c.best_f1 == 1.0);
  }

  TEST_CASE("zero-probability edgelets do not change the curve") {
    const Scene s = small_scene(5);
    std::vector<double> with_noise(s.y.size()), clean(s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      with_noise[i] = s.y[i] ? 0.8 : 0.0;
      clean[i] = s.y[i] ? 0.8 : -1.0;
    }
    // Probability 0 only ever splats at threshold 0; compare the strictly positive thresholds.
    const auto th = pr_thresholds();
    const std::vector<double> positive(th.begin(), th.end() - 1);
    const auto a = sweep_counts(s.set, with_noise, s.r.truth.occlusion_mask, positive);
    const auto b = sweep_counts(s.set, clean, s.r.truth.occlusion_mask, positive);
    CHECK(a == b);
  }

  TEST_CASE("random scores stay near the all-on baseline") {
    const Scene s = small_scene(7);
    const std::vector<double> all_on(s.y.size(), 1.0);
    const double baseline = pr_curve(s.set, all_on, s.r.truth.occlusion_mask).best_f1;
    std::mt19937_64 rng(6);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> p(s.y.size());
      for (double& v : p) v = std::uniform_real_distribution<double>(0, 1)(rng);
      CHECK(std::abs(pr_curve(s.set, p, s.r.truth.occlusion_mask).best_f1 - baseline) <= 0.1);
    }
  }

  TEST_CASE("precision at recall") {
    PRCurve c;
    c.points = {{0.9, 1.0, 0.5, 0}, {0.5, 0.9, 0.8, 0}, {0.3, 0.95, 0.85, 0}, {0.0, 0.4, 1.0, 0}};
    CHECK(precision_at_recall(c, 0.8) == 0.95);
    CHECK(precision_at_recall(c, 1.0) == 0.4);
    c.points.pop_back();
    CHECK(precision_at_recall(c, 0.9) == 0.0);
  }

  TEST_CASE("k-fold split partitions whole videos") {
    const auto f = kfold_split(10, 5, 3);
    REQUIRE(f.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& fold : f) {
      CHECK(fold.size() == 2);
      for (auto v : fold) CHECK(seen.insert(v).second);
    }
    CHECK(seen.size() == 10);
    CHECK(f == kfold_split(10, 5, 3));
    const auto uneven = kfold_split(11, 3, 1);
    for (const auto& fold : uneven) CHECK((fold.size() == 3 || fold.size() == 4));
    CHECK_THROWS_AS(kfold_split(4, 5, 1), ParameterError);
  }

  TEST_CASE("pr curve csv") {
    PRCurve c;
    c.points = {{1.0, 1.0, 0.0, 0.0}, {0.5, 0.5, 0.5, 0.5}};
    const std::string text = pr_curve_to_csv(c);
    CHECK(text.rfind("threshold,precision,recall,f1\n", 0) == 0);
    CHECK(text.find("0.5,0.5,0.5,0.5") != std::string::npos);
  }
}
