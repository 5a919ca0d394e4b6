#include "helpers.hpp"

#include "occlusion/error.hpp"
#include "occlusion/flow.hpp"

#include <doctest.h>

#include <cmath>

using namespace occlusion;

namespace {

// Smooth texture with gradients in both directions, optionally shifted right by dx.
PlaneD pattern(int w, int h, double dx, double offset = 0.0) {
  PlaneD p(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double xs = x - dx;
      p(y, x) = 128 + offset + 50 * std::sin(0.35 * xs) * std::cos(0.27 * y) + 30 * std::sin(0.19 * xs + 0.41 * y);
    }
  return p;
}

double interior_mean(const PlaneF& p, int margin) {
  const int h = static_cast<int>(p.rows()), w = static_cast<int>(p.cols());
  return p.block(margin, margin, h - 2 * margin, w - 2 * margin).cast<double>().mean();
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("identical frames give zero flow") {
    const PlaneD a = pattern(40, 32, 0);
    const FlowField f = estimate_flow(a, a);
    CHECK(f.u.abs().maxCoeff() <= 1e-3f);
    CHECK(f.v.abs().maxCoeff() <= 1e-3f);
  }

  TEST_CASE("one pixel shift is recovered") {
    const FlowField f = estimate_flow(pattern(48, 40, 0), pattern(48, 40, 1));
    const double u = interior_mean(f.u, 4), v = interior_mean(f.v, 4);
    CHECK(u >= 0.8);
    CHECK(u <= 1.2);
    CHECK(std::abs(v) <= 0.2);
  }

  TEST_CASE("swapping the frames negates the flow") {
    const PlaneD a = pattern(48, 40, 0), b = pattern(48, 40, 1.5);
    const FlowField fwd = estimate_flow(a, b);
    const FlowField bwd = estimate_flow(b, a);
    CHECK(std::abs(interior_mean(fwd.u, 4) + interior_mean(bwd.u, 4)) <= 0.3);
    CHECK(std::abs(interior_mean(fwd.v, 4) + interior_mean(bwd.v, 4)) <= 0.3);
  }

  TEST_CASE("a constant brightness offset on both frames does not change the result") {
    const FlowField f1 = estimate_flow(pattern(40, 32, 0), pattern(40, 32, 1));
    const FlowField f2 = estimate_flow(pattern(40, 32, 0, 20), pattern(40, 32, 1, 20));
    CHECK((f1.u - f2.u).abs().maxCoeff() <= 1e-6f);
    CHECK((f1.v - f2.v).abs().maxCoeff() <= 1e-6f);
  }

  TEST_CASE("energy never increases within a warp step") {
    FlowTrace trace;
    estimate_flow(pattern(40, 32, 0), pattern(40, 32, 2), {}, &trace);
    REQUIRE(!trace.finest_level_energy.empty());
    for (const auto& step : trace.finest_level_energy) {
      REQUIRE(step.size() >= 2);
      for (std::size_t i = 1; i < step.size(); ++i) CHECK(step[i] <= step[i - 1] + 1e-8 * std::max(1.0, step[i - 1]));
    }
  }

  TEST_CASE("frame dimension mismatch is rejected") {
    CHECK_THROWS_AS(estimate_flow(pattern(10, 10, 0), pattern(11, 10, 0)), ValidationError);
    FlowParams p;
    p.alpha = 0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
  }

  TEST_CASE("sequence flow yields forward and backward fields per pair") {
    FrameSequence seq;
    for (int t = 0; t < 3; ++t) seq.frames.push_back(testing::flat_image(16, 12, 90, 90, 90));
    const FlowPair fp = estimate_sequence_flow(seq);
    REQUIRE(fp.forward.size() == 2);
    REQUIRE(fp.backward.size() == 2);
    CHECK(fp.forward[0].direction == FlowDirection::forward);
    CHECK(fp.backward[1].direction == FlowDirection::backward);
    CHECK(fp.forward[1].u.abs().maxCoeff() == 0.f);
  }
}
