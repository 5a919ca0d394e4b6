#include "helpers.hpp"

#include "occlusion/color.hpp"
#include "occlusion/edgelet.hpp"
#include "occlusion/error.hpp"
#include "occlusion/features.hpp"
#include "occlusion/segment.hpp"
#include "occlusion/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace occlusion;

namespace {

constexpr double kTol = 1e-9;

LabelVideo single(const Plane<std::uint32_t>& p) {
  LabelVideo l(static_cast<int>(p.cols()), static_cast<int>(p.rows()), 1);
  l.frames[0] = p;
  return l;
}

std::vector<LabImage> lab_of(const FrameSequence& seq) {
  std::vector<LabImage> out;
  for (const auto& f : seq.frames) out.push_back(rgb_to_lab(f));
  return out;
}

PlaneD gray(const RgbImage& img) { return luma(img) / 255.0; }

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("photo-consistency") {
    PlaneD a(6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) a(y, x) = 0.1 * x + 0.05 * y;
    const FlowField zero(6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) CHECK(photo_consistency(a, a, zero, x, y) == 0.0);
    // Half-pixel flow samples halfway along the ramp.
    const FlowField half = testing::constant_flow(6, 6, 0.5f, 0.f);
    CHECK(photo_consistency(a, a, half, 2, 2) == doctest::Approx(0.05).epsilon(kTol));
    // Target outside the frame is clamped to the border.
    const FlowField far = testing::constant_flow(6, 6, 10.f, 0.f);
    CHECK(photo_consistency(a, a, far, 1, 0) == doctest::Approx(0.4).epsilon(kTol));
  }

  TEST_CASE("flow gradient") {
    const FlowField c = testing::constant_flow(8, 8, 3.f, -1.f);
    CHECK(flow_gradient(c, 4, 4) == Eigen::Vector2d(0, 0));
    FlowField ramp(8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) ramp.u(y, x) = static_cast<float>(x);
    for (int y = 1; y < 7; ++y)
      for (int x = 1; x < 7; ++x) {
        const Eigen::Vector2d g = flow_gradient(ramp, x, y);
        CHECK(std::abs(g(0) - 1.0) <= kTol);
        CHECK(g(1) == 0.0);
      }
    CHECK(std::abs(flow_gradient(ramp, 0, 0)(0) - 1.0) <= kTol);
    FlowField step(8, 8);
    step.u.rightCols(3).setConstant(2.f);
    CHECK(std::abs(flow_gradient(step, 5, 3)(0) - 1.0) <= kTol);
    CHECK(std::abs(flow_gradient(step, 4, 3)(0) - 1.0) <= kTol);
  }

  TEST_CASE("flow magnitude variance") {
    const FlowField c = testing::constant_flow(7, 7, 3.f, 4.f);
    CHECK(flow_mag_variance(c, 3, 3) == 0.0);
    FlowField spike(11, 11);
    spike.u(5, 5) = 9.f;
    CHECK(std::abs(flow_mag_variance(spike, 5, 5) - 8.0) <= kTol);
    FlowField scaled = spike;
    scaled.u *= 3.f;
    CHECK(std::abs(flow_mag_variance(scaled, 5, 5) - 72.0) <= kTol);
    // Corner window clipped to 2x2: {9,0,0,0} has variance 81*3/16.
    FlowField corner(5, 5);
    corner.u(0, 0) = 9.f;
    CHECK(std::abs(flow_mag_variance(corner, 0, 0) - 81.0 * 3.0 / 16.0) <= kTol);
  }

  TEST_CASE("reverse flow constancy") {
    FlowField f(10, 10), b(10, 10, FlowDirection::backward);
    CHECK(reverse_flow_constancy(f, b, 5, 5) == 0.0);
    f.u(5, 5) = 1.f;
    b.u(5, 6) = -1.f;
    CHECK(reverse_flow_constancy(f, b, 5, 5) == 0.0);
    b.v(5, 6) = 1.f;
    CHECK(std::abs(reverse_flow_constancy(f, b, 5, 5) - 1.0) <= kTol);
  }

  TEST_CASE("reverse flow angle") {
    FlowField f(10, 10), b(10, 10, FlowDirection::backward);
    f.u(5, 5) = 1.f;
    b.u(5, 6) = -1.f;
    CHECK(reverse_flow_angle(f, b, 5, 5) == 0.0);
    b.u(5, 6) = 0.f;
    b.v(5, 6) = 1.f;
    CHECK(std::abs(reverse_flow_angle(f, b, 5, 5) - std::numbers::pi / 2) <= kTol);
    b.v(5, 6) = 1e-8f;
    CHECK(reverse_flow_angle(f, b, 5, 5) == 0.0);
    b.u(5, 6) = 2.f;
    b.v(5, 6) = 0.f;
    CHECK(std::abs(reverse_flow_angle(f, b, 5, 5) - std::numbers::pi) <= kTol);
  }

  TEST_CASE("smoothness of straight and jagged boundaries") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 10);
    p.rightCols(5).setConstant(1);
    const EdgeletSet straight = extract_edgelets(single(p));
    CHECK(std::abs(boundary_smoothness(straight.instances[0]) - 1.0) <= kTol);

    Plane<std::uint32_t> s = Plane<std::uint32_t>::Zero(10, 10);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) s(y, x) = x >= 3 + (y / 2) % 2 * 2 ? 1 : 0;
    const EdgeletSet jag = extract_edgelets(single(s));
    REQUIRE(jag.instances.size() == 1);
    CHECK(boundary_smoothness(jag.instances[0]) > 1.0);

    Plane<std::uint32_t> ring = Plane<std::uint32_t>::Zero(8, 8);
    ring.block(2, 2, 3, 3).setConstant(1);
    const EdgeletSet closed = extract_edgelets(single(ring));
    CHECK(boundary_smoothness(closed.instances[0]) == 12.0);
  }

  TEST_CASE("boundary and region features") {
    FrameSequence seq;
    seq.frames.push_back(testing::flat_image(10, 10, 80, 80, 80));
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 10);
    p.rightCols(5).setConstant(1);
    const LabelVideo l = single(p);
    const EdgeletSet s = extract_edgelets(l);
    const RegionStats stats(l, lab_of(seq), nullptr);
    const BoundaryRegionFeatures f = boundary_region_features(s.instances[0], s.key_of(0), stats);
    CHECK(std::abs(f.length - std::log(11.0)) <= kTol);
    CHECK(f.color_diff == 0.0);
    CHECK(pair_count_from_length_feature(f.length) == 10);
  }

  TEST_CASE("geometric features") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(6, 6);
    p.rightCols(3).setConstant(1);
    const LabelVideo l = single(p);
    const EdgeletSet s = extract_edgelets(l);
    FrameSequence seq;
    seq.frames.push_back(testing::flat_image(6, 6, 80, 80, 80));

    GeometricContext sky(6, 6, 1, kGeometricClasses);
    sky.plane(0, 0).setConstant(1.f);
    const auto same = geometric_features(s.instances[0], s.key_of(0), RegionStats(l, lab_of(seq), &sky));
    for (int c = 10; c < 16; ++c) CHECK(same[static_cast<std::size_t>(c)] == 0.0);
    CHECK(same[16] == 0.0);
    CHECK(same[17] == 0.0);

    GeometricContext split(6, 6, 1, kGeometricClasses);
    split.plane(0, 0).leftCols(3).setConstant(1.f);
    split.plane(0, 1).rightCols(3).setConstant(1.f);
    const auto diff = geometric_features(s.instances[0], s.key_of(0), RegionStats(l, lab_of(seq), &split));
    CHECK(std::abs(diff[15] - 2.0) <= kTol);
    CHECK(diff[10] == 1.0);
    CHECK(diff[11] == -1.0);
    CHECK(diff[16] == 0.0);
    CHECK(diff[17] == 1.0);

    GeometricContext flat(6, 6, 1, kGeometricClasses);
    for (int c = 0; c < kGeometricClasses; ++c) flat.plane(0, c).setConstant(0.2f);
    const auto tie = geometric_features(s.instances[0], s.key_of(0), RegionStats(l, lab_of(seq), &flat));
    CHECK(tie[16] == 0.0);
    CHECK(tie[17] == 0.0);
  }

  TEST_CASE("schema") {
    CHECK(feature_names().size() == 26);
    CHECK(feature_columns(FeatureSet::appearance).size() == 3);
    CHECK(feature_columns(FeatureSet::appearance_flow).size() == 8);
    CHECK(feature_columns(FeatureSet::all).size() == 26);
  }

  TEST_CASE("static scene has vanishing flow cues") {
    SceneSpec spec;
    spec.width = 24;
    spec.height = 20;
    spec.frame_count = 3;
    for (int i = 0; i < 2; ++i) {
      BackgroundLayer b;
      b.cls = i ? GeometricClass::ground : GeometricClass::sky;
      b.y0 = i ? 10 : 0;
      b.y1 = i ? 20 : 10;
      b.texture.base_rgb = {i ? 40.0 : 200.0, 120, 90};
      b.texture.seed = 3 + static_cast<std::uint64_t>(i);
      spec.background.push_back(b);
    }
    const RenderedScene r = render_scene(spec);
    SegParams sp;
    sp.k = 40;
    sp.min_size = 10;
    const LabelVideo l = oversegment(r.frames, sp);
    const EdgeletSet s = extract_edgelets(l);
    REQUIRE(!s.instances.empty());
    const FeatureMatrix X =
        compute_features(s, {l, r.frames, r.truth.flow_fwd, r.truth.flow_bwd, r.truth.gt_geometric});
    CHECK(X.cols() == 26);
    CHECK(X.rows() == static_cast<Eigen::Index>(s.instances.size()));
    CHECK((X.middleCols(3, 5).array() == 0.0).all());
  }

  TEST_CASE("exact flow has zero photo-consistency residual where visible") {
    const RenderedScene r = render_scene(random_scene(12, 40, 32, 3));
    const PlaneD i0 = gray(r.frames[0]), i1 = gray(r.frames[1]);
    const FlowField& f = r.truth.flow_fwd[0];
    const auto& ids = r.truth.gt_object_ids;
    int checked = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 40; ++x) {
        const int x2 = x + static_cast<int>(f.u(y, x)), y2 = y + static_cast<int>(f.v(y, x));
        if (x2 < 0 || y2 < 0 || x2 >= 40 || y2 >= 32 || ids.at(1, y2, x2) != ids.at(0, y, x)) continue;
        CHECK(photo_consistency(i0, i1, f, x, y) <= 1e-6);
        ++checked;
      }
    CHECK(checked > 600);
  }

  TEST_CASE("pixel cues are translation invariant") {
    const RenderedScene r = render_scene(random_scene(5, 40, 32, 2));
    const PlaneD i0 = gray(r.frames[0]), i1 = gray(r.frames[1]);
    const FlowField& f = r.truth.flow_fwd[0];
    const FlowField& b = r.truth.flow_bwd[0];
    const int dx = 3, dy = 2;
    auto shift = [&](const auto& p) {
      auto out = p;
      out.setZero();
      out.block(dy, dx, p.rows() - dy, p.cols() - dx) = p.block(0, 0, p.rows() - dy, p.cols() - dx);
      return out;
    };
    FlowField fs = f, bs = b;
    fs.u = shift(f.u);
    fs.v = shift(f.v);
    bs.u = shift(b.u);
    bs.v = shift(b.v);
    const PlaneD j0 = shift(i0), j1 = shift(i1);
    for (int y = 6; y < 26; ++y)
      for (int x = 6; x < 30; ++x) {
        if (x + dx + 4 >= 40 || y + dy + 4 >= 32) continue;
        CHECK(flow_mag_variance(f, x, y) == flow_mag_variance(fs, x + dx, y + dy));
        CHECK(flow_gradient(f, x, y) == flow_gradient(fs, x + dx, y + dy));
        CHECK(reverse_flow_constancy(f, b, x, y) == reverse_flow_constancy(fs, bs, x + dx, y + dy));
        CHECK(photo_consistency(i0, i1, f, x, y) == photo_consistency(j0, j1, fs, x + dx, y + dy));
      }
  }

  TEST_CASE("occlusion edgelets carry stronger cues on average") {
    const RenderedScene r = render_scene(random_scene(8));
    SegParams sp;
    const LabelVideo l = oversegment(r.frames, sp);
    const EdgeletSet s = extract_edgelets(l);
    const FeatureMatrix X =
        compute_features(s, {l, r.frames, r.truth.flow_fwd, r.truth.flow_bwd, r.truth.gt_geometric});
    const std::vector<int> y = label_edgelets(s, r.truth.gt_object_ids);
    for (int col : {3, 5, 23}) {
      double on = 0, off = 0;
      int n_on = 0, n_off = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i]) {
          on += X(static_cast<Eigen::Index>(i), col);
          ++n_on;
        } else {
          off += X(static_cast<Eigen::Index>(i), col);
          ++n_off;
        }
      }
      REQUIRE(n_on > 0);
      REQUIRE(n_off > 0);
      CHECK(on / n_on > off / n_off);
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      CHECK(X(i, 0) >= 0);
      CHECK(X(i, 1) >= 1);
      CHECK(X(i, 7) <= std::numbers::pi);
      CHECK(X.row(i).segment(3, 5).minCoeff() >= 0);
    }
  }

  TEST_CASE("moving rectangle outline has larger magnitude variance") {
    SceneSpec spec;
    spec.width = 40;
    spec.height = 32;
    spec.frame_count = 4;
    BackgroundLayer b;
    b.cls = GeometricClass::ground;
    b.texture.amplitude = 40;
    b.texture.cell = 3;
    spec.background.push_back(b);
    SceneObject o;
    o.x = 10;
    o.y = 8;
    o.w = 12;
    o.h = 12;
    o.vx = 2;
    o.texture.base_rgb = {220, 30, 30};
    spec.objects.push_back(o);
    const RenderedScene r = render_scene(spec);
    SegParams sp;
    sp.k = 20;
    sp.min_size = 8;
    const LabelVideo l = oversegment(r.frames, sp);
    const EdgeletSet s = extract_edgelets(l);
    const FeatureMatrix X =
        compute_features(s, {l, r.frames, r.truth.flow_fwd, r.truth.flow_bwd, r.truth.gt_geometric});
    const std::vector<int> y = label_edgelets(s, r.truth.gt_object_ids);
    double on = 0, off = 0;
    int n_on = 0, n_off = 0;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? on : off) += X(static_cast<Eigen::Index>(i), 5), ++(y[i] ? n_on : n_off);
    REQUIRE(n_on > 0);
    REQUIRE(n_off > 0);
    CHECK(on / n_on > off / n_off);
  }

  TEST_CASE("missing flow is an error") {
    FrameSequence seq;
    for (int t = 0; t < 3; ++t) seq.frames.push_back(testing::flat_image(8, 8, 10, 10, 10));
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(8, 8);
    p.rightCols(4).setConstant(1);
    LabelVideo l(8, 8, 3);
    for (auto& f : l.frames) f = p;
    const EdgeletSet s = extract_edgelets(l);
    const std::vector<FlowField> fwd{FlowField(8, 8)};
    const std::vector<FlowField> bwd{FlowField(8, 8, FlowDirection::backward)};
    const GeometricContext g(8, 8, 3, kGeometricClasses);
    CHECK_THROWS_AS(compute_features(s, {l, seq, fwd, bwd, g}), MissingArtifact);
  }

  TEST_CASE("feature csv round trip") {
    const RenderedScene r = render_scene(random_scene(1, 32, 24, 3));
    SegParams sp;
    sp.k = 60;
    sp.min_size = 15;
    const LabelVideo l = oversegment(r.frames, sp);
    const EdgeletSet s = extract_edgelets(l);
    FeatureMatrix X = compute_features(s, {l, r.frames, r.truth.flow_fwd, r.truth.flow_bwd, r.truth.gt_geometric});
    const FeatureTable t = make_feature_table(s, X, label_edgelets(s, r.truth.gt_object_ids));
    const std::string text = features_to_csv(t);
    const FeatureTable back = features_from_csv(text);
    CHECK(back.X == t.X);
    CHECK(back.keys == t.keys);
    CHECK(back.frames == t.frames);
    CHECK(back.labels == t.labels);
    CHECK(features_to_csv(back) == text);
    CHECK_THROWS_AS(features_from_csv("a,b,c\n1,2,3\n"), SchemaError);
  }
}
