#include "helpers.hpp"

#include "occlusion/edgelet.hpp"
#include "occlusion/error.hpp"
#include "occlusion/segment.hpp"
#include "occlusion/synth.hpp"

#include <doctest.h>

#include <algorithm>

using namespace occlusion;

namespace {

LabelVideo from_planes(const std::vector<Plane<std::uint32_t>>& planes) {
  LabelVideo l(static_cast<int>(planes[0].cols()), static_cast<int>(planes[0].rows()),
               static_cast<int>(planes.size()));
  for (std::size_t t = 0; t < planes.size(); ++t) l.frames[t] = planes[t];
  return l;
}

std::int64_t cross_pairs(const Plane<std::uint32_t>& l) {
  std::int64_t n = 0;
  for (Eigen::Index y = 0; y < l.rows(); ++y)
    for (Eigen::Index x = 0; x < l.cols(); ++x) {
      if (x + 1 < l.cols() && l(y, x) != l(y, x + 1)) ++n;
      if (y + 1 < l.rows() && l(y, x) != l(y + 1, x)) ++n;
    }
  return n;
}

}  // namespace

TEST_SUITE("edgelet") {
  TEST_CASE("left/right split gives one straight instance") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 8);
    p.rightCols(4).setConstant(1);
    const EdgeletSet s = extract_edgelets(from_planes({p}));
    REQUIRE(s.edgelets.size() == 1);
    REQUIRE(s.instances.size() == 1);
    CHECK(s.instances[0].length() == 10);
    CHECK(!s.instances[0].is_short);
    CHECK(s.graph.neighbors[0].empty());
    REQUIRE(s.instances[0].endpoints.size() == 2);
    CHECK(s.instances[0].endpoints[0] == Corner{4, 0});
    CHECK(s.instances[0].endpoints[1] == Corner{4, 10});
    for (const PixelPair& pr : s.instances[0].pairs) {
      CHECK(p.data()[pr.p] == 0u);
      CHECK(p.data()[pr.q] == 1u);
    }
  }

  TEST_CASE("T-junction gives three mutually adjacent edgelets") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 10);
    p.bottomRows(5).leftCols(5).setConstant(1);
    p.bottomRows(5).rightCols(5).setConstant(2);
    const EdgeletSet s = extract_edgelets(from_planes({p}));
    REQUIRE(s.instances.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<std::size_t> others;
      for (std::size_t j = 0; j < 3; ++j)
        if (j != i) others.push_back(j);
      CHECK(s.graph.neighbors[i] == others);
    }
  }

  TEST_CASE("single region has no edgelets") {
    const EdgeletSet s = extract_edgelets(from_planes({Plane<std::uint32_t>::Zero(6, 6)}));
    CHECK(s.edgelets.empty());
    CHECK(s.instances.empty());
  }

  TEST_CASE("short fragments are kept and flagged") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(8, 8);
    p.block(3, 3, 1, 1).setConstant(1);
    const EdgeletSet s = extract_edgelets(from_planes({p}), 5);
    REQUIRE(s.instances.size() == 1);
    CHECK(s.instances[0].length() == 4);
    CHECK(s.instances[0].is_short);
    CHECK(s.instances[0].endpoints.empty());
  }

  TEST_CASE("labels follow the overlap fraction") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 8);
    p.rightCols(4).setConstant(1);
    const LabelVideo seg = from_planes({p});
    const EdgeletSet s = extract_edgelets(seg);
    CHECK(label_edgelets(s, seg)[0] == 1);
    CHECK(label_edgelets(s, from_planes({Plane<std::uint32_t>::Zero(10, 8)}))[0] == 0);
    Plane<std::uint32_t> half = Plane<std::uint32_t>::Zero(10, 8);
    half.topRows(5).rightCols(4).setConstant(7);
    CHECK(label_edgelets(s, from_planes({half}), 0.5)[0] == 1);
    CHECK(label_edgelets(s, from_planes({half}), 0.6)[0] == 0);
    CHECK_THROWS_AS(label_edgelets(s, from_planes({Plane<std::uint32_t>::Zero(9, 8)})), ValidationError);
  }

  TEST_CASE("every cross-region pair belongs to exactly one instance") {
    const RenderedScene r = render_scene(random_scene(3, 40, 32, 5));
    SegParams sp;
    sp.k = 50;
    sp.min_size = 10;
    const LabelVideo l = oversegment(r.frames, sp);
    const EdgeletSet s = extract_edgelets(l);
    for (int t = 0; t < l.frame_count(); ++t) {
      std::int64_t sum = 0;
      std::vector<std::pair<std::uint32_t, std::uint32_t>> seen;
      for (std::size_t i : s.frame_instances[static_cast<std::size_t>(t)]) {
        sum += s.instances[i].length();
        for (const PixelPair& pr : s.instances[i].pairs) seen.emplace_back(pr.p, pr.q);
      }
      CHECK(sum == cross_pairs(l.frames[static_cast<std::size_t>(t)]));
      std::sort(seen.begin(), seen.end());
      CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    }
    for (std::size_t i = 0; i < s.graph.neighbors.size(); ++i)
      for (std::size_t j : s.graph.neighbors[i]) {
        CHECK(j != i);
        CHECK(std::binary_search(s.graph.neighbors[j].begin(), s.graph.neighbors[j].end(), i));
        CHECK(s.instances[j].frame == s.instances[i].frame);
      }
  }

  TEST_CASE("a persisting boundary keeps one identity") {
    std::vector<Plane<std::uint32_t>> planes;
    for (int t = 0; t < 4; ++t) {
      Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 12);
      p.rightCols(4 + t).setConstant(1);
      planes.push_back(p);
    }
    const EdgeletSet s = extract_edgelets(from_planes(planes));
    REQUIRE(s.edgelets.size() == 1);
    CHECK(s.edgelets[0].lifetime() == 4);
    CHECK(s.edgelets[0].id == EdgeletKey{0, 1});
    for (int t = 0; t < 4; ++t) CHECK(s.instances[s.edgelets[0].instances[static_cast<std::size_t>(t)]].frame == t);
  }

  TEST_CASE("json dump names every edgelet") {
    Plane<std::uint32_t> p = Plane<std::uint32_t>::Zero(10, 10);
    p.bottomRows(5).leftCols(5).setConstant(1);
    p.bottomRows(5).rightCols(5).setConstant(2);
    const std::string js = edgelets_to_json(extract_edgelets(from_planes({p})));
    CHECK(js.find("\"instances\"") != std::string::npos);
  }
}
