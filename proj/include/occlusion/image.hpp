#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace occlusion {

/// Row-major dense 2-D array; rows index y, columns index x.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneD = Plane<double>;
using PlaneF = Plane<float>;
using Mask = Plane<std::uint8_t>;

struct RgbImage {
  Plane<std::uint8_t> r, g, b;

  RgbImage() = default;
  RgbImage(int width, int height)
      : r(Plane<std::uint8_t>::Zero(height, width)),
        g(Plane<std::uint8_t>::Zero(height, width)),
        b(Plane<std::uint8_t>::Zero(height, width)) {}

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }
  bool operator==(const RgbImage& o) const {
    return r.rows() == o.r.rows() && r.cols() == o.r.cols() && (r == o.r).all() &&
           (g == o.g).all() && (b == o.b).all();
  }
};

/// Ordered RGB frames sharing one size; at least two frames once validated.
struct FrameSequence {
  std::vector<RgbImage> frames;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int size() const { return static_cast<int>(frames.size()); }
  const RgbImage& operator[](int t) const { return frames[static_cast<std::size_t>(t)]; }

  /// Throws ValidationError when frames disagree in size or fewer than two exist.
  void validate() const;
};

struct LabImage {
  PlaneD L, a, b;
  int width() const { return static_cast<int>(L.cols()); }
  int height() const { return static_cast<int>(L.rows()); }
};

enum class FlowDirection { forward, backward };

/// Dense displacement field. Forward fields live on frame t and point into t+1;
/// backward fields live on frame t+1 and point into t.
struct FlowField {
  PlaneF u, v;
  FlowDirection direction = FlowDirection::forward;

  FlowField() = default;
  FlowField(int width, int height, FlowDirection dir = FlowDirection::forward)
      : u(PlaneF::Zero(height, width)), v(PlaneF::Zero(height, width)), direction(dir) {}

  int width() const { return static_cast<int>(u.cols()); }
  int height() const { return static_cast<int>(u.rows()); }
  bool operator==(const FlowField& o) const {
    return u.rows() == o.u.rows() && u.cols() == o.u.cols() && (u == o.u).all() &&
           (v == o.v).all();
  }
};

/// Per-voxel region ids of a spatio-temporal partition.
struct LabelVideo {
  int width = 0;
  int height = 0;
  std::vector<Plane<std::uint32_t>> frames;

  LabelVideo() = default;
  LabelVideo(int w, int h, int t)
      : width(w), height(h), frames(static_cast<std::size_t>(t), Plane<std::uint32_t>::Zero(h, w)) {}

  int frame_count() const { return static_cast<int>(frames.size()); }
  std::uint32_t& at(int t, int y, int x) { return frames[static_cast<std::size_t>(t)](y, x); }
  std::uint32_t at(int t, int y, int x) const { return frames[static_cast<std::size_t>(t)](y, x); }
  /// One past the largest id present.
  std::uint32_t region_count() const;
  bool operator==(const LabelVideo& o) const;
};

inline constexpr int kGeometricClasses = 5;

enum class GeometricClass : int { sky = 0, ground = 1, static_solid = 2, porous = 3, movable = 4 };

/// Per-pixel confidence vectors. With five channels this is geometric context and
/// every pixel is a point on the simplex; a single channel carries a probability map.
struct ConfidenceVideo {
  int width = 0;
  int height = 0;
  int channels = kGeometricClasses;
  /// frames[t][c] is the confidence plane of channel c at frame t.
  std::vector<std::vector<PlaneF>> frames;

  ConfidenceVideo() = default;
  ConfidenceVideo(int w, int h, int t, int c)
      : width(w), height(h), channels(c),
        frames(static_cast<std::size_t>(t),
               std::vector<PlaneF>(static_cast<std::size_t>(c), PlaneF::Zero(h, w))) {}

  int frame_count() const { return static_cast<int>(frames.size()); }
  const PlaneF& plane(int t, int c) const {
    return frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
  }
  PlaneF& plane(int t, int c) { return frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)]; }
  bool operator==(const ConfidenceVideo& o) const;
};

using GeometricContext = ConfidenceVideo;

}  // namespace occlusion
