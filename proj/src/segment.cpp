#include "occlusion/segment.hpp"

#include "occlusion/color.hpp"
#include "occlusion/error.hpp"
#include "occlusion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace occlusion {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), threshold_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Union by size; ties keep the smaller root id so results do not depend on argument order.
  std::uint32_t join(std::uint32_t a, std::uint32_t b) {
    if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

  std::int64_t size(std::uint32_t root) const { return size_[root]; }
  double& threshold(std::uint32_t root) { return threshold_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::int64_t> size_;
  std::vector<double> threshold_;
};

struct GraphEdge {
  double w;
  std::uint32_t a, b;
};

// Felzenszwalb merging over pre-sorted edges, followed by the small-region sweep.
void felzenszwalb(std::vector<GraphEdge>& edges, DisjointSets& sets, std::size_t nodes,
                  std::span<const std::int64_t> node_sizes, double k, std::int64_t min_size) {
  std::stable_sort(edges.begin(), edges.end(), [](const GraphEdge& l, const GraphEdge& r) { return l.w < r.w; });
  for (std::uint32_t i = 0; i < nodes; ++i) sets.threshold(i) = k / static_cast<double>(node_sizes[i]);
  for (const GraphEdge& e : edges) {
    std::uint32_t a = sets.find(e.a), b = sets.find(e.b);
    if (a == b) continue;
    if (e.w <= sets.threshold(a) && e.w <= sets.threshold(b)) {
      const std::uint32_t r = sets.join(a, b);
      sets.threshold(r) = e.w + k / static_cast<double>(sets.size(r));
    }
  }
  for (const GraphEdge& e : edges) {
    std::uint32_t a = sets.find(e.a), b = sets.find(e.b);
    if (a != b && (sets.size(a) < min_size || sets.size(b) < min_size)) sets.join(a, b);
  }
}

LabelVideo relabel(DisjointSets& sets, int w, int h, int frames) {
  LabelVideo out(w, h, frames);
  std::vector<std::uint32_t> dense(static_cast<std::size_t>(w) * h * frames, UINT32_MAX);
  std::uint32_t next = 0;
  std::uint32_t idx = 0;
  for (int t = 0; t < frames; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x, ++idx) {
        const std::uint32_t root = sets.find(idx);
        if (dense[root] == UINT32_MAX) dense[root] = next++;
        out.at(t, y, x) = dense[root];
      }
  return out;
}

// Forward half of the 26-neighbourhood: 4 spatial, 9 temporal offsets (dt, dy, dx).
constexpr std::array<std::array<int, 3>, 13> kForwardOffsets{{
    {0, 0, 1}, {0, 1, -1}, {0, 1, 0}, {0, 1, 1},
    {1, -1, -1}, {1, -1, 0}, {1, -1, 1}, {1, 0, -1}, {1, 0, 0}, {1, 0, 1}, {1, 1, -1}, {1, 1, 0}, {1, 1, 1},
}};

template <typename Fn>
void for_each_neighbour_pair(int w, int h, int frames, Fn&& fn) {
  for (int t = 0; t < frames; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (const auto& o : kForwardOffsets) {
          const int tt = t + o[0], yy = y + o[1], xx = x + o[2];
          if (tt >= frames || yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          fn(Voxel{t, y, x}, Voxel{tt, yy, xx});
        }
}

}  // namespace

void SegParams::validate() const {
  if (!(k > 0.0)) throw ParameterError("segment: k must be positive");
  if (min_size < 1) throw ParameterError("segment: min_size must be >= 1");
  if (!(w_occl >= 0.0 && w_occl <= 1.0)) throw ParameterError("segment: w_occl must lie in [0,1]");
  if (sigma < 0.0) throw ParameterError("segment: sigma must be non-negative");
}

double edge_weight(const Eigen::Vector3d& lab_i, const Eigen::Vector3d& lab_j, double occl_i, double occl_j,
                   double w_occl) {
  return (1.0 - w_occl) * (lab_i - lab_j).norm() + w_occl * std::abs(occl_i - occl_j);
}

double edge_weight(const std::vector<LabImage>& lab, const ConfidenceVideo* occlusion, Voxel i, Voxel j,
                   double w_occl) {
  if (w_occl > 0.0 && occlusion == nullptr)
    throw ParameterError("edge_weight: occlusion weight > 0 requires an occlusion map");
  const auto& li = lab[static_cast<std::size_t>(i.t)];
  const auto& lj = lab[static_cast<std::size_t>(j.t)];
  const Eigen::Vector3d a(li.L(i.y, i.x), li.a(i.y, i.x), li.b(i.y, i.x));
  const Eigen::Vector3d b(lj.L(j.y, j.x), lj.a(j.y, j.x), lj.b(j.y, j.x));
  double oi = 0.0, oj = 0.0;
  if (occlusion != nullptr) {
    oi = occlusion->plane(i.t, 0)(i.y, i.x);
    oj = occlusion->plane(j.t, 0)(j.y, j.x);
  }
  return edge_weight(a, b, oi, oj, w_occl);
}

LabelVideo oversegment(const FrameSequence& frames, const SegParams& params, const ConfidenceVideo* occlusion) {
  frames.validate();
  params.validate();
  const int W = frames.width(), H = frames.height(), T = frames.size();
  if (params.w_occl > 0.0) {
    if (occlusion == nullptr) throw ParameterError("segment: w_occl > 0 requires an occlusion map");
    if (occlusion->width != W || occlusion->height != H || occlusion->frame_count() != T ||
        occlusion->channels != 1)
      throw ValidationError("segment: occlusion map must be single-channel and match the video");
  }
  const ConfidenceVideo* occl = params.w_occl > 0.0 ? occlusion : nullptr;

  std::vector<LabImage> lab(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    LabImage l = rgb_to_lab(frames[t]);
    l.L = gaussian_blur(l.L, params.sigma);
    l.a = gaussian_blur(l.a, params.sigma);
    l.b = gaussian_blur(l.b, params.sigma);
    lab[static_cast<std::size_t>(t)] = std::move(l);
  }

  const auto index = [&](Voxel v) {
    return static_cast<std::uint32_t>((static_cast<std::size_t>(v.t) * H + v.y) * W + v.x);
  };
  std::vector<GraphEdge> edges;
  edges.reserve(static_cast<std::size_t>(W) * H * T * kForwardOffsets.size());
  for_each_neighbour_pair(W, H, T, [&](Voxel a, Voxel b) {
    edges.push_back({edge_weight(lab, occl, a, b, params.w_occl), index(a), index(b)});
  });

  const std::size_t n = static_cast<std::size_t>(W) * H * T;
  DisjointSets sets(n);
  const std::vector<std::int64_t> unit(n, 1);
  felzenszwalb(edges, sets, n, unit, params.k, params.min_size);
  return relabel(sets, W, H, T);
}

double chi_squared(std::span<const double> h, std::span<const double> g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double s = h[i] + g[i];
    if (s > 0.0) acc += (h[i] - g[i]) * (h[i] - g[i]) / s;
  }
  return 0.5 * acc;
}

double descriptor_distance(const RegionDescriptor& a, const RegionDescriptor& b) {
  double lab = 0.0;
  for (std::size_t c = 0; c < 3; ++c) lab += chi_squared(a.lab[c], b.lab[c]);
  lab /= 3.0;
  const double flow = chi_squared(a.flow, b.flow);
  return 1.0 - (1.0 - lab) * (1.0 - flow);
}

std::vector<RegionDescriptor> region_descriptors(const LabelVideo& labels, const FrameSequence& frames,
                                                 const std::vector<FlowField>& flow_fwd) {
  const std::uint32_t regions = labels.region_count();
  std::vector<RegionDescriptor> desc(regions);
  const int T = labels.frame_count();
  auto bin = [](double v, double lo, double hi, int bins) {
    return std::clamp(static_cast<int>((v - lo) / (hi - lo) * bins), 0, bins - 1);
  };
  for (int t = 0; t < T; ++t) {
    const LabImage lab = rgb_to_lab(frames[t]);
    const FlowField* flow = nullptr;
    if (!flow_fwd.empty()) flow = &flow_fwd[static_cast<std::size_t>(std::min(t, static_cast<int>(flow_fwd.size()) - 1))];
    for (int y = 0; y < labels.height; ++y) {
      for (int x = 0; x < labels.width; ++x) {
        RegionDescriptor& d = desc[labels.at(t, y, x)];
        ++d.voxels;
        d.lab[0][static_cast<std::size_t>(bin(lab.L(y, x), 0.0, 100.0, kLabBins))] += 1.0;
        d.lab[1][static_cast<std::size_t>(bin(lab.a(y, x), -128.0, 128.0, kLabBins))] += 1.0;
        d.lab[2][static_cast<std::size_t>(bin(lab.b(y, x), -128.0, 128.0, kLabBins))] += 1.0;
        if (flow) {
          const double u = flow->u(y, x), v = flow->v(y, x);
          const int m = bin(std::hypot(u, v), 0.0, kFlowMagRange, kFlowMagBins);
          const int a = bin(std::atan2(v, u), -std::numbers::pi, std::numbers::pi, kFlowAngleBins);
          d.flow[static_cast<std::size_t>(m * kFlowAngleBins + a)] += 1.0;
        }
      }
    }
  }
  for (RegionDescriptor& d : desc) {
    if (d.voxels == 0) continue;
    const double inv = 1.0 / static_cast<double>(d.voxels);
    for (auto& ch : d.lab)
      for (double& v : ch) v *= inv;
    if (!flow_fwd.empty())
      for (double& v : d.flow) v *= inv;
  }
  return desc;
}

std::vector<LabelVideo> merge_hierarchy(const LabelVideo& labels, const FrameSequence& frames,
                                        const std::vector<FlowField>& flow_fwd, int levels, double k_region) {
  if (levels < 0) throw ParameterError("merge_hierarchy: levels must be >= 0");
  if (levels > 0 && !(k_region > 0.0)) throw ParameterError("merge_hierarchy: k_region must be positive");
  std::vector<LabelVideo> out{labels};
  std::vector<RegionDescriptor> desc = region_descriptors(labels, frames, flow_fwd);
  const int W = labels.width, H = labels.height, T = labels.frame_count();
  double k = k_region;
  for (int level = 1; level <= levels; ++level) {
    const LabelVideo& cur = out.back();
    const auto regions = static_cast<std::uint32_t>(desc.size());

    std::vector<std::uint64_t> adjacency;
    for_each_neighbour_pair(W, H, T, [&](Voxel a, Voxel b) {
      std::uint32_t la = cur.at(a.t, a.y, a.x), lb = cur.at(b.t, b.y, b.x);
      if (la == lb) return;
      if (la > lb) std::swap(la, lb);
      adjacency.push_back((static_cast<std::uint64_t>(la) << 32) | lb);
    });
    std::sort(adjacency.begin(), adjacency.end());
    adjacency.erase(std::unique(adjacency.begin(), adjacency.end()), adjacency.end());

    std::vector<GraphEdge> edges;
    edges.reserve(adjacency.size());
    for (std::uint64_t key : adjacency) {
      const auto a = static_cast<std::uint32_t>(key >> 32), b = static_cast<std::uint32_t>(key);
      edges.push_back({descriptor_distance(desc[a], desc[b]), a, b});
    }
    std::vector<std::int64_t> sizes(regions);
    for (std::uint32_t r = 0; r < regions; ++r) sizes[r] = desc[r].voxels;
    DisjointSets sets(regions);
    felzenszwalb(edges, sets, regions, sizes, k, 1);

    std::vector<std::uint32_t> dense(regions, UINT32_MAX);
    std::uint32_t next = 0;
    LabelVideo merged(W, H, T);
    for (int t = 0; t < T; ++t)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const std::uint32_t root = sets.find(cur.at(t, y, x));
          if (dense[root] == UINT32_MAX) dense[root] = next++;
          merged.at(t, y, x) = dense[root];
        }

    std::vector<RegionDescriptor> coarse(next);
    for (std::uint32_t r = 0; r < regions; ++r) {
      RegionDescriptor& dst = coarse[dense[sets.find(r)]];
      const RegionDescriptor& src = desc[r];
      const double w = static_cast<double>(src.voxels);
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < kLabBins; ++i) dst.lab[c][i] += w * src.lab[c][i];
      for (std::size_t i = 0; i < dst.flow.size(); ++i) dst.flow[i] += w * src.flow[i];
      dst.voxels += src.voxels;
    }
    for (RegionDescriptor& d : coarse) {
      const double inv = 1.0 / static_cast<double>(d.voxels);
      for (auto& ch : d.lab)
        for (double& v : ch) v *= inv;
      for (double& v : d.flow) v *= inv;
    }
    desc = std::move(coarse);
    out.push_back(std::move(merged));
    k *= 2.0;
  }
  return out;
}

Mask region_boundaries(const Plane<std::uint32_t>& labels) { return boundary_mask(labels); }

}  // namespace occlusion
