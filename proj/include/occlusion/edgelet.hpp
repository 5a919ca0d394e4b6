#pragma once

#include "occlusion/image.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace occlusion {

inline constexpr int kMinEdgeletLength = 4;

/// Unordered region pair, stored with a < b.
struct EdgeletKey {
  std::uint32_t a = 0, b = 0;
  auto operator<=>(const EdgeletKey&) const = default;
};

/// Two 4-adjacent pixels, p in region a and q in region b, as linear y*W+x indices.
struct PixelPair {
  std::uint32_t p, q;
};

/// Lattice corner; corner (x, y) is the top-left corner of pixel (x, y).
struct Corner {
  int x, y;
  bool operator==(const Corner&) const = default;
};

/// The boundary between one region pair within one frame.
struct EdgeletInstance {
  std::size_t edgelet = 0;  ///< index into EdgeletSet::edgelets
  int frame = 0;
  std::vector<PixelPair> pairs;
  /// Odd-degree corners of the crack curve: two for an open fragment, none for a
  /// closed curve; fragments with more are reduced to their farthest pair.
  std::vector<Corner> endpoints;
  bool is_short = false;  ///< fewer than the minimum pair count

  int length() const { return static_cast<int>(pairs.size()); }
};

struct Edgelet {
  EdgeletKey id;
  std::vector<std::size_t> instances;  ///< in frame order
  int lifetime() const { return static_cast<int>(instances.size()); }
};

/// Per-frame adjacency of instances that share a junction corner (a 2x2 window
/// holding three or more labels). Symmetric, no self-loops, neighbours sorted.
struct EdgeletGraph {
  std::vector<std::vector<std::size_t>> neighbors;
};

/// Instances are ordered by (edgelet id, frame).
struct EdgeletSet {
  int width = 0, height = 0, frames = 0;
  std::vector<Edgelet> edgelets;
  std::vector<EdgeletInstance> instances;
  EdgeletGraph graph;
  std::vector<std::vector<std::size_t>> frame_instances;  ///< instance indices per frame, ascending

  const EdgeletKey& key_of(std::size_t instance) const { return edgelets[instances[instance].edgelet].id; }
};

EdgeletSet extract_edgelets(const LabelVideo& labels, int min_edgelet_len = kMinEdgeletLength, int threads = 1);

/// 1 when at least `rho` of the instance's pairs straddle two different ground-truth ids.
std::vector<int> label_edgelets(const EdgeletSet& set, const LabelVideo& gt_ids, double rho = 0.5);

/// Binary map of frame t with both pixels of every selected instance's pairs set.
template <typename Pred>
Mask splat_instances(const EdgeletSet& set, int frame, Pred&& selected) {
  Mask m = Mask::Zero(set.height, set.width);
  auto* data = m.data();
  for (std::size_t i : set.frame_instances[static_cast<std::size_t>(frame)]) {
    if (!selected(i)) continue;
    for (const PixelPair& pr : set.instances[i].pairs) data[pr.p] = data[pr.q] = 1;
  }
  return m;
}

/// Debug dump: per edgelet its key, frames and lengths; per instance its neighbours.
std::string edgelets_to_json(const EdgeletSet& set);

}  // namespace occlusion
