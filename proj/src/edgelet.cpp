#include "occlusion/edgelet.hpp"

#include "occlusion/error.hpp"
#include "occlusion/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace occlusion {
namespace {

struct FrameInstance {
  std::vector<PixelPair> pairs;
  std::vector<std::uint32_t> corners;  // crack endpoints, two per pair
};

struct FrameExtraction {
  std::map<EdgeletKey, FrameInstance> instances;
  std::vector<std::pair<EdgeletKey, EdgeletKey>> adjacent;
};

EdgeletKey make_key(std::uint32_t l0, std::uint32_t l1) { return l0 < l1 ? EdgeletKey{l0, l1} : EdgeletKey{l1, l0}; }

FrameExtraction extract_frame(const Plane<std::uint32_t>& lab) {
  const auto H = static_cast<int>(lab.rows()), W = static_cast<int>(lab.cols());
  const auto corner = [W](int cx, int cy) { return static_cast<std::uint32_t>(cy * (W + 1) + cx); };
  FrameExtraction out;
  auto add = [&](int x0, int y0, int x1, int y1, std::uint32_t c0, std::uint32_t c1) {
    const std::uint32_t l0 = lab(y0, x0), l1 = lab(y1, x1);
    const EdgeletKey key = make_key(l0, l1);
    FrameInstance& inst = out.instances[key];
    const auto i0 = static_cast<std::uint32_t>(y0 * W + x0), i1 = static_cast<std::uint32_t>(y1 * W + x1);
    inst.pairs.push_back(l0 == key.a ? PixelPair{i0, i1} : PixelPair{i1, i0});
    inst.corners.push_back(c0);
    inst.corners.push_back(c1);
  };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (x + 1 < W && lab(y, x) != lab(y, x + 1)) add(x, y, x + 1, y, corner(x + 1, y), corner(x + 1, y + 1));
      if (y + 1 < H && lab(y, x) != lab(y + 1, x)) add(x, y, x, y + 1, corner(x, y + 1), corner(x + 1, y + 1));
    }
  }
  for (int cy = 1; cy < H; ++cy) {
    for (int cx = 1; cx < W; ++cx) {
      const std::uint32_t tl = lab(cy - 1, cx - 1), tr = lab(cy - 1, cx), bl = lab(cy, cx - 1), br = lab(cy, cx);
      std::array<std::uint32_t, 4> win{tl, tr, bl, br};
      std::sort(win.begin(), win.end());
      if (std::unique(win.begin(), win.end()) - win.begin() < 3) continue;
      std::vector<EdgeletKey> keys;
      for (auto [p, q] : {std::pair{tl, tr}, {bl, br}, {tl, bl}, {tr, br}})
        if (p != q) keys.push_back(make_key(p, q));
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j) out.adjacent.emplace_back(keys[i], keys[j]);
    }
  }
  return out;
}

std::vector<Corner> endpoints_of(std::vector<std::uint32_t> corners, int W) {
  std::sort(corners.begin(), corners.end());
  std::vector<Corner> odd;
  for (std::size_t i = 0; i < corners.size();) {
    std::size_t j = i;
    while (j < corners.size() && corners[j] == corners[i]) ++j;
    if ((j - i) % 2 == 1)
      odd.push_back({static_cast<int>(corners[i] % static_cast<std::uint32_t>(W + 1)),
                     static_cast<int>(corners[i] / static_cast<std::uint32_t>(W + 1))});
    i = j;
  }
  if (odd.size() <= 2) return odd;
  std::size_t bi = 0, bj = 1;
  long best = -1;
  for (std::size_t i = 0; i < odd.size(); ++i)
    for (std::size_t j = i + 1; j < odd.size(); ++j) {
      const long dx = odd[i].x - odd[j].x, dy = odd[i].y - odd[j].y;
      if (dx * dx + dy * dy > best) {
        best = dx * dx + dy * dy;
        bi = i;
        bj = j;
      }
    }
  return {odd[bi], odd[bj]};
}

}  // namespace

EdgeletSet extract_edgelets(const LabelVideo& labels, int min_edgelet_len, int threads) {
  const int T = labels.frame_count();
  std::vector<FrameExtraction> per_frame(static_cast<std::size_t>(T));
  parallel_for(per_frame.size(), threads,
               [&](std::size_t t) { per_frame[t] = extract_frame(labels.frames[t]); });

  EdgeletSet set;
  set.width = labels.width;
  set.height = labels.height;
  set.frames = T;

  std::vector<std::pair<EdgeletKey, int>> order;
  for (int t = 0; t < T; ++t)
    for (const auto& [key, inst] : per_frame[static_cast<std::size_t>(t)].instances) order.emplace_back(key, t);
  std::sort(order.begin(), order.end());

  std::vector<std::map<EdgeletKey, std::size_t>> lookup(static_cast<std::size_t>(T));
  set.instances.reserve(order.size());
  for (const auto& [key, t] : order) {
    if (set.edgelets.empty() || set.edgelets.back().id != key) set.edgelets.push_back({key, {}});
    FrameInstance& src = per_frame[static_cast<std::size_t>(t)].instances.at(key);
    EdgeletInstance inst;
    inst.edgelet = set.edgelets.size() - 1;
    inst.frame = t;
    inst.endpoints = endpoints_of(std::move(src.corners), labels.width);
    inst.pairs = std::move(src.pairs);
    inst.is_short = inst.length() < min_edgelet_len;
    const std::size_t index = set.instances.size();
    set.edgelets.back().instances.push_back(index);
    lookup[static_cast<std::size_t>(t)][key] = index;
    set.instances.push_back(std::move(inst));
  }

  set.frame_instances.assign(static_cast<std::size_t>(T), {});
  for (std::size_t i = 0; i < set.instances.size(); ++i)
    set.frame_instances[static_cast<std::size_t>(set.instances[i].frame)].push_back(i);

  set.graph.neighbors.assign(set.instances.size(), {});
  for (int t = 0; t < T; ++t) {
    for (const auto& [ka, kb] : per_frame[static_cast<std::size_t>(t)].adjacent) {
      const std::size_t a = lookup[static_cast<std::size_t>(t)].at(ka);
      const std::size_t b = lookup[static_cast<std::size_t>(t)].at(kb);
      set.graph.neighbors[a].push_back(b);
      set.graph.neighbors[b].push_back(a);
    }
  }
  for (auto& n : set.graph.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return set;
}

std::vector<int> label_edgelets(const EdgeletSet& set, const LabelVideo& gt_ids, double rho) {
  if (gt_ids.width != set.width || gt_ids.height != set.height || gt_ids.frame_count() != set.frames)
    throw ValidationError("label_edgelets: ground truth does not match the segmentation dimensions");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("label_edgelets: rho must lie in [0,1]");
  std::vector<int> out(set.instances.size(), 0);
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const EdgeletInstance& inst = set.instances[i];
    const std::uint32_t* gt = gt_ids.frames[static_cast<std::size_t>(inst.frame)].data();
    std::size_t straddling = 0;
    for (const PixelPair& pr : inst.pairs)
      if (gt[pr.p] != gt[pr.q]) ++straddling;
    out[i] = static_cast<double>(straddling) >= rho * static_cast<double>(inst.pairs.size()) ? 1 : 0;
  }
  return out;
}

std::string edgelets_to_json(const EdgeletSet& set) {
  nlohmann::json edgelets = nlohmann::json::array();
  for (const Edgelet& e : set.edgelets) {
    nlohmann::json frames = nlohmann::json::array(), lengths = nlohmann::json::array(),
                   instances = nlohmann::json::array();
    for (std::size_t i : e.instances) {
      frames.push_back(set.instances[i].frame);
      lengths.push_back(set.instances[i].length());
      instances.push_back(i);
    }
    edgelets.push_back({{"id", {e.id.a, e.id.b}}, {"frames", frames}, {"lengths", lengths}, {"instances", instances}});
  }
  nlohmann::json adjacency = nlohmann::json::array();
  for (const auto& n : set.graph.neighbors) adjacency.push_back(n);
  nlohmann::json doc{{"width", set.width},   {"height", set.height},    {"frames", set.frames},
                     {"edgelets", edgelets}, {"adjacency", adjacency}};
  return doc.dump(1) + "\n";
}

}  // namespace occlusion
