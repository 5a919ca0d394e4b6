#include "occlusion/features.hpp"

#include "occlusion/color.hpp"
#include "occlusion/csv.hpp"
#include "occlusion/error.hpp"
#include "occlusion/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace occlusion {
namespace {

constexpr double kAngleEpsilon = 1e-6;
constexpr int kColorWindowRadius = 2;

Eigen::Vector2d flow_at(const FlowField& f, int x, int y) { return {f.u(y, x), f.v(y, x)}; }

// Landing pixel of x under the forward field, rounded and clamped into the frame.
std::pair<int, int> advect(const FlowField& fwd, int x, int y) {
  const int tx = static_cast<int>(std::lround(x + static_cast<double>(fwd.u(y, x))));
  const int ty = static_cast<int>(std::lround(y + static_cast<double>(fwd.v(y, x))));
  return {std::clamp(tx, 0, fwd.width() - 1), std::clamp(ty, 0, fwd.height() - 1)};
}

double derivative(const PlaneF& p, int x, int y, bool along_x) {
  const int n = static_cast<int>(along_x ? p.cols() : p.rows());
  const int i = along_x ? x : y;
  if (n < 2) return 0.0;
  auto at = [&](int j) { return static_cast<double>(along_x ? p(y, j) : p(j, x)); };
  if (i == 0) return at(1) - at(0);
  if (i == n - 1) return at(n - 1) - at(n - 2);
  return 0.5 * (at(i + 1) - at(i - 1));
}

// Five per-pixel flow cue planes of one frame pair.
struct PixelCues {
  PlaneD pc, tg, mag, rc, rc_theta;
};

PixelCues pixel_cues(const PlaneD& i0, const PlaneD& i1, const FlowField& fwd, const FlowField& bwd) {
  const int H = fwd.height(), W = fwd.width();
  PixelCues c{PlaneD(H, W), PlaneD(H, W), PlaneD(H, W), PlaneD(H, W), PlaneD(H, W)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      c.pc(y, x) = photo_consistency(i0, i1, fwd, x, y);
      c.tg(y, x) = flow_gradient(fwd, x, y).norm();
      c.mag(y, x) = flow_mag_variance(fwd, x, y);
      c.rc(y, x) = reverse_flow_constancy(fwd, bwd, x, y);
      c.rc_theta(y, x) = reverse_flow_angle(fwd, bwd, x, y);
    }
  }
  return c;
}

}  // namespace

const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = [] {
    std::array<std::string, kFeatureDim> n{"boundary_length", "smoothness", "color_diff", "f_pc", "f_tg",
                                           "f_mag",           "f_rc",       "f_rc_theta"};
    const char* classes[] = {"sky", "ground", "static_solid", "porous", "movable"};
    for (int c = 0; c < 5; ++c) {
      n[static_cast<std::size_t>(8 + c)] = std::string("gconf_a_") + classes[c];
      n[static_cast<std::size_t>(13 + c)] = std::string("gconf_b_") + classes[c];
      n[static_cast<std::size_t>(18 + c)] = std::string("gdiff_") + classes[c];
    }
    n[23] = "gdsum";
    n[24] = "glabel_a";
    n[25] = "glabel_b";
    return n;
  }();
  return names;
}

std::vector<int> feature_columns(FeatureSet set) {
  const int n = set == FeatureSet::appearance ? 3 : set == FeatureSet::appearance_flow ? 8 : kFeatureDim;
  std::vector<int> cols(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cols[static_cast<std::size_t>(i)] = i;
  return cols;
}

const char* feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::appearance: return "App";
    case FeatureSet::appearance_flow: return "App+Flow";
    case FeatureSet::all: return "ALL";
  }
  return "?";
}

double photo_consistency(const PlaneD& i0, const PlaneD& i1, const FlowField& fwd, int x, int y) {
  const double target = sample_bilinear(i1, x + static_cast<double>(fwd.u(y, x)), y + static_cast<double>(fwd.v(y, x)));
  return std::abs(i0(y, x) - target);
}

Eigen::Vector2d flow_gradient(const FlowField& fwd, int x, int y) {
  const Eigen::Vector2d du(derivative(fwd.u, x, y, true), derivative(fwd.u, x, y, false));
  const Eigen::Vector2d dv(derivative(fwd.v, x, y, true), derivative(fwd.v, x, y, false));
  return {du.norm(), dv.norm()};
}

double flow_mag_variance(const FlowField& fwd, int x, int y) {
  std::array<double, 9> mags{};
  int n = 0;
  for (int yy = std::max(0, y - 1); yy <= std::min(fwd.height() - 1, y + 1); ++yy)
    for (int xx = std::max(0, x - 1); xx <= std::min(fwd.width() - 1, x + 1); ++xx)
      mags[static_cast<std::size_t>(n++)] = flow_at(fwd, xx, yy).norm();
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += mags[static_cast<std::size_t>(i)];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (mags[static_cast<std::size_t>(i)] - mean) * (mags[static_cast<std::size_t>(i)] - mean);
  return var / n;
}

double reverse_flow_constancy(const FlowField& fwd, const FlowField& bwd, int x, int y) {
  const auto [tx, ty] = advect(fwd, x, y);
  const Eigen::Vector2d back = Eigen::Vector2d(tx, ty) + flow_at(bwd, tx, ty);
  return (Eigen::Vector2d(x, y) - back).norm();
}

double reverse_flow_angle(const FlowField& fwd, const FlowField& bwd, int x, int y) {
  const auto [tx, ty] = advect(fwd, x, y);
  const Eigen::Vector2d f = flow_at(fwd, x, y);
  const Eigen::Vector2d b = flow_at(bwd, tx, ty);
  const double nf = f.norm(), nb = b.norm();
  if (nf <= kAngleEpsilon || nb <= kAngleEpsilon) return 0.0;
  const double c = std::clamp(f.dot(b) / (nf * nb), -1.0, 1.0);
  return std::abs(std::numbers::pi - std::acos(c));
}

RegionStats::RegionStats(const LabelVideo& labels, const std::vector<LabImage>& lab, const GeometricContext* geom)
    : frames_(static_cast<std::size_t>(labels.frame_count())) {
  for (int t = 0; t < labels.frame_count(); ++t) {
    auto& map = frames_[static_cast<std::size_t>(t)];
    const LabImage& l = lab[static_cast<std::size_t>(t)];
    for (int y = 0; y < labels.height; ++y) {
      for (int x = 0; x < labels.width; ++x) {
        Entry& e = map[labels.at(t, y, x)];
        e.count += 1.0;
        e.lab += Eigen::Vector3d(l.L(y, x), l.a(y, x), l.b(y, x));
        if (geom)
          for (int c = 0; c < kGeometricClasses; ++c) e.geom[c] += geom->plane(t, c)(y, x);
      }
    }
  }
}

const RegionStats::Entry& RegionStats::at(int frame, std::uint32_t region) const {
  const auto& map = frames_.at(static_cast<std::size_t>(frame));
  const auto it = map.find(region);
  if (it == map.end()) throw ValidationError("region absent from frame");
  return it->second;
}

Eigen::Vector3d RegionStats::mean_lab(int frame, std::uint32_t region, int radius) const {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  double count = 0.0;
  for (int t = std::max(0, frame - radius); t <= std::min(frame_count() - 1, frame + radius); ++t) {
    const auto& map = frames_[static_cast<std::size_t>(t)];
    if (const auto it = map.find(region); it != map.end()) {
      sum += it->second.lab;
      count += it->second.count;
    }
  }
  return count > 0.0 ? Eigen::Vector3d(sum / count) : sum;
}

Eigen::Matrix<double, kGeometricClasses, 1> RegionStats::mean_geom(int frame, std::uint32_t region) const {
  const Entry& e = at(frame, region);
  return e.geom / e.count;
}

double boundary_smoothness(const EdgeletInstance& inst) {
  const double pairs = static_cast<double>(inst.length());
  if (inst.endpoints.size() < 2) return pairs;
  const double dx = inst.endpoints[0].x - inst.endpoints[1].x;
  const double dy = inst.endpoints[0].y - inst.endpoints[1].y;
  // Disjoint pieces of one region pair can put the endpoints farther apart than
  // the boundary is long; a straight line is the floor.
  return std::max(1.0, pairs / std::max(1.0, std::hypot(dx, dy)));
}

BoundaryRegionFeatures boundary_region_features(const EdgeletInstance& inst, const EdgeletKey& key,
                                                const RegionStats& stats) {
  BoundaryRegionFeatures f;
  f.length = std::log1p(static_cast<double>(inst.length()));
  f.smoothness = boundary_smoothness(inst);
  f.color_diff = (stats.mean_lab(inst.frame, key.a, kColorWindowRadius) -
                  stats.mean_lab(inst.frame, key.b, kColorWindowRadius))
                     .norm();
  return f;
}

std::array<double, 18> geometric_features(const EdgeletInstance& inst, const EdgeletKey& key,
                                          const RegionStats& stats) {
  const auto ga = stats.mean_geom(inst.frame, key.a);
  const auto gb = stats.mean_geom(inst.frame, key.b);
  std::array<double, 18> out{};
  Eigen::Index ia = 0, ib = 0;
  ga.maxCoeff(&ia);  // first maximum wins
  gb.maxCoeff(&ib);
  for (int c = 0; c < kGeometricClasses; ++c) {
    out[static_cast<std::size_t>(c)] = ga[c];
    out[static_cast<std::size_t>(5 + c)] = gb[c];
    out[static_cast<std::size_t>(10 + c)] = ga[c] - gb[c];
    out[15] += std::abs(ga[c] - gb[c]);
  }
  out[16] = static_cast<double>(ia);
  out[17] = static_cast<double>(ib);
  return out;
}

FeatureMatrix compute_features(const EdgeletSet& set, const FeatureInputs& in, int threads) {
  const int T = in.labels.frame_count();
  if (in.frames.size() != T) throw ValidationError("compute_features: frame count mismatch");
  if (in.geometry.frame_count() != T || in.geometry.channels != kGeometricClasses)
    throw ValidationError("compute_features: geometric context does not match the video");
  for (int t = 0; t + 1 < T; ++t)
    if (static_cast<int>(in.flow_fwd.size()) <= t || static_cast<int>(in.flow_bwd.size()) <= t)
      throw MissingArtifact("compute_features: missing flow for frame pair " + std::to_string(t));

  std::vector<PlaneD> gray(static_cast<std::size_t>(T));
  std::vector<LabImage> lab(static_cast<std::size_t>(T));
  parallel_for(static_cast<std::size_t>(T), threads, [&](std::size_t t) {
    gray[t] = luma(in.frames[static_cast<int>(t)]) / 255.0;
    lab[t] = rgb_to_lab(in.frames[static_cast<int>(t)]);
  });
  std::vector<PixelCues> cues(static_cast<std::size_t>(T - 1));
  parallel_for(cues.size(), threads, [&](std::size_t t) {
    cues[t] = pixel_cues(gray[t], gray[t + 1], in.flow_fwd[t], in.flow_bwd[t]);
  });
  const RegionStats stats(in.labels, lab, &in.geometry);

  FeatureMatrix X(static_cast<Eigen::Index>(set.instances.size()), kFeatureDim);
  parallel_for(set.instances.size(), threads, [&](std::size_t i) {
    const EdgeletInstance& inst = set.instances[i];
    const EdgeletKey& key = set.key_of(i);
    const PixelCues& c = cues[static_cast<std::size_t>(std::min(inst.frame, T - 2))];
    const auto row = static_cast<Eigen::Index>(i);

    const BoundaryRegionFeatures br = boundary_region_features(inst, key, stats);
    X(row, 0) = br.length;
    X(row, 1) = br.smoothness;
    X(row, 2) = br.color_diff;

    std::array<double, 5> acc{};
    for (const PixelPair& pr : inst.pairs) {
      for (std::uint32_t p : {pr.p, pr.q}) {
        acc[0] += c.pc.data()[p];
        acc[1] += c.tg.data()[p];
        acc[2] += c.mag.data()[p];
        acc[3] += c.rc.data()[p];
        acc[4] += c.rc_theta.data()[p];
      }
    }
    const double n = 2.0 * inst.length();
    for (int k = 0; k < 5; ++k) X(row, 3 + k) = acc[static_cast<std::size_t>(k)] / n;

    const auto g = geometric_features(inst, key, stats);
    for (int k = 0; k < 18; ++k) X(row, 8 + k) = g[static_cast<std::size_t>(k)];
  });
  if (!X.allFinite()) throw NumericalError("compute_features: non-finite feature value");
  return X;
}

FeatureTable make_feature_table(const EdgeletSet& set, FeatureMatrix X, const std::vector<int>& labels) {
  FeatureTable t;
  t.X = std::move(X);
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    t.keys.push_back(set.key_of(i));
    t.frames.push_back(set.instances[i].frame);
    t.labels.push_back(labels.empty() ? -1 : labels[i]);
  }
  return t;
}

std::string features_to_csv(const FeatureTable& table) {
  std::string out;
  for (const auto& name : feature_names()) out += name + ",";
  out += "edgelet_a,edgelet_b,frame,gt_label\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (int c = 0; c < kFeatureDim; ++c) out += csv::number(table.X(static_cast<Eigen::Index>(r), c)) + ",";
    out += std::to_string(table.keys[r].a) + "," + std::to_string(table.keys[r].b) + "," +
           std::to_string(table.frames[r]) + "," + std::to_string(table.labels[r]) + "\n";
  }
  return out;
}

FeatureTable features_from_csv(const std::string& text) {
  const auto rows = csv::lines(text);
  if (rows.empty()) throw FormatError("features csv: missing header");
  const auto header = csv::split(rows.front());
  if (header.size() != kFeatureDim + 4) throw SchemaError("features csv: expected 30 columns");
  for (int c = 0; c < kFeatureDim; ++c)
    if (header[static_cast<std::size_t>(c)] != feature_names()[static_cast<std::size_t>(c)])
      throw SchemaError("features csv: unexpected column " + header[static_cast<std::size_t>(c)]);
  FeatureTable t;
  t.X.resize(static_cast<Eigen::Index>(rows.size() - 1), kFeatureDim);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = csv::split(rows[r]);
    if (cells.size() != header.size()) throw FormatError("features csv: ragged row " + std::to_string(r));
    for (int c = 0; c < kFeatureDim; ++c)
      t.X(static_cast<Eigen::Index>(r - 1), c) = csv::to_double(cells[static_cast<std::size_t>(c)]);
    t.keys.push_back({static_cast<std::uint32_t>(csv::to_int(cells[kFeatureDim])),
                      static_cast<std::uint32_t>(csv::to_int(cells[kFeatureDim + 1]))});
    t.frames.push_back(static_cast<int>(csv::to_int(cells[kFeatureDim + 2])));
    t.labels.push_back(static_cast<int>(csv::to_int(cells[kFeatureDim + 3])));
  }
  return t;
}

int pair_count_from_length_feature(double length_feature) {
  return static_cast<int>(std::lround(std::expm1(length_feature)));
}

}  // namespace occlusion
