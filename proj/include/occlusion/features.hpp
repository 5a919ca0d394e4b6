#pragma once

#include "occlusion/edgelet.hpp"
#include "occlusion/image.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

namespace occlusion {

inline constexpr int kFeatureDim = 26;

/// Column order of the per-instance feature vector:
///  0 boundary_length  log(1 + pairs)
///  1 smoothness       pairs / endpoint distance
///  2 color_diff       region mean Lab distance (+-2 frames)
///  3..7               mean photo-consistency, flow gradient, magnitude variance,
///                     reverse-flow constancy, reverse-flow angle
///  8..12 / 13..17     mean geometric confidences of side a / side b
///  18..22             per-class difference a - b
///  23                 sum of absolute differences
///  24, 25             most likely class of side a / side b
const std::array<std::string, kFeatureDim>& feature_names();

using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;
/// One row per edgelet instance.
using FeatureMatrix = Eigen::MatrixXd;

enum class FeatureSet { appearance, appearance_flow, all };
std::vector<int> feature_columns(FeatureSet set);
const char* feature_set_name(FeatureSet set);

// Per-pixel flow cues. Intensities are grayscale in [0,1].

/// |I_t(x) - I_{t+1}(x + F(x))|, bilinear lookup clamped to the border.
double photo_consistency(const PlaneD& i0, const PlaneD& i1, const FlowField& fwd, int x, int y);
/// (|grad u|, |grad v|) with central differences, one-sided at borders.
Eigen::Vector2d flow_gradient(const FlowField& fwd, int x, int y);
/// Population variance of |F| over the 3x3 window, clipped at borders.
double flow_mag_variance(const FlowField& fwd, int x, int y);
/// |x - (x' + B(x'))| with x' = round(x + F(x)) clamped into the frame.
double reverse_flow_constancy(const FlowField& fwd, const FlowField& bwd, int x, int y);
/// |pi - angle(F(x), B(x'))|; 0 when either vector is shorter than 1e-6.
double reverse_flow_angle(const FlowField& fwd, const FlowField& bwd, int x, int y);

/// Per (frame, region) sums of Lab colour and geometric confidence.
class RegionStats {
 public:
  struct Entry {
    double count = 0.0;
    Eigen::Vector3d lab = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, kGeometricClasses, 1> geom = Eigen::Matrix<double, kGeometricClasses, 1>::Zero();
  };

  /// `geom` may be null, in which case geometric sums stay zero.
  RegionStats(const LabelVideo& labels, const std::vector<LabImage>& lab, const GeometricContext* geom);

  const Entry& at(int frame, std::uint32_t region) const;
  /// Mean Lab colour of `region` pooled over frames [frame - radius, frame + radius].
  Eigen::Vector3d mean_lab(int frame, std::uint32_t region, int radius) const;
  Eigen::Matrix<double, kGeometricClasses, 1> mean_geom(int frame, std::uint32_t region) const;
  int frame_count() const { return static_cast<int>(frames_.size()); }

 private:
  std::vector<std::unordered_map<std::uint32_t, Entry>> frames_;
};

struct BoundaryRegionFeatures {
  double length = 0.0;
  double smoothness = 0.0;
  double color_diff = 0.0;
};

/// Pair count over endpoint distance, at least 1; closed curves report the pair count.
double boundary_smoothness(const EdgeletInstance& inst);

BoundaryRegionFeatures boundary_region_features(const EdgeletInstance& inst, const EdgeletKey& key,
                                                const RegionStats& stats);

/// [conf_a(5), conf_b(5), diff(5), |diff| sum, argmax_a, argmax_b]; ties in the
/// argmax resolve to the lowest class index.
std::array<double, 18> geometric_features(const EdgeletInstance& inst, const EdgeletKey& key,
                                          const RegionStats& stats);

struct FeatureInputs {
  const LabelVideo& labels;
  const FrameSequence& frames;
  const std::vector<FlowField>& flow_fwd;  ///< T-1 fields
  const std::vector<FlowField>& flow_bwd;  ///< T-1 fields
  const GeometricContext& geometry;
};

/// One row per instance of `set`, in instance order. Pixel cues are averaged over
/// both pixels of every boundary pair; the last frame reuses the final frame pair.
FeatureMatrix compute_features(const EdgeletSet& set, const FeatureInputs& in, int threads = 1);

/// Feature rows with their identity and optional ground truth (-1 when unknown).
struct FeatureTable {
  std::vector<EdgeletKey> keys;
  std::vector<int> frames;
  std::vector<int> labels;
  FeatureMatrix X;

  std::size_t rows() const { return keys.size(); }
};

FeatureTable make_feature_table(const EdgeletSet& set, FeatureMatrix X, const std::vector<int>& labels);
std::string features_to_csv(const FeatureTable& table);
FeatureTable features_from_csv(const std::string& text);

/// Number of boundary pairs recovered from the boundary_length column.
int pair_count_from_length_feature(double length_feature);

}  // namespace occlusion
