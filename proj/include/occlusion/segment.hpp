#pragma once

#include "occlusion/image.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace occlusion {

struct SegParams {
  double k = 150.0;     ///< Felzenszwalb scale in Lab units
  int min_size = 50;    ///< voxels
  double w_occl = 0.0;  ///< occlusion weight in [0,1]
  double sigma = 0.8;   ///< per-frame Gaussian pre-smoothing

  void validate() const;
};

struct Voxel {
  int t, y, x;
};

/// d = (1 - w) * |lab_i - lab_j| + w * |occl_i - occl_j|
double edge_weight(const Eigen::Vector3d& lab_i, const Eigen::Vector3d& lab_j, double occl_i, double occl_j,
                   double w_occl);

/// Volume form. `occlusion` is a single-channel probability video and must be
/// present whenever w_occl > 0 (ParameterError otherwise).
double edge_weight(const std::vector<LabImage>& lab, const ConfidenceVideo* occlusion, Voxel i, Voxel j,
                   double w_occl);

/// Graph-based over-segmentation of the video volume into super-voxels.
/// Regions are 26-connected, at least min_size voxels where the volume allows,
/// and labelled densely in first-appearance (t, y, x) order.
LabelVideo oversegment(const FrameSequence& frames, const SegParams& params,
                       const ConfidenceVideo* occlusion = nullptr);

inline constexpr int kLabBins = 20;
inline constexpr int kFlowMagBins = 10;
inline constexpr int kFlowAngleBins = 16;
inline constexpr double kFlowMagRange = 10.0;

/// L1-normalised appearance and motion histograms of one region.
struct RegionDescriptor {
  std::array<std::array<double, kLabBins>, 3> lab{};
  std::array<double, kFlowMagBins * kFlowAngleBins> flow{};
  std::int64_t voxels = 0;
};

/// 0.5 * sum (h - g)^2 / (h + g); bins with h + g == 0 are skipped.
double chi_squared(std::span<const double> h, std::span<const double> g);

/// 1 - (1 - chi2_lab)(1 - chi2_flow), chi2_lab averaged over the three channels.
double descriptor_distance(const RegionDescriptor& a, const RegionDescriptor& b);

/// `flow_fwd` may be empty; motion histograms are then all zero.
std::vector<RegionDescriptor> region_descriptors(const LabelVideo& labels, const FrameSequence& frames,
                                                 const std::vector<FlowField>& flow_fwd);

/// Element 0 is the input; each further level merges regions of the previous one
/// on descriptor distance with k_region doubling per level.
std::vector<LabelVideo> merge_hierarchy(const LabelVideo& labels, const FrameSequence& frames,
                                        const std::vector<FlowField>& flow_fwd, int levels, double k_region);

/// Pixels with a 4-neighbour carrying a different label.
Mask region_boundaries(const Plane<std::uint32_t>& labels);

}  // namespace occlusion
