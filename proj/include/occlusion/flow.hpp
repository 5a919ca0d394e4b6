#pragma once

#include "occlusion/image.hpp"

#include <vector>

namespace occlusion {

struct FlowParams {
  double alpha = 15.0;   ///< smoothness weight on intensities in [0,255]
  int iterations = 200;  ///< per warp step
  int levels = 4;
  int warps = 2;

  void validate() const;
};

/// Energies recorded at the finest pyramid level, one vector per warp step,
/// one entry before the first iteration and after each iteration.
struct FlowTrace {
  std::vector<std::vector<double>> finest_level_energy;
};

/// Coarse-to-fine Horn-Schunck with warping. Frames are grayscale intensities
/// (Rec.601 luma, [0,255]). Swap the arguments to obtain the backward field.
FlowField estimate_flow(const PlaneD& first, const PlaneD& second, const FlowParams& params = {},
                        FlowTrace* trace = nullptr);

/// Forward and backward fields for every consecutive frame pair.
struct FlowPair {
  std::vector<FlowField> forward;
  std::vector<FlowField> backward;
};

FlowPair estimate_sequence_flow(const FrameSequence& frames, const FlowParams& params = {},
                                int threads = 1);

}  // namespace occlusion
