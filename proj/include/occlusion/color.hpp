#pragma once

#include "occlusion/image.hpp"

#include <Eigen/Core>

namespace occlusion {

/// CIE L*a*b* (D65) of an sRGB triple with channels in [0,255]; accepts
/// non-integer channels so smoothed images can be converted.
Eigen::Vector3d srgb_to_lab(double r, double g, double b);

/// Per-pixel sRGB/D65 to CIE L*a*b*.
LabImage rgb_to_lab(const RgbImage& frame);

/// Rec.601 luma in [0,255].
PlaneD luma(const RgbImage& frame);

/// Separable Gaussian blur with replicated borders. sigma <= 0 returns a copy.
template <typename Scalar>
Plane<Scalar> gaussian_blur(const Plane<Scalar>& in, double sigma);

/// Bilinear sample with coordinates clamped to the plane.
template <typename Scalar>
double sample_bilinear(const Plane<Scalar>& p, double x, double y);

}  // namespace occlusion
