#include "occlusion/color.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace occlusion {
namespace {

// D65 reference white for the sRGB primaries below.
constexpr double kWhiteX = 0.950470;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.088830;

double srgb_to_linear(double c) {
  c /= 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_to_linear(i);
    return t;
  }();
  return table;
}

Eigen::Vector3d linear_to_lab(double r, double g, double b) {
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace

Eigen::Vector3d srgb_to_lab(double r, double g, double b) {
  return linear_to_lab(srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
}

LabImage rgb_to_lab(const RgbImage& frame) {
  const auto& lut = linear_table();
  LabImage out;
  out.L.resize(frame.height(), frame.width());
  out.a.resize(frame.height(), frame.width());
  out.b.resize(frame.height(), frame.width());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const Eigen::Vector3d lab =
          linear_to_lab(lut[frame.r(y, x)], lut[frame.g(y, x)], lut[frame.b(y, x)]);
      out.L(y, x) = lab[0];
      out.a(y, x) = lab[1];
      out.b(y, x) = lab[2];
    }
  }
  return out;
}

PlaneD luma(const RgbImage& frame) {
  return 0.299 * frame.r.cast<double>() + 0.587 * frame.g.cast<double>() +
         0.114 * frame.b.cast<double>();
}

template <typename Scalar>
Plane<Scalar> gaussian_blur(const Plane<Scalar>& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const auto rows = static_cast<int>(in.rows());
  const auto cols = static_cast<int>(in.cols());
  PlaneD tmp(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, cols - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] * static_cast<double>(in(y, xx));
      }
      tmp(y, x) = acc;
    }
  }
  Plane<Scalar> out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, rows - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] * tmp(yy, x);
      }
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

template <typename Scalar>
double sample_bilinear(const Plane<Scalar>& p, double x, double y) {
  const double maxx = static_cast<double>(p.cols() - 1);
  const double maxy = static_cast<double>(p.rows() - 1);
  x = std::clamp(x, 0.0, maxx);
  y = std::clamp(y, 0.0, maxy);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, static_cast<int>(p.cols() - 1));
  const int y1 = std::min(y0 + 1, static_cast<int>(p.rows() - 1));
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * static_cast<double>(p(y0, x0)) + fx * static_cast<double>(p(y0, x1));
  const double bot = (1.0 - fx) * static_cast<double>(p(y1, x0)) + fx * static_cast<double>(p(y1, x1));
  return (1.0 - fy) * top + fy * bot;
}

template PlaneD gaussian_blur<double>(const PlaneD&, double);
template PlaneF gaussian_blur<float>(const PlaneF&, double);
template double sample_bilinear<double>(const PlaneD&, double, double);
template double sample_bilinear<float>(const PlaneF&, double, double);

}  // namespace occlusion
