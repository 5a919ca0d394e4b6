#pragma once

#include "occlusion/image.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("occlusionbound_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline occlusion::RgbImage flat_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  occlusion::RgbImage img(w, h);
  img.r.setConstant(r);
  img.g.setConstant(g);
  img.b.setConstant(b);
  return img;
}

inline occlusion::FlowField constant_flow(int w, int h, float u, float v,
                                          occlusion::FlowDirection d = occlusion::FlowDirection::forward) {
  occlusion::FlowField f(w, h, d);
  f.u.setConstant(u);
  f.v.setConstant(v);
  return f;
}

}  // namespace testing
