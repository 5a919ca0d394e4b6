#pragma once

#include "occlusion/image.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace occlusion {

enum class TextureKind {
  value_noise,  ///< smooth lattice noise around the base color
  speckle,      ///< two-tone blobs, high contrast (porous vegetation)
};

struct TextureSpec {
  std::array<double, 3> base_rgb{128, 128, 128};
  double amplitude = 8.0;  ///< peak deviation from base, per channel
  int cell = 6;            ///< lattice spacing in pixels
  TextureKind kind = TextureKind::value_noise;
  std::array<double, 3> speckle_rgb{0, 0, 0};  ///< second tone of a speckle texture
  std::uint64_t seed = 1;
};

/// A static background element moving only with the camera. Bands are
/// horizontal and span [y0, y1) in layer coordinates (the first band extends
/// to -inf, the last to +inf); blocks are axis-aligned rectangles drawn over bands.
struct BackgroundLayer {
  enum class Kind { band, block };
  Kind kind = Kind::band;
  GeometricClass cls = GeometricClass::sky;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  TextureSpec texture;
};

enum class Shape { rectangle, ellipse };

/// Movable foreground layer; (x, y) is the top-left corner at frame 0.
struct SceneObject {
  Shape shape = Shape::rectangle;
  int x = 0, y = 0, w = 0, h = 0;
  int vx = 0, vy = 0;  ///< pixels per frame
  int depth = 0;       ///< smaller is closer to the camera
  TextureSpec texture;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  int frame_count = 30;
  std::vector<BackgroundLayer> background;
  std::vector<SceneObject> objects;
  int camera_vx = 0, camera_vy = 0;
  std::uint64_t seed = 1;

  /// Throws ParameterError on zero-area objects, frame_count < 2, empty background
  /// or ambiguous depth order.
  void validate() const;
};

struct SyntheticTruth {
  /// Front-most layer id per pixel; background layers come first, then objects
  /// in the order they are listed.
  LabelVideo gt_object_ids;
  GeometricContext gt_geometric;
  std::vector<FlowField> flow_fwd;  ///< T-1 fields, frame t -> t+1, defined on frame t
  std::vector<FlowField> flow_bwd;  ///< T-1 fields, frame t+1 -> t, defined on frame t+1
  std::vector<Mask> occlusion_mask;
};

struct RenderedScene {
  FrameSequence frames;
  SyntheticTruth truth;
};

RenderedScene render_scene(const SceneSpec& spec);

/// (1-noise)*input + noise*Dirichlet(1,..,1) draw per pixel; noise in [0,1).
GeometricContext perturb_geometric(const GeometricContext& gt, double noise, std::uint64_t seed);

/// Pixels with a 4-neighbour of different id.
Mask boundary_mask(const Plane<std::uint32_t>& ids);

/// Scene drawn from the fleet distribution: four background bands (sky, porous,
/// static-solid, ground) with blocks, and 2-4 moving objects.
SceneSpec random_scene(std::uint64_t seed, int width = 64, int height = 64, int frames = 30);

/// Two flat layers of nearly equal color separated by a vertical edge, the right
/// one moving; used to exercise occlusion-aware segmentation.
SceneSpec contrast_gap_scene(std::uint64_t seed, int width = 64, int height = 64, int frames = 10);

/// Text form: top-level key=value lines followed by [band], [block], [object]
/// sections, each holding its own key=value lines.
SceneSpec parse_scene_spec(const std::string& text);
std::string format_scene_spec(const SceneSpec& spec);

const char* geometric_class_name(GeometricClass cls);
GeometricClass parse_geometric_class(const std::string& name);

}  // namespace occlusion
