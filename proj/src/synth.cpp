#include "occlusion/synth.hpp"

#include "occlusion/error.hpp"
#include "occlusion/media.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace occlusion {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Uniform value in [-1, 1] attached to an integer lattice point.
double lattice(std::uint64_t seed, std::int64_t i, std::int64_t j, std::uint64_t channel) {
  std::uint64_t h = splitmix(seed ^ splitmix((static_cast<std::uint64_t>(i) * 0x632be59bd9b4e019ull +
                                              static_cast<std::uint64_t>(j)) ^ (channel << 56)));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

double smooth_noise(std::uint64_t seed, int cell, std::int64_t x, std::int64_t y, std::uint64_t channel) {
  const std::int64_t ix = floor_div(x, cell);
  const std::int64_t iy = floor_div(y, cell);
  const double fx = static_cast<double>(x - ix * cell) / cell;
  const double fy = static_cast<double>(y - iy * cell) / cell;
  const double sx = fx * fx * (3.0 - 2.0 * fx);
  const double sy = fy * fy * (3.0 - 2.0 * fy);
  const double v00 = lattice(seed, ix, iy, channel);
  const double v10 = lattice(seed, ix + 1, iy, channel);
  const double v01 = lattice(seed, ix, iy + 1, channel);
  const double v11 = lattice(seed, ix + 1, iy + 1, channel);
  return (1 - sy) * ((1 - sx) * v00 + sx * v10) + sy * ((1 - sx) * v01 + sx * v11);
}

std::array<std::uint8_t, 3> texture_color(const TextureSpec& tex, std::int64_t x, std::int64_t y) {
  std::array<double, 3> rgb = tex.base_rgb;
  const int cell = std::max(1, tex.cell);
  if (tex.kind == TextureKind::speckle) {
    if (smooth_noise(tex.seed, cell, x, y, 7) > 0.15) rgb = tex.speckle_rgb;
  }
  const double lum = smooth_noise(tex.seed, cell, x, y, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    const double chroma = smooth_noise(tex.seed, cell, x, y, c + 1);
    rgb[c] += tex.amplitude * (0.8 * lum + 0.2 * chroma);
  }
  std::array<std::uint8_t, 3> out{};
  for (std::size_t c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(rgb[c]), 0L, 255L));
  return out;
}

bool inside(const SceneObject& o, int lx, int ly) {
  if (lx < 0 || ly < 0 || lx >= o.w || ly >= o.h) return false;
  if (o.shape == Shape::rectangle) return true;
  const double rx = o.w / 2.0, ry = o.h / 2.0;
  const double dx = (lx + 0.5 - rx) / rx, dy = (ly + 0.5 - ry) / ry;
  return dx * dx + dy * dy <= 1.0;
}

struct Hit {
  std::uint32_t layer;
  GeometricClass cls;
  int vx, vy;
  std::array<std::uint8_t, 3> rgb;
};

class Compositor {
 public:
  explicit Compositor(const SceneSpec& spec) : spec_(spec) {
    order_.resize(spec.objects.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return spec.objects[a].depth < spec.objects[b].depth;
    });
    for (std::size_t i = 0; i < spec.background.size(); ++i)
      (spec.background[i].kind == BackgroundLayer::Kind::band ? bands_ : blocks_).push_back(i);
  }

  Hit at(int t, int x, int y) const {
    for (std::size_t idx : order_) {
      const SceneObject& o = spec_.objects[idx];
      const int lx = x - (o.x + o.vx * t);
      const int ly = y - (o.y + o.vy * t);
      if (inside(o, lx, ly))
        return {static_cast<std::uint32_t>(spec_.background.size() + idx), GeometricClass::movable,
                o.vx, o.vy, texture_color(o.texture, lx, ly)};
    }
    const int bx = x - spec_.camera_vx * t;
    const int by = y - spec_.camera_vy * t;
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      const BackgroundLayer& b = spec_.background[*it];
      if (bx >= b.x0 && bx < b.x1 && by >= b.y0 && by < b.y1) return background_hit(*it, bx, by);
    }
    std::size_t band = bands_.back();
    for (std::size_t i : bands_) {
      if (by < spec_.background[i].y1) {
        band = i;
        break;
      }
    }
    return background_hit(band, bx, by);
  }

 private:
  Hit background_hit(std::size_t i, int bx, int by) const {
    const BackgroundLayer& b = spec_.background[i];
    return {static_cast<std::uint32_t>(i), b.cls, spec_.camera_vx, spec_.camera_vy,
            texture_color(b.texture, bx, by)};
  }

  const SceneSpec& spec_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> bands_, blocks_;
};

}  // namespace

void SceneSpec::validate() const {
  if (width < 2 || height < 2) throw ParameterError("scene: width and height must be >= 2");
  if (frame_count < 2) throw ParameterError("scene: frame_count must be >= 2");
  const bool has_band = std::any_of(background.begin(), background.end(), [](const auto& b) {
    return b.kind == BackgroundLayer::Kind::band;
  });
  if (!has_band) throw ParameterError("scene: at least one background band is required");
  std::set<int> depths;
  for (const auto& o : objects) {
    if (o.w <= 0 || o.h <= 0) throw ParameterError("scene: zero-area object");
    if (!depths.insert(o.depth).second) throw ParameterError("scene: object depths must be distinct");
  }
  for (const auto& b : background)
    if (b.kind == BackgroundLayer::Kind::block && (b.x1 <= b.x0 || b.y1 <= b.y0))
      throw ParameterError("scene: zero-area block");
}

Mask boundary_mask(const Plane<std::uint32_t>& ids) {
  const auto h = static_cast<int>(ids.rows());
  const auto w = static_cast<int>(ids.cols());
  Mask m = Mask::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w && ids(y, x) != ids(y, x + 1)) m(y, x) = m(y, x + 1) = 1;
      if (y + 1 < h && ids(y, x) != ids(y + 1, x)) m(y, x) = m(y + 1, x) = 1;
    }
  }
  return m;
}

RenderedScene render_scene(const SceneSpec& spec) {
  spec.validate();
  const int W = spec.width, H = spec.height, T = spec.frame_count;
  Compositor comp(spec);

  RenderedScene out;
  SyntheticTruth& truth = out.truth;
  truth.gt_object_ids = LabelVideo(W, H, T);
  truth.gt_geometric = GeometricContext(W, H, T, kGeometricClasses);
  std::vector<PlaneF> vel_x(static_cast<std::size_t>(T), PlaneF::Zero(H, W));
  std::vector<PlaneF> vel_y = vel_x;

  for (int t = 0; t < T; ++t) {
    RgbImage img(W, H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Hit hit = comp.at(t, x, y);
        img.r(y, x) = hit.rgb[0];
        img.g(y, x) = hit.rgb[1];
        img.b(y, x) = hit.rgb[2];
        truth.gt_object_ids.at(t, y, x) = hit.layer;
        truth.gt_geometric.plane(t, static_cast<int>(hit.cls))(y, x) = 1.0f;
        vel_x[static_cast<std::size_t>(t)](y, x) = static_cast<float>(hit.vx);
        vel_y[static_cast<std::size_t>(t)](y, x) = static_cast<float>(hit.vy);
      }
    }
    out.frames.frames.push_back(std::move(img));
    truth.occlusion_mask.push_back(boundary_mask(truth.gt_object_ids.frames[static_cast<std::size_t>(t)]));
  }
  for (int t = 0; t + 1 < T; ++t) {
    FlowField fwd(W, H, FlowDirection::forward);
    fwd.u = vel_x[static_cast<std::size_t>(t)];
    fwd.v = vel_y[static_cast<std::size_t>(t)];
    FlowField bwd(W, H, FlowDirection::backward);
    bwd.u = -vel_x[static_cast<std::size_t>(t + 1)];
    bwd.v = -vel_y[static_cast<std::size_t>(t + 1)];
    truth.flow_fwd.push_back(std::move(fwd));
    truth.flow_bwd.push_back(std::move(bwd));
  }
  return out;
}

GeometricContext perturb_geometric(const GeometricContext& gt, double noise, std::uint64_t seed) {
  if (!(noise >= 0.0 && noise < 1.0)) throw ParameterError("geometric noise must lie in [0,1)");
  GeometricContext out = gt;
  if (noise == 0.0) return out;
  for (int t = 0; t < gt.frame_count(); ++t) {
    std::mt19937_64 rng(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(t) + 1)));
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> draw(static_cast<std::size_t>(gt.channels));
    for (int y = 0; y < gt.height; ++y) {
      for (int x = 0; x < gt.width; ++x) {
        double sum = 0.0;
        for (double& d : draw) sum += (d = expo(rng));
        for (int c = 0; c < gt.channels; ++c)
          out.plane(t, c)(y, x) = static_cast<float>(
              (1.0 - noise) * gt.plane(t, c)(y, x) + noise * draw[static_cast<std::size_t>(c)] / sum);
      }
    }
  }
  return out;
}

SceneSpec random_scene(std::uint64_t seed, int width, int height, int frames) {
  std::mt19937_64 rng(splitmix(seed));
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto jitter = [&](std::array<double, 3> c, int amount) {
    for (double& v : c) v = std::clamp(v + uni(-amount, amount), 0.0, 255.0);
    return c;
  };

  SceneSpec s;
  s.width = width;
  s.height = height;
  s.frame_count = frames;
  s.seed = seed;
  s.camera_vx = uni(0, 3) == 0 ? (uni(0, 1) ? 1 : -1) : 0;

  const int b1 = height * uni(20, 28) / 100;
  const int b2 = height * uni(44, 52) / 100;
  const int b3 = height * uni(68, 76) / 100;
  auto band = [&](GeometricClass cls, int y0, int y1, std::array<double, 3> rgb, double amp, int cell) {
    BackgroundLayer b;
    b.kind = BackgroundLayer::Kind::band;
    b.cls = cls;
    b.y0 = y0;
    b.y1 = y1;
    b.texture.base_rgb = rgb;
    b.texture.amplitude = amp;
    b.texture.cell = cell;
    b.texture.seed = rng();
    return b;
  };
  s.background.push_back(band(GeometricClass::sky, 0, b1, jitter({150, 180, 215}, 15), 10, 8));
  BackgroundLayer porous = band(GeometricClass::porous, b1, b2, jitter({80, 120, 70}, 15), 8, 3);
  porous.texture.kind = TextureKind::speckle;
  porous.texture.speckle_rgb = jitter({45, 75, 40}, 10);
  s.background.push_back(porous);
  s.background.push_back(band(GeometricClass::static_solid, b2, b3, jitter({135, 120, 110}, 15), 14, 5));
  s.background.push_back(band(GeometricClass::ground, b3, height, jitter({105, 95, 80}, 15), 14, 4));

  const int blocks = uni(1, 2);
  for (int i = 0; i < blocks; ++i) {
    BackgroundLayer b;
    b.kind = BackgroundLayer::Kind::block;
    b.cls = GeometricClass::static_solid;
    const int bw = uni(width / 8, width / 4);
    b.x0 = uni(0, width - bw);
    b.x1 = b.x0 + bw;
    b.y0 = uni(b1 / 2, b1 + 2);
    b.y1 = b2 + uni(0, 3);
    b.texture.base_rgb = jitter({160, 140, 125}, 25);
    b.texture.amplitude = 10;
    b.texture.cell = 5;
    b.texture.seed = rng();
    s.background.push_back(b);
  }

  const int n_objects = uni(2, 4);
  for (int i = 0; i < n_objects; ++i) {
    SceneObject o;
    o.shape = uni(0, 1) ? Shape::ellipse : Shape::rectangle;
    o.w = uni(width / 6, width / 3);
    o.h = uni(height / 6, height / 3);
    do {
      o.vx = uni(-2, 2);
      o.vy = uni(-1, 1);
    } while (o.vx == 0 && o.vy == 0);
    const int cx = uni(width / 4, 3 * width / 4);
    const int cy = uni(height / 3, 5 * height / 6);
    o.x = cx - o.w / 2 - o.vx * frames / 2;
    o.y = cy - o.h / 2 - o.vy * frames / 2;
    o.depth = i;
    o.texture.base_rgb = {static_cast<double>(uni(40, 220)), static_cast<double>(uni(40, 220)),
                          static_cast<double>(uni(40, 220))};
    o.texture.amplitude = 12;
    o.texture.cell = 4;
    o.texture.seed = rng();
    s.objects.push_back(o);
  }
  std::shuffle(s.objects.begin(), s.objects.end(), rng);
  return s;
}

SceneSpec contrast_gap_scene(std::uint64_t seed, int width, int height, int frames) {
  SceneSpec s;
  s.width = width;
  s.height = height;
  s.frame_count = frames;
  s.seed = seed;
  BackgroundLayer left;
  left.kind = BackgroundLayer::Kind::band;
  left.cls = GeometricClass::static_solid;
  left.texture.base_rgb = {120, 120, 120};
  left.texture.amplitude = 3.0;
  left.texture.cell = 3;
  left.texture.seed = splitmix(seed);
  s.background.push_back(left);

  SceneObject right;
  right.shape = Shape::rectangle;
  right.x = width / 2;
  right.y = -frames;
  right.w = width;
  right.h = height + 2 * frames;
  right.vx = 0;
  right.vy = 1;
  right.texture.base_rgb = {121, 120, 119};
  right.texture.amplitude = 3.0;
  right.texture.cell = 3;
  right.texture.seed = splitmix(seed + 1);
  s.objects.push_back(right);
  return s;
}

const char* geometric_class_name(GeometricClass cls) {
  switch (cls) {
    case GeometricClass::sky: return "sky";
    case GeometricClass::ground: return "ground";
    case GeometricClass::static_solid: return "static_solid";
    case GeometricClass::porous: return "porous";
    case GeometricClass::movable: return "movable";
  }
  return "?";
}

GeometricClass parse_geometric_class(const std::string& name) {
  for (int c = 0; c < kGeometricClasses; ++c)
    if (name == geometric_class_name(static_cast<GeometricClass>(c))) return static_cast<GeometricClass>(c);
  throw FormatError("unknown geometric class: " + name);
}

namespace {

std::vector<double> numbers(const std::string& value, std::size_t count, const std::string& key) {
  std::istringstream in(value);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  if (out.size() != count || !in.eof())
    throw FormatError("scene: key '" + key + "' expects " + std::to_string(count) + " numbers");
  return out;
}

int integer(const std::string& value, const std::string& key) {
  const double v = numbers(value, 1, key)[0];
  if (v != std::floor(v)) throw FormatError("scene: key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string triple(const std::array<double, 3>& c) { return num(c[0]) + " " + num(c[1]) + " " + num(c[2]); }

TextureSpec parse_texture(std::map<std::string, std::string>& kv) {
  TextureSpec t;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("color")) {
    const auto n = numbers(*v, 3, "color");
    t.base_rgb = {n[0], n[1], n[2]};
  }
  if (auto v = take("amplitude")) t.amplitude = numbers(*v, 1, "amplitude")[0];
  if (auto v = take("cell")) t.cell = integer(*v, "cell");
  if (auto v = take("texture")) {
    if (*v == "noise") t.kind = TextureKind::value_noise;
    else if (*v == "speckle") t.kind = TextureKind::speckle;
    else throw FormatError("scene: texture must be noise or speckle");
  }
  if (auto v = take("speckle_color")) {
    const auto n = numbers(*v, 3, "speckle_color");
    t.speckle_rgb = {n[0], n[1], n[2]};
  }
  if (auto v = take("texture_seed")) t.seed = std::stoull(*v);
  return t;
}

std::string format_texture(const TextureSpec& t) {
  std::string s = "color = " + triple(t.base_rgb) + "\namplitude = " + num(t.amplitude) +
                  "\ncell = " + std::to_string(t.cell) + "\ntexture = " +
                  (t.kind == TextureKind::speckle ? "speckle" : "noise") + "\n";
  if (t.kind == TextureKind::speckle) s += "speckle_color = " + triple(t.speckle_rgb) + "\n";
  s += "texture_seed = " + std::to_string(t.seed) + "\n";
  return s;
}

void reject_leftovers(const std::map<std::string, std::string>& kv, const std::string& section) {
  if (!kv.empty()) throw FormatError("scene: unknown key '" + kv.begin()->first + "' in " + section);
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& text) {
  // Split into sections; the unnamed leading section holds global keys.
  std::vector<std::pair<std::string, std::string>> sections{{"", ""}};
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string trimmed = line.substr(0, line.find('#'));
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
    trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
    if (!trimmed.empty() && trimmed.front() == '[') {
      if (trimmed.back() != ']') throw FormatError("scene: malformed section header " + trimmed);
      sections.emplace_back(trimmed.substr(1, trimmed.size() - 2), "");
    } else {
      sections.back().second += trimmed + "\n";
    }
  }

  SceneSpec s;
  auto global = parse_key_values(sections.front().second);
  auto take = [](std::map<std::string, std::string>& kv, const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take(global, "width")) s.width = integer(*v, "width");
  if (auto v = take(global, "height")) s.height = integer(*v, "height");
  if (auto v = take(global, "frames")) s.frame_count = integer(*v, "frames");
  if (auto v = take(global, "seed")) s.seed = std::stoull(*v);
  if (auto v = take(global, "camera")) {
    const auto n = numbers(*v, 2, "camera");
    s.camera_vx = static_cast<int>(n[0]);
    s.camera_vy = static_cast<int>(n[1]);
  }
  reject_leftovers(global, "global section");

  for (std::size_t i = 1; i < sections.size(); ++i) {
    const std::string& name = sections[i].first;
    auto kv = parse_key_values(sections[i].second);
    if (name == "band" || name == "block") {
      BackgroundLayer b;
      b.kind = name == "band" ? BackgroundLayer::Kind::band : BackgroundLayer::Kind::block;
      if (auto v = take(kv, "class")) b.cls = parse_geometric_class(*v);
      if (b.kind == BackgroundLayer::Kind::band) {
        if (auto v = take(kv, "rows")) {
          const auto n = numbers(*v, 2, "rows");
          b.y0 = static_cast<int>(n[0]);
          b.y1 = static_cast<int>(n[1]);
        }
      } else if (auto v = take(kv, "rect")) {
        const auto n = numbers(*v, 4, "rect");
        b.x0 = static_cast<int>(n[0]);
        b.y0 = static_cast<int>(n[1]);
        b.x1 = static_cast<int>(n[2]);
        b.y1 = static_cast<int>(n[3]);
      }
      b.texture = parse_texture(kv);
      reject_leftovers(kv, "[" + name + "]");
      s.background.push_back(b);
    } else if (name == "object") {
      SceneObject o;
      if (auto v = take(kv, "shape")) {
        if (*v == "rectangle") o.shape = Shape::rectangle;
        else if (*v == "ellipse") o.shape = Shape::ellipse;
        else throw FormatError("scene: shape must be rectangle or ellipse");
      }
      if (auto v = take(kv, "rect")) {
        const auto n = numbers(*v, 4, "rect");
        o.x = static_cast<int>(n[0]);
        o.y = static_cast<int>(n[1]);
        o.w = static_cast<int>(n[2]);
        o.h = static_cast<int>(n[3]);
      }
      if (auto v = take(kv, "velocity")) {
        const auto n = numbers(*v, 2, "velocity");
        o.vx = static_cast<int>(n[0]);
        o.vy = static_cast<int>(n[1]);
      }
      if (auto v = take(kv, "depth")) o.depth = integer(*v, "depth");
      o.texture = parse_texture(kv);
      reject_leftovers(kv, "[object]");
      s.objects.push_back(o);
    } else {
      throw FormatError("scene: unknown section [" + name + "]");
    }
  }
  s.validate();
  return s;
}

std::string format_scene_spec(const SceneSpec& s) {
  std::string out = "width = " + std::to_string(s.width) + "\nheight = " + std::to_string(s.height) +
                    "\nframes = " + std::to_string(s.frame_count) + "\nseed = " + std::to_string(s.seed) +
                    "\ncamera = " + std::to_string(s.camera_vx) + " " + std::to_string(s.camera_vy) + "\n";
  for (const auto& b : s.background) {
    out += "\n[" + std::string(b.kind == BackgroundLayer::Kind::band ? "band" : "block") + "]\n";
    out += "class = " + std::string(geometric_class_name(b.cls)) + "\n";
    if (b.kind == BackgroundLayer::Kind::band)
      out += "rows = " + std::to_string(b.y0) + " " + std::to_string(b.y1) + "\n";
    else
      out += "rect = " + std::to_string(b.x0) + " " + std::to_string(b.y0) + " " + std::to_string(b.x1) +
             " " + std::to_string(b.y1) + "\n";
    out += format_texture(b.texture);
  }
  for (const auto& o : s.objects) {
    out += "\n[object]\nshape = " + std::string(o.shape == Shape::ellipse ? "ellipse" : "rectangle") +
           "\nrect = " + std::to_string(o.x) + " " + std::to_string(o.y) + " " + std::to_string(o.w) + " " +
           std::to_string(o.h) + "\nvelocity = " + std::to_string(o.vx) + " " + std::to_string(o.vy) +
           "\ndepth = " + std::to_string(o.depth) + "\n" + format_texture(o.texture);
  }
  return out;
}

}  // namespace occlusion
