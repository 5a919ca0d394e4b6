#include "occlusion/config.hpp"

#include "occlusion/csv.hpp"
#include "occlusion/media.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>

namespace occlusion {
namespace {

struct Key {
  std::string name;
  std::string help;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

int parse_int(const std::string& v) {
  const long long x = csv::to_int(v);
  if (x < INT32_MIN || x > INT32_MAX) throw FormatError("integer out of range: " + v);
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v.front() == '-' || end != v.c_str() + v.size()) throw FormatError("not an unsigned integer: " + v);
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError("not a boolean: " + v);
}

std::string fmt(bool b) { return b ? "true" : "false"; }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(double v) { return csv::number(v); }

#define OB_INT(key, field, text)                                                             \
  Key {                                                                                      \
    key, text, [](PipelineConfig& c, const std::string& v) { c.field = parse_int(v); },      \
        [](const PipelineConfig& c) { return fmt(c.field); }                                 \
  }
#define OB_DOUBLE(key, field, text)                                                          \
  Key {                                                                                      \
    key, text, [](PipelineConfig& c, const std::string& v) { c.field = csv::to_double(v); }, \
        [](const PipelineConfig& c) { return fmt(c.field); }                                 \
  }
#define OB_BOOL(key, field, text)                                                            \
  Key {                                                                                      \
    key, text, [](PipelineConfig& c, const std::string& v) { c.field = parse_bool(v); },     \
        [](const PipelineConfig& c) { return fmt(c.field); }                                 \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      OB_INT("videos", videos, "number of synthetic videos in the fleet"),
      OB_INT("width", width, "frame width in pixels"),
      OB_INT("height", height, "frame height in pixels"),
      OB_INT("frames", frames, "frames per video"),
      Key{"seed", "root seed; every stage derives its own",
          [](PipelineConfig& c, const std::string& v) { c.seed = parse_u64(v); },
          [](const PipelineConfig& c) { return fmt(c.seed); }},
      OB_DOUBLE("geometry_noise", geometry_noise, "blend weight of random simplex noise in geometric context"),
      Key{"flow_source", "gt (exact synthetic flow) or estimate (built-in Horn-Schunck)",
          [](PipelineConfig& c, const std::string& v) {
            if (v == "gt")
              c.flow_source = FlowSource::ground_truth;
            else if (v == "estimate")
              c.flow_source = FlowSource::estimated;
            else
              throw FormatError("expected gt or estimate, got " + v);
          },
          [](const PipelineConfig& c) { return std::string(c.flow_source == FlowSource::ground_truth ? "gt" : "estimate"); }},
      OB_DOUBLE("seg.k", seg.k, "segmentation scale (Lab units)"),
      OB_INT("seg.min_size", seg.min_size, "minimum region size in voxels"),
      OB_DOUBLE("seg.sigma", seg.sigma, "Gaussian pre-smoothing"),
      OB_DOUBLE("seg.w_occl", seg.w_occl, "occlusion weight of the segmentation edge cost"),
      OB_DOUBLE("flow.alpha", flow.alpha, "Horn-Schunck smoothness weight"),
      OB_INT("flow.iterations", flow.iterations, "Jacobi iterations per warp"),
      OB_INT("flow.levels", flow.levels, "pyramid levels"),
      OB_INT("flow.warps", flow.warps, "warps per level"),
      OB_INT("forest.trees", forest.trees, "trees per forest"),
      OB_INT("forest.features_per_node", forest.features_per_node, "features sampled per split"),
      OB_INT("forest.max_depth", forest.max_depth, "maximum tree depth"),
      OB_INT("forest.min_leaf", forest.min_leaf, "minimum samples per leaf"),
      OB_DOUBLE("forest.bootstrap_ratio", forest.bootstrap_ratio, "bootstrap size relative to the training set"),
      OB_DOUBLE("forest.negative_ratio", negative_ratio, "maximum negatives per positive in training"),
      OB_INT("edgelet.min_len", min_edgelet_len, "instances shorter than this are not trained on"),
      OB_DOUBLE("edgelet.rho", rho, "fraction of straddling pairs that makes an instance ON"),
      OB_DOUBLE("infer.lambda", lambda, "pairwise strength exponent"),
      OB_INT("infer.window", window, "temporal smoothing window"),
      OB_DOUBLE("infer.threshold", threshold, "boundary threshold for written maps"),
      OB_INT("infer.bp_max_iters", bp.max_iters, "belief propagation iteration cap"),
      OB_DOUBLE("infer.bp_damping", bp.damping, "message damping"),
      OB_DOUBLE("infer.bp_tol", bp.tol, "message convergence tolerance"),
      OB_DOUBLE("infer.unary_noise", unary_noise, "std of Gaussian noise added to unary probabilities"),
      OB_INT("eval.folds", folds, "cross-validation folds"),
      OB_INT("eval.thresholds", thresholds, "thresholds in the precision/recall sweep"),
      OB_INT("eval.dilation", dilation, "matching tolerance in pixels"),
      OB_BOOL("ablation", ablation, "also evaluate the App and App+Flow feature sets and T=1"),
      OB_DOUBLE("ablation.unary_noise", ablation_unary_noise, "unary noise used by the ablation"),
      OB_BOOL("write_videos", write_videos, "write per-video datasets into the run directory"),
  };
  return table;
}

#undef OB_INT
#undef OB_DOUBLE
#undef OB_BOOL

}  // namespace

void PipelineConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  check(videos >= 1, "videos must be >= 1");
  check(width >= 8 && height >= 8, "width and height must be >= 8");
  check(frames >= 2, "frames must be >= 2");
  check(geometry_noise >= 0.0 && geometry_noise < 1.0, "geometry_noise must lie in [0,1)");
  check(seg.k > 0.0, "seg.k must be > 0");
  check(seg.min_size >= 1, "seg.min_size must be >= 1");
  check(seg.sigma >= 0.0, "seg.sigma must be >= 0");
  check(seg.w_occl >= 0.0 && seg.w_occl <= 1.0, "seg.w_occl must lie in [0,1]");
  check(flow.alpha > 0.0 && flow.iterations > 0 && flow.levels > 0 && flow.warps > 0, "flow.* must be positive");
  check(forest.trees > 0, "forest.trees must be > 0");
  check(forest.features_per_node > 0, "forest.features_per_node must be > 0");
  check(forest.max_depth > 0, "forest.max_depth must be > 0");
  check(forest.min_leaf > 0, "forest.min_leaf must be > 0");
  check(forest.bootstrap_ratio > 0.0, "forest.bootstrap_ratio must be > 0");
  check(negative_ratio > 0.0, "forest.negative_ratio must be > 0");
  check(min_edgelet_len >= 1, "edgelet.min_len must be >= 1");
  check(rho > 0.0 && rho <= 1.0, "edgelet.rho must lie in (0,1]");
  check(lambda >= 0.0 && std::isfinite(lambda), "infer.lambda must be >= 0");
  check(window >= 1, "infer.window must be >= 1");
  check(threshold >= 0.0 && threshold <= 1.0, "infer.threshold must lie in [0,1]");
  check(bp.max_iters >= 1, "infer.bp_max_iters must be >= 1");
  check(bp.damping >= 0.0 && bp.damping < 1.0, "infer.bp_damping must lie in [0,1)");
  check(bp.tol > 0.0, "infer.bp_tol must be > 0");
  check(unary_noise >= 0.0 && ablation_unary_noise >= 0.0, "unary noise must be >= 0");
  check(folds >= 2, "eval.folds must be >= 2");
  check(folds <= videos, "eval.folds must not exceed videos");
  check(thresholds >= 2, "eval.thresholds must be >= 2");
  check(dilation >= 0, "eval.dilation must be >= 0");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

PipelineConfig apply_settings(PipelineConfig base, const std::map<std::string, std::string>& settings) {
  std::vector<std::string> problems;
  for (const auto& [name, value] : settings) {
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == name; });
    if (it == table.end()) {
      problems.push_back("unknown key '" + name + "'");
      continue;
    }
    try {
      it->set(base, value);
    } catch (const Error& e) {
      problems.push_back(name + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides) {
  if (!std::filesystem::exists(path)) throw MissingArtifact("config file not found: " + path.string());
  PipelineConfig c = apply_settings({}, parse_key_values(read_text(path)));
  return apply_settings(c, overrides);
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  for (const Key& k : keys()) out += k.name + "=" + k.get(config) + "\n";
  return out;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : keys()) out.emplace_back(k.name, k.help);
  return out;
}

std::uint64_t derive_seed(std::uint64_t root, const std::string& name, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : name) h = (h ^ c) * 0x100000001b3ull;
  std::uint64_t x = root ^ h ^ (index * 0x9e3779b97f4a7c15ull);
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("OCCLUSIONBOUND_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("OCCLUSIONBOUND_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return 1;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingArtifact*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  if (dynamic_cast<const ParameterError*>(&e)) return 2;
  return 1;
}

}  // namespace occlusion
