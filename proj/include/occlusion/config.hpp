#pragma once

#include "occlusion/error.hpp"
#include "occlusion/flow.hpp"
#include "occlusion/forest.hpp"
#include "occlusion/mrf.hpp"
#include "occlusion/segment.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace occlusion {

/// Invalid configuration; the message lists every offending key.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

enum class FlowSource { ground_truth, estimated };

struct PipelineConfig {
  // fleet
  int videos = 10;
  int width = 64;
  int height = 64;
  int frames = 30;
  std::uint64_t seed = 7;
  double geometry_noise = 0.2;
  FlowSource flow_source = FlowSource::ground_truth;

  SegParams seg;
  FlowParams flow;
  ForestParams forest;
  double negative_ratio = 3.0;
  int min_edgelet_len = kMinEdgeletLength;
  double rho = 0.5;

  double lambda = 1.0;
  int window = 30;
  double threshold = 0.5;
  BpOptions bp;
  double unary_noise = 0.0;

  int folds = 5;
  int thresholds = 50;
  int dilation = 1;

  bool ablation = true;
  double ablation_unary_noise = 0.15;
  bool write_videos = true;

  /// Throws ConfigError naming every invalid value.
  void validate() const;
};

/// Applies key=value settings on top of `base`; unknown keys and unparsable
/// values are collected into one ConfigError.
PipelineConfig apply_settings(PipelineConfig base, const std::map<std::string, std::string>& settings);
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::map<std::string, std::string>& overrides = {});

/// Canonical key=value listing of every setting, loadable by apply_settings.
std::string format_config(const PipelineConfig& config);

/// Documented keys with their meaning, for --help.
std::vector<std::pair<std::string, std::string>> config_keys();

/// Stage-specific seed derived from the root seed and a namespace.
std::uint64_t derive_seed(std::uint64_t root, const std::string& name, std::uint64_t index = 0);

/// --threads value, else OCCLUSIONBOUND_THREADS, else 1.
int resolve_threads(int flag_value);

/// 0 success, 2 configuration, 3 missing artifact, 4 numerical failure, 1 other.
int exit_code_for(const std::exception& e);

}  // namespace occlusion
