#pragma once

#include "occlusion/config.hpp"
#include "occlusion/edgelet.hpp"
#include "occlusion/eval.hpp"
#include "occlusion/features.hpp"
#include "occlusion/forest.hpp"
#include "occlusion/media.hpp"
#include "occlusion/mrf.hpp"
#include "occlusion/synth.hpp"

#include <functional>
#include <string>
#include <vector>

namespace occlusion {

using Logger = std::function<void(const std::string&)>;

/// Everything the learning stages need from one video.
struct VideoData {
  std::string name;
  FrameSequence frames;
  std::vector<FlowField> flow_fwd, flow_bwd;
  GeometricContext geometry;
  LabelVideo gt_ids;
  std::vector<Mask> gt_masks;
  LabelVideo labels;
  EdgeletSet edgelets;
  FeatureMatrix X;
  std::vector<int> y;  ///< per instance, -1 without ground truth
  PairDataset pairs;
};

/// Scene `index` of the configured fleet with perturbed geometric context.
struct SyntheticVideo {
  RenderedScene scene;
  GeometricContext geometry;
};

SyntheticVideo synthesize_video(const PipelineConfig& config, int index);

/// Writes frames, flow, geometry, ground truth and manifest.
void write_dataset(const DatasetLayout& layout, const FrameSequence& frames, const std::vector<FlowField>& fwd,
                   const std::vector<FlowField>& bwd, const GeometricContext& geometry, const LabelVideo* gt_ids);

/// Extracts edgelets and computes features, segmenting first when `labels` is
/// empty. An empty `gt_ids` leaves every instance label at -1.
VideoData prepare_video(std::string name, FrameSequence frames, std::vector<FlowField> fwd,
                        std::vector<FlowField> bwd, GeometricContext geometry, LabelVideo gt_ids,
                        const PipelineConfig& config, LabelVideo labels = {}, int threads = 1);

/// Synthesises and prepares fleet video `index`, estimating flow when configured.
VideoData fleet_video(const PipelineConfig& config, int index, int threads = 1);

/// Loads a dataset directory produced by `write_dataset` and prepares it, reusing
/// labels.svlm when present.
VideoData load_video(const DatasetLayout& layout, const PipelineConfig& config, int threads = 1);

/// Instances eligible for training: labelled and not short.
std::vector<std::uint8_t> trainable_instances(const VideoData& video);

struct Classifiers {
  FeatureSet set = FeatureSet::all;
  ForestModel unary;
  ForestModel pairwise;
  std::vector<double> unary_importance;  ///< out-of-bag vote share per used column
};

Classifiers train_classifiers(const std::vector<const VideoData*>& videos, FeatureSet set,
                              const PipelineConfig& config, std::uint64_t seed, int threads = 1);

/// Forest probabilities for every instance and every adjacent pair.
struct ForestOutputs {
  std::vector<double> p_unary;
  std::vector<double> p_pair;
};

ForestOutputs predict_video(const Classifiers& models, const VideoData& video, int threads = 1);

/// p + N(0, sigma^2), clamped to [0,1].
std::vector<double> add_unary_noise(std::vector<double> p, double sigma, std::uint64_t seed);

/// BP over each frame then temporal smoothing with `window`.
OcclusionMarginals infer_video(const VideoData& video, const ForestOutputs& outputs, const PipelineConfig& config,
                               int window, int threads = 1);

struct CellResult {
  FeatureSet set = FeatureSet::all;
  int window = 1;
  double unary_noise = 0.0;
  PRCurve curve;
};

struct PipelineResult {
  PipelineConfig config;
  std::vector<VideoData> videos;
  std::vector<std::vector<std::size_t>> folds;
  std::vector<Classifiers> fold_models;         ///< ALL features, one per fold
  std::vector<std::size_t> fold_of;             ///< test fold of each video
  std::vector<OcclusionMarginals> marginals;    ///< main configuration, per video
  CellResult main;
  std::vector<CellResult> ablation;
  std::vector<double> oob_importance;  ///< ALL unary forests, averaged over folds
};

/// Full cross-validated run. When `run_dir` is non-empty every artifact is written there.
PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& run_dir, int threads = 1,
                            const Logger& log = {});

/// Fraction of ground-truth boundary pixels that lie on a region boundary of `labels`.
double boundary_coverage(const LabelVideo& labels, const std::vector<Mask>& gt);

std::string ablation_to_csv(const std::vector<CellResult>& cells);

}  // namespace occlusion
