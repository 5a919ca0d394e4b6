#include "occlusion/pipeline.hpp"

#include "occlusion/color.hpp"
#include "occlusion/csv.hpp"
#include "occlusion/error.hpp"
#include "occlusion/flow.hpp"
#include "occlusion/parallel.hpp"
#include "occlusion/segment.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace occlusion {
namespace {

std::string format_fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string video_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "video_%02d", index);
  return buf;
}

std::vector<std::string> column_names(const std::vector<int>& columns, bool pair) {
  const auto& names = feature_names();
  std::vector<std::string> out;
  for (int c : columns) {
    if (!pair)
      out.push_back(names[static_cast<std::size_t>(c)]);
    else
      out.push_back((c < kFeatureDim ? "n_" : "m_") + names[static_cast<std::size_t>(c % kFeatureDim)]);
  }
  return out;
}

// Stacks the selected rows of several matrices.
Eigen::MatrixXd stack_rows(const std::vector<const Eigen::MatrixXd*>& parts,
                           const std::vector<std::vector<std::size_t>>& rows, Eigen::Index cols) {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(total), cols);
  Eigen::Index at = 0;
  for (std::size_t p = 0; p < parts.size(); ++p)
    for (std::size_t r : rows[p]) out.row(at++) = parts[p]->row(static_cast<Eigen::Index>(r));
  return out;
}

ForestModel fit(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& columns, bool pair,
                const PipelineConfig& config, std::uint64_t seed, int threads, std::vector<double>* importance,
                const char* what) {
  const auto rows = balanced_rows(y, config.negative_ratio, derive_seed(seed, "balance"));
  std::vector<int> y_train;
  y_train.reserve(rows.size());
  for (std::size_t r : rows) y_train.push_back(y[r]);
  const Eigen::MatrixXd X_train = select_columns(select_rows(X, rows), columns);
  ForestParams params = config.forest;
  params.seed = derive_seed(seed, "forest");
  try {
    ForestModel model = train_forest(X_train, y_train, params, column_names(columns, pair), threads);
    if (importance) *importance = oob_importance(model, X_train, y_train);
    return model;
  } catch (const TrainingError& e) {
    throw TrainingError(std::string(what) + " forest: " + e.what());
  }
}

}  // namespace

SyntheticVideo synthesize_video(const PipelineConfig& config, int index) {
  const auto i = static_cast<std::uint64_t>(index);
  SyntheticVideo v;
  v.scene = render_scene(random_scene(derive_seed(config.seed, "scene", i), config.width, config.height, config.frames));
  v.geometry = config.geometry_noise > 0.0
                   ? perturb_geometric(v.scene.truth.gt_geometric, config.geometry_noise,
                                       derive_seed(config.seed, "geometry", i))
                   : v.scene.truth.gt_geometric;
  return v;
}

void write_dataset(const DatasetLayout& layout, const FrameSequence& frames, const std::vector<FlowField>& fwd,
                   const std::vector<FlowField>& bwd, const GeometricContext& geometry, const LabelVideo* gt_ids) {
  fs::create_directories(layout.root);
  write_frames(frames, layout.frames());
  write_flow_sequence(fwd, layout.flow_fwd());
  write_flow_sequence(bwd, layout.flow_bwd());
  write_confidence_video(geometry, layout.geometry());
  if (gt_ids) write_label_video(*gt_ids, layout.gt_labels());
  write_manifest({frames.width(), frames.height(), frames.size()}, layout.manifest());
}

VideoData prepare_video(std::string name, FrameSequence frames, std::vector<FlowField> fwd,
                        std::vector<FlowField> bwd, GeometricContext geometry, LabelVideo gt_ids,
                        const PipelineConfig& config, LabelVideo labels, int threads) {
  frames.validate();
  const auto pairs = static_cast<std::size_t>(frames.size() - 1);
  if (fwd.size() != pairs || bwd.size() != pairs)
    throw MissingArtifact(name + ": expected " + std::to_string(pairs) + " forward and backward flow fields");
  VideoData v;
  v.name = std::move(name);
  v.frames = std::move(frames);
  v.flow_fwd = std::move(fwd);
  v.flow_bwd = std::move(bwd);
  v.geometry = std::move(geometry);
  v.gt_ids = std::move(gt_ids);
  v.labels = labels.frame_count() > 0 ? std::move(labels) : oversegment(v.frames, config.seg);
  v.edgelets = extract_edgelets(v.labels, config.min_edgelet_len, threads);
  v.X = compute_features(v.edgelets, {v.labels, v.frames, v.flow_fwd, v.flow_bwd, v.geometry}, threads);
  if (v.gt_ids.frame_count() > 0) {
    v.y = label_edgelets(v.edgelets, v.gt_ids, config.rho);
    for (const auto& f : v.gt_ids.frames) v.gt_masks.push_back(boundary_mask(f));
  } else {
    v.y.assign(v.edgelets.instances.size(), -1);
  }
  v.pairs = build_pairwise_dataset(v.X, v.edgelets.graph, v.gt_ids.frame_count() > 0 ? std::span<const int>(v.y)
                                                                                    : std::span<const int>());
  return v;
}

VideoData fleet_video(const PipelineConfig& config, int index, int threads) {
  SyntheticVideo s = synthesize_video(config, index);
  std::vector<FlowField> fwd, bwd;
  if (config.flow_source == FlowSource::estimated) {
    FlowPair est = estimate_sequence_flow(s.scene.frames, config.flow, threads);
    fwd = std::move(est.forward);
    bwd = std::move(est.backward);
  } else {
    fwd = s.scene.truth.flow_fwd;
    bwd = s.scene.truth.flow_bwd;
  }
  return prepare_video(video_name(index), std::move(s.scene.frames), std::move(fwd), std::move(bwd),
                       std::move(s.geometry), std::move(s.scene.truth.gt_object_ids), config, {}, threads);
}

VideoData load_video(const DatasetLayout& layout, const PipelineConfig& config, int threads) {
  if (!fs::exists(layout.frames())) throw MissingArtifact("missing frames directory: " + layout.frames().string());
  for (const fs::path& p : {layout.flow_fwd(), layout.flow_bwd()})
    if (!fs::exists(p)) throw MissingArtifact("missing flow directory: " + p.string() + " (run `flow` or `synth`)");
  if (!fs::exists(layout.geometry())) throw MissingArtifact("missing geometric context: " + layout.geometry().string());
  FrameSequence frames = read_frames(layout.frames());
  auto fwd = read_flow_sequence(layout.flow_fwd(), FlowDirection::forward);
  auto bwd = read_flow_sequence(layout.flow_bwd(), FlowDirection::backward);
  GeometricContext geom = read_confidence_video(layout.geometry());
  LabelVideo gt = fs::exists(layout.gt_labels()) ? read_label_video(layout.gt_labels()) : LabelVideo{};
  LabelVideo labels = fs::exists(layout.labels()) ? read_label_video(layout.labels()) : LabelVideo{};
  return prepare_video(layout.root.filename().string(), std::move(frames), std::move(fwd), std::move(bwd),
                       std::move(geom), std::move(gt), config, std::move(labels), threads);
}

std::vector<std::uint8_t> trainable_instances(const VideoData& video) {
  std::vector<std::uint8_t> keep(video.edgelets.instances.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = video.y[i] >= 0 && !video.edgelets.instances[i].is_short;
  return keep;
}

Classifiers train_classifiers(const std::vector<const VideoData*>& videos, FeatureSet set,
                              const PipelineConfig& config, std::uint64_t seed, int threads) {
  if (videos.empty()) throw TrainingError("no training videos");
  Classifiers c;
  c.set = set;
  const std::vector<int> columns = feature_columns(set);

  std::vector<const Eigen::MatrixXd*> unary_parts, pair_parts;
  std::vector<std::vector<std::size_t>> unary_rows, pair_rows;
  std::vector<int> y_unary, y_pair;
  for (const VideoData* v : videos) {
    const auto keep = trainable_instances(*v);
    unary_parts.push_back(&v->X);
    auto& ur = unary_rows.emplace_back();
    for (std::size_t i = 0; i < keep.size(); ++i)
      if (keep[i]) {
        ur.push_back(i);
        y_unary.push_back(v->y[i]);
      }
    pair_parts.push_back(&v->pairs.X);
    auto& pr = pair_rows.emplace_back();
    for (std::size_t k = 0; k < v->pairs.pairs.size(); ++k) {
      const auto [n, m] = v->pairs.pairs[k];
      if (keep[n] && keep[m]) {
        pr.push_back(k);
        y_pair.push_back(v->pairs.y[k]);
      }
    }
  }
  const Eigen::MatrixXd Xu = stack_rows(unary_parts, unary_rows, kFeatureDim);
  c.unary = fit(Xu, y_unary, columns, false, config, derive_seed(seed, "unary"), threads, &c.unary_importance, "unary");
  const Eigen::MatrixXd Xp = stack_rows(pair_parts, pair_rows, 2 * kFeatureDim);
  c.pairwise = fit(Xp, y_pair, pair_columns(columns, kFeatureDim), true, config, derive_seed(seed, "pairwise"),
                   threads, nullptr, "pairwise");
  return c;
}

ForestOutputs predict_video(const Classifiers& models, const VideoData& video, int threads) {
  const auto columns = feature_columns(models.set);
  ForestOutputs out;
  const Eigen::VectorXd pu = predict_proba(models.unary, select_columns(video.X, columns), threads);
  out.p_unary.assign(pu.data(), pu.data() + pu.size());
  if (video.pairs.X.rows() > 0) {
    const Eigen::VectorXd pc =
        predict_proba(models.pairwise, select_columns(video.pairs.X, pair_columns(columns, kFeatureDim)), threads);
    out.p_pair.assign(pc.data(), pc.data() + pc.size());
  }
  return out;
}

std::vector<double> add_unary_noise(std::vector<double> p, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : p) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return p;
}

OcclusionMarginals infer_video(const VideoData& video, const ForestOutputs& outputs, const PipelineConfig& config,
                               int window, int threads) {
  OcclusionMarginals m;
  m.p_raw = outputs.p_unary;
  const FrameInference fi =
      infer_frames(video.edgelets, m.p_raw, video.pairs.pairs, outputs.p_pair, config.lambda, config.bp, threads);
  m.p_bp = fi.p_bp;
  m.p_smooth = temporal_smooth(video.edgelets, m.p_bp, window);
  return m;
}

double boundary_coverage(const LabelVideo& labels, const std::vector<Mask>& gt) {
  if (static_cast<int>(gt.size()) != labels.frame_count()) throw ValidationError("coverage: frame count mismatch");
  std::int64_t on = 0, total = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const Mask b = region_boundaries(labels.frames[t]);
    if (b.rows() != gt[t].rows() || b.cols() != gt[t].cols()) throw ValidationError("coverage: size mismatch");
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (!gt[t].data()[i]) continue;
      ++total;
      on += b.data()[i] != 0;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(on) / static_cast<double>(total);
}

std::string ablation_to_csv(const std::vector<CellResult>& cells) {
  std::string out = "feature_set,window,unary_noise,best_f1,best_threshold\n";
  for (const CellResult& c : cells)
    out += std::string(feature_set_name(c.set)) + "," + std::to_string(c.window) + "," + csv::number(c.unary_noise) +
           "," + csv::number(c.curve.best_f1) + "," + csv::number(c.curve.best_threshold) + "\n";
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, const fs::path& run_dir, int threads, const Logger& log) {
  config.validate();
  auto say = [&](const std::string& line) {
    if (log) log(line);
  };
  PipelineResult res;
  res.config = config;
  const auto n_videos = static_cast<std::size_t>(config.videos);

  res.videos.resize(n_videos);
  parallel_for(n_videos, threads, [&](std::size_t i) { res.videos[i] = fleet_video(config, static_cast<int>(i)); });
  for (const VideoData& v : res.videos) {
    const auto on = std::count(v.y.begin(), v.y.end(), 1);
    say(v.name + ": " + std::to_string(v.labels.region_count()) + " regions, " +
        std::to_string(v.edgelets.edgelets.size()) + " edgelets, " + std::to_string(v.edgelets.instances.size()) +
        " instances, " + std::to_string(on) + " on, " + std::to_string(v.pairs.pairs.size()) + " adjacent pairs");
  }

  res.folds = kfold_split(n_videos, config.folds, derive_seed(config.seed, "folds"));
  res.fold_of.assign(n_videos, 0);
  for (std::size_t f = 0; f < res.folds.size(); ++f)
    for (std::size_t v : res.folds[f]) res.fold_of[v] = f;

  const auto thresholds = pr_thresholds(config.thresholds);
  std::vector<FeatureSet> sets{FeatureSet::all};
  if (config.ablation) sets = {FeatureSet::appearance, FeatureSet::appearance_flow, FeatureSet::all};
  std::vector<int> windows{config.window};
  if (config.ablation && config.window != 1) windows = {1, config.window};

  std::vector<MatchCounts> main_counts(thresholds.size());
  std::vector<std::vector<std::vector<MatchCounts>>> cell_counts(
      sets.size(), std::vector<std::vector<MatchCounts>>(windows.size(), std::vector<MatchCounts>(thresholds.size())));
  res.marginals.resize(n_videos);
  res.oob_importance.assign(kFeatureDim, 0.0);

  for (std::size_t f = 0; f < res.folds.size(); ++f) {
    std::vector<const VideoData*> train;
    for (std::size_t v = 0; v < n_videos; ++v)
      if (res.fold_of[v] != f) train.push_back(&res.videos[v]);
    const std::uint64_t fold_seed = derive_seed(config.seed, "fold", f);
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const Classifiers models = train_classifiers(train, sets[s], config, fold_seed, threads);
      say("fold " + std::to_string(f) + " " + feature_set_name(sets[s]) + ": unary " +
          std::to_string(models.unary.training_rows) + " rows, pairwise " +
          std::to_string(models.pairwise.training_rows) + " rows");
      for (std::size_t v : res.folds[f]) {
        const VideoData& video = res.videos[v];
        const ForestOutputs outputs = predict_video(models, video, threads);
        if (config.ablation) {
          ForestOutputs noisy = outputs;
          noisy.p_unary = add_unary_noise(outputs.p_unary, config.ablation_unary_noise,
                                          derive_seed(config.seed, "ablation-noise", v));
          for (std::size_t w = 0; w < windows.size(); ++w) {
            const OcclusionMarginals m = infer_video(video, noisy, config, windows[w], threads);
            const auto c = sweep_counts(video.edgelets, m.p_smooth, video.gt_masks, thresholds, config.dilation);
            for (std::size_t k = 0; k < c.size(); ++k) cell_counts[s][w][k] += c[k];
          }
        }
        if (sets[s] != FeatureSet::all) continue;
        ForestOutputs main = outputs;
        main.p_unary = add_unary_noise(outputs.p_unary, config.unary_noise, derive_seed(config.seed, "unary-noise", v));
        res.marginals[v] = infer_video(video, main, config, config.window, threads);
        const auto c = sweep_counts(video.edgelets, res.marginals[v].p_smooth, video.gt_masks, thresholds,
                                    config.dilation);
        for (std::size_t k = 0; k < c.size(); ++k) main_counts[k] += c[k];
      }
      if (sets[s] == FeatureSet::all) {
        for (std::size_t i = 0; i < models.unary_importance.size(); ++i)
          res.oob_importance[i] += models.unary_importance[i] / static_cast<double>(res.folds.size());
        res.fold_models.push_back(models);
      }
    }
  }

  res.main = {FeatureSet::all, config.window, config.unary_noise, curve_from_counts(thresholds, main_counts)};
  say("ALL T=" + std::to_string(config.window) + ": best F1 " + format_fixed(res.main.curve.best_f1) +
      " at threshold " + format_fixed(res.main.curve.best_threshold));
  if (config.ablation) {
    for (std::size_t s = 0; s < sets.size(); ++s)
      for (std::size_t w = 0; w < windows.size(); ++w) {
        res.ablation.push_back(
            {sets[s], windows[w], config.ablation_unary_noise, curve_from_counts(thresholds, cell_counts[s][w])});
        say(std::string("ablation ") + feature_set_name(sets[s]) + " T=" + std::to_string(windows[w]) +
            ": best F1 " + format_fixed(res.ablation.back().curve.best_f1));
      }
  }

  if (run_dir.empty()) return res;
  fs::create_directories(run_dir);
  write_text(run_dir / "config.cfg", format_config(config));
  write_text(run_dir / "pr_curve.csv", pr_curve_to_csv(res.main.curve));
  if (config.ablation) write_text(run_dir / "ablation.csv", ablation_to_csv(res.ablation));
  {
    std::string imp = "feature,oob_importance\n";
    for (int i = 0; i < kFeatureDim; ++i)
      imp += feature_names()[static_cast<std::size_t>(i)] + "," + csv::number(res.oob_importance[static_cast<std::size_t>(i)]) + "\n";
    write_text(run_dir / "importance.csv", imp);
  }
  fs::create_directories(run_dir / "models");
  for (std::size_t f = 0; f < res.fold_models.size(); ++f) {
    write_text(run_dir / "models" / ("fold_" + std::to_string(f) + "_unary.model"),
               serialize_model(res.fold_models[f].unary));
    write_text(run_dir / "models" / ("fold_" + std::to_string(f) + "_pairwise.model"),
               serialize_model(res.fold_models[f].pairwise));
  }
  if (config.write_videos) {
    for (std::size_t v = 0; v < n_videos; ++v) {
      const VideoData& video = res.videos[v];
      const DatasetLayout layout{run_dir / "videos" / video.name};
      write_dataset(layout, video.frames, video.flow_fwd, video.flow_bwd, video.geometry, &video.gt_ids);
      write_label_video(video.labels, layout.labels());
      write_text(layout.features(), features_to_csv(make_feature_table(video.edgelets, video.X, video.y)));
      write_text(layout.pairs(), pairs_to_csv(video.pairs, video.edgelets));
      write_text(layout.edgelets(), edgelets_to_json(video.edgelets));
      write_text(layout.probabilities(), marginals_to_csv(video.edgelets, res.marginals[v]));
      write_confidence_video(probability_splat(video.edgelets, res.marginals[v].p_smooth), layout.occlusion_map());
      const auto maps = threshold_boundaries(video.edgelets, res.marginals[v].p_smooth, res.main.curve.best_threshold);
      fs::create_directories(layout.boundaries());
      for (std::size_t t = 0; t < maps.size(); ++t)
        write_pbm(maps[t], layout.boundaries() / frame_filename(static_cast<int>(t), "pbm"));
    }
  }
  std::string summary;
  summary += "videos=" + std::to_string(config.videos) + "\n";
  summary += "folds=" + std::to_string(config.folds) + "\n";
  summary += "best_f1=" + format_fixed(res.main.curve.best_f1, 6) + "\n";
  summary += "best_threshold=" + format_fixed(res.main.curve.best_threshold, 6) + "\n";
  for (const CellResult& c : res.ablation)
    summary += std::string("ablation.") + feature_set_name(c.set) + ".T" + std::to_string(c.window) + "=" +
               format_fixed(c.curve.best_f1, 6) + "\n";
  write_text(run_dir / "summary.txt", summary);
  return res;
}

}  // namespace occlusion
