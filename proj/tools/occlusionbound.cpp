#include "occlusion/config.hpp"
#include "occlusion/csv.hpp"
#include "occlusion/edgelet.hpp"
#include "occlusion/eval.hpp"
#include "occlusion/features.hpp"
#include "occlusion/flow.hpp"
#include "occlusion/forest.hpp"
#include "occlusion/media.hpp"
#include "occlusion/mrf.hpp"
#include "occlusion/pipeline.hpp"
#include "occlusion/segment.hpp"
#include "occlusion/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace occlusion;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> settings;
  int threads = 0;
};

std::map<std::string, std::string> parse_settings(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

// Config file, then --set pairs, then the subcommand's own flags.
PipelineConfig make_config(const Common& common, const std::map<std::string, std::string>& flags) {
  PipelineConfig c;
  if (!common.config.empty()) c = load_config(common.config);
  c = apply_settings(c, parse_settings(common.settings));
  c = apply_settings(c, flags);
  c.validate();
  return c;
}

void add_common(CLI::App* app, Common& common) {
  app->add_option("--config", common.config, "key=value configuration file");
  app->add_option("--set", common.settings, "override one configuration key (key=value), repeatable");
  app->add_option("--threads", common.threads, "worker cap (default: OCCLUSIONBOUND_THREADS or 1)");
}

void require(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw MissingArtifact("missing " + p.string() + (hint.empty() ? "" : " (" + hint + ")"));
}

FeatureSet set_from_name(const std::string& name) {
  for (FeatureSet s : {FeatureSet::appearance, FeatureSet::appearance_flow, FeatureSet::all})
    if (name == feature_set_name(s)) return s;
  throw ConfigError("unknown feature set '" + name + "' (expected App, App+Flow or ALL)");
}

FeatureSet set_from_width(int unary_dim) {
  for (FeatureSet s : {FeatureSet::appearance, FeatureSet::appearance_flow, FeatureSet::all})
    if (static_cast<int>(feature_columns(s).size()) == unary_dim) return s;
  throw SchemaError("model width " + std::to_string(unary_dim) + " matches no feature set");
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Rows of the given CSVs with non-short, labelled instances.
std::pair<Eigen::MatrixXd, std::vector<int>> load_unary_rows(const std::vector<std::string>& paths, int min_len) {
  std::vector<FeatureTable> tables;
  Eigen::Index total = 0;
  for (const auto& p : paths) {
    require(p, "run `features`");
    tables.push_back(features_from_csv(read_text(p)));
    total += tables.back().X.rows();
  }
  Eigen::MatrixXd X(total, kFeatureDim);
  std::vector<int> y;
  Eigen::Index at = 0;
  for (const auto& t : tables)
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      if (t.labels[r] < 0 || pair_count_from_length_feature(t.X(row, 0)) < min_len) continue;
      X.row(at++) = t.X.row(row);
      y.push_back(t.labels[r]);
    }
  X.conservativeResize(at, kFeatureDim);
  return {X, y};
}

ForestModel train_from_rows(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& columns,
                            const std::vector<std::string>& names, const PipelineConfig& c, const char* tag,
                            int threads) {
  const auto rows = balanced_rows(y, c.negative_ratio, derive_seed(c.seed, std::string(tag) + "-balance"));
  std::vector<int> y_train;
  for (std::size_t r : rows) y_train.push_back(y[r]);
  ForestParams params = c.forest;
  params.seed = derive_seed(c.seed, tag);
  return train_forest(select_columns(select_rows(X, rows), columns), y_train, params, names, threads);
}

int run(int argc, char** argv) {
  CLI::App app{"Temporally consistent occlusion boundary detection"};
  app.require_subcommand(1);
  Common common;

  std::string keys_help = "Configuration keys:\n";
  for (const auto& [k, h] : config_keys()) keys_help += "  " + k + "  " + h + "\n";
  app.footer(keys_help);

  // synth
  auto* synth = app.add_subcommand("synth", "render a synthetic scene into a dataset directory");
  add_common(synth, common);
  std::string out_dir, spec_file, scene_kind = "random";
  std::uint64_t scene_seed = 1;
  int width = 64, height = 64, frames = 30;
  double geometry_noise = 0.2;
  synth->add_option("--out", out_dir, "dataset directory")->required();
  synth->add_option("--seed", scene_seed, "scene seed");
  synth->add_option("--spec", spec_file, "scene spec file (overrides --scene)");
  synth->add_option("--scene", scene_kind, "random or contrast-gap");
  synth->add_option("--width", width);
  synth->add_option("--height", height);
  synth->add_option("--frames", frames);
  synth->add_option("--geometry-noise", geometry_noise, "noise blended into the geometric context");

  // flow
  auto* flow = app.add_subcommand("flow", "estimate forward and backward flow for a dataset");
  add_common(flow, common);
  std::string data_dir;
  flow->add_option("--data", data_dir, "dataset directory")->required();

  // segment
  auto* segment = app.add_subcommand("segment", "over-segment the video into super-voxels");
  add_common(segment, common);
  std::string occl_map;
  double seg_k = -1, w_occl = -1, k_region = 0.5;
  int min_size = -1, levels = 0;
  segment->add_option("--data", data_dir)->required();
  segment->add_option("--k", seg_k, "segmentation scale");
  segment->add_option("--min-size", min_size, "minimum region size");
  segment->add_option("--w-occl", w_occl, "occlusion weight");
  segment->add_option("--occl-map", occl_map, "single-channel GCM1 occlusion probability video");
  segment->add_option("--levels", levels, "hierarchy levels written as labels_level_N.svlm");
  segment->add_option("--k-region", k_region, "hierarchy merge scale at level 1");

  // edgelets
  auto* edgelets = app.add_subcommand("edgelets", "extract edgelets and write edgelets.json");
  add_common(edgelets, common);
  int min_len = -1;
  edgelets->add_option("--data", data_dir)->required();
  edgelets->add_option("--min-len", min_len, "minimum trainable edgelet length");

  // features
  auto* features = app.add_subcommand("features", "compute edgelet features (features.csv, pairs.csv)");
  add_common(features, common);
  features->add_option("--data", data_dir)->required();

  // train-unary / train-pairwise
  std::vector<std::string> inputs;
  std::string model_out, set_name = "ALL";
  auto* train_unary = app.add_subcommand("train-unary", "train the unary forest from feature CSVs");
  add_common(train_unary, common);
  train_unary->add_option("--features", inputs, "features.csv files")->required();
  train_unary->add_option("--out", model_out, "model file")->required();
  train_unary->add_option("--feature-set", set_name, "App, App+Flow or ALL");
  auto* train_pairwise = app.add_subcommand("train-pairwise", "train the pairwise forest from pair CSVs");
  add_common(train_pairwise, common);
  train_pairwise->add_option("--pairs", inputs, "pairs.csv files")->required();
  train_pairwise->add_option("--out", model_out, "model file")->required();
  train_pairwise->add_option("--feature-set", set_name, "App, App+Flow or ALL");

  // infer
  auto* infer = app.add_subcommand("infer", "edgelet probabilities, boundary maps and probability splat");
  add_common(infer, common);
  std::string unary_model, pairwise_model;
  int window = -1;
  double lambda = -1, threshold = -1;
  infer->add_option("--data", data_dir)->required();
  infer->add_option("--unary-model", unary_model)->required();
  infer->add_option("--pairwise-model", pairwise_model)->required();
  infer->add_option("--window", window, "temporal window T");
  infer->add_option("--lambda", lambda, "pairwise strength");
  infer->add_option("--threshold", threshold, "boundary threshold");

  // eval
  auto* eval = app.add_subcommand("eval", "precision/recall against ground truth");
  add_common(eval, common);
  std::vector<std::string> eval_dirs;
  eval->add_option("--data", eval_dirs, "dataset directories holding probabilities.csv")->required();
  eval->add_option("--out", out_dir, "directory for pr_curve.csv and summary.txt");

  // occlusion-segment
  auto* occl_seg = app.add_subcommand("occlusion-segment", "re-segment using the inferred occlusion probabilities");
  add_common(occl_seg, common);
  double occl_weight = 0.25;
  occl_seg->add_option("--data", data_dir)->required();
  occl_seg->add_option("--w-occl", occl_weight, "occlusion weight");
  occl_seg->add_option("--k", seg_k);
  occl_seg->add_option("--min-size", min_size);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "cross-validated end-to-end run on the synthetic fleet");
  add_common(pipeline, common);
  std::uint64_t run_seed = 0;
  bool quiet = false;
  pipeline->add_option("--seed", run_seed, "root seed");
  pipeline->add_option("--out", out_dir, "run directory")->required();
  pipeline->add_flag("--quiet", quiet, "do not echo the log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const int threads = resolve_threads(common.threads);
  std::map<std::string, std::string> flags;
  auto flag = [&](const char* key, double v, bool given) {
    if (given) flags[key] = csv::number(v);
  };

  if (*synth) {
    flags["geometry_noise"] = csv::number(geometry_noise);
    const PipelineConfig c = make_config(common, flags);
    SceneSpec spec;
    if (!spec_file.empty()) {
      require(spec_file, "");
      spec = parse_scene_spec(read_text(spec_file));
    } else if (scene_kind == "random") {
      spec = random_scene(scene_seed, width, height, frames);
    } else if (scene_kind == "contrast-gap") {
      spec = contrast_gap_scene(scene_seed, width, height, frames);
    } else {
      throw ConfigError("unknown scene kind '" + scene_kind + "'");
    }
    const RenderedScene scene = render_scene(spec);
    const GeometricContext geom =
        c.geometry_noise > 0 ? perturb_geometric(scene.truth.gt_geometric, c.geometry_noise, derive_seed(scene_seed, "geometry"))
                             : scene.truth.gt_geometric;
    const DatasetLayout layout{out_dir};
    write_dataset(layout, scene.frames, scene.truth.flow_fwd, scene.truth.flow_bwd, geom, &scene.truth.gt_object_ids);
    write_text(layout.root / "scene.txt", format_scene_spec(spec));
    std::cout << "wrote " << scene.frames.size() << " frames to " << out_dir << "\n";
    return 0;
  }

  if (*flow) {
    const PipelineConfig c = make_config(common, flags);
    const DatasetLayout layout{data_dir};
    require(layout.frames(), "run `synth`");
    const FlowPair fp = estimate_sequence_flow(read_frames(layout.frames()), c.flow, threads);
    write_flow_sequence(fp.forward, layout.flow_fwd());
    write_flow_sequence(fp.backward, layout.flow_bwd());
    std::cout << "wrote " << fp.forward.size() << " flow pairs\n";
    return 0;
  }

  if (*segment || *occl_seg) {
    flag("seg.k", seg_k, seg_k > 0);
    if (min_size > 0) flags["seg.min_size"] = std::to_string(min_size);
    if (*occl_seg) flags["seg.w_occl"] = csv::number(occl_weight);
    flag("seg.w_occl", w_occl, *segment && w_occl >= 0);
    const PipelineConfig c = make_config(common, flags);
    const DatasetLayout layout{data_dir};
    require(layout.frames(), "run `synth`");
    const FrameSequence seq = read_frames(layout.frames());
    ConfidenceVideo occl;
    const ConfidenceVideo* occl_ptr = nullptr;
    if (*occl_seg || !occl_map.empty()) {
      const fs::path p = *occl_seg ? layout.occlusion_map() : fs::path(occl_map);
      require(p, "run `infer`");
      occl = read_confidence_video(p);
      if (occl.channels != 1) throw ValidationError("occlusion map must have one channel");
      occl_ptr = &occl;
    }
    const LabelVideo labels = oversegment(seq, c.seg, occl_ptr);
    if (*occl_seg) {
      const fs::path out = layout.root / "labels_occlusion.svlm";
      write_label_video(labels, out);
      std::cout << "wrote " << out.string() << " (" << labels.region_count() << " regions)\n";
      if (fs::exists(layout.gt_labels())) {
        std::vector<Mask> gt;
        for (const auto& f : read_label_video(layout.gt_labels()).frames) gt.push_back(boundary_mask(f));
        std::cout << "boundary coverage w_occl=" << c.seg.w_occl << ": " << fixed(boundary_coverage(labels, gt)) << "\n";
        if (fs::exists(layout.labels()))
          std::cout << "boundary coverage labels.svlm: " << fixed(boundary_coverage(read_label_video(layout.labels()), gt))
                    << "\n";
      }
      return 0;
    }
    write_label_video(labels, layout.labels());
    std::cout << "wrote " << layout.labels().string() << " (" << labels.region_count() << " regions)\n";
    if (levels > 0) {
      std::vector<FlowField> fwd;
      if (fs::exists(layout.flow_fwd())) fwd = read_flow_sequence(layout.flow_fwd(), FlowDirection::forward);
      const auto hierarchy = merge_hierarchy(labels, seq, fwd, levels, k_region);
      for (std::size_t l = 1; l < hierarchy.size(); ++l)
        write_label_video(hierarchy[l], layout.root / ("labels_level_" + std::to_string(l) + ".svlm"));
    }
    return 0;
  }

  if (*edgelets) {
    if (min_len > 0) flags["edgelet.min_len"] = std::to_string(min_len);
    const PipelineConfig c = make_config(common, flags);
    const DatasetLayout layout{data_dir};
    require(layout.labels(), "run `segment`");
    const EdgeletSet set = extract_edgelets(read_label_video(layout.labels()), c.min_edgelet_len, threads);
    write_text(layout.edgelets(), edgelets_to_json(set));
    std::cout << set.edgelets.size() << " edgelets, " << set.instances.size() << " instances\n";
    return 0;
  }

  if (*features) {
    const PipelineConfig c = make_config(common, flags);
    const DatasetLayout layout{data_dir};
    require(layout.labels(), "run `segment`");
    const VideoData v = load_video(layout, c, threads);
    write_text(layout.features(), features_to_csv(make_feature_table(v.edgelets, v.X, v.y)));
    write_text(layout.pairs(), pairs_to_csv(v.pairs, v.edgelets));
    std::cout << v.X.rows() << " feature rows, " << v.pairs.pairs.size() << " pair rows\n";
    return 0;
  }

  if (*train_unary) {
    const PipelineConfig c = make_config(common, flags);
    const auto columns = feature_columns(set_from_name(set_name));
    const auto [X, y] = load_unary_rows(inputs, c.min_edgelet_len);
    std::vector<std::string> names;
    for (int col : columns) names.push_back(feature_names()[static_cast<std::size_t>(col)]);
    const ForestModel m = train_from_rows(X, y, columns, names, c, "unary", threads);
    write_text(model_out, serialize_model(m));
    std::cout << "trained " << m.trees.size() << " trees on " << m.training_rows << " rows\n";
    return 0;
  }

  if (*train_pairwise) {
    const PipelineConfig c = make_config(common, flags);
    const auto columns = pair_columns(feature_columns(set_from_name(set_name)), kFeatureDim);
    Eigen::MatrixXd X(0, 2 * kFeatureDim);
    std::vector<int> y;
    for (const auto& p : inputs) {
      require(p, "run `features`");
      auto [Xi, yi] = pairs_from_csv(read_text(p));
      // Pairs touching a short instance are not trained on.
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < yi.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        if (yi[r] >= 0 && pair_count_from_length_feature(Xi(row, 0)) >= c.min_edgelet_len &&
            pair_count_from_length_feature(Xi(row, kFeatureDim)) >= c.min_edgelet_len)
          keep.push_back(r);
      }
      Eigen::MatrixXd joined(X.rows() + static_cast<Eigen::Index>(keep.size()), X.cols());
      joined << X, select_rows(Xi, keep);
      X = std::move(joined);
      for (std::size_t r : keep) y.push_back(yi[r]);
    }
    std::vector<std::string> names;
    for (int col : columns)
      names.push_back((col < kFeatureDim ? "n_" : "m_") + feature_names()[static_cast<std::size_t>(col % kFeatureDim)]);
    const ForestModel m = train_from_rows(X, y, columns, names, c, "pairwise", threads);
    write_text(model_out, serialize_model(m));
    std::cout << "trained " << m.trees.size() << " trees on " << m.training_rows << " rows\n";
    return 0;
  }

  if (*infer) {
    if (window > 0) flags["infer.window"] = std::to_string(window);
    flag("infer.lambda", lambda, lambda >= 0);
    flag("infer.threshold", threshold, threshold >= 0);
    const PipelineConfig c = make_config(common, flags);
    const DatasetLayout layout{data_dir};
    require(layout.labels(), "run `segment`");
    require(unary_model, "run `train-unary`");
    require(pairwise_model, "run `train-pairwise`");
    Classifiers models;
    models.unary = deserialize_model(read_text(unary_model));
    models.pairwise = deserialize_model(read_text(pairwise_model));
    models.set = set_from_width(models.unary.dim);
    if (models.pairwise.dim != 2 * models.unary.dim)
      throw SchemaError("pairwise model width does not match the unary model");
    const VideoData v = load_video(layout, c, threads);
    const OcclusionMarginals m = infer_video(v, predict_video(models, v, threads), c, c.window, threads);
    write_text(layout.probabilities(), marginals_to_csv(v.edgelets, m));
    write_confidence_video(probability_splat(v.edgelets, m.p_smooth), layout.occlusion_map());
    const auto maps = threshold_boundaries(v.edgelets, m.p_smooth, c.threshold);
    fs::create_directories(layout.boundaries());
    for (std::size_t t = 0; t < maps.size(); ++t)
      write_pbm(maps[t], layout.boundaries() / frame_filename(static_cast<int>(t), "pbm"));
    std::cout << "inferred " << m.p_smooth.size() << " instances\n";
    return 0;
  }

  if (*eval) {
    const PipelineConfig c = make_config(common, flags);
    const auto thresholds = pr_thresholds(c.thresholds);
    std::vector<MatchCounts> counts(thresholds.size());
    for (const auto& dir : eval_dirs) {
      const DatasetLayout layout{dir};
      require(layout.probabilities(), "run `infer`");
      require(layout.labels(), "run `segment`");
      require(layout.gt_labels(), "ground truth is required");
      const EdgeletSet set = extract_edgelets(read_label_video(layout.labels()), c.min_edgelet_len, threads);
      const MarginalsTable table = marginals_from_csv(read_text(layout.probabilities()));
      if (table.keys.size() != set.instances.size())
        throw ValidationError(dir + ": probabilities.csv does not match labels.svlm");
      for (std::size_t i = 0; i < table.keys.size(); ++i)
        if (!(table.keys[i] == set.key_of(i)) || table.frames[i] != set.instances[i].frame)
          throw ValidationError(dir + ": probabilities.csv row " + std::to_string(i + 1) + " does not match");
      std::vector<Mask> gt;
      for (const auto& f : read_label_video(layout.gt_labels()).frames) gt.push_back(boundary_mask(f));
      const auto c_video = sweep_counts(set, table.marginals.p_smooth, gt, thresholds, c.dilation);
      for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += c_video[k];
    }
    const PRCurve curve = curve_from_counts(thresholds, counts);
    std::cout << "best F1 " << fixed(curve.best_f1) << " at threshold " << fixed(curve.best_threshold) << "\n";
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "pr_curve.csv", pr_curve_to_csv(curve));
      write_text(fs::path(out_dir) / "summary.txt",
                 "best_f1=" + fixed(curve.best_f1) + "\nbest_threshold=" + fixed(curve.best_threshold) + "\n");
    }
    return 0;
  }

  if (*pipeline) {
    if (pipeline->count("--seed")) flags["seed"] = std::to_string(run_seed);
    const PipelineConfig c = make_config(common, flags);
    std::string log;
    run_pipeline(c, out_dir, threads, [&](const std::string& line) {
      log += line + "\n";
      if (!quiet) std::cerr << line << "\n";
    });
    write_text(fs::path(out_dir) / "log.txt", log);
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
