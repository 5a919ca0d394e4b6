#pragma once

#include "occlusion/image.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace occlusion {

namespace fs = std::filesystem;

// Middlebury .flo
inline constexpr float kFloMagic = 202021.25f;

std::vector<std::uint8_t> encode_flo(const FlowField& field);
FlowField decode_flo(std::span<const std::uint8_t> bytes);
FlowField read_flo(const fs::path& path);
void write_flo(const FlowField& field, const fs::path& path);

// SVLM label container
std::vector<std::uint8_t> encode_label_video(const LabelVideo& labels);
LabelVideo decode_label_video(std::span<const std::uint8_t> bytes);
LabelVideo read_label_video(const fs::path& path);
void write_label_video(const LabelVideo& labels, const fs::path& path);

// GCM1 confidence container. Five-channel payloads must be per-pixel simplex
// points; single-channel payloads must lie in [0,1].
std::vector<std::uint8_t> encode_confidence_video(const ConfidenceVideo& conf);
ConfidenceVideo decode_confidence_video(std::span<const std::uint8_t> bytes);
ConfidenceVideo read_confidence_video(const fs::path& path);
void write_confidence_video(const ConfidenceVideo& conf, const fs::path& path);

// Binary PPM (P6) frames and PBM (P4) masks.
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);
void write_pbm(const Mask& mask, const fs::path& path);
Mask read_pbm(const fs::path& path);

/// `frame_%05d.<ext>`
std::string frame_filename(int index, const std::string& ext);

/// Writes frame_%05d.ppm files into `dir`, creating it.
void write_frames(const FrameSequence& frames, const fs::path& dir);
/// Reads consecutive frame_%05d.ppm files starting at index 0.
FrameSequence read_frames(const fs::path& dir);

void write_flow_sequence(const std::vector<FlowField>& flows, const fs::path& dir);
std::vector<FlowField> read_flow_sequence(const fs::path& dir, FlowDirection direction);

std::vector<std::uint8_t> read_file(const fs::path& path);
void write_file(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// key=value lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Files of one dataset directory.
struct DatasetLayout {
  fs::path root;

  fs::path frames() const { return root / "frames"; }
  fs::path flow_fwd() const { return root / "flow_fwd"; }
  fs::path flow_bwd() const { return root / "flow_bwd"; }
  fs::path labels() const { return root / "labels.svlm"; }
  fs::path geometry() const { return root / "geom.gcm1"; }
  fs::path gt_labels() const { return root / "gt_labels.svlm"; }
  fs::path manifest() const { return root / "manifest.txt"; }
  fs::path edgelets() const { return root / "edgelets.json"; }
  fs::path features() const { return root / "features.csv"; }
  fs::path pairs() const { return root / "pairs.csv"; }
  fs::path probabilities() const { return root / "probabilities.csv"; }
  fs::path boundaries() const { return root / "boundaries"; }
  fs::path occlusion_map() const { return root / "occlusion_prob.gcm1"; }
};

struct Manifest {
  int width = 0;
  int height = 0;
  int frames = 0;
};

void write_manifest(const Manifest& m, const fs::path& path);
Manifest read_manifest(const fs::path& path);

}  // namespace occlusion
