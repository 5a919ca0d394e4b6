#include "occlusion/media.hpp"

#include "occlusion/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace occlusion {
namespace {

class ByteWriter {
 public:
  void bytes(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }
  void reserve(std::size_t n) { buf_.reserve(n); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, const char* what) : data_(data), what_(what) {}

  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw LengthError(std::string(what_) + ": truncated payload");
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  bool tag(const char* expected) {
    need(4);
    const bool ok = std::memcmp(data_.data() + pos_, expected, 4) == 0;
    pos_ += 4;
    return ok;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0) throw LengthError(std::string(what_) + ": trailing bytes after payload");
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  const char* what_;
};

void check_dims(std::uint64_t w, std::uint64_t h, std::uint64_t t, const char* what) {
  if (w == 0 || h == 0 || t == 0 || w > (1u << 16) || h > (1u << 16) || t > (1u << 20))
    throw FormatError(std::string(what) + ": implausible dimensions");
}

}  // namespace

std::vector<std::uint8_t> encode_flo(const FlowField& field) {
  ByteWriter w;
  w.reserve(12 + 8 * static_cast<std::size_t>(field.width() * field.height()));
  w.f32(kFloMagic);
  w.i32(field.width());
  w.i32(field.height());
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      w.f32(field.u(y, x));
      w.f32(field.v(y, x));
    }
  }
  return w.take();
}

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ".flo");
  if (r.f32() != kFloMagic) throw FormatError(".flo: bad magic number");
  const std::int32_t width = r.i32();
  const std::int32_t height = r.i32();
  if (width <= 0 || height <= 0) throw FormatError(".flo: non-positive dimensions");
  check_dims(static_cast<std::uint64_t>(width), static_cast<std::uint64_t>(height), 1, ".flo");
  r.need(8 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  FlowField field(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      field.u(y, x) = r.f32();
      field.v(y, x) = r.f32();
    }
  }
  r.expect_end();
  return field;
}

FlowField read_flo(const fs::path& path) { return decode_flo(read_file(path)); }

void write_flo(const FlowField& field, const fs::path& path) { write_file(path, encode_flo(field)); }

std::vector<std::uint8_t> encode_label_video(const LabelVideo& labels) {
  ByteWriter w;
  w.reserve(16 + 4 * static_cast<std::size_t>(labels.width * labels.height * labels.frame_count()));
  w.bytes("SVLM", 4);
  w.u32(static_cast<std::uint32_t>(labels.width));
  w.u32(static_cast<std::uint32_t>(labels.height));
  w.u32(static_cast<std::uint32_t>(labels.frame_count()));
  for (const auto& f : labels.frames)
    for (int y = 0; y < labels.height; ++y)
      for (int x = 0; x < labels.width; ++x) w.u32(f(y, x));
  return w.take();
}

LabelVideo decode_label_video(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "SVLM");
  if (!r.tag("SVLM")) throw FormatError("SVLM: bad magic");
  const std::uint32_t w = r.u32(), h = r.u32(), t = r.u32();
  check_dims(w, h, t, "SVLM");
  r.need(4ull * w * h * t);
  LabelVideo out(static_cast<int>(w), static_cast<int>(h), static_cast<int>(t));
  for (auto& f : out.frames)
    for (std::uint32_t y = 0; y < h; ++y)
      for (std::uint32_t x = 0; x < w; ++x) f(y, x) = r.u32();
  r.expect_end();
  return out;
}

LabelVideo read_label_video(const fs::path& path) { return decode_label_video(read_file(path)); }

void write_label_video(const LabelVideo& labels, const fs::path& path) {
  write_file(path, encode_label_video(labels));
}

std::vector<std::uint8_t> encode_confidence_video(const ConfidenceVideo& conf) {
  ByteWriter w;
  w.reserve(17 + 4 * static_cast<std::size_t>(conf.width * conf.height * conf.frame_count() *
                                               conf.channels));
  w.bytes("GCM1", 4);
  w.u32(static_cast<std::uint32_t>(conf.width));
  w.u32(static_cast<std::uint32_t>(conf.height));
  w.u32(static_cast<std::uint32_t>(conf.frame_count()));
  w.u8(static_cast<std::uint8_t>(conf.channels));
  for (int t = 0; t < conf.frame_count(); ++t)
    for (int y = 0; y < conf.height; ++y)
      for (int x = 0; x < conf.width; ++x)
        for (int c = 0; c < conf.channels; ++c) w.f32(conf.plane(t, c)(y, x));
  return w.take();
}

ConfidenceVideo decode_confidence_video(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "GCM1");
  if (!r.tag("GCM1")) throw FormatError("GCM1: bad magic");
  const std::uint32_t w = r.u32(), h = r.u32(), t = r.u32();
  check_dims(w, h, t, "GCM1");
  const int channels = r.u8();
  if (channels != kGeometricClasses && channels != 1)
    throw FormatError("GCM1: class count must be 5 (geometry) or 1 (probability map)");
  r.need(4ull * w * h * t * static_cast<std::uint64_t>(channels));
  ConfidenceVideo out(static_cast<int>(w), static_cast<int>(h), static_cast<int>(t), channels);
  for (int f = 0; f < out.frame_count(); ++f) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c) {
          const float v = r.f32();
          if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw ValidationError("GCM1: confidence outside [0,1]");
          out.plane(f, c)(y, x) = v;
          sum += v;
        }
        if (channels == kGeometricClasses && std::abs(sum - 1.0) > 1e-4)
          throw ValidationError("GCM1: confidences at pixel do not sum to 1");
      }
    }
  }
  r.expect_end();
  return out;
}

ConfidenceVideo read_confidence_video(const fs::path& path) {
  return decode_confidence_video(read_file(path));
}

void write_confidence_video(const ConfidenceVideo& conf, const fs::path& path) {
  write_file(path, encode_confidence_video(conf));
}

namespace {

// Reads one whitespace-delimited header token of a netpbm file, skipping comments.
std::string pnm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  auto is_space = [](std::uint8_t c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; };
  while (pos < bytes.size()) {
    if (is_space(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !is_space(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) throw FormatError("netpbm: truncated header");
  return tok;
}

int pnm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::string tok = pnm_token(bytes, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw FormatError("netpbm: bad header value " + tok);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("netpbm: bad header value " + tok);
  }
}

std::vector<std::uint8_t> header_bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  auto out = header_bytes("P6\n" + std::to_string(image.width()) + " " +
                          std::to_string(image.height()) + "\n255\n");
  out.reserve(out.size() + 3 * static_cast<std::size_t>(image.width() * image.height()));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      out.push_back(image.r(y, x));
      out.push_back(image.g(y, x));
      out.push_back(image.b(y, x));
    }
  }
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (pnm_token(bytes, pos) != "P6") throw FormatError("PPM: expected P6 magic");
  const int w = pnm_int(bytes, pos);
  const int h = pnm_int(bytes, pos);
  if (pnm_int(bytes, pos) != 255) throw FormatError("PPM: only 8-bit maxval 255 supported");
  ++pos;  // single whitespace byte before raster
  const std::size_t need = 3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (pos + need > bytes.size()) throw LengthError("PPM: truncated raster");
  if (pos + need != bytes.size()) throw LengthError("PPM: trailing bytes after raster");
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.r(y, x) = bytes[pos++];
      img.g(y, x) = bytes[pos++];
      img.b(y, x) = bytes[pos++];
    }
  }
  return img;
}

void write_pbm(const Mask& mask, const fs::path& path) {
  const int w = static_cast<int>(mask.cols());
  const int h = static_cast<int>(mask.rows());
  auto out = header_bytes("P4\n" + std::to_string(w) + " " + std::to_string(h) + "\n");
  const int row_bytes = (w + 7) / 8;
  for (int y = 0; y < h; ++y) {
    for (int bx = 0; bx < row_bytes; ++bx) {
      std::uint8_t byte = 0;
      for (int bit = 0; bit < 8; ++bit) {
        const int x = bx * 8 + bit;
        if (x < w && mask(y, x)) byte |= static_cast<std::uint8_t>(0x80u >> bit);
      }
      out.push_back(byte);
    }
  }
  write_file(path, out);
}

Mask read_pbm(const fs::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  if (pnm_token(bytes, pos) != "P4") throw FormatError("PBM: expected P4 magic");
  const int w = pnm_int(bytes, pos);
  const int h = pnm_int(bytes, pos);
  ++pos;
  const int row_bytes = (w + 7) / 8;
  if (pos + static_cast<std::size_t>(row_bytes * h) != bytes.size())
    throw LengthError("PBM: raster size mismatch");
  Mask m = Mask::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m(y, x) = (bytes[pos + static_cast<std::size_t>(y * row_bytes + x / 8)] >> (7 - x % 8)) & 1u;
  return m;
}

std::string frame_filename(int index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.", index);
  return buf + ext;
}

void write_frames(const FrameSequence& frames, const fs::path& dir) {
  frames.validate();
  fs::create_directories(dir);
  for (int t = 0; t < frames.size(); ++t) write_file(dir / frame_filename(t, "ppm"), encode_ppm(frames[t]));
}

FrameSequence read_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingArtifact("frames directory not found: " + dir.string());
  FrameSequence seq;
  for (int t = 0;; ++t) {
    const fs::path p = dir / frame_filename(t, "ppm");
    if (!fs::exists(p)) break;
    seq.frames.push_back(decode_ppm(read_file(p)));
  }
  seq.validate();
  return seq;
}

void write_flow_sequence(const std::vector<FlowField>& flows, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < flows.size(); ++t)
    write_flo(flows[t], dir / frame_filename(static_cast<int>(t), "flo"));
}

std::vector<FlowField> read_flow_sequence(const fs::path& dir, FlowDirection direction) {
  if (!fs::is_directory(dir)) throw MissingArtifact("flow directory not found: " + dir.string());
  std::vector<FlowField> out;
  for (int t = 0;; ++t) {
    const fs::path p = dir / frame_filename(t, "flo");
    if (!fs::exists(p)) break;
    out.push_back(read_flo(p));
    out.back().direction = direction;
  }
  return out;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  write_text(path, "width=" + std::to_string(m.width) + "\nheight=" + std::to_string(m.height) +
                       "\nframes=" + std::to_string(m.frames) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  const auto kv = parse_key_values(read_text(path));
  Manifest m;
  try {
    m.width = std::stoi(kv.at("width"));
    m.height = std::stoi(kv.at("height"));
    m.frames = std::stoi(kv.at("frames"));
  } catch (const std::exception&) {
    throw FormatError("manifest: width, height and frames are required integers");
  }
  return m;
}

void FrameSequence::validate() const {
  if (frames.size() < 2) throw ValidationError("frame sequence needs at least 2 frames");
  for (const auto& f : frames)
    if (f.width() != width() || f.height() != height())
      throw ValidationError("frame dimension mismatch within sequence");
}

std::uint32_t LabelVideo::region_count() const {
  std::uint32_t m = 0;
  bool any = false;
  for (const auto& f : frames) {
    if (f.size() == 0) continue;
    m = std::max(m, f.maxCoeff());
    any = true;
  }
  return any ? m + 1 : 0;
}

bool LabelVideo::operator==(const LabelVideo& o) const {
  if (width != o.width || height != o.height || frames.size() != o.frames.size()) return false;
  for (std::size_t t = 0; t < frames.size(); ++t)
    if (!(frames[t] == o.frames[t]).all()) return false;
  return true;
}

bool ConfidenceVideo::operator==(const ConfidenceVideo& o) const {
  if (width != o.width || height != o.height || channels != o.channels ||
      frames.size() != o.frames.size())
    return false;
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (std::size_t c = 0; c < frames[t].size(); ++c)
      if (!(frames[t][c] == o.frames[t][c]).all()) return false;
  return true;
}

}  // namespace occlusion
