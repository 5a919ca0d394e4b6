#include "helpers.hpp"

#include "occlusion/color.hpp"
#include "occlusion/error.hpp"
#include "occlusion/media.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace occlusion;

namespace {

// Textbook sRGB (D65) to CIE Lab, written out independently of the library.
std::array<double, 3> reference_lab(int r8, int g8, int b8) {
  auto lin = [](int c) {
    const double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double r = lin(r8), g = lin(g8), b = lin(b8);
  const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  auto f = [](double t) {
    const double eps = 216.0 / 24389.0, kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
  };
  const double fx = f(X / 0.95047), fy = f(Y / 1.0), fz = f(Z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

FlowField random_flow(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<float> d(-20.f, 20.f);
  FlowField f(w, h);
  for (Eigen::Index i = 0; i < f.u.size(); ++i) {
    f.u.data()[i] = d(rng);
    f.v.data()[i] = d(rng);
  }
  return f;
}

}  // namespace

TEST_SUITE("media") {
  TEST_CASE("black maps to zero lightness") {
    const Eigen::Vector3d lab = srgb_to_lab(0, 0, 0);
    CHECK(lab[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(lab[1]) < 1e-9);
    CHECK(std::abs(lab[2]) < 1e-9);
  }

  TEST_CASE("white maps to the white point") {
    const Eigen::Vector3d lab = srgb_to_lab(255, 255, 255);
    CHECK(lab[0] == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(std::abs(lab[1]) < 0.5);
    CHECK(std::abs(lab[2]) < 0.5);
  }

  TEST_CASE("mid gray matches a reference converter") {
    const Eigen::Vector3d lab = srgb_to_lab(119, 119, 119);
    const auto ref = reference_lab(119, 119, 119);
    CHECK(std::abs(lab[0] - ref[0]) < 0.1);
    CHECK(std::abs(lab[1]) < 0.5);
    CHECK(std::abs(lab[2]) < 0.5);
  }

  TEST_CASE("random colours match the reference converter") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> d(0, 255);
    for (int i = 0; i < 500; ++i) {
      const int r = d(rng), g = d(rng), b = d(rng);
      const Eigen::Vector3d lab = srgb_to_lab(r, g, b);
      const auto ref = reference_lab(r, g, b);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(lab[c] - ref[static_cast<std::size_t>(c)]) < 0.05);
    }
  }

  TEST_CASE("gray inputs have neutral chroma") {
    for (int v = 0; v < 256; ++v) {
      const Eigen::Vector3d lab = srgb_to_lab(v, v, v);
      CHECK(std::abs(lab[1]) < 0.5);
      CHECK(std::abs(lab[2]) < 0.5);
      CHECK(lab[0] >= 0.0);
      CHECK(lab[0] <= 100.0 + 1e-4);
    }
  }

  TEST_CASE("image conversion agrees with the scalar form") {
    RgbImage img(3, 2);
    img.r << 0, 10, 200, 255, 30, 90;
    img.g << 0, 100, 20, 255, 60, 90;
    img.b << 0, 50, 240, 255, 250, 90;
    const LabImage lab = rgb_to_lab(img);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 3; ++x) {
        const Eigen::Vector3d ref = srgb_to_lab(img.r(y, x), img.g(y, x), img.b(y, x));
        CHECK(lab.L(y, x) == ref[0]);
        CHECK(lab.a(y, x) == ref[1]);
        CHECK(lab.b(y, x) == ref[2]);
      }
  }

  TEST_CASE("1x1 flo file has the exact layout") {
    FlowField f(1, 1);
    f.u(0, 0) = 0.5f;
    f.v(0, 0) = -2.0f;
    const auto bytes = encode_flo(f);
    REQUIRE(bytes.size() == 20);
    const std::uint8_t expected[20] = {'P', 'I', 'E', 'H', 1, 0, 0, 0, 1, 0, 0, 0,
                                       0x00, 0x00, 0x00, 0x3f, 0x00, 0x00, 0x00, 0xc0};
    CHECK(std::memcmp(bytes.data(), expected, 20) == 0);
    const FlowField back = decode_flo(bytes);
    CHECK(back.u(0, 0) == 0.5f);
    CHECK(back.v(0, 0) == -2.0f);
  }

  TEST_CASE("flo rejects bad magic and truncation") {
    auto bytes = encode_flo(testing::constant_flow(4, 3, 1.f, 2.f));
    auto zero_magic = bytes;
    std::memset(zero_magic.data(), 0, 4);
    CHECK_THROWS_AS(decode_flo(zero_magic), FormatError);
    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS(decode_flo(truncated), LengthError);
    auto header_only = bytes;
    header_only.resize(6);
    CHECK_THROWS_AS(decode_flo(header_only), LengthError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_flo(extra), LengthError);
  }

  TEST_CASE("flo round trip through files") {
    const auto dir = testing::temp_dir("flo");
    std::mt19937_64 rng(1);
    const FlowField f = random_flow(rng, 7, 5);
    write_flo(f, dir / "a.flo");
    const FlowField g = read_flo(dir / "a.flo");
    CHECK(f == g);
    CHECK(read_file(dir / "a.flo") == encode_flo(g));
  }

  TEST_CASE("label video round trip and header checks") {
    std::mt19937_64 rng(2);
    LabelVideo v(6, 4, 3);
    for (auto& f : v.frames)
      for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = static_cast<std::uint32_t>(rng() % 1000);
    const auto bytes = encode_label_video(v);
    CHECK(bytes.size() == 16 + 6 * 4 * 3 * 4);
    CHECK(decode_label_video(bytes) == v);
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_label_video(bad), FormatError);
    bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(decode_label_video(bad), LengthError);
  }

  TEST_CASE("confidence container accepts simplex points") {
    ConfidenceVideo c(2, 2, 2, 5);
    for (auto& f : c.frames)
      for (auto& p : f) p.setConstant(0.2f);
    const auto bytes = encode_confidence_video(c);
    CHECK(bytes.size() == 17 + 2 * 2 * 2 * 5 * 4);
    CHECK(decode_confidence_video(bytes) == c);
  }

  TEST_CASE("confidence pixel summing to 1.2 is rejected") {
    ConfidenceVideo c(2, 2, 2, 5);
    for (auto& f : c.frames)
      for (auto& p : f) p.setConstant(0.2f);
    c.plane(1, 3)(1, 0) = 0.4f;
    CHECK_THROWS_AS(decode_confidence_video(encode_confidence_video(c)), ValidationError);
  }

  TEST_CASE("single-channel probability maps round trip") {
    ConfidenceVideo c(3, 2, 2, 1);
    c.plane(0, 0) << 0.f, 0.5f, 1.f, 0.25f, 0.75f, 0.1f;
    CHECK(decode_confidence_video(encode_confidence_video(c)) == c);
    c.plane(1, 0)(0, 0) = 1.5f;
    CHECK_THROWS_AS(decode_confidence_video(encode_confidence_video(c)), ValidationError);
  }

  TEST_CASE("frames round trip through PPM files") {
    const auto dir = testing::temp_dir("frames");
    std::mt19937_64 rng(4);
    FrameSequence seq;
    for (int t = 0; t < 3; ++t) {
      RgbImage img(5, 4);
      for (auto* p : {&img.r, &img.g, &img.b})
        for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] = static_cast<std::uint8_t>(rng());
      seq.frames.push_back(img);
    }
    write_frames(seq, dir);
    CHECK(std::filesystem::exists(dir / "frame_00000.ppm"));
    CHECK(std::filesystem::exists(dir / "frame_00002.ppm"));
    const FrameSequence back = read_frames(dir);
    REQUIRE(back.size() == 3);
    for (int t = 0; t < 3; ++t) CHECK(back[t] == seq[t]);
  }

  TEST_CASE("frame sequences with mismatched sizes are rejected") {
    const auto dir = testing::temp_dir("frames_mismatch");
    write_file(dir / "frame_00000.ppm", encode_ppm(testing::flat_image(4, 4, 1, 2, 3)));
    write_file(dir / "frame_00001.ppm", encode_ppm(testing::flat_image(5, 4, 1, 2, 3)));
    CHECK_THROWS_AS(read_frames(dir), ValidationError);
    FrameSequence one;
    one.frames.push_back(testing::flat_image(4, 4, 0, 0, 0));
    CHECK_THROWS_AS(one.validate(), ValidationError);
  }

  TEST_CASE("PPM rejects malformed headers") {
    auto bytes = encode_ppm(testing::flat_image(2, 2, 9, 9, 9));
    auto bad = bytes;
    bad[1] = '5';
    CHECK_THROWS_AS(decode_ppm(bad), FormatError);
    bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(decode_ppm(bad), LengthError);
  }

  TEST_CASE("PBM masks round trip") {
    const auto dir = testing::temp_dir("pbm");
    Mask m = Mask::Zero(3, 11);
    m(0, 0) = m(1, 10) = m(2, 7) = 1;
    write_pbm(m, dir / "m.pbm");
    CHECK((read_pbm(dir / "m.pbm") == m).all());
  }

  TEST_CASE("manifest and key=value parsing") {
    const auto dir = testing::temp_dir("manifest");
    write_manifest({64, 48, 30}, dir / "manifest.txt");
    const Manifest m = read_manifest(dir / "manifest.txt");
    CHECK(m.width == 64);
    CHECK(m.height == 48);
    CHECK(m.frames == 30);
    const auto kv = parse_key_values("# comment\n a = 1 \nb=two # trailing\n\n");
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two");
    CHECK_THROWS_AS(parse_key_values("novalue\n"), FormatError);
  }

  TEST_CASE("missing inputs are reported as missing artifacts") {
    const auto dir = testing::temp_dir("missing");
    CHECK_THROWS_AS(read_frames(dir / "nope"), MissingArtifact);
    CHECK_THROWS_AS(read_flo(dir / "nope.flo"), MissingArtifact);
  }

  TEST_CASE("frame filenames are zero padded") {
    CHECK(frame_filename(7, "ppm") == "frame_00007.ppm");
    CHECK(frame_filename(12345, "flo") == "frame_12345.flo");
  }
}
