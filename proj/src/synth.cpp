#include "dmt/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include <opencv2/imgproc.hpp>

namespace dmt {

namespace {

using Rgb = std::array<double, 3>;

struct Identity {
  double cx, cy, face_rx, face_ry;
  double eye_dy, eye_dx, eye_rx, eye_ry;
  double brow_dy, lip_dy, lip_rx;
  double hair_ry, hair_top;
  Rgb skin, hair, background, iris, lip;
};

struct Makeup {
  Rgb lipstick, shadow, brow;
  double foundation;  // blend toward a lighter skin tone
  double shadow_strength;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Rgb color(std::mt19937_64& rng, Rgb lo, Rgb hi) {
  return {uniform(rng, lo[0], hi[0]), uniform(rng, lo[1], hi[1]), uniform(rng, lo[2], hi[2])};
}

Identity draw_identity(std::mt19937_64& rng) {
  Identity id{};
  id.cx = uniform(rng, 0.47, 0.53);
  id.cy = uniform(rng, 0.52, 0.56);
  id.face_rx = uniform(rng, 0.24, 0.29);
  id.face_ry = uniform(rng, 0.30, 0.34);
  id.eye_dy = uniform(rng, -0.08, -0.05);
  id.eye_dx = uniform(rng, 0.10, 0.12);
  id.eye_rx = uniform(rng, 0.045, 0.06);
  id.eye_ry = uniform(rng, 0.022, 0.03);
  id.brow_dy = uniform(rng, 0.055, 0.07);
  id.lip_dy = uniform(rng, 0.16, 0.19);
  id.lip_rx = uniform(rng, 0.07, 0.09);
  id.hair_ry = uniform(rng, 0.36, 0.42);
  id.hair_top = uniform(rng, 0.08, 0.14);
  const double tone = uniform(rng, 0.0, 1.0);
  id.skin = {0.55 + 0.35 * tone, 0.38 + 0.35 * tone, 0.28 + 0.33 * tone};
  id.hair = color(rng, {0.05, 0.03, 0.02}, {0.45, 0.32, 0.2});
  id.background = color(rng, {0.1, 0.1, 0.1}, {0.9, 0.9, 0.9});
  id.iris = color(rng, {0.05, 0.05, 0.05}, {0.35, 0.3, 0.25});
  id.lip = {std::min(1.0, id.skin[0] * 0.95 + 0.05), id.skin[1] * 0.7, id.skin[2] * 0.7};
  return id;
}

Makeup draw_makeup(std::mt19937_64& rng) {
  static constexpr std::array<Rgb, 5> kLipsticks = {
      Rgb{0.80, 0.06, 0.12}, Rgb{0.92, 0.40, 0.55}, Rgb{0.50, 0.10, 0.30}, Rgb{0.95, 0.45, 0.30},
      Rgb{0.65, 0.15, 0.15}};
  static constexpr std::array<Rgb, 4> kShadows = {Rgb{0.45, 0.25, 0.50}, Rgb{0.40, 0.28, 0.18},
                                                  Rgb{0.25, 0.35, 0.60}, Rgb{0.20, 0.18, 0.20}};
  Makeup m{};
  auto lip = kLipsticks[std::uniform_int_distribution<int>(0, 4)(rng)];
  auto shadow = kShadows[std::uniform_int_distribution<int>(0, 3)(rng)];
  for (int c = 0; c < 3; ++c) {
    m.lipstick[c] = std::clamp(lip[c] + uniform(rng, -0.05, 0.05), 0.0, 1.0);
    m.shadow[c] = std::clamp(shadow[c] + uniform(rng, -0.05, 0.05), 0.0, 1.0);
  }
  const double b = uniform(rng, 0.05, 0.15);
  m.brow = {b, b * 0.8, b * 0.7};
  m.foundation = uniform(rng, 0.2, 0.5);
  m.shadow_strength = uniform(rng, 0.5, 0.8);
  return m;
}

cv::Point pt(double x, double y, int size) {
  return {static_cast<int>(x * size), static_cast<int>(y * size)};
}

cv::Size axes(double rx, double ry, int size) {
  return {std::max(1, static_cast<int>(rx * size)), std::max(1, static_cast<int>(ry * size))};
}

void ellipse(cv::Mat& labels, double x, double y, double rx, double ry, Part part, int size) {
  cv::ellipse(labels, pt(x, y, size), axes(rx, ry, size), 0, 0, 360, cv::Scalar(id(part)), cv::FILLED);
}

cv::Mat draw_labels(const Identity& f, int size) {
  cv::Mat labels(size, size, CV_8UC1, cv::Scalar(id(Part::background)));
  // Back to front.
  ellipse(labels, f.cx, f.cy - 0.05, f.face_rx + 0.1, f.hair_ry, Part::hair, size);
  cv::rectangle(labels, pt(f.cx - 0.09, f.cy + 0.2, size), pt(f.cx + 0.09, 1.0, size),
                cv::Scalar(id(Part::neck)), cv::FILLED);
  ellipse(labels, f.cx - f.face_rx, f.cy, 0.035, 0.06, Part::left_ear, size);
  ellipse(labels, f.cx + f.face_rx, f.cy, 0.035, 0.06, Part::right_ear, size);
  ellipse(labels, f.cx, f.cy, f.face_rx, f.face_ry, Part::face, size);
  // Fringe over the forehead.
  cv::ellipse(labels, pt(f.cx, f.cy - f.face_ry + 0.02, size), axes(f.face_rx, f.hair_top, size), 0,
              180, 360, cv::Scalar(id(Part::hair)), cv::FILLED);

  const double eye_y = f.cy + f.eye_dy;
  ellipse(labels, f.cx - f.eye_dx, eye_y - f.brow_dy, f.eye_rx * 1.2, 0.012, Part::left_brow, size);
  ellipse(labels, f.cx + f.eye_dx, eye_y - f.brow_dy, f.eye_rx * 1.2, 0.012, Part::right_brow, size);
  ellipse(labels, f.cx - f.eye_dx, eye_y, f.eye_rx, f.eye_ry, Part::left_eye, size);
  ellipse(labels, f.cx + f.eye_dx, eye_y, f.eye_rx, f.eye_ry, Part::right_eye, size);
  ellipse(labels, f.cx, f.cy + 0.05, 0.03, 0.06, Part::nose, size);

  const double lip_y = f.cy + f.lip_dy;
  cv::ellipse(labels, pt(f.cx, lip_y, size), axes(f.lip_rx, 0.03, size), 0, 180, 360,
              cv::Scalar(id(Part::upper_lip)), cv::FILLED);
  cv::ellipse(labels, pt(f.cx, lip_y, size), axes(f.lip_rx * 0.9, 0.035, size), 0, 0, 180,
              cv::Scalar(id(Part::lower_lip)), cv::FILLED);
  cv::line(labels, pt(f.cx - f.lip_rx * 0.8, lip_y, size), pt(f.cx + f.lip_rx * 0.8, lip_y, size),
           cv::Scalar(id(Part::mouth)), 1);
  return labels;
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

}  // namespace

SyntheticFace synthesize_face(int size, std::uint64_t seed, bool makeup) {
  std::mt19937_64 identity_rng(seed * 2 + 1);
  std::mt19937_64 makeup_rng(seed * 2 + 2);
  const Identity f = draw_identity(identity_rng);
  const Makeup m = draw_makeup(makeup_rng);
  cv::Mat labels = draw_labels(f, size);

  Rgb skin = makeup ? mix(f.skin, {0.96, 0.84, 0.76}, m.foundation) : f.skin;
  Rgb brow = makeup ? m.brow : mix(f.hair, f.skin, 0.3);
  Rgb lip = makeup ? m.lipstick : f.lip;

  std::array<Rgb, kNumParts> palette{};
  palette[id(Part::background)] = f.background;
  palette[id(Part::face)] = skin;
  palette[id(Part::nose)] = mix(skin, {0, 0, 0}, 0.06);
  palette[id(Part::left_ear)] = palette[id(Part::right_ear)] = mix(skin, {0, 0, 0}, 0.08);
  palette[id(Part::neck)] = mix(f.skin, {0, 0, 0}, 0.12);
  palette[id(Part::left_brow)] = palette[id(Part::right_brow)] = brow;
  palette[id(Part::left_eye)] = palette[id(Part::right_eye)] = f.iris;
  palette[id(Part::upper_lip)] = lip;
  palette[id(Part::lower_lip)] = mix(lip, {1, 1, 1}, 0.08);
  palette[id(Part::mouth)] = {0.25, 0.05, 0.05};
  palette[id(Part::hair)] = f.hair;

  cv::Mat rgb(size, size, CV_32FC3);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const Rgb& p = palette[labels.at<std::uint8_t>(r, c)];
      rgb.at<cv::Vec3f>(r, c) = cv::Vec3f(static_cast<float>(p[0]), static_cast<float>(p[1]),
                                          static_cast<float>(p[2]));
    }
  }

  if (makeup) {
    // Eye shadow: soft band above each eye on skin pixels.
    const double eye_y = f.cy + f.eye_dy;
    for (double side : {-1.0, 1.0}) {
      cv::Mat band(size, size, CV_32FC1, cv::Scalar(0));
      cv::ellipse(band, pt(f.cx + side * f.eye_dx, eye_y - 0.01, size),
                  axes(f.eye_rx * 1.5, f.eye_ry * 2.2, size), 0, 0, 360, cv::Scalar(1.0), cv::FILLED);
      cv::GaussianBlur(band, band, cv::Size(0, 0), std::max(0.5, size * 0.012));
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          auto l = labels.at<std::uint8_t>(r, c);
          if (l != id(Part::face) && l != id(Part::nose)) continue;
          const float a = band.at<float>(r, c) * static_cast<float>(m.shadow_strength);
          auto& px = rgb.at<cv::Vec3f>(r, c);
          for (int k = 0; k < 3; ++k) px[k] = px[k] * (1 - a) + static_cast<float>(m.shadow[k]) * a;
        }
      }
    }
  }

  // Soft edges and sensor-like noise, independent of the makeup flag.
  cv::GaussianBlur(rgb, rgb, cv::Size(0, 0), std::max(0.4, size * 0.006));
  std::mt19937_64 noise_rng(seed * 2 + 3);
  std::normal_distribution<float> noise(0.0f, 0.015f);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      auto& px = rgb.at<cv::Vec3f>(r, c);
      for (int k = 0; k < 3; ++k) px[k] = std::clamp(px[k] + noise(noise_rng), 0.0f, 1.0f);
    }
  }

  auto hwc = torch::from_blob(rgb.data, {size, size, 3}, torch::kFloat32).clone();
  // Quantize to 8 bit so in-memory faces match what a PNG round trip yields.
  auto pixels = hwc.permute({2, 0, 1}).mul(255.0).round().div(255.0).contiguous();
  auto label_tensor = torch::from_blob(labels.data, {size, size}, torch::kUInt8).clone();
  const std::string sid = (makeup ? "m" : "n") + std::to_string(seed);
  return {FaceImage{pixels, sid, makeup}, LabelMap{label_tensor}};
}

void write_synthetic_dataset(const std::filesystem::path& root, int n_makeup, int n_nonmakeup,
                             int size, std::uint64_t seed) {
  auto write = [&](int count, bool makeup, const char* cls, std::uint64_t offset) {
    for (int i = 0; i < count; ++i) {
      auto face = synthesize_face(size, seed + offset + static_cast<std::uint64_t>(i), makeup);
      char stem[32];
      std::snprintf(stem, sizeof stem, "%s%05d", makeup ? "mk" : "nm", i);
      save_image(face.image.pixels, root / "images" / cls / (std::string(stem) + ".png"));
      save_labels(face.labels, root / "masks" / cls / (std::string(stem) + ".png"));
    }
  };
  // Disjoint seed ranges: makeup and non-makeup faces are different people.
  write(n_makeup, true, "makeup", 0);
  write(n_nonmakeup, false, "non-makeup", 1'000'000);
}

}  // namespace dmt
