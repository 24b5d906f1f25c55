#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "dualiso/image.hpp"

// Procedural HDR test scenes. Deterministic for a given seed.
namespace dualiso::synthetic {

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double lattice(std::uint64_t seed, int x, int y) {
  const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32 |
                                                   static_cast<std::uint32_t>(y)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Smooth value noise in [-1, 1] with cell size `scale` pixels.
inline double value_noise(std::uint64_t seed, double x, double y, double scale) {
  const double fx = x / scale;
  const double fy = y / scale;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double tx = fx - x0;
  const double ty = fy - y0;
  const double sx = tx * tx * (3.0 - 2.0 * tx);
  const double sy = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice(seed, x0, y0), b = lattice(seed, x0 + 1, y0);
  const double c = lattice(seed, x0, y0 + 1), d = lattice(seed, x0 + 1, y0 + 1);
  return (a + (b - a) * sx) + ((c + (d - c) * sx) - (a + (b - a) * sx)) * sy;
}

inline double fractal(std::uint64_t seed, double x, double y, double scale, int octaves) {
  double sum = 0.0, amp = 1.0, norm = 0.0;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * value_noise(seed + static_cast<std::uint64_t>(o) * 7919u, x, y, scale);
    norm += amp;
    amp *= 0.5;
    scale *= 0.5;
  }
  return sum / norm;
}

}  // namespace detail

/// Outdoor-like scene with a bright sky, sunlit and shadowed ground, a few
/// emitters and textured surfaces. Dynamic range around 1e4:1.
inline HdrImage make_scene(std::uint64_t seed, int width = 256, int height = 256) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double horizon = height * (0.3 + 0.25 * u(rng));
  const double sky_level = 20.0 + 60.0 * u(rng);
  const double sun_level = 0.6 + 1.4 * u(rng);
  const double shade_level = 0.01 + 0.05 * u(rng);
  const std::array<double, 3> sky_tint{0.75 + 0.1 * u(rng), 0.9, 1.1 + 0.2 * u(rng)};
  const std::array<double, 3> ground_tint{1.0 + 0.3 * u(rng), 0.9 + 0.2 * u(rng), 0.6 + 0.3 * u(rng)};

  // A shadow cast by an occluder: a half-plane through the ground.
  const double shadow_angle = std::numbers::pi * (0.25 + 0.5 * u(rng));
  const double shadow_x = width * (0.3 + 0.4 * u(rng));

  struct Emitter {
    double x, y, r, level;
  };
  std::vector<Emitter> emitters;
  const int n_emit = 1 + static_cast<int>(u(rng) * 3);
  for (int i = 0; i < n_emit; ++i)
    emitters.push_back({width * u(rng), height * u(rng), 3.0 + 0.05 * width * u(rng), 200.0 + 800.0 * u(rng)});

  struct Box {
    double x0, y0, x1, y1, level;
    std::array<double, 3> tint;
    double stripe;
  };
  std::vector<Box> boxes;
  const int n_box = 2 + static_cast<int>(u(rng) * 4);
  for (int i = 0; i < n_box; ++i) {
    const double bw = width * (0.08 + 0.2 * u(rng));
    const double bh = height * (0.08 + 0.3 * u(rng));
    const double x0 = (width - bw) * u(rng);
    const double y0 = horizon - bh * 0.7 + (height - horizon) * 0.5 * u(rng);
    boxes.push_back({x0, y0, x0 + bw, y0 + bh, std::pow(10.0, -2.0 + 3.0 * u(rng)),
                     {0.4 + 0.8 * u(rng), 0.4 + 0.8 * u(rng), 0.4 + 0.8 * u(rng)}, 3.0 + 10.0 * u(rng)});
  }

  HdrImage img(width, height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double x = c + 0.5, y = r + 0.5;
      std::array<double, 3> rgb{};
      const double n_fine = detail::fractal(seed ^ 0x1111, x, y, 12.0, 3);
      const double n_coarse = detail::fractal(seed ^ 0x2222, x, y, 64.0, 3);
      if (y < horizon) {
        const double t = y / horizon;
        const double level = sky_level * (0.4 + 0.6 * t) * std::exp(0.4 * n_coarse);
        for (std::size_t ch = 0; ch < 3; ++ch) rgb[ch] = level * sky_tint[ch];
      } else {
        const bool shaded = (x - shadow_x) * std::cos(shadow_angle) + (y - horizon) * std::sin(shadow_angle) > 0.0;
        const double base = shaded ? shade_level : sun_level;
        const double grain = std::exp(0.8 * n_fine + 0.6 * n_coarse);
        const double tiles = ((static_cast<int>(x / 16) + static_cast<int>(y / 16)) % 2) ? 1.0 : 0.6;
        const double level = base * grain * tiles;
        for (std::size_t ch = 0; ch < 3; ++ch) rgb[ch] = level * ground_tint[ch];
      }
      for (const auto& b : boxes)
        if (x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1) {
          const double stripes = 0.7 + 0.3 * std::sin(2.0 * std::numbers::pi * (x - b.x0) / b.stripe);
          const double level = b.level * stripes * std::exp(0.5 * n_fine);
          for (std::size_t ch = 0; ch < 3; ++ch) rgb[ch] = level * b.tint[ch];
        }
      for (const auto& e : emitters) {
        const double d2 = (x - e.x) * (x - e.x) + (y - e.y) * (y - e.y);
        if (d2 < e.r * e.r)
          for (double& v : rgb) v = e.level;
        else
          for (double& v : rgb) v += e.level * 0.02 * std::exp(-d2 / (8.0 * e.r * e.r));
      }
      for (std::size_t ch = 0; ch < 3; ++ch) img(r, c, ch) = std::max(rgb[ch], 1e-5);
    }
  return img;
}

struct ZoneScene {
  HdrImage radiance;
  Raster<int, 1> zone;  // 0, 1, 2 from darkest to brightest
};

/// Three-zone scene: a blobby partition whose zones differ in luminance by
/// `ratio` (>= 4) with mild texture inside each zone.
inline ZoneScene make_zone_scene(std::uint64_t seed, int width = 256, int height = 256, double ratio = 4.0) {
  ZoneScene s{HdrImage(width, height), Raster<int, 1>(width, height)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base = 0.05 * std::pow(2.0, 2.0 * u(rng));
  const std::array<double, 3> tint{0.9 + 0.2 * u(rng), 1.0, 0.9 + 0.2 * u(rng)};
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double x = c + 0.5, y = r + 0.5;
      const double field = detail::fractal(seed ^ 0x3333, x, y, 0.4 * std::min(width, height), 2);
      const int zone = field < -0.15 ? 0 : (field < 0.15 ? 1 : 2);
      s.zone(r, c) = zone;
      const double texture = 1.0 + 0.1 * detail::fractal(seed ^ 0x4444, x, y, 6.0, 2);
      const double level = base * std::pow(ratio, zone) * texture;
      for (std::size_t ch = 0; ch < 3; ++ch) s.radiance(r, c, ch) = level * tint[ch];
    }
  return s;
}

}  // namespace dualiso::synthetic
