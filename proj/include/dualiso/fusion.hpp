#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "dualiso/image.hpp"

namespace dualiso {

struct FusionParams {
  double w_contrast = 1.0;
  double w_saturation = 1.0;
  double w_exposedness = 1.0;
  double exposedness_center = 0.5;
  double exposedness_sigma = 0.2;
  int depth = 0;  // 0 selects floor(log2(min dimension)) - 1
};

/// Per-input per-pixel weights, normalised to sum to one at every pixel.
struct FusionWeights {
  std::vector<LuminanceMap> maps;
};

template <std::size_t C>
using Pyramid = std::vector<Raster<double, C>>;

namespace pyramid {

inline constexpr std::array<double, 5> kKernel{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline int default_depth(int width, int height) {
  const int m = std::min(width, height);
  if (m < 1) throw DimensionError("empty image");
  return std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(m)))) - 1);
}

// Separable 5-tap binomial blur with mirror borders, scaled by `gain` per axis.
template <std::size_t C>
Raster<double, C> blur(const Raster<double, C>& img, double gain = 1.0) {
  const int w = img.width();
  const int h = img.height();
  Raster<double, C> tmp(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (std::size_t ch = 0; ch < C; ++ch) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k) acc += kKernel[static_cast<std::size_t>(k + 2)] * img(r, reflect101(c + k, w), ch);
        tmp(r, c, ch) = gain * acc;
      }
  Raster<double, C> out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (std::size_t ch = 0; ch < C; ++ch) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k) acc += kKernel[static_cast<std::size_t>(k + 2)] * tmp(reflect101(r + k, h), c, ch);
        out(r, c, ch) = gain * acc;
      }
  return out;
}

template <std::size_t C>
Raster<double, C> downsample(const Raster<double, C>& img) {
  const Raster<double, C> b = blur(img);
  Raster<double, C> out((img.width() + 1) / 2, (img.height() + 1) / 2);
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c)
      for (std::size_t ch = 0; ch < C; ++ch) out(r, c, ch) = b(2 * r, 2 * c, ch);
  return out;
}

template <std::size_t C>
Raster<double, C> upsample(const Raster<double, C>& img, int width, int height) {
  Raster<double, C> z(width, height);
  for (int r = 0; r < img.height() && 2 * r < height; ++r)
    for (int c = 0; c < img.width() && 2 * c < width; ++c)
      for (std::size_t ch = 0; ch < C; ++ch) z(2 * r, 2 * c, ch) = img(r, c, ch);
  return blur(z, 2.0);
}

template <std::size_t C>
Pyramid<C> gaussian(const Raster<double, C>& img, int depth) {
  Pyramid<C> p;
  p.push_back(img);
  for (int l = 1; l < depth; ++l) p.push_back(downsample(p.back()));
  return p;
}

template <std::size_t C>
Pyramid<C> laplacian(const Raster<double, C>& img, int depth) {
  Pyramid<C> g = gaussian(img, depth);
  for (std::size_t l = 0; l + 1 < g.size(); ++l) {
    const Raster<double, C> up = upsample(g[l + 1], g[l].width(), g[l].height());
    auto dst = g[l].values();
    auto src = up.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  }
  return g;
}

template <std::size_t C>
Raster<double, C> collapse(const Pyramid<C>& lap) {
  if (lap.empty()) throw DimensionError("empty pyramid");
  Raster<double, C> acc = lap.back();
  for (std::size_t l = lap.size() - 1; l-- > 0;) {
    Raster<double, C> up = upsample(acc, lap[l].width(), lap[l].height());
    auto dst = up.values();
    auto src = lap[l].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    acc = std::move(up);
  }
  return acc;
}

}  // namespace pyramid

/// Laplacian build followed by collapse.
inline RgbImage pyramid_roundtrip(const RgbImage& img, int depth) {
  if (img.empty()) throw DimensionError("empty image");
  if (depth < 1) throw DimensionError("pyramid depth must be >= 1");
  return pyramid::collapse(pyramid::laplacian(img, depth));
}

namespace detail {

inline void check_fusion_inputs(std::span<const RgbImage> inputs) {
  if (inputs.size() < 2) throw InputCountError("fusion needs at least two inputs");
  for (const auto& img : inputs) {
    if (!img.same_shape(inputs[0])) throw DimensionError("fusion inputs differ in size");
    if (img.empty()) throw DimensionError("empty fusion input");
  }
}

}  // namespace detail

/// Quality weights: |Laplacian of gray| (contrast), RGB standard deviation
/// (saturation) and a Gaussian around mid-range per channel (well-exposedness).
inline FusionWeights weight_maps(std::span<const RgbImage> inputs, const FusionParams& fp = {}) {
  detail::check_fusion_inputs(inputs);
  const int w = inputs[0].width();
  const int h = inputs[0].height();
  const double inv2s2 = 1.0 / (2.0 * fp.exposedness_sigma * fp.exposedness_sigma);
  FusionWeights out;
  for (const auto& img : inputs) {
    const LuminanceMap gray = luminance_of(img);
    LuminanceMap wm(w, h);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double lap = gray(reflect101(r - 1, h), c) + gray(reflect101(r + 1, h), c) +
                           gray(r, reflect101(c - 1, w)) + gray(r, reflect101(c + 1, w)) - 4.0 * gray(r, c);
        const double contrast = std::abs(lap);
        const double mean = (img(r, c, 0) + img(r, c, 1) + img(r, c, 2)) / 3.0;
        double var = 0.0;
        double expo = 1.0;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double v = img(r, c, ch);
          var += (v - mean) * (v - mean);
          const double d = v - fp.exposedness_center;
          expo *= std::exp(-d * d * inv2s2);
        }
        const double saturation = std::sqrt(var / 3.0);
        wm(r, c) = std::pow(contrast, fp.w_contrast) * std::pow(saturation, fp.w_saturation) *
                       std::pow(expo, fp.w_exposedness) +
                   1e-12;
      }
    out.maps.push_back(std::move(wm));
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    double sum = 0.0;
    for (const auto& m : out.maps) sum += m.values()[i];
    for (auto& m : out.maps) m.values()[i] /= sum;
  }
  return out;
}

/// Multiresolution exposure fusion of differently exposed images.
inline RgbImage fuse(std::span<const RgbImage> inputs, const FusionParams& fp = {},
                     FusionWeights* weights_out = nullptr) {
  FusionWeights weights = weight_maps(inputs, fp);
  const int depth = fp.depth > 0 ? fp.depth : pyramid::default_depth(inputs[0].width(), inputs[0].height());
  Pyramid<3> blended;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Pyramid<1> gw = pyramid::gaussian(weights.maps[k], depth);
    const Pyramid<3> li = pyramid::laplacian(inputs[k], depth);
    if (blended.empty()) {
      for (const auto& level : li) blended.emplace_back(level.width(), level.height());
    }
    for (std::size_t l = 0; l < li.size(); ++l) {
      auto dst = blended[l].values();
      auto src = li[l].values();
      auto wv = gw[l].values();
      for (std::size_t p = 0; p < wv.size(); ++p)
        for (std::size_t ch = 0; ch < 3; ++ch) dst[3 * p + ch] += wv[p] * src[3 * p + ch];
    }
  }
  if (weights_out) *weights_out = std::move(weights);
  return clipped(pyramid::collapse(blended));
}

inline RgbImage fuse(std::initializer_list<RgbImage> inputs, const FusionParams& fp = {}) {
  return fuse(std::span<const RgbImage>(inputs.begin(), inputs.size()), fp);
}

}  // namespace dualiso
