#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualiso/errors.hpp"

namespace dualiso {

// Floor used by every log/ratio in the pipeline.
inline constexpr double kEpsilon = 1e-6;
inline constexpr double kMiddleGray = 0.18;

// Bayer-domain luminance weights (R, G, B). They sum to one.
inline constexpr std::array<double, 3> kLumaWeights{0.27, 0.67, 0.06};

/// Interleaved raster with a compile-time channel count. Row-major,
/// channel-minor: value(row, col, ch) lives at (row * width + col) * C + ch.
template <typename T, std::size_t C>
class Raster {
 public:
  static constexpr std::size_t channels = C;

  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DimensionError("negative raster dimension");
    data_.assign(static_cast<std::size_t>(width) * height * C, fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * height * C)
      throw DimensionError("raster data size does not match dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int row, int col, std::size_t ch = 0) noexcept {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * C + ch];
  }
  const T& operator()(int row, int col, std::size_t ch = 0) const noexcept {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * C + ch];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U, std::size_t D>
  bool same_size(const Raster<U, D>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using LuminanceMap = Raster<double, 1>;
using RgbImage = Raster<double, 3>;
// Scene-referred radiance; same storage as RgbImage, values unbounded above.
using HdrImage = Raster<double, 3>;

enum class Channel : std::uint8_t { R = 0, G = 1, B = 2 };

inline char channel_letter(Channel c) {
  switch (c) {
    case Channel::R: return 'R';
    case Channel::G: return 'G';
    case Channel::B: return 'B';
  }
  return '?';
}

/// 2x2 colour filter tile, row-major. Default is RGGB.
class CfaPattern {
 public:
  constexpr CfaPattern() = default;
  explicit CfaPattern(std::array<Channel, 4> tile) : tile_(tile) { validate(); }

  static CfaPattern rggb() { return CfaPattern{}; }

  static CfaPattern parse(std::string_view name) {
    if (name.size() != 4) throw CfaError("CFA layout must have 4 letters: " + std::string(name));
    std::array<Channel, 4> tile{};
    for (std::size_t i = 0; i < 4; ++i) {
      switch (name[i]) {
        case 'R': case 'r': tile[i] = Channel::R; break;
        case 'G': case 'g': tile[i] = Channel::G; break;
        case 'B': case 'b': tile[i] = Channel::B; break;
        default: throw CfaError("unknown CFA letter in " + std::string(name));
      }
    }
    return CfaPattern(tile);
  }

  std::string name() const {
    std::string s;
    for (auto c : tile_) s.push_back(channel_letter(c));
    return s;
  }

  Channel at(int row, int col) const noexcept {
    return tile_[static_cast<std::size_t>(((row & 1) << 1) | (col & 1))];
  }

  // Pattern seen by an image whose origin sits at (row_offset, col_offset)
  // of this one.
  CfaPattern shifted(int row_offset, int col_offset) const {
    std::array<Channel, 4> t{};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) t[static_cast<std::size_t>(r * 2 + c)] = at(r + row_offset, c + col_offset);
    return CfaPattern(t);
  }

  // Column parity of a mirrored image: new(c) = old(width - 1 - c).
  CfaPattern mirrored_horizontally(int width) const { return shifted(0, width - 1); }

  void validate() const {
    int counts[3] = {0, 0, 0};
    for (auto c : tile_) ++counts[static_cast<int>(c)];
    if (counts[0] != 1 || counts[1] != 2 || counts[2] != 1)
      throw CfaError("CFA tile needs one R, two G, one B: " + name());
    // Both greens must sit on one diagonal so every row carries R or B.
    if (tile_[0] == tile_[1] || tile_[0] == tile_[2])
      throw CfaError("CFA greens must be diagonal: " + name());
  }

  friend bool operator==(const CfaPattern&, const CfaPattern&) = default;

 private:
  std::array<Channel, 4> tile_{Channel::R, Channel::G, Channel::G, Channel::B};
};

/// Single-channel linear CFA image normalised so sensor saturation is 1.0.
struct RawMosaic {
  LuminanceMap plane;
  CfaPattern cfa;

  RawMosaic() = default;
  RawMosaic(LuminanceMap p, CfaPattern pattern) : plane(std::move(p)), cfa(pattern) {}
  RawMosaic(int width, int height, CfaPattern pattern, double fill = 0.0)
      : plane(width, height, fill), cfa(pattern) {}

  int width() const noexcept { return plane.width(); }
  int height() const noexcept { return plane.height(); }
  double& operator()(int row, int col) noexcept { return plane(row, col); }
  double operator()(int row, int col) const noexcept { return plane(row, col); }
  Channel color(int row, int col) const noexcept { return cfa.at(row, col); }

  friend bool operator==(const RawMosaic&, const RawMosaic&) = default;
};

enum class ExposureKind : std::uint8_t { low = 0, high = 1 };

struct ExposureTag {
  ExposureKind kind = ExposureKind::low;
  double ev_offset = 0.0;  // stops
};

// Index into [0, n) with whole-sample mirror reflection (…2 1 | 0 1 2 … n-1 | n-2 …).
// Keeps the parity of the index, so Bayer sites stay on their colour.
inline int reflect101(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <std::size_t C>
Raster<double, C> flip_horizontal(const Raster<double, C>& img) {
  Raster<double, C> out(img.width(), img.height());
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      for (std::size_t ch = 0; ch < C; ++ch) out(r, c, ch) = img(r, img.width() - 1 - c, ch);
  return out;
}

inline RawMosaic flip_horizontal(const RawMosaic& x) {
  return RawMosaic(flip_horizontal(x.plane), x.cfa.mirrored_horizontally(x.width()));
}

inline double luma(double r, double g, double b) noexcept {
  return kLumaWeights[0] * r + kLumaWeights[1] * g + kLumaWeights[2] * b;
}

inline LuminanceMap luminance_of(const RgbImage& img) {
  LuminanceMap out(img.width(), img.height());
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) out(r, c) = luma(img(r, c, 0), img(r, c, 1), img(r, c, 2));
  return out;
}

template <std::size_t C>
Raster<double, C> clipped(Raster<double, C> img, double lo = 0.0, double hi = 1.0) {
  for (auto& v : img.values()) v = std::clamp(v, lo, hi);
  return img;
}

template <std::size_t C>
void require_finite_nonnegative(const Raster<double, C>& img, const char* what) {
  for (double v : img.values())
    if (!std::isfinite(v) || v < 0.0) throw DegenerateInput(std::string(what) + ": values must be finite and >= 0");
}

inline RgbImage gray_to_rgb(const LuminanceMap& l) {
  RgbImage out(l.width(), l.height());
  for (int r = 0; r < l.height(); ++r)
    for (int c = 0; c < l.width(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) out(r, c, ch) = l(r, c);
  return out;
}

}  // namespace dualiso
