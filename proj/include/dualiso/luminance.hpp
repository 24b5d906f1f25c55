#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "dualiso/image.hpp"

namespace dualiso {

/// Luminance of a CFA mosaic from each pixel and its eight neighbours.
///
/// At R and B sites the centre supplies its own channel, the four axial
/// neighbours supply G and the four diagonal neighbours supply the remaining
/// channel. At G sites the two horizontal neighbours supply the channel that
/// shares the row and the two vertical neighbours supply the other one.
/// Out-of-frame neighbours are mirror-reflected.
inline LuminanceMap bayer_luminance(const RawMosaic& x) {
  x.cfa.validate();
  const int h = x.height();
  const int w = x.width();
  if (h == 0 || w == 0) throw DimensionError("empty mosaic");
  LuminanceMap out(w, h);
  for (int i = 0; i < h; ++i) {
    const int up = reflect101(i - 1, h);
    const int down = reflect101(i + 1, h);
    for (int j = 0; j < w; ++j) {
      const int left = reflect101(j - 1, w);
      const int right = reflect101(j + 1, w);
      std::array<double, 3> rgb{};
      const Channel own = x.cfa.at(i, j);
      if (own == Channel::G) {
        rgb[1] = x(i, j);
        rgb[static_cast<std::size_t>(x.cfa.at(i, j + 1))] = 0.5 * (x(i, left) + x(i, right));
        rgb[static_cast<std::size_t>(x.cfa.at(i + 1, j))] = 0.5 * (x(up, j) + x(down, j));
      } else {
        const Channel other = own == Channel::R ? Channel::B : Channel::R;
        rgb[static_cast<std::size_t>(own)] = x(i, j);
        rgb[1] = 0.25 * (x(up, j) + x(down, j) + x(i, left) + x(i, right));
        rgb[static_cast<std::size_t>(other)] =
            0.25 * (x(up, left) + x(up, right) + x(down, left) + x(down, right));
      }
      out(i, j) = luma(rgb[0], rgb[1], rgb[2]);
    }
  }
  return out;
}

struct BilateralParams {
  double sigma_spatial = 16.0;  // pixels
  double sigma_range = 0.1;     // luminance units; +inf gives a plain Gaussian blur
  int radius = 32;              // window is (2 * radius + 1)^2

  void validate() const {
    if (!(sigma_spatial > 0.0) || !std::isfinite(sigma_spatial))
      throw DegenerateInput("bilateral sigma_spatial must be positive and finite");
    if (!(sigma_range > 0.0)) throw DegenerateInput("bilateral sigma_range must be positive");
    if (radius <= 0 || radius < static_cast<int>(std::ceil(2.0 * sigma_spatial)))
      throw DegenerateInput("bilateral radius must be >= ceil(2 * sigma_spatial)");
  }
};

namespace detail {

// exp(-t) sampled on [0, kCutoff] for linear interpolation.
class RangeKernel {
 public:
  static constexpr double kCutoff = 24.0;
  static constexpr int kSteps = 1 << 14;

  RangeKernel() : table_(kSteps + 2) {
    for (int i = 0; i <= kSteps + 1; ++i) table_[static_cast<std::size_t>(i)] = std::exp(-kCutoff * i / kSteps);
  }

  double operator()(double t) const noexcept {
    if (t >= kCutoff) return 0.0;
    const double pos = t * (kSteps / kCutoff);
    const int i0 = static_cast<int>(pos);
    const double frac = pos - i0;
    const double a = table_[static_cast<std::size_t>(i0)];
    const double b = table_[static_cast<std::size_t>(i0) + 1];
    return a + frac * (b - a);
  }

  static const RangeKernel& instance() {
    static const RangeKernel kernel;
    return kernel;
  }

 private:
  std::vector<double> table_;
};

inline LuminanceMap reflect_pad(const LuminanceMap& l, int pad) {
  LuminanceMap out(l.width() + 2 * pad, l.height() + 2 * pad);
  for (int r = 0; r < out.height(); ++r) {
    const int sr = reflect101(r - pad, l.height());
    for (int c = 0; c < out.width(); ++c) out(r, c) = l(sr, reflect101(c - pad, l.width()));
  }
  return out;
}

}  // namespace detail

/// Bilateral local average: spatial Gaussian times range Gaussian over a
/// square window, normalised, mirror-reflected borders.
inline LuminanceMap local_average(const LuminanceMap& l, const BilateralParams& p = {}) {
  p.validate();
  if (l.empty()) throw DimensionError("empty luminance map");
  const int rad = p.radius;
  const int side = 2 * rad + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  const double inv_s = 1.0 / (2.0 * p.sigma_spatial * p.sigma_spatial);
  for (int dy = -rad; dy <= rad; ++dy)
    for (int dx = -rad; dx <= rad; ++dx)
      spatial[static_cast<std::size_t>((dy + rad) * side + dx + rad)] = std::exp(-(dx * dx + dy * dy) * inv_s);
  const double inv_r = std::isinf(p.sigma_range) ? 0.0 : 1.0 / (2.0 * p.sigma_range * p.sigma_range);

  const LuminanceMap padded = detail::reflect_pad(l, rad);
  const auto& range = detail::RangeKernel::instance();
  const std::size_t stride = static_cast<std::size_t>(padded.width());
  const double* base = padded.values().data();

  LuminanceMap out(l.width(), l.height());
  for (int i = 0; i < l.height(); ++i) {
    for (int j = 0; j < l.width(); ++j) {
      const double centre = l(i, j);
      double sum = 0.0;
      double norm = 0.0;
      for (int dy = 0; dy < side; ++dy) {
        const double* row = base + static_cast<std::size_t>(i + dy) * stride + j;
        const double* ws = spatial.data() + static_cast<std::size_t>(dy) * side;
        for (int dx = 0; dx < side; ++dx) {
          const double v = row[dx];
          const double d = v - centre;
          const double wgt = ws[dx] * range(d * d * inv_r);
          sum += wgt * v;
          norm += wgt;
        }
      }
      out(i, j) = sum / norm;
    }
  }
  return out;
}

/// Dodging-and-burning contrast enhancement given a precomputed local average:
/// L^2 / max(L_a, epsilon).
inline LuminanceMap enhance_with_average(const LuminanceMap& l, const LuminanceMap& average,
                                         double epsilon = kEpsilon) {
  if (!l.same_shape(average)) throw DimensionError("luminance and local average differ in size");
  LuminanceMap out(l.width(), l.height());
  for (std::size_t i = 0; i < l.pixel_count(); ++i) {
    const double v = l.values()[i];
    out.values()[i] = v * v / std::max(average.values()[i], epsilon);
  }
  return out;
}

inline LuminanceMap enhance(const LuminanceMap& l, const BilateralParams& p = {}) {
  for (double v : l.values())
    if (!(v >= 0.0)) throw DegenerateInput("luminance must be non-negative");
  return enhance_with_average(l, local_average(l, p));
}

}  // namespace dualiso
