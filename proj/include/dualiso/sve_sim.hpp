#pragma once

#include <cmath>
#include <string>

#include "dualiso/geometric_mean.hpp"
#include "dualiso/image.hpp"
#include "dualiso/sve_raw.hpp"

namespace dualiso {

/// Exposure spread of a simulated capture: high rows at +k EV, low rows at -k EV.
struct EvSpread {
  double stops = 1.0;
};

inline double anchor_scale(const HdrImage& hdr, double target = kMiddleGray, double epsilon = kEpsilon) {
  require_finite_nonnegative(hdr, "HDR image");
  LuminanceMap l = luminance_of(hdr);
  bool any_above = false;
  for (double v : l.values()) any_above |= v > epsilon;
  if (!any_above) throw DegenerateInput("HDR luminance is at or below the epsilon floor everywhere");

  // The epsilon floor makes g(c*L) != c*g(L) once pixels cross it, so refine
  // the scale until the floored geometric mean lands on the target.
  double scale = 1.0;
  std::vector<double> scaled(l.pixel_count());
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = scale * l.values()[i];
    const double g = geometric_mean(scaled, epsilon);
    const double ratio = target / g;
    if (std::abs(ratio - 1.0) < 1e-13) break;
    scale *= ratio;
  }
  return scale;
}

/// Scale an HDR radiance map so the geometric mean of its luminance is 0.18
/// (0 EV). Not clipped.
inline RgbImage anchor_0ev(const HdrImage& hdr, double target = kMiddleGray) {
  const double scale = anchor_scale(hdr, target);
  RgbImage out = hdr;
  for (auto& v : out.values()) v *= scale;
  return out;
}

struct SveOptions {
  bool clip = true;
  DualIsoLayout layout{};
};

/// Row-pair exposure modulation: rows of high blocks times 2^k, the others
/// times 2^-k, then clipped to [0, 1] to model sensor saturation.
inline RgbImage apply_sve(const RgbImage& y0, EvSpread spread, const SveOptions& opts = {}) {
  opts.layout.validate();
  const int period = 2 * opts.layout.line_period;
  if (y0.height() % period != 0)
    throw DimensionError("image height " + std::to_string(y0.height()) + " is not a multiple of " +
                         std::to_string(period));
  const double up = std::exp2(spread.stops);
  const double down = std::exp2(-spread.stops);
  const int high_phase = opts.layout.phase(ExposureKind::high);
  RgbImage out(y0.width(), y0.height());
  for (int r = 0; r < y0.height(); ++r) {
    const bool high = (r / opts.layout.line_period) % 2 == high_phase;
    const double gain = high ? up : down;
    for (int c = 0; c < y0.width(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = gain * y0(r, c, ch);
        out(r, c, ch) = opts.clip ? std::clamp(v, 0.0, 1.0) : v;
      }
  }
  return out;
}

/// Keep only the CFA-selected channel at each site.
inline RawMosaic mosaic(const RgbImage& rgb, const CfaPattern& cfa = {}) {
  cfa.validate();
  if (rgb.width() % 2 != 0 || rgb.height() % 2 != 0)
    throw DimensionError("mosaic needs even dimensions");
  RawMosaic out(rgb.width(), rgb.height(), cfa);
  for (int r = 0; r < rgb.height(); ++r)
    for (int c = 0; c < rgb.width(); ++c) out(r, c) = rgb(r, c, static_cast<std::size_t>(cfa.at(r, c)));
  return out;
}

/// anchor -> SVE modulation -> mosaic.
inline RawMosaic simulate_capture(const HdrImage& hdr, EvSpread spread, const CfaPattern& cfa = {},
                                  const DualIsoLayout& layout = {}) {
  return mosaic(apply_sve(anchor_0ev(hdr), spread, SveOptions{true, layout}), cfa);
}

}  // namespace dualiso
