#pragma once

#include <string>

#include "dualiso/image.hpp"

namespace dualiso {

/// Row phasing of a dual-ISO mosaic. Rows are grouped into blocks of
/// `line_period` rows; blocks alternate between the two ISO settings.
struct DualIsoLayout {
  int line_period = 2;
  bool high_first = true;  // block 0 (top rows) is the high-ISO block

  int phase(ExposureKind k) const noexcept {
    const bool is_high = k == ExposureKind::high;
    return is_high == high_first ? 0 : 1;
  }

  void validate() const {
    if (line_period <= 0 || line_period % 2 != 0)
      throw CfaError("line period must be a positive multiple of the CFA row period (2)");
  }
};

struct SeparatedMosaics {
  RawMosaic low;
  RawMosaic high;

  const RawMosaic& get(ExposureKind k) const noexcept { return k == ExposureKind::low ? low : high; }
};

namespace detail {

inline RawMosaic gather_groups(const RawMosaic& x, int line_period, int phase) {
  const int groups = x.height() / line_period;
  RawMosaic half(x.width(), groups / 2 * line_period, x.cfa);
  int out_row = 0;
  for (int g = phase; g < groups; g += 2)
    for (int r = 0; r < line_period; ++r, ++out_row)
      for (int c = 0; c < x.width(); ++c) half(out_row, c) = x(g * line_period + r, c);
  return half;
}

}  // namespace detail

/// Split a dual-ISO mosaic into its low- and high-ISO halves (M/2 x N each).
inline SeparatedMosaics separate(const RawMosaic& x, const DualIsoLayout& layout = {}) {
  layout.validate();
  x.cfa.validate();
  const int period = 2 * layout.line_period;
  if (x.height() == 0 || x.height() % period != 0)
    throw DimensionError("mosaic height " + std::to_string(x.height()) + " is not a multiple of " +
                         std::to_string(period));
  return {detail::gather_groups(x, layout.line_period, layout.phase(ExposureKind::low)),
          detail::gather_groups(x, layout.line_period, layout.phase(ExposureKind::high))};
}

/// Inverse of separate().
inline RawMosaic interleave(const SeparatedMosaics& halves, const DualIsoLayout& layout = {}) {
  layout.validate();
  if (!halves.low.plane.same_shape(halves.high.plane) || !(halves.low.cfa == halves.high.cfa))
    throw DimensionError("halves differ in shape or CFA");
  if (halves.low.height() % layout.line_period != 0)
    throw DimensionError("half height is not a multiple of the line period");
  const int p = layout.line_period;
  RawMosaic out(halves.low.width(), halves.low.height() * 2, halves.low.cfa);
  for (auto kind : {ExposureKind::low, ExposureKind::high}) {
    const RawMosaic& half = halves.get(kind);
    const int phase = layout.phase(kind);
    for (int hr = 0; hr < half.height(); ++hr) {
      const int row = (2 * (hr / p) + phase) * p + hr % p;
      for (int c = 0; c < half.width(); ++c) out(row, c) = half(hr, c);
    }
  }
  return out;
}

/// Restore a half-height mosaic to full height. Present row groups are copied
/// back to their original positions; each missing group is the mean of the
/// nearest present groups above and below (same CFA rows), or a copy of the
/// single neighbour at the image border.
inline RawMosaic interpolate_rows(const RawMosaic& half, int phase, int line_period = 2) {
  if (half.width() == 0 || half.height() == 0) throw DimensionError("empty half mosaic");
  if (line_period <= 0 || line_period % 2 != 0) throw CfaError("line period must be even");
  if (half.height() % line_period != 0) throw DimensionError("half height is not a multiple of the line period");
  if (phase != 0 && phase != 1) throw DimensionError("group phase must be 0 or 1");

  const int p = line_period;
  const int groups = 2 * (half.height() / p);
  RawMosaic out(half.width(), groups * p, half.cfa);
  auto source_row = [&](int group, int r) { return ((group - phase) / 2) * p + r; };

  for (int g = 0; g < groups; ++g) {
    const bool present = (g % 2) == phase;
    for (int r = 0; r < p; ++r) {
      const int row = g * p + r;
      if (present) {
        for (int c = 0; c < half.width(); ++c) out(row, c) = half(source_row(g, r), c);
        continue;
      }
      const bool has_above = g - 1 >= 0;
      const bool has_below = g + 1 < groups;
      for (int c = 0; c < half.width(); ++c) {
        if (has_above && has_below)
          out(row, c) = 0.5 * (half(source_row(g - 1, r), c) + half(source_row(g + 1, r), c));
        else
          out(row, c) = half(source_row(has_above ? g - 1 : g + 1, r), c);
      }
    }
  }
  return out;
}

inline RawMosaic interpolate_rows(const RawMosaic& half, ExposureKind kind, const DualIsoLayout& layout = {}) {
  layout.validate();
  return interpolate_rows(half, layout.phase(kind), layout.line_period);
}

}  // namespace dualiso
