#pragma once

#include <algorithm>
#include <vector>

#include "dualiso/geometric_mean.hpp"
#include "dualiso/image.hpp"
#include "dualiso/segmentation.hpp"

namespace dualiso {

struct ScaleFactor {
  double alpha = 1.0;
};

/// Geometric mean of `l` over the pixels labelled `label`.
inline double geometric_mean(const LuminanceMap& l, const SegmentationMap& seg, int label,
                             double epsilon = kEpsilon) {
  if (!l.same_size(seg.labels)) throw DimensionError("luminance and segmentation differ in size");
  std::vector<double> region;
  for (std::size_t i = 0; i < l.pixel_count(); ++i)
    if (seg.labels.values()[i] == label) region.push_back(l.values()[i]);
  return geometric_mean(region, epsilon);
}

inline ScaleFactor scale_factor(double geomean, double target = kMiddleGray) {
  if (!(geomean > 0.0)) throw DegenerateInput("geometric mean must be positive");
  return {target / geomean};
}

struct SegmentCompensation {
  int segment = 0;  // 1-based label
  ScaleFactor scale;
  LuminanceMap scaled;  // alpha * L' over the whole frame
};

/// Per-segment exposure compensation: alpha_s = target / g(L' | R_s), applied
/// to the whole frame so every result is a globally consistent exposure.
inline std::vector<SegmentCompensation> compensate(const LuminanceMap& enhanced, const SegmentationMap& seg,
                                                   double epsilon = kEpsilon, double target = kMiddleGray) {
  if (!enhanced.same_size(seg.labels)) throw DimensionError("luminance and segmentation differ in size");
  std::vector<std::vector<double>> regions(static_cast<std::size_t>(seg.segments));
  for (std::size_t i = 0; i < enhanced.pixel_count(); ++i) {
    const int s = seg.labels.values()[i];
    if (s < 1 || s > seg.segments) throw DimensionError("segment label out of range");
    regions[static_cast<std::size_t>(s - 1)].push_back(enhanced.values()[i]);
  }
  std::vector<SegmentCompensation> out;
  out.reserve(regions.size());
  for (int s = 1; s <= seg.segments; ++s) {
    const ScaleFactor a = scale_factor(geometric_mean(regions[static_cast<std::size_t>(s - 1)], epsilon), target);
    LuminanceMap scaled = enhanced;
    for (auto& v : scaled.values()) v *= a.alpha;
    out.push_back({s, a, std::move(scaled)});
  }
  return out;
}

/// X_hat = (L_hat / max(L_orig, epsilon)) * X, clipped to [0, clip_max].
inline RawMosaic recombine(const LuminanceMap& scaled, const LuminanceMap& original, const RawMosaic& x,
                           double clip_max = 1.0, double epsilon = kEpsilon) {
  if (!scaled.same_shape(original) || !scaled.same_shape(x.plane))
    throw DimensionError("recombine inputs differ in size");
  RawMosaic out(x.width(), x.height(), x.cfa);
  for (std::size_t i = 0; i < x.plane.pixel_count(); ++i) {
    const double v = scaled.values()[i] / std::max(original.values()[i], epsilon) * x.plane.values()[i];
    out.plane.values()[i] = std::clamp(v, 0.0, clip_max);
  }
  return out;
}

/// Everything compensation needs for one exposure k.
struct ExposureInputs {
  RawMosaic mosaic;       // X_k (full height, after row interpolation)
  LuminanceMap original;  // L_k
  LuminanceMap enhanced;  // L'_k (equal to L_k when enhancement is off)
};

struct StackEntry {
  int segment = 0;
  ExposureKind kind = ExposureKind::low;
  ScaleFactor scale;
  RawMosaic mosaic;       // X_hat_{s,k}
  LuminanceMap luminance; // L_hat_{s,k}
};

struct AdjustedStack {
  int segments = 0;
  std::vector<StackEntry> entries;  // (1,low), (1,high), (2,low), ...
};

inline AdjustedStack build_stack(const ExposureInputs& low, const ExposureInputs& high, const SegmentationMap& seg,
                                 double clip_max = 1.0, double epsilon = kEpsilon, double target = kMiddleGray) {
  if (!low.mosaic.plane.same_shape(high.mosaic.plane)) throw DimensionError("exposures differ in size");
  auto comp_low = compensate(low.enhanced, seg, epsilon, target);
  auto comp_high = compensate(high.enhanced, seg, epsilon, target);
  AdjustedStack stack;
  stack.segments = seg.segments;
  stack.entries.reserve(2 * static_cast<std::size_t>(seg.segments));
  for (std::size_t s = 0; s < comp_low.size(); ++s) {
    for (auto kind : {ExposureKind::low, ExposureKind::high}) {
      const ExposureInputs& in = kind == ExposureKind::low ? low : high;
      SegmentCompensation& c = kind == ExposureKind::low ? comp_low[s] : comp_high[s];
      RawMosaic adjusted = recombine(c.scaled, in.original, in.mosaic, clip_max, epsilon);
      stack.entries.push_back({c.segment, kind, c.scale, std::move(adjusted), std::move(c.scaled)});
    }
  }
  return stack;
}

}  // namespace dualiso
