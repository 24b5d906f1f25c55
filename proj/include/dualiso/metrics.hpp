#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "dualiso/image.hpp"
#include "dualiso/metrics_constants.hpp"

namespace dualiso {

struct TmqiResult {
  double q = 0.0;
  double fidelity = 0.0;
  double naturalness = 0.0;
};

struct MefSsimResult {
  double score = 0.0;
  std::vector<double> per_scale;
};

namespace detail {

/// 8-bit gray levels (as doubles) of a display-referred [0, 1] image, rounded
/// half-to-even.
inline LuminanceMap gray8(const RgbImage& img) {
  LuminanceMap out(img.width(), img.height());
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const double g = luma(std::clamp(img(r, c, 0), 0.0, 1.0), std::clamp(img(r, c, 1), 0.0, 1.0),
                            std::clamp(img(r, c, 2), 0.0, 1.0));
      out(r, c) = std::nearbyint(std::clamp(g, 0.0, 1.0) * 255.0);
    }
  return out;
}

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double half = (size - 1) / 2.0;
  double sum = 0.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double dr = r - half;
      const double dc = c - half;
      const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(r * size + c)] = v;
      sum += v;
    }
  for (double& v : w) v /= sum;
  return w;
}

// 2x2 box average anchored at the top-left sample, edge-duplicating at the
// far border, then every other sample: output is ceil(n / 2) per axis.
inline LuminanceMap box_downsample(const LuminanceMap& img) {
  const int w = img.width();
  const int h = img.height();
  LuminanceMap out((w + 1) / 2, (h + 1) / 2);
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c) {
      const int r0 = 2 * r, c0 = 2 * c;
      const int r1 = std::min(r0 + 1, h - 1), c1 = std::min(c0 + 1, w - 1);
      out(r, c) = 0.25 * (img(r0, c0) + img(r0, c1) + img(r1, c0) + img(r1, c1));
    }
  return out;
}

inline int feasible_scales(int width, int height, int window, int wanted) {
  int scales = 0;
  for (int w = width, h = height; scales < wanted && std::min(w, h) >= window; ++scales) {
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  return scales;
}

inline double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

// Mean structural-fidelity map at one scale ("valid" window positions only).
inline double local_fidelity(const LuminanceMap& hdr, const LuminanceMap& ldr, double frequency) {
  namespace k = metric_constants::tmqi;
  const std::vector<double> win = gaussian_window(k::kWindow, k::kWindowSigma);
  const double csf = 100.0 * 2.6 * (0.0192 + 0.114 * frequency) * std::exp(-std::pow(0.114 * frequency, 1.1));
  const double u = 128.0 / (1.4 * csf);
  const double sig = u / 3.0;
  const int out_h = hdr.height() - k::kWindow + 1;
  const int out_w = hdr.width() - k::kWindow + 1;
  long double acc = 0.0L;
  for (int r = 0; r < out_h; ++r)
    for (int c = 0; c < out_w; ++c) {
      double m1 = 0, m2 = 0, s11 = 0, s22 = 0, s12 = 0;
      for (int dr = 0; dr < k::kWindow; ++dr)
        for (int dc = 0; dc < k::kWindow; ++dc) {
          const double wt = win[static_cast<std::size_t>(dr * k::kWindow + dc)];
          const double a = hdr(r + dr, c + dc);
          const double b = ldr(r + dr, c + dc);
          m1 += wt * a;
          m2 += wt * b;
          s11 += wt * a * a;
          s22 += wt * b * b;
          s12 += wt * a * b;
        }
      const double sigma1 = std::sqrt(std::max(0.0, s11 - m1 * m1));
      const double sigma2 = std::sqrt(std::max(0.0, s22 - m2 * m2));
      const double sigma12 = s12 - m1 * m2;
      const double p1 = normal_cdf(sigma1, u, sig);
      const double p2 = normal_cdf(sigma2, u, sig);
      acc += ((2.0 * p1 * p2 + k::kC1) / (p1 * p1 + p2 * p2 + k::kC1)) *
             ((sigma12 + k::kC2) / (sigma1 * sigma2 + k::kC2));
    }
  return static_cast<double>(acc / (static_cast<long double>(out_h) * out_w));
}

}  // namespace detail

/// Naturalness from the gray-level mean and contrast of an 8-bit image:
/// Gaussian density on the mean times Beta density on contrast / 64.29, each
/// divided by its peak value.
inline double naturalness_from_statistics(double mean, double contrast) {
  namespace k = metric_constants::tmqi;
  const double dm = (mean - k::kMeanMu) / k::kMeanSigma;
  const double pb = std::exp(-0.5 * dm * dm);
  const double x = contrast / k::kContrastScale;
  const double mode = (k::kContrastA - 1.0) / (k::kContrastA + k::kContrastB - 2.0);
  double pc = 0.0;
  if (x > 0.0 && x < 1.0)
    pc = std::exp((k::kContrastA - 1.0) * std::log(x / mode) + (k::kContrastB - 1.0) * std::log((1.0 - x) / (1.0 - mode)));
  return pb * pc;
}

/// No-reference naturalness of a display-referred image. Contrast is the
/// global standard deviation of the 8-bit gray levels.
inline double statistical_naturalness(const RgbImage& img) {
  if (img.empty()) throw DimensionError("empty image");
  const LuminanceMap g = detail::gray8(img);
  long double sum = 0.0L;
  for (double v : g.values()) sum += v;
  const double mean = static_cast<double>(sum / g.pixel_count());
  long double ss = 0.0L;
  for (double v : g.values()) ss += (v - mean) * (v - mean);
  const double contrast = std::sqrt(static_cast<double>(ss / g.pixel_count()));
  return naturalness_from_statistics(mean, contrast);
}

inline double tmqi_combine(double fidelity, double naturalness) {
  namespace k = metric_constants::tmqi;
  return k::kA * std::pow(fidelity, k::kAlpha) + (1.0 - k::kA) * std::pow(naturalness, k::kBeta);
}

/// Structural fidelity of a display-referred image against an HDR reference
/// plus its statistical naturalness.
inline TmqiResult tmqi(const RgbImage& fused, const HdrImage& reference) {
  namespace k = metric_constants::tmqi;
  if (!fused.same_shape(reference)) throw DimensionError("TMQI inputs differ in size");
  const int scales = detail::feasible_scales(fused.width(), fused.height(), k::kWindow, metric_constants::kScales);
  if (scales == 0) throw DimensionError("image smaller than the TMQI window");

  LuminanceMap hdr = luminance_of(reference);
  const auto [lo, hi] = std::minmax_element(hdr.values().begin(), hdr.values().end());
  const double lmin = *lo;
  const double span = *hi - *lo;
  for (auto& v : hdr.values()) v = span > 0.0 ? k::kHdrRange * (v - lmin) / span : 0.0;
  LuminanceMap ldr = detail::gray8(fused);

  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += k::kScaleWeights[static_cast<std::size_t>(s)];
  double fidelity = 1.0;
  double f = k::kStartFrequency;
  for (int s = 0; s < scales; ++s) {
    f /= 2.0;
    const double local = std::clamp(detail::local_fidelity(hdr, ldr, f), 0.0, 1.0);
    fidelity *= std::pow(local, k::kScaleWeights[static_cast<std::size_t>(s)] / wsum);
    if (s + 1 < scales) {
      hdr = detail::box_downsample(hdr);
      ldr = detail::box_downsample(ldr);
    }
  }
  TmqiResult r;
  r.fidelity = fidelity;
  r.naturalness = statistical_naturalness(fused);
  r.q = tmqi_combine(r.fidelity, r.naturalness);
  return r;
}

namespace detail {

inline double mef_ssim_scale(std::span<const LuminanceMap> seq, const LuminanceMap& fused) {
  namespace k = metric_constants::mef_ssim;
  constexpr int ws = k::kWindow;
  constexpr int bd = ws / 2;
  constexpr int area = ws * ws;
  const std::vector<double> win = gaussian_window(ws, k::kWindowSigma);
  const double c = (k::kK * k::kDynamicRange) * (k::kK * k::kDynamicRange);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const std::size_t n = seq.size();
  const int h = fused.height();
  const int w = fused.width();

  std::vector<double> mu(n), ed(n), wmap(n);
  std::vector<double> patch(n * area);
  std::array<double, area> ref{};
  long double acc = 0.0L;
  long count = 0;
  for (int r = bd; r < h - bd; ++r)
    for (int cc = bd; cc < w - bd; ++cc) {
      for (std::size_t s = 0; s < n; ++s) {
        double sum = 0.0;
        for (int dr = -bd; dr <= bd; ++dr)
          for (int dc = -bd; dc <= bd; ++dc) {
            const double v = seq[s](r + dr, cc + dc);
            patch[s * area + static_cast<std::size_t>((dr + bd) * ws + dc + bd)] = v;
            sum += v;
          }
        mu[s] = sum / area;
      }
      // Signal strength, and consistency of the structures across the stack.
      double denom = 0.0;
      double num_sq = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        double ss = 0.0;
        for (int i = 0; i < area; ++i) {
          const double d = patch[s * area + static_cast<std::size_t>(i)] - mu[s];
          ss += d * d;
        }
        const double norm = std::sqrt(ss);
        denom += norm;
        ed[s] = norm + k::kStrengthOffset;
      }
      for (int i = 0; i < area; ++i) {
        double t = 0.0;
        for (std::size_t s = 0; s < n; ++s) t += patch[s * area + static_cast<std::size_t>(i)] - mu[s];
        num_sq += t * t;
      }
      double consistency = (std::sqrt(num_sq) + eps) / (denom + eps);
      if (consistency > 1.0) consistency = 1.0 - eps;
      if (consistency < 0.0) consistency = eps;
      const double p = std::min(std::tan(std::numbers::pi / 2.0 * consistency), k::kExponentCap);

      double wsum = 0.0;
      double max_ed = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        wmap[s] = std::pow(ed[s] / ws, p) + eps;
        wsum += wmap[s];
        max_ed = std::max(max_ed, ed[s]);
      }
      double ref_norm_sq = 0.0;
      for (int i = 0; i < area; ++i) {
        double v = 0.0;
        for (std::size_t s = 0; s < n; ++s)
          v += (wmap[s] / wsum) * (patch[s * area + static_cast<std::size_t>(i)] - mu[s]) / ed[s];
        ref[static_cast<std::size_t>(i)] = v;
        ref_norm_sq += v * v;
      }
      if (ref_norm_sq > 0.0) {
        const double scale = max_ed / std::sqrt(ref_norm_sq);
        for (double& v : ref) v *= scale;
      }
      double m1 = 0, m2 = 0;
      for (int dr = -bd; dr <= bd; ++dr)
        for (int dc = -bd; dc <= bd; ++dc) {
          const std::size_t i = static_cast<std::size_t>((dr + bd) * ws + dc + bd);
          m1 += win[i] * ref[i];
          m2 += win[i] * fused(r + dr, cc + dc);
        }
      double s11 = 0, s22 = 0, s12 = 0;
      for (int dr = -bd; dr <= bd; ++dr)
        for (int dc = -bd; dc <= bd; ++dc) {
          const std::size_t i = static_cast<std::size_t>((dr + bd) * ws + dc + bd);
          const double a = ref[i] - m1;
          const double b = fused(r + dr, cc + dc) - m2;
          s11 += win[i] * a * a;
          s22 += win[i] * b * b;
          s12 += win[i] * a * b;
        }
      acc += (2.0 * s12 + c) / (s11 + s22 + c);
      ++count;
    }
  return static_cast<double>(acc / count);
}

}  // namespace detail

/// Fusion quality against the source exposure stack: per patch, the desired
/// structure is the consistency-weighted combination of the stack's
/// structures at the strongest signal strength; compared SSIM-style with the
/// fused patch over three scales.
inline MefSsimResult mef_ssim(const RgbImage& fused, std::span<const RgbImage> stack) {
  namespace k = metric_constants::mef_ssim;
  if (stack.size() < 2) throw InputCountError("MEF-SSIM needs at least two source images");
  for (const auto& s : stack)
    if (!s.same_shape(fused)) throw DimensionError("MEF-SSIM inputs differ in size");
  const int scales = detail::feasible_scales(fused.width(), fused.height(), k::kWindow, metric_constants::kScales);
  if (scales == 0) throw DimensionError("image smaller than the MEF-SSIM window");

  std::vector<LuminanceMap> seq;
  for (const auto& s : stack) seq.push_back(detail::gray8(s));
  LuminanceMap f = detail::gray8(fused);

  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += k::kScaleWeights[static_cast<std::size_t>(s)];
  MefSsimResult out;
  double score = 1.0;
  for (int s = 0; s < scales; ++s) {
    const double q = detail::mef_ssim_scale(seq, f);
    out.per_scale.push_back(q);
    score *= std::pow(std::max(q, 0.0), k::kScaleWeights[static_cast<std::size_t>(s)] / wsum);
    if (s + 1 < scales) {
      for (auto& img : seq) img = detail::box_downsample(img);
      f = detail::box_downsample(f);
    }
  }
  out.score = std::clamp(score, 0.0, 1.0);
  return out;
}

inline MefSsimResult mef_ssim(const RgbImage& fused, std::initializer_list<RgbImage> stack) {
  return mef_ssim(fused, std::span<const RgbImage>(stack.begin(), stack.size()));
}

/// Shannon entropy (bits) of the 256-bin histogram of the 8-bit gray image.
inline double discrete_entropy(const RgbImage& img) {
  if (img.empty()) throw DimensionError("empty image");
  const LuminanceMap g = detail::gray8(img);
  std::array<std::size_t, 256> hist{};
  for (double v : g.values()) ++hist[static_cast<std::size_t>(v)];
  const double n = static_cast<double>(g.pixel_count());
  double h = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace dualiso
