#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>

#include "dualiso/image.hpp"

namespace dualiso {

enum class DemosaicAlgo {
  neighborhood_average,  // the 3x3 neighbour averaging also used for Bayer luminance
  gradient_corrected,    // 5x5 gradient-corrected linear interpolation
};

inline DemosaicAlgo parse_demosaic_algo(std::string_view s) {
  if (s == "simple" || s == "neighborhood-average") return DemosaicAlgo::neighborhood_average;
  if (s == "gradient" || s == "gradient-corrected") return DemosaicAlgo::gradient_corrected;
  throw Error("unknown demosaic algorithm: " + std::string(s));
}

inline std::string to_string(DemosaicAlgo a) {
  return a == DemosaicAlgo::neighborhood_average ? "simple" : "gradient";
}

namespace detail {

inline void check_demosaic_input(const RawMosaic& x) {
  x.cfa.validate();
  if (x.width() < 2 || x.height() < 2 || x.width() % 2 != 0 || x.height() % 2 != 0)
    throw DimensionError("demosaic needs even dimensions of at least 2x2");
}

inline RgbImage demosaic_neighborhood(const RawMosaic& x) {
  const int h = x.height();
  const int w = x.width();
  RgbImage out(w, h);
  for (int i = 0; i < h; ++i) {
    const int up = reflect101(i - 1, h);
    const int down = reflect101(i + 1, h);
    for (int j = 0; j < w; ++j) {
      const int left = reflect101(j - 1, w);
      const int right = reflect101(j + 1, w);
      const Channel own = x.cfa.at(i, j);
      if (own == Channel::G) {
        out(i, j, 1) = x(i, j);
        out(i, j, static_cast<std::size_t>(x.cfa.at(i, j + 1))) = 0.5 * (x(i, left) + x(i, right));
        out(i, j, static_cast<std::size_t>(x.cfa.at(i + 1, j))) = 0.5 * (x(up, j) + x(down, j));
      } else {
        const Channel other = own == Channel::R ? Channel::B : Channel::R;
        out(i, j, static_cast<std::size_t>(own)) = x(i, j);
        out(i, j, 1) = 0.25 * (x(up, j) + x(down, j) + x(i, left) + x(i, right));
        out(i, j, static_cast<std::size_t>(other)) =
            0.25 * (x(up, left) + x(up, right) + x(down, left) + x(down, right));
      }
    }
  }
  return out;
}

inline RgbImage demosaic_gradient(const RawMosaic& x) {
  const int h = x.height();
  const int w = x.width();
  constexpr int pad = 2;
  LuminanceMap p(w + 2 * pad, h + 2 * pad);
  for (int r = 0; r < p.height(); ++r)
    for (int c = 0; c < p.width(); ++c) p(r, c) = x(reflect101(r - pad, h), reflect101(c - pad, w));

  RgbImage out(w, h);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      auto v = [&](int di, int dj) { return p(i + pad + di, j + pad + dj); };
      const double c0 = v(0, 0);
      const double axial1 = v(-1, 0) + v(1, 0) + v(0, -1) + v(0, 1);
      const double axial2 = v(-2, 0) + v(2, 0) + v(0, -2) + v(0, 2);
      const double diag1 = v(-1, -1) + v(-1, 1) + v(1, -1) + v(1, 1);
      const double horiz1 = v(0, -1) + v(0, 1);
      const double horiz2 = v(0, -2) + v(0, 2);
      const double vert1 = v(-1, 0) + v(1, 0);
      const double vert2 = v(-2, 0) + v(2, 0);
      const Channel own = x.cfa.at(i, j);
      std::array<double, 3> rgb{};
      rgb[static_cast<std::size_t>(own)] = c0;
      if (own == Channel::G) {
        // Channel carried by this row comes from the horizontal neighbours.
        const double row_est = (5.0 * c0 + 4.0 * horiz1 - horiz2 - diag1 + 0.5 * vert2) / 8.0;
        const double col_est = (5.0 * c0 + 4.0 * vert1 - vert2 - diag1 + 0.5 * horiz2) / 8.0;
        rgb[static_cast<std::size_t>(x.cfa.at(i, j + 1))] = row_est;
        rgb[static_cast<std::size_t>(x.cfa.at(i + 1, j))] = col_est;
      } else {
        const Channel other = own == Channel::R ? Channel::B : Channel::R;
        rgb[1] = (4.0 * c0 + 2.0 * axial1 - axial2) / 8.0;
        rgb[static_cast<std::size_t>(other)] = (6.0 * c0 + 2.0 * diag1 - 1.5 * axial2) / 8.0;
      }
      for (std::size_t ch = 0; ch < 3; ++ch) out(i, j, ch) = std::max(rgb[ch], 0.0);
    }
  }
  return out;
}

}  // namespace detail

/// CFA interpolation to full RGB. Negative filter overshoot is clamped to 0;
/// no upper clamp.
inline RgbImage demosaic(const RawMosaic& x, DemosaicAlgo algo = DemosaicAlgo::gradient_corrected) {
  detail::check_demosaic_input(x);
  switch (algo) {
    case DemosaicAlgo::neighborhood_average: return detail::demosaic_neighborhood(x);
    case DemosaicAlgo::gradient_corrected: return detail::demosaic_gradient(x);
  }
  throw Error("unknown demosaic algorithm");
}

}  // namespace dualiso
