#pragma once

#include <array>

// Constants of the two reference quality indices, gathered in one place.
namespace dualiso::metric_constants {

// Tone-mapped image quality index.
namespace tmqi {
inline constexpr double kA = 0.8012;      // weight of structural fidelity
inline constexpr double kAlpha = 0.3046;  // exponent on fidelity
inline constexpr double kBeta = 0.7088;   // exponent on naturalness
inline constexpr int kWindow = 11;
inline constexpr double kWindowSigma = 1.5;
inline constexpr double kC1 = 0.01;
inline constexpr double kC2 = 10.0;
inline constexpr double kStartFrequency = 32.0;  // cycles/degree, halved before each scale
// Scale weights of the five-scale original; the first three are used and renormalised.
inline constexpr std::array<double, 5> kScaleWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr double kHdrRange = 4294967295.0;  // 2^32 - 1
// Naturalness density models on 8-bit gray statistics.
inline constexpr double kMeanMu = 115.94;
inline constexpr double kMeanSigma = 27.99;
inline constexpr double kContrastA = 4.4;
inline constexpr double kContrastB = 10.1;
inline constexpr double kContrastScale = 64.29;
}  // namespace tmqi

// Multi-exposure fusion SSIM.
namespace mef_ssim {
inline constexpr double kK = 0.03;
inline constexpr double kDynamicRange = 255.0;
inline constexpr int kWindow = 11;
inline constexpr double kWindowSigma = 1.5;
inline constexpr double kExponentCap = 10.0;
inline constexpr double kStrengthOffset = 0.001;
inline constexpr std::array<double, 3> kScaleWeights{0.0448, 0.2856, 0.3001};
}  // namespace mef_ssim

inline constexpr int kScales = 3;

}  // namespace dualiso::metric_constants
