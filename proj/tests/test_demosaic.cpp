#include <gtest/gtest.h>

#include <cmath>

#include "dualiso/demosaic.hpp"
#include "dualiso/sve_sim.hpp"
#include "test_support.hpp"

using namespace dualiso;
using dualiso::testing::random_mosaic;

namespace {

constexpr DemosaicAlgo kAlgos[] = {DemosaicAlgo::neighborhood_average, DemosaicAlgo::gradient_corrected};

double interior_psnr(const RgbImage& a, const RgbImage& b, int border) {
  double se = 0;
  long n = 0;
  for (int r = border; r < a.height() - border; ++r)
    for (int c = border; c < a.width() - border; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double d = a(r, c, ch) - b(r, c, ch);
        se += d * d;
        ++n;
      }
  const double mse = se / static_cast<double>(n);
  return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
}

}  // namespace

TEST(DemosaicExamples, ConstantMosaicGivesGray) {
  for (auto algo : kAlgos) {
    const RgbImage out = demosaic(RawMosaic(8, 6, CfaPattern::rggb(), 0.35), algo);
    for (double v : out.values()) EXPECT_NEAR(v, 0.35, 1e-15) << to_string(algo);
  }
}

TEST(DemosaicExamples, PureGreenAtRedSite) {
  RawMosaic x(6, 6, CfaPattern::rggb());
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      if (x.color(r, c) == Channel::G) x(r, c) = 1.0;
  const RgbImage out = demosaic(x, DemosaicAlgo::neighborhood_average);
  EXPECT_EQ(out(2, 2, 1), 1.0);
  EXPECT_EQ(out(2, 2, 0), 0.0);
  EXPECT_EQ(out(2, 2, 2), 0.0);
}

TEST(DemosaicExamples, GradientCorrectedGrayRampRoundTrip) {
  RgbImage ramp(64, 48);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 64; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) ramp(r, c, ch) = 0.1 + 0.8 * (0.6 * c / 63.0 + 0.4 * r / 47.0);
  const RgbImage out = demosaic(mosaic(ramp), DemosaicAlgo::gradient_corrected);
  EXPECT_GE(interior_psnr(out, ramp, 2), 40.0);
}

TEST(Demosaic, ParsesAlgorithmNames) {
  EXPECT_EQ(parse_demosaic_algo("simple"), DemosaicAlgo::neighborhood_average);
  EXPECT_EQ(parse_demosaic_algo("gradient"), DemosaicAlgo::gradient_corrected);
  EXPECT_THROW(parse_demosaic_algo("ahd"), Error);
}

TEST(Demosaic, RejectsOddOrTinyMosaics) {
  for (auto algo : kAlgos) {
    EXPECT_THROW(demosaic(RawMosaic(5, 4, {}), algo), DimensionError);
    EXPECT_THROW(demosaic(RawMosaic(0, 0, {}), algo), DimensionError);
  }
}

TEST(DemosaicProperties, NeighbourhoodAverageKeepsNativeChannel) {
  for (const char* name : {"RGGB", "BGGR", "GRBG", "GBRG"}) {
    const RawMosaic x = random_mosaic(10, 8, 7, CfaPattern::parse(name));
    const RgbImage out = demosaic(x, DemosaicAlgo::neighborhood_average);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 10; ++c) EXPECT_EQ(out(r, c, static_cast<std::size_t>(x.color(r, c))), x(r, c));
  }
}

TEST(DemosaicProperties, LinearForNonNegativeScale) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RawMosaic x = random_mosaic(12, 10, seed);
    RawMosaic y = x;
    const double a = 0.25 * static_cast<double>(seed);
    for (auto& v : y.plane.values()) v *= a;
    for (auto algo : kAlgos) {
      const RgbImage dx = demosaic(x, algo), dy = demosaic(y, algo);
      for (std::size_t i = 0; i < dx.values().size(); ++i) {
        EXPECT_NEAR(dy.values()[i], a * dx.values()[i], 1e-12);
        EXPECT_GE(dx.values()[i], 0.0);
      }
    }
  }
}

TEST(DemosaicProperties, GradientCorrectedRecoversCorrelatedTexture) {
  RgbImage img(48, 48);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 48; ++c) {
      // shared texture, different tints: the case the gradient correction targets
      const double t = 0.5 + 0.3 * std::sin(c / 3.0 + r / 5.0) * std::cos(r / 4.0);
      img(r, c, 0) = 0.9 * t;
      img(r, c, 1) = t;
      img(r, c, 2) = 0.6 * t + 0.1;
    }
  const RawMosaic x = mosaic(img);
  const double simple = interior_psnr(demosaic(x, DemosaicAlgo::neighborhood_average), img, 2);
  const double gradient = interior_psnr(demosaic(x, DemosaicAlgo::gradient_corrected), img, 2);
  EXPECT_GT(gradient, simple);
  EXPECT_GT(gradient, 35.0);
}
