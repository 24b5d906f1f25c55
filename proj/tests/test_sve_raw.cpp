#include <gtest/gtest.h>

#include "dualiso/sve_raw.hpp"
#include "test_support.hpp"

using namespace dualiso;
using dualiso::testing::random_mosaic;

namespace {

RawMosaic row_indexed(int w, int h) {
  RawMosaic x(w, h, CfaPattern::rggb());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) x(r, c) = r;
  return x;
}

}  // namespace

TEST(SeparateExamples, HighRowsAreFirstOfEachFourRowPeriod) {
  const SeparatedMosaics s = separate(row_indexed(4, 8));
  ASSERT_EQ(s.high.height(), 4);
  ASSERT_EQ(s.low.height(), 4);
  const int high_rows[] = {0, 1, 4, 5};  // rows 1,2,5,6 counting from one
  const int low_rows[] = {2, 3, 6, 7};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      EXPECT_EQ(s.high(r, c), high_rows[r]);
      EXPECT_EQ(s.low(r, c), low_rows[r]);
    }
}

TEST(SeparateExamples, ConstantMosaicGivesConstantHalves) {
  const SeparatedMosaics s = separate(RawMosaic(4, 4, CfaPattern::rggb(), 0.7));
  for (const RawMosaic* h : {&s.low, &s.high}) {
    EXPECT_EQ(h->width(), 4);
    EXPECT_EQ(h->height(), 2);
    for (double v : h->plane.values()) EXPECT_EQ(v, 0.7);
  }
}

TEST(SeparateExamples, FourByTwoRoundTrip) {
  RawMosaic x(2, 4, CfaPattern::rggb());
  for (int i = 0; i < 8; ++i) x.plane.values()[static_cast<std::size_t>(i)] = i + 1;
  const SeparatedMosaics s = separate(x);
  // Hand bookkeeping: rows 0,1 are high, rows 2,3 are low.
  EXPECT_EQ(s.high.plane.storage(), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(s.low.plane.storage(), (std::vector<double>{5, 6, 7, 8}));
  EXPECT_EQ(interleave(s), x);
}

TEST(InterpolateRowsExamples, ConstantHalfGivesConstantMosaic) {
  const RawMosaic out = interpolate_rows(RawMosaic(4, 4, CfaPattern::rggb(), 0.5), ExposureKind::high);
  EXPECT_EQ(out.height(), 8);
  for (double v : out.plane.values()) EXPECT_EQ(v, 0.5);
}

TEST(InterpolateRowsExamples, GapIsMidpointOfNeighbouringGroups) {
  RawMosaic half(2, 4, CfaPattern::rggb());
  for (int c = 0; c < 2; ++c) {
    half(0, c) = half(1, c) = 0.2;
    half(2, c) = half(3, c) = 0.6;
  }
  const RawMosaic out = interpolate_rows(half, 0, 2);
  for (int c = 0; c < 2; ++c) {
    EXPECT_DOUBLE_EQ(out(2, c), 0.4);
    EXPECT_DOUBLE_EQ(out(3, c), 0.4);
  }
}

TEST(InterpolateRowsExamples, BottomGroupReplicatesSingleTopGroup) {
  RawMosaic half(2, 2, CfaPattern::rggb());
  half.plane.storage() = {0.1, 0.2, 0.3, 0.4};
  const RawMosaic out = interpolate_rows(half, 0, 2);
  // Hand oracle for the 4x2 result.
  EXPECT_EQ(out.plane.storage(), (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4}));
}

TEST(SveRaw, RejectsHeightNotMultipleOfFour) {
  EXPECT_THROW(separate(RawMosaic(4, 6, CfaPattern::rggb())), DimensionError);
  EXPECT_THROW(separate(RawMosaic(4, 0, CfaPattern::rggb())), DimensionError);
  EXPECT_THROW(interpolate_rows(RawMosaic(), 0, 2), DimensionError);
}

TEST(SveRaw, LowFirstLayoutSwapsHalves) {
  const DualIsoLayout low_first{2, false};
  const SeparatedMosaics a = separate(row_indexed(2, 8));
  const SeparatedMosaics b = separate(row_indexed(2, 8), low_first);
  EXPECT_EQ(a.low, b.high);
  EXPECT_EQ(a.high, b.low);
}

TEST(SveRawProperties, SeparateInterleaveIsIdentity) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int w = 2 * (1 + static_cast<int>(seed % 7));
    const int h = 4 * (1 + static_cast<int>(seed % 5));
    for (bool high_first : {true, false}) {
      const DualIsoLayout layout{2, high_first};
      const RawMosaic x = random_mosaic(w, h, seed, CfaPattern::parse(seed % 2 ? "GRBG" : "RGGB"));
      EXPECT_EQ(interleave(separate(x, layout), layout), x);
    }
  }
}

TEST(SveRawProperties, InterpolatePreservesPresentRowsAndStaysConvex) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int w = 2 * (1 + static_cast<int>(seed % 6));
    const int h = 4 * (1 + static_cast<int>(seed % 4));
    const RawMosaic x = random_mosaic(w, h, 100 + seed);
    const SeparatedMosaics s = separate(x);
    for (auto kind : {ExposureKind::low, ExposureKind::high}) {
      const RawMosaic& half = s.get(kind);
      const RawMosaic full = interpolate_rows(half, kind);
      ASSERT_EQ(full.height(), h);
      EXPECT_EQ(full.cfa, x.cfa);
      const int phase = DualIsoLayout{}.phase(kind);
      const auto [lo, hi] = std::minmax_element(half.plane.values().begin(), half.plane.values().end());
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          if ((r / 2) % 2 == phase) EXPECT_EQ(full(r, c), x(r, c));
          EXPECT_GE(full(r, c), *lo);
          EXPECT_LE(full(r, c), *hi);
        }
    }
  }
}

TEST(SveRawProperties, CfaPatternTravelsWithHalves) {
  const RawMosaic x = random_mosaic(6, 8, 3, CfaPattern::parse("BGGR"));
  const SeparatedMosaics s = separate(x);
  EXPECT_EQ(s.low.cfa, x.cfa);
  EXPECT_EQ(s.high.cfa, x.cfa);
  // Groups are an even number of rows, so every half row keeps its full-frame colour.
  for (int r = 0; r < s.high.height(); ++r)
    for (int c = 0; c < s.high.width(); ++c) {
      const int full_row = (2 * (r / 2)) * 2 + r % 2;
      EXPECT_EQ(s.high.color(r, c), x.color(full_row, c));
    }
}
