#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pcseg/bessel.hpp"

using pcseg::bessel_j1;

TEST(BesselJ1, MatchesLongDoubleSeries) {
  for (int i = 0; i < 100; ++i) {
    const double x = 0.2 * i;
    EXPECT_NEAR(bessel_j1(x), static_cast<double>(oracle::bessel_j1_series(x)), 1e-10) << x;
  }
}

TEST(BesselJ1, MatchesStandardLibrary) {
  for (int i = 0; i < 100; ++i) {
    const double x = 0.37 + 0.6 * i;
    EXPECT_NEAR(bessel_j1(x), std::cyl_bessel_j(1.0, x), 1e-8) << x;
  }
}

TEST(BesselJ1, OddAndKnownValues) {
  EXPECT_EQ(bessel_j1(0.0), 0.0);
  EXPECT_DOUBLE_EQ(bessel_j1(-2.5), -bessel_j1(2.5));
  // First positive zero.
  EXPECT_NEAR(bessel_j1(3.8317059702075125), 0.0, 1e-12);
  // Continuity across the branch switch.
  EXPECT_NEAR(bessel_j1(12.0 - 1e-12), bessel_j1(12.0), 1e-10);
}
