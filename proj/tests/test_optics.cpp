#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pcseg/optics.hpp"

using namespace pcseg;

namespace {
Frame random_frame(int w, int h, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Frame f(w, h);
  for (auto &x : f.data()) x = u(gen);
  return f;
}

double rel_error(const Frame &a, const Frame &b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

double max_abs_diff(const Kernel &a, const Kernel &b) {
  double m = 0;
  for (std::size_t i = 0; i < a.taps.size(); ++i) m = std::max(m, std::abs(a.taps[i] - b.taps[i]));
  return m;
}

// Annular profile from the standard library's Bessel function.
double reference_profile(double r, double R, double W) {
  const double Ri = R - W;
  if (r == 0) return std::numbers::pi * (R * R - Ri * Ri);
  const double c = 2 * std::numbers::pi * r;
  return (R * std::cyl_bessel_j(1.0, c * R) - Ri * std::cyl_bessel_j(1.0, c * Ri)) / r;
}
} // namespace

TEST(Airy, DihedralSymmetry) {
  const Kernel k = obscured_airy(OpticsParams{});
  const int h = k.half();
  for (int y = -h; y <= h; ++y)
    for (int x = -h; x <= h; ++x) {
      EXPECT_NEAR(k.at(x, y), k.at(y, x), 1e-12);
      EXPECT_NEAR(k.at(x, y), k.at(-x, y), 1e-12);
      EXPECT_NEAR(k.at(x, y), k.at(x, -y), 1e-12);
    }
}

TEST(Airy, UnitAbsoluteMassAndProfileShape) {
  const OpticsParams p;
  const Kernel k = obscured_airy(p);
  double l1 = 0;
  for (double t : k.taps) l1 += std::abs(t);
  EXPECT_NEAR(l1, 1.0, 1e-12);

  // Taps are proportional to the independently evaluated profile with a positive factor.
  const double scale = k.at(0, 0) / reference_profile(0, p.airy_outer_radius, p.airy_ring_width);
  EXPECT_GT(scale, 0.0);
  const int h = k.half();
  for (int y = -h; y <= h; ++y)
    for (int x = -h; x <= h; ++x)
      EXPECT_NEAR(k.at(x, y), scale * reference_profile(std::hypot(x, y), p.airy_outer_radius, p.airy_ring_width),
                  1e-10);
}

TEST(Airy, CenterTapIsMaximum) {
  const Kernel k = obscured_airy(OpticsParams{});
  for (double t : k.taps) EXPECT_LE(t, k.at(0, 0));
  // Oracle: the profile itself peaks at the origin over the kernel support.
  const double c = reference_profile(0, 0.25, 0.1);
  for (double r = 0.5; r < 12; r += 0.25) EXPECT_LT(reference_profile(r, 0.25, 0.1), c);
}

TEST(Airy, RejectsInvalidRadii) {
  OpticsParams p;
  p.airy_ring_width = 0.3;
  EXPECT_THROW(obscured_airy(p), ConfigError);
  p = {};
  p.kernel_size = 4;
  EXPECT_THROW(obscured_airy(p), ConfigError);
}

TEST(Psf, SpecialAngles) {
  const OpticsParams p;
  const Kernel airy = obscured_airy(p);
  const Kernel k0 = psf(0.0, airy, p.zeta_p);
  for (std::size_t i = 0; i < airy.taps.size(); ++i) EXPECT_EQ(k0.taps[i], p.zeta_p * airy.taps[i]);

  const Kernel k90 = psf(std::numbers::pi / 2, airy, p.zeta_p);
  Kernel expect = airy;
  for (double &t : expect.taps) t = -t;
  expect.at(0, 0) += 1.0;
  EXPECT_LE(max_abs_diff(k90, expect), 1e-15);
}

TEST(Psf, Antisymmetry) {
  const OpticsParams p;
  const Kernel airy = obscured_airy(p);
  for (double th : {0.1, 0.7, 2.0, 3.0}) {
    const Kernel a = psf(th, airy, p.zeta_p);
    const Kernel b = psf(th + std::numbers::pi, airy, p.zeta_p);
    for (std::size_t i = 0; i < a.taps.size(); ++i) EXPECT_NEAR(a.taps[i] + b.taps[i], 0.0, 1e-12);
  }
}

TEST(Bank, EightPhases) {
  const KernelBank bank = psf_bank(OpticsParams{});
  ASSERT_EQ(bank.size(), 8u);
  for (int m = 0; m < 8; ++m) EXPECT_EQ(bank.phases[m], 2 * std::numbers::pi * m / 8);
  EXPECT_EQ(bank.phases[1], std::numbers::pi / 4);
  for (int m = 0; m < 4; ++m)
    for (std::size_t i = 0; i < bank.kernels[m].taps.size(); ++i)
      EXPECT_NEAR(bank.kernels[m].taps[i], -bank.kernels[m + 4].taps[i], 1e-12);
}

TEST(Bank, SinglePhase) {
  OpticsParams p;
  p.m_phases = 1;
  const KernelBank bank = psf_bank(p);
  ASSERT_EQ(bank.size(), 1u);
  const Kernel airy = obscured_airy(p);
  for (std::size_t i = 0; i < airy.taps.size(); ++i) EXPECT_EQ(bank.kernels[0].taps[i], p.zeta_p * airy.taps[i]);
}

TEST(InverseFilter, ImpulseIsScaledIdentity) {
  const auto f = inverse_filter(impulse(5), 12, 10, 1e-3);
  for (const auto &z : f.response) {
    EXPECT_NEAR(z.real(), 1.0 / (1.0 + 1e-3), 1e-14);
    EXPECT_NEAR(z.imag(), 0.0, 1e-14);
  }
  EXPECT_THROW(inverse_filter(impulse(5), 12, 10, 0.0), DataError);
}

TEST(InverseFilter, RoundTripAndMonotoneInRegularizer) {
  OpticsParams p;
  Kernel k = obscured_airy(p);
  for (double &t : k.taps) t *= 0.1;
  k.at(0, 0) += 1.0;
  const Frame img = random_frame(64, 64, 3);
  const auto d = padded_dims(64, 64, k.size);
  double min_mag = 1e9;
  for (const auto &z : forward_filter(k, d.rows, d.cols).response) min_mag = std::min(min_mag, std::abs(z));
  ASSERT_GE(min_mag, 0.2);

  const Frame blurred = convolve_freq(img, k);
  double prev = 1e9;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double err = rel_error(convolve_freq(blurred, inverse_filter_for(k, 64, 64, eps)), img);
    EXPECT_LE(err, prev) << eps;
    prev = err;
  }
  EXPECT_LE(prev, 0.01);
}

TEST(InverseFilter, StampedImpulseRestoresInPlace) {
  const OpticsParams p;
  const Kernel k = psf(std::numbers::pi / 4, obscured_airy(p), p.zeta_p);
  Frame img(64, 64);
  img(30, 22) = 1.0;
  const Frame restored = convolve_freq(convolve_freq(img, k), inverse_filter_for(k, 64, 64, 1e-3));
  std::size_t best = 0;
  for (std::size_t i = 1; i < restored.size(); ++i)
    if (restored[i] > restored[best]) best = i;
  EXPECT_LE(std::abs(static_cast<int>(best % 64) - 30), 1);
  EXPECT_LE(std::abs(static_cast<int>(best / 64) - 22), 1);
}

TEST(InverseKernel, CenteredAndSymmetric) {
  const OpticsParams p;
  const Kernel k = psf(std::numbers::pi / 4, obscured_airy(p), p.zeta_p);
  const Kernel inv = inverse_kernel(k, 31, 1e-3);
  const int h = inv.half();
  for (int y = -h; y <= h; ++y)
    for (int x = -h; x <= h; ++x) EXPECT_NEAR(inv.at(x, y), inv.at(-x, -y), 1e-12);
  EXPECT_THROW(inverse_kernel(k, 15, 1e-3), DataError);
}

TEST(Convolve, ImpulseIsIdentity) {
  const Frame img = random_frame(13, 9, 4);
  const Frame out = convolve_freq(img, impulse(7));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-12);
}

TEST(Convolve, ConstantScalesByTapSum) {
  const Kernel k = psf(0.9, obscured_airy(OpticsParams{}), 0.8);
  const Frame out = convolve_freq(Frame(20, 17, 0.6), k);
  for (double v : out.data()) EXPECT_NEAR(v, 0.6 * k.sum(), 1e-12);
}

TEST(Convolve, Linear) {
  const Kernel k = psf(2.1, obscured_airy(OpticsParams{}), 0.8);
  const Frame x = random_frame(24, 20, 5), y = random_frame(24, 20, 6);
  Frame mix(24, 20);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * x[i] - 0.75 * y[i];
  const Frame a = convolve_freq(mix, k), cx = convolve_freq(x, k), cy = convolve_freq(y, k);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], 2.5 * cx[i] - 0.75 * cy[i], 1e-10);
}

TEST(Convolve, MatchesNaiveSpatialConvolution) {
  std::mt19937 gen(8);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 5; ++t) {
    const Frame img = random_frame(16, 16, 20 + t);
    std::vector<double> taps(25);
    for (auto &v : taps) v = n(gen);
    const Kernel k = make_kernel(5, taps);
    const Frame fast = convolve_freq(img, k);
    const std::vector<double> slow =
        oracle::spatial_convolve(std::vector<double>(img.data().begin(), img.data().end()), 16, 16, taps, 5);
    for (std::size_t i = 0; i < slow.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-8);
  }
}

TEST(Convolve, LargeKernelOnSmallFrameMatchesNaive) {
  // Padding wider than the frame exercises repeated reflection.
  const Frame img = random_frame(6, 5, 30);
  const Kernel k = psf(0.4, obscured_airy(OpticsParams{}), 0.8);
  const Frame fast = convolve_freq(img, k);
  const auto slow =
      oracle::spatial_convolve(std::vector<double>(img.data().begin(), img.data().end()), 6, 5, k.taps, k.size);
  for (std::size_t i = 0; i < slow.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-10);
}

TEST(Convolve, SharedSpectrumMatchesSingleFilters) {
  const KernelBank bank = psf_bank(OpticsParams{});
  const Frame img = random_frame(20, 18, 9);
  std::vector<FrequencyFilter> filters;
  for (const auto &k : bank.kernels) filters.push_back(inverse_filter_for(k, 20, 18, 0.1));
  const auto many = convolve_freq(img, filters);
  for (std::size_t m = 0; m < filters.size(); ++m) EXPECT_EQ(many[m], convolve_freq(img, filters[m]));
  EXPECT_THROW(convolve_freq(Frame(10, 10), filters[0]), DataError);
}
