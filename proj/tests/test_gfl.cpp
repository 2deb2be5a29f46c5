#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pcseg/gfl.hpp"

using namespace pcseg;

namespace {
std::vector<oracle::Edge> edges_of(const EdgeWeights &w) {
  return oracle::grid_edges(w.width, w.height, w.horizontal, w.vertical);
}
} // namespace

TEST(NeighborWeights, ConstantFrameGivesUnitWeights) {
  const auto w = neighbor_weights(Frame(5, 4, 0.3), 0.07);
  for (double x : w.horizontal) EXPECT_EQ(x, 1.0);
  for (double x : w.vertical) EXPECT_EQ(x, 1.0);
}

TEST(NeighborWeights, DifferenceOfSigmaRootTwoGivesInverseE) {
  const double sigma = 0.2;
  const auto w = neighbor_weights(Frame(2, 1, {0.0, sigma * std::sqrt(2.0)}), sigma);
  ASSERT_EQ(w.horizontal.size(), 1u);
  EXPECT_NEAR(w.horizontal[0], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(w.horizontal[0], 0.3679, 1e-4);
}

TEST(NeighborWeights, ThreeByThreeHasTwelveEdges) {
  const auto w = neighbor_weights(Frame(3, 3, 0.0), 1.0);
  EXPECT_EQ(w.horizontal.size(), 6u);
  EXPECT_EQ(w.vertical.size(), 6u);
  EXPECT_EQ(w.edge_count(), 12u);
}

TEST(NeighborWeights, RangeAndRejectsBadSigma) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  Frame f(8, 8);
  for (auto &v : f.data()) v = u(gen);
  const auto w = neighbor_weights(f, 0.1);
  for (double x : w.horizontal) {
    EXPECT_GT(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_THROW(neighbor_weights(f, 0.0), ConfigError);
  EXPECT_THROW(neighbor_weights(f, -1.0), ConfigError);
}

TEST(NeighborWeights, DefaultSigmaIsMedianWithFloor) {
  // Horizontal differences 0.1, 0.3; no vertical edges.
  const Frame f(3, 1, {0.0, 0.1, 0.4});
  EXPECT_NEAR(default_sigma(f.data(), 3, 1), 0.2, 1e-15);
  EXPECT_EQ(default_sigma(Frame(4, 4, 0.5).data(), 4, 4), 1e-3);
}

TEST(GflNorm, Examples) {
  const auto w1 = uniform_weights(1, 2);
  EXPECT_EQ(gfl_norm(Frame(1, 2, 0.0), w1, 0.5), 0.0);
  const auto w = uniform_weights(2, 1);
  EXPECT_DOUBLE_EQ(gfl_norm(Frame(2, 1, {3.0, 1.0}), w, 0.5), 5.0);
  const auto w33 = uniform_weights(3, 3);
  EXPECT_DOUBLE_EQ(gfl_norm(Frame(3, 3, -0.4), w33, 2.0), 9 * 0.4);
}

TEST(GflNorm, DimensionMismatch) {
  EXPECT_THROW(gfl_norm(Frame(3, 3), uniform_weights(2, 2), 1.0), DataError);
}

TEST(GflProx, GammaZeroIsSoftThreshold) {
  const auto w = uniform_weights(2, 1);
  const Frame r = gfl_prox(Frame(2, 1, {3.0, -0.5}), 1.0, 0.0, w);
  EXPECT_EQ(r[0], 2.0);
  EXPECT_EQ(r[1], 0.0);

  std::mt19937 gen(2);
  std::normal_distribution<double> n(0, 1);
  Frame v(6, 5);
  for (auto &x : v.data()) x = n(gen);
  const Frame s = gfl_prox(v, 0.3, 0.0, uniform_weights(6, 5));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double expect = std::copysign(std::max(std::abs(v[i]) - 0.3, 0.0), v[i]);
    EXPECT_NEAR(s[i], expect, 1e-10);
  }
}

TEST(GflProx, VanishingTauReturnsInput) {
  std::mt19937 gen(3);
  std::normal_distribution<double> n(0, 1);
  Frame v(5, 5);
  for (auto &x : v.data()) x = n(gen);
  const Frame r = gfl_prox(v, 1e-12, 1.0, uniform_weights(5, 5));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(r[i], v[i], 1e-6);
}

TEST(GflProx, TwoByTwoMatchesGridSearch) {
  const std::vector<double> v = {1.0, 0.9, 0.1, 0.0};
  const auto w = uniform_weights(2, 2);
  const auto r = gfl_prox(v, 0.2, 1.0, w, 200, 1e-6);
  const double ours = oracle::prox_objective(v, r.value, 0.2, 1.0, edges_of(w));
  const double grid = oracle::grid_search_prox(v, 0.2, 1.0, edges_of(w), -0.2, 1.2, 0.01);
  EXPECT_LE(ours, grid + 1e-3);
  // The reported objective is the true objective of the returned point.
  EXPECT_NEAR(r.objective, ours, 1e-12);
}

TEST(GflProx, RandomSmallInstancesMatchGridSearch) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(-1, 1), uw(0.2, 1.0);
  const std::pair<int, int> shapes[] = {{2, 1}, {4, 1}, {2, 2}};
  for (int trial = 0; trial < 6; ++trial) {
    const auto [W, H] = shapes[trial % 3];
    EdgeWeights w = uniform_weights(W, H);
    for (auto &x : w.horizontal) x = uw(gen);
    for (auto &x : w.vertical) x = uw(gen);
    std::vector<double> v(static_cast<std::size_t>(W * H));
    for (auto &x : v) x = u(gen);
    const double tau = trial % 2 ? 0.5 : 0.1;
    const auto r = gfl_prox(v, tau, 1.0, w, 200, 1e-6);
    const double grid = oracle::grid_search_prox(v, tau, 1.0, edges_of(w), -1.0, 1.0, 0.01);
    EXPECT_LE(oracle::prox_objective(v, r.value, tau, 1.0, edges_of(w)), grid + 1e-3) << trial;
  }
}

TEST(GflProx, ShrinksSupNorm) {
  std::mt19937 gen(4);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 10; ++t) {
    Frame v(7, 6);
    for (auto &x : v.data()) x = n(gen);
    const auto w = neighbor_weights(v, 0.5);
    const Frame r = gfl_prox(v, 0.2, 1.0, w);
    double vmax = 0, rmax = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      vmax = std::max(vmax, std::abs(v[i]));
      rmax = std::max(rmax, std::abs(r[i]));
    }
    EXPECT_LE(rmax, vmax + 1e-12);
  }
}

TEST(GflProx, NonnegativeInputStaysNonnegative) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    Frame v(8, 8);
    for (auto &x : v.data()) x = u(gen);
    const Frame r = gfl_prox(v, 0.1, 2.0, uniform_weights(8, 8));
    for (double x : r.data()) EXPECT_GE(x, -1e-10);
  }
}

TEST(GflProx, ShiftWithFusedTermDisabled) {
  // gamma = 0: prox(v + c) = soft(v + c, tau) in closed form.
  const Frame v(3, 1, {0.05, 0.4, -0.3});
  const double c = 0.25, tau = 0.1;
  Frame shifted = v;
  for (auto &x : shifted.data()) x += c;
  const Frame r = gfl_prox(shifted, tau, 0.0, uniform_weights(3, 1));
  EXPECT_NEAR(r[0], 0.2, 1e-12);
  EXPECT_NEAR(r[1], 0.55, 1e-12);
  EXPECT_NEAR(r[2], 0.0, 1e-12);
}

TEST(GflProx, IterationCapIsFlaggedNotFatal) {
  std::mt19937 gen(6);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> v(100);
  for (auto &x : v) x = n(gen);
  const auto w = uniform_weights(10, 10);
  const auto r = gfl_prox(v, 0.3, 1.0, w, 1, 1e-12);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  const std::vector<double> zero(100, 0.0);
  EXPECT_LE(r.objective, gfl_objective(v, zero, 0.3, 1.0, w) + 1e-12);
  EXPECT_LE(r.objective, gfl_objective(v, v, 0.3, 1.0, w) + 1e-12);
}

TEST(GflProx, WarmStartReachesSameSolution) {
  std::mt19937 gen(7);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> v(64);
  for (auto &x : v) x = n(gen);
  const auto w = uniform_weights(8, 8);
  const auto cold = gfl_prox(v, 0.2, 1.0, w, 2000, 1e-12);
  GflDual dual;
  gfl_prox(v, 0.25, 1.0, w, 2000, 1e-12, &dual);
  const auto warm = gfl_prox(v, 0.2, 1.0, w, 2000, 1e-12, &dual);
  EXPECT_NEAR(warm.objective, cold.objective, 1e-8);
}
