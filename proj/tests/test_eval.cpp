#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pcseg/eval.hpp"

using namespace pcseg;

namespace {
Mask random_mask(int w, int h, unsigned seed, double p = 0.3) {
  std::mt19937 gen(seed);
  std::bernoulli_distribution b(p);
  Mask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, b(gen));
  return m;
}

Mask negate(const Mask &m) {
  Mask n(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) n.set(i, !m[i]);
  return n;
}
} // namespace

TEST(Accuracy, WorkedExample) {
  ConfusionCounts c;
  c.tp = 8;
  c.fn = 2;
  c.fp = 2;
  c.tn = 88;
  EXPECT_EQ(c.positives(), 10u);
  EXPECT_EQ(c.negatives(), 90u);
  EXPECT_EQ(accuracy(c), 0.96);
  EXPECT_THROW(accuracy(ConfusionCounts{}), DataError);
}

TEST(Confusion, Examples) {
  const Mask t = random_mask(8, 8, 1);
  const auto same = confusion(t, t);
  EXPECT_EQ(same.fp, 0u);
  EXPECT_EQ(same.fn, 0u);
  EXPECT_EQ(accuracy(same), 1.0);
  const auto inv = confusion(negate(t), t);
  EXPECT_EQ(inv.tp, 0u);
  EXPECT_EQ(inv.tn, 0u);
  const auto none = confusion(Mask(8, 8), t);
  EXPECT_EQ(none.fn, t.count());
  EXPECT_EQ(none.fp, 0u);
  EXPECT_THROW(confusion(Mask(8, 8), Mask(8, 7)), DataError);
}

TEST(Accuracy, MatchesPixelLoop) {
  for (unsigned s = 0; s < 10; ++s) {
    const Mask m = random_mask(32, 32, 10 + s), t = random_mask(32, 32, 50 + s);
    std::size_t agree = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) agree += m(x, y) == t(x, y);
    EXPECT_NEAR(accuracy(confusion(m, t)), agree / 1024.0, 1e-12);
  }
}

TEST(Otsu, TwoValues) {
  std::vector<double> v(64);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 ? 0.8 : 0.2;
  const auto r = otsu(Frame(8, 8, v));
  EXPECT_GT(r.threshold, 0.2);
  EXPECT_LT(r.threshold, 0.8);
  EXPECT_EQ(otsu_mask(Frame(8, 8, v)).count(), 32u);
}

TEST(Otsu, MatchesExhaustiveSearch) {
  std::mt19937 gen(2);
  for (int t = 0; t < 20; ++t) {
    std::gamma_distribution<double> g(1.0 + t * 0.3, 1.0);
    std::vector<double> v(500);
    for (auto &x : v) x = g(gen);
    EXPECT_EQ(otsu(v).bin, oracle::brute_otsu_bin(v)) << t;
  }
}

TEST(Otsu, ConstantImageRejected) {
  EXPECT_THROW(otsu(Frame(4, 4, 0.5)), DataError);
  EXPECT_THROW(otsu(std::vector<double>{}), DataError);
}

TEST(Otsu, AffineInvariantSplit) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  Frame f(20, 20), g(20, 20);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = u(gen) * u(gen);
    g[i] = 2.0 * f[i];
  }
  EXPECT_EQ(otsu_mask(f), otsu_mask(g));
}

TEST(Evaluate, Examples) {
  std::vector<Mask> truth = {random_mask(10, 10, 4), random_mask(10, 10, 5)};
  const auto same = evaluate(truth, truth);
  EXPECT_EQ(same.acc[0], 1.0);
  EXPECT_EQ(same.mean_acc, 1.0);

  std::vector<Mask> off = truth;
  off[1].set(17, !off[1][17]);
  const auto r = evaluate(off, truth);
  EXPECT_EQ(r.acc[0], 1.0);
  EXPECT_DOUBLE_EQ(r.acc[1], 0.99);
  EXPECT_DOUBLE_EQ(r.mean_acc, (1.0 + 0.99) / 2);

  EXPECT_THROW(evaluate({truth[0]}, truth), DataError);
}

TEST(Evaluate, MeanMatchesRecount) {
  std::vector<Mask> a, b;
  for (unsigned s = 0; s < 6; ++s) {
    a.push_back(random_mask(16, 12, 100 + s));
    b.push_back(random_mask(16, 12, 200 + s));
  }
  const auto r = evaluate(a, b);
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a[k].size(); ++i) agree += a[k][i] == b[k][i];
    s += static_cast<double>(agree) / static_cast<double>(a[k].size());
  }
  EXPECT_NEAR(r.mean_acc, s / 6, 1e-12);
}

TEST(Evaluate, CsvLayout) {
  const auto dir = std::filesystem::temp_directory_path() / "pcseg_eval_csv";
  std::filesystem::remove_all(dir);
  std::vector<Mask> t = {random_mask(4, 4, 1), random_mask(4, 4, 2)};
  write_eval_csv(dir / "eval.csv", evaluate(t, t));
  std::ifstream in(dir / "eval.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "frame,tp,fp,tn,fn,acc");
  EXPECT_EQ(lines[3], "mean,,,,,1");
  std::filesystem::remove_all(dir);
}
