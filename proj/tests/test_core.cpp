#include <gtest/gtest.h>

#include <random>

#include "pcseg/core.hpp"
#include "pcseg/synth.hpp"

using namespace pcseg;

namespace {
ImageSequence random_sequence(int w, int h, int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Frame> frames;
  for (int k = 0; k < n; ++k) {
    Frame f(w, h);
    for (auto &v : f.data()) v = u(gen);
    frames.push_back(f);
  }
  return ImageSequence(frames);
}
} // namespace

TEST(Core, FrameRejectsWrongDataLength) {
  EXPECT_THROW(Frame(2, 2, std::vector<double>(3)), DataError);
  EXPECT_THROW(Frame(0, 2), DataError);
}

TEST(Core, SequenceRejectsMixedDimensions) {
  EXPECT_THROW(ImageSequence({Frame(2, 2), Frame(3, 3)}), DataError);
}

TEST(Core, DecompositionNeedsTwoFrames) {
  EXPECT_THROW(require_decomposable(ImageSequence({Frame(2, 2)})), DataError);
  EXPECT_NO_THROW(require_decomposable(ImageSequence({Frame(2, 2), Frame(2, 2)})));
}

TEST(Core, StackPutsRasterOrderFramesInColumns) {
  const ImageSequence seq({Frame(2, 1, {0.1, 0.2}), Frame(2, 1, {0.3, 0.4})});
  const StackedMatrix m = stack(seq);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m.data(0, 0), 0.1);
  EXPECT_EQ(m.data(1, 0), 0.2);
  EXPECT_EQ(m.data(0, 1), 0.3);
  EXPECT_EQ(m.data(1, 1), 0.4);
}

TEST(Core, RowMajorVectorization) {
  Frame f(3, 2);
  f(2, 1) = 7.0;
  const StackedMatrix m = stack(ImageSequence({f, f}));
  EXPECT_EQ(m.data(1 * 3 + 2, 0), 7.0);
}

TEST(Core, ConstantSequenceStacksToRankOne) {
  const auto seq = random_sequence(5, 4, 1, 3);
  const ImageSequence constant({seq[0], seq[0], seq[0], seq[0]});
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack(constant).data);
  EXPECT_GT(svd.singularValues()[0], 1.0);
  EXPECT_LT(svd.singularValues()[1], 1e-12 * svd.singularValues()[0]);
}

TEST(Core, SynthBackgroundStacksToItsRank) {
  for (int r : {1, 2, 3}) {
    SynthConfig cfg;
    cfg.width = cfg.height = 24;
    cfg.n_frames = 10;
    cfg.bg_rank = r;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack(gen_background(cfg)).data);
    const auto &s = svd.singularValues();
    EXPECT_GT(s[r - 1] / s[0], 1e-6) << "rank " << r;
    EXPECT_LT(s[r] / s[0], 1e-12) << "rank " << r;
  }
}

TEST(Core, UnstackInvertsStackExactly) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto seq = random_sequence(7, 5, 4, seed);
    EXPECT_EQ(unstack(stack(seq)), seq);
  }
}

TEST(Core, UnstackSingleColumn) {
  Eigen::MatrixXd m(4, 1);
  m << 1, 2, 3, 4;
  const auto seq = unstack(m, 2, 2);
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq[0](1, 0), 2.0);
  EXPECT_EQ(seq[0](0, 1), 3.0);
}

TEST(Core, UnstackRejectsWrongRowCount) {
  EXPECT_THROW(unstack(Eigen::MatrixXd::Zero(5, 1), 2, 2), DataError);
}
