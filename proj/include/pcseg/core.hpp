#pragma once

// Image sequences and the pixels x frames matrix view used by the decomposition.
//
// Vectorization is row-major with a top-left origin: pixel (x, y) of a
// width x height frame maps to index y * width + x. Column k of a stacked
// matrix is the vectorized frame k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcseg/error.hpp"

namespace pcseg {

/// Single-channel real image, row-major. Values loaded from disk lie in [0, 1];
/// intermediate pipeline frames (foregrounds, filter responses) may be signed.
class Frame {
public:
  Frame() = default;
  Frame(int width, int height, double fill = 0.0)
    : width_(checked_dim(width)), height_(checked_dim(height)),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}
  Frame(int width, int height, std::vector<double> data)
    : width_(checked_dim(width)), height_(checked_dim(height)), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
      throw DataError("frame data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(width_) + "x" + std::to_string(height_));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(int x, int y) const { return data_[index(x, y)]; }
  double &operator()(int x, int y) { return data_[index(x, y)]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &operator[](std::size_t i) { return data_[i]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double> &values() const { return data_; }

  bool same_shape(const Frame &o) const { return width_ == o.width_ && height_ == o.height_; }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Frame &, const Frame &) = default;

private:
  static int checked_dim(int d) {
    if (d <= 0) throw DataError("frame dimensions must be positive, got " + std::to_string(d));
    return d;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Binary image; nonzero bytes are foreground.
class Mask {
public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width <= 0 || height <= 0) throw DataError("mask dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return data_[i] != 0; }
  void set(std::size_t i, bool v) { data_[i] = v ? 1 : 0; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](auto b) { return b != 0; }));
  }
  bool same_shape(const Mask &o) const { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const Mask &, const Mask &) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Ordered stack of same-sized frames. Construction validates uniform dimensions;
/// the two-frame minimum is enforced where a decomposition needs it (see require_decomposable).
class ImageSequence {
public:
  ImageSequence() = default;
  explicit ImageSequence(std::vector<Frame> frames) : frames_(std::move(frames)) {
    for (std::size_t k = 1; k < frames_.size(); ++k) {
      if (!frames_[k].same_shape(frames_[0]))
        throw DataError("frame " + std::to_string(k) + " is " + std::to_string(frames_[k].width()) + "x" +
                        std::to_string(frames_[k].height()) + ", expected " + std::to_string(frames_[0].width()) +
                        "x" + std::to_string(frames_[0].height()));
    }
  }

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  int width() const { return frames_.empty() ? 0 : frames_[0].width(); }
  int height() const { return frames_.empty() ? 0 : frames_[0].height(); }
  const Frame &operator[](std::size_t k) const { return frames_[k]; }
  const std::vector<Frame> &frames() const { return frames_; }
  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

  friend bool operator==(const ImageSequence &, const ImageSequence &) = default;

private:
  std::vector<Frame> frames_;
};

inline void require_decomposable(const ImageSequence &seq) {
  if (seq.size() < 2)
    throw DataError("insufficient frames: decomposition needs at least 2, got " + std::to_string(seq.size()));
}

/// pixels x frames matrix plus the frame geometry needed to map columns back to images.
struct StackedMatrix {
  Eigen::MatrixXd data;
  int width = 0;
  int height = 0;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
};

inline StackedMatrix stack(const ImageSequence &seq) {
  if (seq.empty()) throw DataError("cannot stack an empty sequence");
  StackedMatrix m;
  m.width = seq.width();
  m.height = seq.height();
  m.data.resize(static_cast<Eigen::Index>(seq[0].size()), static_cast<Eigen::Index>(seq.size()));
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const auto px = seq[k].data();
    m.data.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(px.data(), static_cast<Eigen::Index>(px.size()));
  }
  return m;
}

inline Frame column_frame(const Eigen::MatrixXd &m, Eigen::Index col, int width, int height) {
  std::vector<double> px(static_cast<std::size_t>(m.rows()));
  Eigen::Map<Eigen::VectorXd>(px.data(), m.rows()) = m.col(col);
  return Frame(width, height, std::move(px));
}

inline ImageSequence unstack(const Eigen::MatrixXd &m, int width, int height) {
  if (width <= 0 || height <= 0 || m.rows() != static_cast<Eigen::Index>(width) * height)
    throw DataError("cannot unstack " + std::to_string(m.rows()) + " rows into " + std::to_string(width) + "x" +
                    std::to_string(height) + " frames");
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) frames.push_back(column_frame(m, k, width, height));
  return ImageSequence(std::move(frames));
}

inline ImageSequence unstack(const StackedMatrix &m) { return unstack(m.data, m.width, m.height); }

} // namespace pcseg
