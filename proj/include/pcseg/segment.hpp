#pragma once

// Restoration by the inverse diffraction pattern bank, response fusion,
// binarization and connected-component labeling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pcseg/core.hpp"
#include "pcseg/error.hpp"
#include "pcseg/eval.hpp"
#include "pcseg/optics.hpp"

namespace pcseg {

/// Regularized inverse filters PSF^{-1}(theta_m), prepared for one frame size.
struct InverseBank {
  std::vector<double> phases;
  std::vector<FrequencyFilter> filters;
  int width = 0;
  int height = 0;
};

inline InverseBank make_inverse_bank(const KernelBank &bank, int width, int height, double eps_inv) {
  InverseBank inv;
  inv.phases = bank.phases;
  inv.width = width;
  inv.height = height;
  for (const auto &k : bank.kernels) inv.filters.push_back(inverse_filter_for(k, width, height, eps_inv));
  return inv;
}

/// Phi_m for every phase of the bank.
struct ResponseStack {
  std::vector<Frame> frames;
  std::vector<double> phases;
};

inline ResponseStack restore(const Frame &gbar, const InverseBank &bank) {
  if (gbar.width() != bank.width || gbar.height() != bank.height)
    throw DataError("dimension mismatch: frame " + std::to_string(gbar.width()) + "x" + std::to_string(gbar.height()) +
                    " vs inverse bank prepared for " + std::to_string(bank.width) + "x" + std::to_string(bank.height));
  return ResponseStack{convolve_freq(gbar, bank.filters), bank.phases};
}

enum class Fusion { MaxPositive, MaxAbs, SinglePhase };

struct FusionStrategy {
  Fusion kind = Fusion::MaxPositive;
  int phase = 1; ///< 1-based phase index for SinglePhase
};

inline Frame combine_responses(const ResponseStack &rs, const FusionStrategy &strategy) {
  if (rs.frames.empty()) throw DataError("combine_responses: empty response stack");
  const Frame &first = rs.frames.front();
  switch (strategy.kind) {
  case Fusion::SinglePhase: {
    if (strategy.phase < 1 || static_cast<std::size_t>(strategy.phase) > rs.frames.size())
      throw ConfigError("single-phase index " + std::to_string(strategy.phase) + " outside 1.." +
                        std::to_string(rs.frames.size()));
    return rs.frames[static_cast<std::size_t>(strategy.phase - 1)];
  }
  case Fusion::MaxPositive: {
    Frame out(first.width(), first.height(), 0.0);
    for (const auto &phi : rs.frames)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], phi[i]);
    return out;
  }
  case Fusion::MaxAbs: {
    Frame out(first.width(), first.height(), 0.0);
    for (const auto &phi : rs.frames)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], std::abs(phi[i]));
    return out;
  }
  }
  throw ConfigError("unknown fusion strategy");
}

enum class Threshold { Otsu, Quantile, Fixed };

struct BinarizeMethod {
  Threshold kind = Threshold::Otsu;
  double value = 0.0; ///< q in [0, 1] for Quantile, t for Fixed
};

struct BinarizeResult {
  Mask mask;
  double threshold = 0.0;
  bool degenerate = false; ///< Otsu on a constant score map: empty mask
};

inline BinarizeResult binarize(const Frame &score, const BinarizeMethod &method) {
  if (!score.all_finite()) throw DataError("binarize: non-finite scores");
  BinarizeResult r{Mask(score.width(), score.height()), 0.0, false};
  switch (method.kind) {
  case Threshold::Fixed:
    r.threshold = method.value;
    break;
  case Threshold::Quantile: {
    if (!(method.value >= 0.0 && method.value <= 1.0)) throw ConfigError("quantile must lie in [0, 1]");
    std::vector<double> sorted(score.values());
    std::sort(sorted.begin(), sorted.end());
    // Leave the top (1 - q) fraction above the threshold.
    const auto below = static_cast<std::size_t>(std::ceil(method.value * static_cast<double>(sorted.size()) - 1e-9));
    r.threshold = below == 0 ? -std::numeric_limits<double>::infinity() : sorted[below - 1];
    break;
  }
  case Threshold::Otsu: {
    const auto [mn, mx] = std::minmax_element(score.values().begin(), score.values().end());
    if (!(*mx > *mn)) {
      r.degenerate = true;
      r.threshold = *mx;
      return r;
    }
    const OtsuResult o = otsu(score);
    r.threshold = o.threshold;
    for (std::size_t i = 0; i < score.size(); ++i) r.mask.set(i, o.bin_of(score[i]) > o.bin);
    return r;
  }
  }
  for (std::size_t i = 0; i < score.size(); ++i) r.mask.set(i, score[i] > r.threshold);
  return r;
}

struct SegmentationResult {
  Mask mask;
  std::vector<std::int32_t> labels; ///< 0 = background, 1..cell_count by first raster occurrence
  int cell_count = 0;
  std::vector<std::size_t> areas; ///< areas[l - 1] is the pixel count of label l

  std::size_t total_area() const {
    std::size_t s = 0;
    for (auto a : areas) s += a;
    return s;
  }
};

/// 8-connected labeling; components smaller than min_area are dropped from mask and labels.
inline SegmentationResult connected_components(const Mask &mask, std::size_t min_area) {
  const int W = mask.width(), H = mask.height();
  std::vector<std::int32_t> raw(mask.size(), 0);
  std::vector<std::size_t> raw_area;
  std::vector<std::size_t> stack;
  std::int32_t next = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || raw[start] != 0) continue;
    raw[start] = ++next;
    std::size_t area = 0;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++area;
      const int x = static_cast<int>(i % W), y = static_cast<int>(i / W);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * W + nx;
          if (mask[j] && raw[j] == 0) {
            raw[j] = next;
            stack.push_back(j);
          }
        }
    }
    raw_area.push_back(area);
  }

  std::vector<std::int32_t> remap(raw_area.size() + 1, 0);
  SegmentationResult r{Mask(W, H), std::vector<std::int32_t>(mask.size(), 0), 0, {}};
  for (std::size_t l = 0; l < raw_area.size(); ++l)
    if (raw_area[l] >= min_area) {
      remap[l + 1] = ++r.cell_count;
      r.areas.push_back(raw_area[l]);
    }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    r.labels[i] = remap[static_cast<std::size_t>(raw[i])];
    r.mask.set(i, r.labels[i] != 0);
  }
  return r;
}

} // namespace pcseg
