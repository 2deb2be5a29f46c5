#pragma once

// Pixel accuracy ACC = (|TP| + |N| - |FP|) / (|P| + |N|) and the Otsu baseline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pcseg/core.hpp"
#include "pcseg/error.hpp"

namespace pcseg {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t positives() const { return tp + fn; }
  std::uint64_t negatives() const { return tn + fp; }
  std::uint64_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion(const Mask &mask, const Mask &truth) {
  if (!mask.same_shape(truth))
    throw DataError("dimension mismatch: mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                    " vs truth " + std::to_string(truth.width()) + "x" + std::to_string(truth.height()));
  ConfusionCounts c;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool m = mask[i], t = truth[i];
    if (m && t) ++c.tp;
    else if (m) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double accuracy(const ConfusionCounts &c) {
  const auto p = c.positives(), n = c.negatives();
  if (p + n == 0) throw DataError("accuracy of an empty image is undefined");
  return (static_cast<double>(c.tp) + static_cast<double>(n) - static_cast<double>(c.fp)) / static_cast<double>(p + n);
}

inline constexpr int kOtsuBins = 256;

struct OtsuResult {
  double threshold = 0.0; ///< upper edge of the last bin of the lower class
  int bin = 0;            ///< pixels in bins <= bin form the lower class
  double lo = 0.0, hi = 0.0;

  int bin_of(double v) const {
    const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * kOtsuBins));
    return std::clamp(b, 0, kOtsuBins - 1);
  }
};

/// Maximizes between-class variance over a 256-bin histogram of [min, max];
/// ties go to the lower threshold. Throws on constant or empty input.
inline OtsuResult otsu(std::span<const double> values) {
  if (values.empty()) throw DataError("otsu: empty image");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  OtsuResult r;
  r.lo = *mn;
  r.hi = *mx;
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) throw DataError("otsu: non-finite values");
  if (!(r.hi > r.lo)) throw DataError("otsu: constant image has no threshold");

  std::vector<double> hist(kOtsuBins, 0.0);
  for (double v : values) hist[static_cast<std::size_t>(r.bin_of(v))] += 1.0;
  const double total = static_cast<double>(values.size());
  double mean_total = 0.0;
  for (int i = 0; i < kOtsuBins; ++i) mean_total += i * hist[static_cast<std::size_t>(i)];
  mean_total /= total;

  double w0 = 0.0, mu0 = 0.0, best = -1.0;
  for (int i = 0; i < kOtsuBins - 1; ++i) {
    w0 += hist[static_cast<std::size_t>(i)] / total;
    mu0 += i * hist[static_cast<std::size_t>(i)] / total;
    const double w1 = 1.0 - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double d = mean_total * w0 - mu0;
    const double between = d * d / (w0 * w1);
    if (between > best) {
      best = between;
      r.bin = i;
    }
  }
  r.threshold = r.lo + (r.hi - r.lo) * (r.bin + 1) / kOtsuBins;
  return r;
}

inline OtsuResult otsu(const Frame &img) { return otsu(img.data()); }

/// Baseline segmentation: pixels above the Otsu split of the raw intensities.
inline Mask otsu_mask(const Frame &img) {
  const OtsuResult r = otsu(img);
  Mask m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m.set(i, r.bin_of(img[i]) > r.bin);
  return m;
}

struct EvalReport {
  std::vector<ConfusionCounts> counts;
  std::vector<double> acc;
  double mean_acc = 0.0;
};

inline EvalReport evaluate(const std::vector<Mask> &masks, const std::vector<Mask> &truths) {
  if (masks.size() != truths.size())
    throw DataError("length mismatch: " + std::to_string(masks.size()) + " masks vs " +
                    std::to_string(truths.size()) + " truth masks");
  if (masks.empty()) throw DataError("evaluate: no frames");
  EvalReport r;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    r.counts.push_back(confusion(masks[k], truths[k]));
    r.acc.push_back(accuracy(r.counts.back()));
  }
  double s = 0.0;
  for (double a : r.acc) s += a;
  r.mean_acc = s / static_cast<double>(r.acc.size());
  return r;
}

/// Columns frame,tp,fp,tn,fn,acc; the last row holds the sequence mean.
inline void write_eval_csv(const std::filesystem::path &path, const EvalReport &r) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "frame,tp,fp,tn,fn,acc\n";
  for (std::size_t k = 0; k < r.counts.size(); ++k) {
    const auto &c = r.counts[k];
    out << k << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << ',' << r.acc[k] << '\n';
  }
  out << "mean,,,,," << r.mean_acc << '\n';
}

} // namespace pcseg
