#pragma once

// stack -> decompose -> per-frame foreground -> restore -> combine -> binarize -> label

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pcseg/config.hpp"
#include "pcseg/core.hpp"
#include "pcseg/io.hpp"
#include "pcseg/lowrank.hpp"
#include "pcseg/optics.hpp"
#include "pcseg/parallel.hpp"
#include "pcseg/segment.hpp"

namespace pcseg {

/// Raised with the failing stage prefixed to the message; wraps the original category.
template <typename Base>
[[noreturn]] void rethrow_with_stage(const std::string &stage, const Base &e) {
  throw Base("stage '" + stage + "': " + e.what());
}

template <typename F>
auto run_stage(const std::string &stage, F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const DataError &e) {
    rethrow_with_stage(stage, e);
  } catch (const ConfigError &e) {
    rethrow_with_stage(stage, e);
  } catch (const NumericalError &e) {
    rethrow_with_stage(stage, e);
  }
}

struct FrameSegmentation {
  SegmentationResult result;
  double threshold = 0.0;
  bool degenerate = false;
  Frame score;
  ResponseStack responses;
};

struct StageTimings {
  double decompose = 0.0;
  double restore = 0.0;
  double segment = 0.0;
};

struct PipelineOutput {
  Decomposition decomposition;
  std::vector<FrameSegmentation> frames;
  StageTimings timings;
};

inline std::string phase_dir_name(std::size_t m) { return "phase_" + std::to_string(m + 1); }

/// Restores, fuses, binarizes and labels each foreground frame independently.
inline std::vector<FrameSegmentation> segment_foreground(const ImageSequence &foreground, const PipelineConfig &cfg,
                                                         int threads = 1, StageTimings *timings = nullptr) {
  cfg.validate();
  if (foreground.empty()) return {};
  using clock = std::chrono::steady_clock;
  const KernelBank bank = psf_bank(cfg.optics);
  const InverseBank inverse = make_inverse_bank(bank, foreground.width(), foreground.height(), cfg.optics.inv_reg);
  std::vector<FrameSegmentation> out(foreground.size());

  auto t0 = clock::now();
  run_stage("restore", [&] {
    parallel_for(foreground.size(), threads, [&](std::size_t k) { out[k].responses = restore(foreground[k], inverse); });
  });
  auto t1 = clock::now();
  run_stage("segment", [&] {
    parallel_for(foreground.size(), threads, [&](std::size_t k) {
      out[k].score = combine_responses(out[k].responses, cfg.fusion);
      BinarizeResult b = binarize(out[k].score, cfg.binarize);
      out[k].threshold = b.threshold;
      out[k].degenerate = b.degenerate;
      out[k].result = connected_components(b.mask, cfg.min_area);
    });
  });
  auto t2 = clock::now();
  if (timings) {
    timings->restore = std::chrono::duration<double>(t1 - t0).count();
    timings->segment = std::chrono::duration<double>(t2 - t1).count();
  }
  return out;
}

/// masks/frame_%04d.pgm, restored/phase_%d/frame_%04d.pgm, diag.csv (frame,threshold,cell_count,total_area).
inline void write_segmentation(const std::vector<FrameSegmentation> &frames, const PipelineConfig &cfg,
                               const std::filesystem::path &out) {
  namespace fs = std::filesystem;
  fs::create_directories(out / "masks");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    save_mask(frames[k].result.mask, out / "masks" / frame_name(k));
    const auto &phis = frames[k].responses.frames;
    for (std::size_t m = 0; m < phis.size(); ++m)
      save_frame(phis[m], out / "restored" / phase_dir_name(m) / frame_name(k), cfg.bit_depth);
  }
  std::ofstream diag(out / "diag.csv", std::ios::trunc);
  if (!diag) throw DataError("cannot write " + (out / "diag.csv").string());
  diag.precision(10);
  diag << "frame,threshold,cell_count,total_area\n";
  for (std::size_t k = 0; k < frames.size(); ++k)
    diag << k << ',' << frames[k].threshold << ',' << frames[k].result.cell_count << ','
         << frames[k].result.total_area() << '\n';
}

inline PipelineOutput run_pipeline(const ImageSequence &seq, const PipelineConfig &cfg,
                                   const std::optional<std::filesystem::path> &out_dir = std::nullopt,
                                   int threads = 1) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  PipelineOutput out;
  const auto t0 = clock::now();
  out.decomposition = run_stage("decompose", [&] {
    require_decomposable(seq);
    return decompose(stack(seq), cfg.alm, threads);
  });
  out.timings.decompose = std::chrono::duration<double>(clock::now() - t0).count();
  const ImageSequence foreground = unstack(out.decomposition.foreground);
  out.frames = segment_foreground(foreground, cfg, threads, &out.timings);
  if (out_dir) {
    run_stage("write", [&] {
      write_segmentation(out.frames, cfg, *out_dir);
      write_decomposition_csv(*out_dir / "decompose.csv", out.decomposition);
    });
  }
  return out;
}

struct BenchReport {
  std::vector<double> decompose, restore, segment; ///< one sample per repetition, seconds
  static double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
};

inline BenchReport bench(const ImageSequence &seq, const PipelineConfig &cfg, int repetitions, int threads = 1) {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  BenchReport r;
  for (int i = 0; i < repetitions; ++i) {
    const PipelineOutput o = run_pipeline(seq, cfg, std::nullopt, threads);
    r.decompose.push_back(o.timings.decompose);
    r.restore.push_back(o.timings.restore);
    r.segment.push_back(o.timings.segment);
  }
  return r;
}

/// Columns stage,sample,seconds; sample is the repetition index or "median".
inline void write_bench_csv(const std::filesystem::path &path, const BenchReport &r) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(6);
  out << "stage,sample,seconds\n";
  auto rows = [&](const char *stage, const std::vector<double> &v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << stage << ',' << i << ',' << v[i] << '\n';
    out << stage << ",median," << BenchReport::median(v) << '\n';
  };
  rows("decompose", r.decompose);
  rows("restore", r.restore);
  rows("segment", r.segment);
}

} // namespace pcseg
