#pragma once

// Forward-model synthetic sequences with known ground truth:
//   observed_k = background_k + phase_map_k * PSF(cell_phase) + noise_k
// Backgrounds are positive combinations of bg_rank smooth basis fields, so the
// stacked background has rank exactly bg_rank. Correlated noise is one fixed
// random field scaled per frame (rank one across the sequence).

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pcseg/core.hpp"
#include "pcseg/error.hpp"
#include "pcseg/io.hpp"
#include "pcseg/optics.hpp"
#include "pcseg/rng.hpp"

namespace pcseg {

struct SynthConfig {
  int width = 64;
  int height = 64;
  int n_frames = 20;
  int bg_rank = 2;
  int cell_count = 6;
  double cell_radius_min = 2.0;
  double cell_radius_max = 3.0;
  double cell_phase = 0.5; ///< phase retardation of every cell; also the phase map value on cell pixels
  double noise_sigma = 0.0;
  bool noise_correlated = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (width < 1 || height < 1) throw ConfigError("synth.width and synth.height must be positive");
    if (n_frames < 1) throw ConfigError("synth.n_frames must be >= 1");
    if (bg_rank < 1) throw ConfigError("synth.bg_rank must be >= 1");
    if (bg_rank > n_frames) throw ConfigError("synth.bg_rank must not exceed synth.n_frames");
    if (cell_count < 0) throw ConfigError("synth.cell_count must be >= 0");
    if (!(cell_radius_min >= 1.0) || !(cell_radius_max >= cell_radius_min))
      throw ConfigError("synth cell radii must satisfy 1 <= cell_radius_min <= cell_radius_max");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synth.noise_sigma must be >= 0");
  }
};

struct SynthDataset {
  ImageSequence sequence;          ///< observed frames
  ImageSequence background_truth;
  ImageSequence foreground_truth;  ///< diffracted cells, signed
  ImageSequence noise;
  std::vector<Mask> masks_truth;
  std::vector<Frame> phase_maps;
  SynthConfig config;
};

namespace detail {
enum Stream : std::uint64_t { kBasis = 1, kCoefficients = 2, kCells = 3, kNoise = 4, kNoiseField = 5 };
}

inline ImageSequence gen_background(const SynthConfig &cfg) {
  cfg.validate();
  const int W = cfg.width, H = cfg.height;
  CounterRng basis_rng(cfg.seed, detail::kBasis);
  std::vector<Frame> basis;
  for (int j = 0; j < cfg.bg_rank; ++j) {
    const double gx = 0.06 * basis_rng.uniform(), gy = 0.06 * basis_rng.uniform();
    const double cx = basis_rng.uniform(0.25, 0.75), cy = basis_rng.uniform(0.25, 0.75);
    const double s = basis_rng.uniform(0.2, 0.35);
    const double amp = basis_rng.uniform(0.25, 0.4);
    Frame f(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double u = W > 1 ? static_cast<double>(x) / (W - 1) : 0.0;
        const double v = H > 1 ? static_cast<double>(y) / (H - 1) : 0.0;
        const double d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
        f(x, y) = 0.08 + gx * u + gy * v + amp * std::exp(-d2 / (2.0 * s * s));
      }
    basis.push_back(std::move(f));
  }
  CounterRng coef_rng(cfg.seed, detail::kCoefficients);
  std::vector<Frame> frames;
  for (int k = 0; k < cfg.n_frames; ++k) {
    Frame f(W, H, 0.0);
    for (int j = 0; j < cfg.bg_rank; ++j) {
      const double c = coef_rng.uniform(0.8, 1.2) / cfg.bg_rank;
      for (std::size_t i = 0; i < f.size(); ++i) f[i] += c * basis[static_cast<std::size_t>(j)][i];
    }
    frames.push_back(std::move(f));
  }
  return ImageSequence(std::move(frames));
}

struct CellLayers {
  std::vector<Mask> masks;
  std::vector<Frame> phase_maps;
  std::vector<std::vector<std::pair<double, double>>> centers; ///< [frame][cell] ellipse center (x, y)
  std::vector<std::vector<std::vector<std::size_t>>> pixels;   ///< [frame][cell] raster indices
};

namespace detail {
struct Cell {
  double cx, cy, a, b, angle, vx, vy;
};

inline std::vector<std::size_t> rasterize(const Cell &c, int W, int H) {
  std::vector<std::size_t> px;
  const double r = std::max(c.a, c.b);
  const double ca = std::cos(c.angle), sa = std::sin(c.angle);
  for (int y = std::max(0, static_cast<int>(std::floor(c.cy - r))); y <= std::min(H - 1, static_cast<int>(std::ceil(c.cy + r))); ++y)
    for (int x = std::max(0, static_cast<int>(std::floor(c.cx - r))); x <= std::min(W - 1, static_cast<int>(std::ceil(c.cx + r))); ++x) {
      const double dx = x - c.cx, dy = y - c.cy;
      const double u = (dx * ca + dy * sa) / c.a, v = (-dx * sa + dy * ca) / c.b;
      if (u * u + v * v <= 1.0) px.push_back(static_cast<std::size_t>(y) * W + x);
    }
  return px;
}

inline bool fits(const std::vector<std::size_t> &px, const std::vector<std::uint8_t> &occupied) {
  for (auto i : px)
    if (occupied[i]) return false;
  return !px.empty();
}
} // namespace detail

/// Non-overlapping ellipses drifting at most 2 px per frame, reflected at the borders.
inline CellLayers gen_cells(const SynthConfig &cfg) {
  cfg.validate();
  const int W = cfg.width, H = cfg.height;
  const double margin = cfg.cell_radius_max + 1.0;
  const double xmin = margin, xmax = W - 1 - margin, ymin = margin, ymax = H - 1 - margin;
  CellLayers out;
  if (cfg.cell_count > 0 && (xmax <= xmin || ymax <= ymin))
    throw DataError("cannot place cells: frame too small for cell_radius_max; use fewer or smaller cells");

  CounterRng rng(cfg.seed, detail::kCells);
  constexpr int kPlaceRetries = 1000, kMoveRetries = 100;
  constexpr double kMaxStep = 2.0;
  std::vector<detail::Cell> cells;
  std::vector<std::vector<std::size_t>> frame_pixels(static_cast<std::size_t>(cfg.cell_count));
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(W) * H, 0);
  auto mark = [&](const std::vector<std::size_t> &px) {
    for (auto i : px) occupied[i] = 1;
  };

  for (int c = 0; c < cfg.cell_count; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlaceRetries && !placed; ++attempt) {
      const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi), speed = rng.uniform(1.0, kMaxStep);
      detail::Cell cell{rng.uniform(xmin, xmax), rng.uniform(ymin, ymax),
                        rng.uniform(cfg.cell_radius_min, cfg.cell_radius_max),
                        rng.uniform(cfg.cell_radius_min, cfg.cell_radius_max), rng.uniform(0.0, std::numbers::pi),
                        speed * std::cos(dir), speed * std::sin(dir)};
      const auto px = detail::rasterize(cell, W, H);
      if (detail::fits(px, occupied)) {
        mark(px);
        frame_pixels[cells.size()] = px;
        cells.push_back(cell);
        placed = true;
      }
    }
    if (!placed)
      throw DataError("cannot place " + std::to_string(cfg.cell_count) +
                      " non-overlapping cells; use fewer or smaller cells");
  }

  auto emit = [&] {
    std::vector<std::pair<double, double>> centers;
    for (const auto &cell : cells) centers.emplace_back(cell.cx, cell.cy);
    out.centers.push_back(std::move(centers));
    out.pixels.push_back(frame_pixels);
    Mask m(W, H);
    Frame phase(W, H, 0.0);
    for (std::size_t i = 0; i < occupied.size(); ++i)
      if (occupied[i]) {
        m.set(i, true);
        phase[i] = cfg.cell_phase;
      }
    out.masks.push_back(std::move(m));
    out.phase_maps.push_back(std::move(phase));
  };
  emit();

  // Every cell keeps its previous pixels reserved until it moves, so staying put always fits.
  for (int k = 1; k < cfg.n_frames; ++k) {
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      auto &cell = cells[ci];
      for (auto i : frame_pixels[ci]) occupied[i] = 0;
      for (int attempt = 0; attempt <= kMoveRetries; ++attempt) {
        if (attempt > 0) {
          const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi), speed = rng.uniform(0.0, kMaxStep);
          cell.vx = speed * std::cos(dir);
          cell.vy = speed * std::sin(dir);
        }
        detail::Cell next = cell;
        next.cx += next.vx;
        next.cy += next.vy;
        if (next.cx < xmin || next.cx > xmax) { next.vx = -next.vx; next.cx = cell.cx + next.vx; }
        if (next.cy < ymin || next.cy > ymax) { next.vy = -next.vy; next.cy = cell.cy + next.vy; }
        if (next.cx < xmin || next.cx > xmax || next.cy < ymin || next.cy > ymax) continue;
        const auto px = detail::rasterize(next, W, H);
        if (detail::fits(px, occupied)) {
          frame_pixels[ci] = px;
          cell = next;
          break;
        }
      }
      mark(frame_pixels[ci]);
    }
    emit();
  }
  return out;
}

inline SynthDataset render(const SynthConfig &cfg, const OpticsParams &optics) {
  cfg.validate();
  const int W = cfg.width, H = cfg.height;
  SynthDataset ds;
  ds.config = cfg;
  ds.background_truth = gen_background(cfg);
  CellLayers cells = gen_cells(cfg);

  const Kernel cell_psf = psf(cfg.cell_phase, obscured_airy(optics), optics.zeta_p);
  const auto dims = padded_dims(W, H, cell_psf.size);
  const FrequencyFilter forward = forward_filter(cell_psf, dims.rows, dims.cols);

  std::vector<double> field;
  if (cfg.noise_correlated) {
    CounterRng frng(cfg.seed, detail::kNoiseField);
    field.resize(static_cast<std::size_t>(W) * H);
    for (double &v : field) v = frng.normal();
  }

  std::vector<Frame> fg, noise, observed;
  for (int k = 0; k < cfg.n_frames; ++k) {
    fg.push_back(convolve_freq(cells.phase_maps[static_cast<std::size_t>(k)], forward));
    CounterRng nrng(cfg.seed, (static_cast<std::uint64_t>(detail::kNoise) << 32) | static_cast<std::uint64_t>(k));
    Frame nz(W, H, 0.0);
    if (cfg.noise_sigma > 0.0) {
      if (cfg.noise_correlated) {
        const double scale = cfg.noise_sigma * nrng.normal();
        for (std::size_t i = 0; i < nz.size(); ++i) nz[i] = scale * field[i];
      } else {
        for (std::size_t i = 0; i < nz.size(); ++i) nz[i] = cfg.noise_sigma * nrng.normal();
      }
    }
    const Frame &bg = ds.background_truth[static_cast<std::size_t>(k)];
    Frame obs(W, H);
    for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = bg[i] + fg.back()[i] + nz[i];
    noise.push_back(std::move(nz));
    observed.push_back(std::move(obs));
  }
  ds.foreground_truth = ImageSequence(std::move(fg));
  ds.noise = ImageSequence(std::move(noise));
  ds.sequence = ImageSequence(std::move(observed));
  ds.masks_truth = std::move(cells.masks);
  ds.phase_maps = std::move(cells.phase_maps);
  return ds;
}

/// FNV-1a (64-bit) over the IEEE-754 bytes of every pixel, frames in order.
inline std::string layer_checksum(const ImageSequence &seq) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto &f : seq)
    for (double v : f.data()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline nlohmann::json synth_config_json(const SynthConfig &c) {
  return {{"width", c.width},
          {"height", c.height},
          {"n_frames", c.n_frames},
          {"bg_rank", c.bg_rank},
          {"cell_count", c.cell_count},
          {"cell_radius_min", c.cell_radius_min},
          {"cell_radius_max", c.cell_radius_max},
          {"cell_phase", c.cell_phase},
          {"noise_sigma", c.noise_sigma},
          {"noise_correlated", c.noise_correlated},
          {"seed", c.seed}};
}

namespace detail {
inline void write_raw_layer(const std::filesystem::path &path, const ImageSequence &seq) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto &f : seq)
    out.write(reinterpret_cast<const char *>(f.data().data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
}
} // namespace detail

/// Writes observed/, truth_bg/, truth_fg/, truth_masks/ images, unquantized
/// layers/*.f64 (native-endian float64, frame-major, row-major), and manifest.json.
inline void write_dataset(const SynthDataset &ds, const OpticsParams &optics, const std::filesystem::path &dir,
                          int bit_depth = 16) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "layers");
  save_sequence(ds.sequence, dir / "observed", bit_depth);
  save_sequence(ds.background_truth, dir / "truth_bg", bit_depth);
  save_sequence(ds.foreground_truth, dir / "truth_fg", bit_depth);
  fs::create_directories(dir / "truth_masks");
  for (std::size_t k = 0; k < ds.masks_truth.size(); ++k) save_mask(ds.masks_truth[k], dir / "truth_masks" / frame_name(k));
  detail::write_raw_layer(dir / "layers" / "observed.f64", ds.sequence);
  detail::write_raw_layer(dir / "layers" / "background.f64", ds.background_truth);
  detail::write_raw_layer(dir / "layers" / "foreground.f64", ds.foreground_truth);
  detail::write_raw_layer(dir / "layers" / "noise.f64", ds.noise);

  nlohmann::json manifest;
  manifest["config"] = synth_config_json(ds.config);
  manifest["optics"] = {{"zeta_p", optics.zeta_p},
                        {"airy_outer_radius", optics.airy_outer_radius},
                        {"airy_ring_width", optics.airy_ring_width},
                        {"kernel_size", optics.kernel_size}};
  manifest["prng"] = CounterRng::algorithm;
  manifest["bit_depth"] = bit_depth;
  manifest["layers"] = {
      {"observed", {{"file", "layers/observed.f64"}, {"fnv1a64", layer_checksum(ds.sequence)}}},
      {"background", {{"file", "layers/background.f64"}, {"fnv1a64", layer_checksum(ds.background_truth)}}},
      {"foreground", {{"file", "layers/foreground.f64"}, {"fnv1a64", layer_checksum(ds.foreground_truth)}}},
      {"noise", {{"file", "layers/noise.f64"}, {"fnv1a64", layer_checksum(ds.noise)}}}};
  manifest["layout"] = {{"dtype", "float64"}, {"order", "frame, row, column"},
                        {"shape", {ds.config.n_frames, ds.config.height, ds.config.width}}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

} // namespace pcseg
