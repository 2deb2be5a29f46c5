#pragma once

// Diffraction kernels of the phase contrast imaging model.
//
//   PSF(theta) = sin(theta) delta(r) + (zeta_p cos(theta) - sin(theta)) airy(r)
//
// airy(r) is the obscured (annular) Airy profile
//
//   A(r) = R J1(2 pi R r) / r - (R - W) J1(2 pi (R - W) r) / r,   A(0) = pi (R^2 - (R - W)^2),
//
// sampled on a K x K grid and scaled to unit L1 norm. The annulus passes no DC,
// so its tap sum is a truncation artifact near zero and is not used for scaling.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "pcseg/bessel.hpp"
#include "pcseg/core.hpp"
#include "pcseg/error.hpp"
#include "pcseg/fft.hpp"

namespace pcseg {

/// Odd-sized square kernel, row-major, centered at ((K-1)/2, (K-1)/2).
struct Kernel {
  int size = 1;
  std::vector<double> taps{1.0};

  int half() const { return (size - 1) / 2; }
  /// Tap at offset (dx, dy) from the center.
  double at(int dx, int dy) const { return taps[static_cast<std::size_t>(dy + half()) * size + (dx + half())]; }
  double &at(int dx, int dy) { return taps[static_cast<std::size_t>(dy + half()) * size + (dx + half())]; }
  double sum() const {
    double s = 0.0;
    for (double t : taps) s += t;
    return s;
  }
};

inline Kernel make_kernel(int size, std::vector<double> taps) {
  if (size < 1 || size % 2 == 0) throw DataError("kernel size must be odd and positive, got " + std::to_string(size));
  if (taps.size() != static_cast<std::size_t>(size) * size) throw DataError("kernel tap count does not match size");
  return Kernel{size, std::move(taps)};
}

inline Kernel impulse(int size) {
  Kernel k = make_kernel(size, std::vector<double>(static_cast<std::size_t>(size) * size, 0.0));
  k.at(0, 0) = 1.0;
  return k;
}

struct OpticsParams {
  int m_phases = 8;               ///< M, number of phase retardations in the bank
  double zeta_p = 0.8;            ///< zeta_p, amplitude attenuation of the phase ring
  double airy_outer_radius = 0.25; ///< R, cycles/pixel
  double airy_ring_width = 0.1;   ///< W, 0 < W < R
  int kernel_size = 17;           ///< K, odd
  double inv_reg = 0.1;           ///< Tikhonov regularizer of the inverse filters

  void validate() const {
    if (m_phases < 1) throw ConfigError("optics.m_phases must be >= 1");
    if (!(zeta_p > 0.0 && zeta_p <= 1.0)) throw ConfigError("optics.zeta_p must lie in (0, 1]");
    if (!(airy_outer_radius > 0.0)) throw ConfigError("optics.airy_outer_radius must be > 0");
    if (!(airy_ring_width > 0.0 && airy_ring_width < airy_outer_radius))
      throw ConfigError("optics.airy_ring_width must satisfy 0 < W < R");
    if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("optics.kernel_size must be odd and positive");
    if (!(inv_reg > 0.0)) throw ConfigError("optics.inv_reg must be > 0");
  }
};

/// Annular Airy amplitude at radius r (pixels).
inline double annular_airy_profile(double r, double outer, double width) {
  const double inner = outer - width;
  if (r == 0.0) return std::numbers::pi * (outer * outer - inner * inner);
  const double two_pi_r = 2.0 * std::numbers::pi * r;
  return (outer * bessel_j1(two_pi_r * outer) - inner * bessel_j1(two_pi_r * inner)) / r;
}

inline Kernel obscured_airy(const OpticsParams &params) {
  params.validate();
  const int K = params.kernel_size;
  Kernel k = make_kernel(K, std::vector<double>(static_cast<std::size_t>(K) * K, 0.0));
  const int h = k.half();
  double l1 = 0.0;
  for (int dy = -h; dy <= h; ++dy)
    for (int dx = -h; dx <= h; ++dx) {
      const double v =
          annular_airy_profile(std::sqrt(static_cast<double>(dx * dx + dy * dy)), params.airy_outer_radius,
                               params.airy_ring_width);
      k.at(dx, dy) = v;
      l1 += std::abs(v);
    }
  for (double &t : k.taps) t /= l1;
  return k;
}

inline Kernel psf(double theta, const Kernel &airy, double zeta_p) {
  Kernel k = airy;
  const double s = std::sin(theta);
  const double c = zeta_p * std::cos(theta) - s;
  for (double &t : k.taps) t *= c;
  k.at(0, 0) += s;
  return k;
}

struct KernelBank {
  std::vector<double> phases;
  std::vector<Kernel> kernels;
  std::size_t size() const { return kernels.size(); }
};

/// theta_m = 2 pi (m - 1) / M for m = 1..M.
inline std::vector<double> bank_phases(int m_phases) {
  std::vector<double> phases(static_cast<std::size_t>(m_phases));
  for (int m = 0; m < m_phases; ++m) phases[static_cast<std::size_t>(m)] = 2.0 * std::numbers::pi * m / m_phases;
  return phases;
}

inline KernelBank psf_bank(const OpticsParams &params) {
  params.validate();
  const Kernel airy = obscured_airy(params);
  KernelBank bank;
  bank.phases = bank_phases(params.m_phases);
  for (double theta : bank.phases) bank.kernels.push_back(psf(theta, airy, params.zeta_p));
  return bank;
}

/// Spectrum on a padded rows x cols grid, applied with reflective padding of `pad` pixels per side.
struct FrequencyFilter {
  int rows = 0;
  int cols = 0;
  int pad = 0;
  std::vector<Complex> response;
};

/// DFT of the kernel zero-padded to rows x cols with its center moved to the origin.
inline std::vector<Complex> kernel_spectrum(const Kernel &k, int rows, int cols) {
  if (rows < k.size || cols < k.size)
    throw DataError("padded grid " + std::to_string(rows) + "x" + std::to_string(cols) + " is smaller than the kernel");
  std::vector<Complex> grid(static_cast<std::size_t>(rows) * cols, Complex(0.0, 0.0));
  const int h = k.half();
  for (int dy = -h; dy <= h; ++dy)
    for (int dx = -h; dx <= h; ++dx) {
      const int r = (dy % rows + rows) % rows;
      const int c = (dx % cols + cols) % cols;
      grid[static_cast<std::size_t>(r) * cols + c] += k.at(dx, dy);
    }
  fft2(grid, rows, cols);
  return grid;
}

inline FrequencyFilter forward_filter(const Kernel &k, int rows, int cols) {
  return FrequencyFilter{rows, cols, k.half(), kernel_spectrum(k, rows, cols)};
}

/// conj(F) / (|F|^2 + eps_inv): Tikhonov-regularized 1/F.
inline FrequencyFilter inverse_filter(const Kernel &k, int rows, int cols, double eps_inv) {
  if (!(eps_inv > 0.0)) throw DataError("inverse_filter: eps_inv must be positive");
  FrequencyFilter f = forward_filter(k, rows, cols);
  for (auto &z : f.response) z = std::conj(z) / (std::norm(z) + eps_inv);
  return f;
}

/// Padded grid dimensions used when filtering a width x height image with a kernel of the given size.
struct PaddedDims {
  int rows;
  int cols;
};
inline PaddedDims padded_dims(int width, int height, int kernel_size) {
  const int h = (kernel_size - 1) / 2;
  return {height + 2 * h, width + 2 * h};
}

inline FrequencyFilter inverse_filter_for(const Kernel &k, int width, int height, double eps_inv) {
  const auto d = padded_dims(width, height, k.size);
  return inverse_filter(k, d.rows, d.cols, eps_inv);
}

/// Half-sample symmetric mirror index: -1 -> 0, -2 -> 1, n -> n-1.
inline int mirror_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline Frame pad_reflect(const Frame &img, int pad) {
  const int W = img.width(), H = img.height();
  Frame out(W + 2 * pad, H + 2 * pad);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out(x, y) = img(mirror_index(x - pad, W), mirror_index(y - pad, H));
  return out;
}

namespace detail {
inline std::vector<Complex> padded_spectrum(const Frame &img, int pad) {
  const Frame padded = pad_reflect(img, pad);
  std::vector<Complex> spec(padded.size());
  for (std::size_t i = 0; i < padded.size(); ++i) spec[i] = Complex(padded[i], 0.0);
  fft2(spec, padded.height(), padded.width());
  return spec;
}

inline Frame apply_spectrum(const std::vector<Complex> &image_spec, const FrequencyFilter &filt, int width,
                            int height) {
  std::vector<Complex> prod(image_spec.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = image_spec[i] * filt.response[i];
  fft2(prod, filt.rows, filt.cols, true);
  Frame out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out(x, y) = prod[static_cast<std::size_t>(y + filt.pad) * filt.cols + (x + filt.pad)].real();
  return out;
}

inline void check_filter(const Frame &img, const FrequencyFilter &f) {
  if (f.rows != img.height() + 2 * f.pad || f.cols != img.width() + 2 * f.pad)
    throw DataError("dimension mismatch: filter grid " + std::to_string(f.rows) + "x" + std::to_string(f.cols) +
                    " does not fit a " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " image with padding " + std::to_string(f.pad));
}
} // namespace detail

/// Circular convolution on the reflectively padded grid, cropped to the input size.
inline Frame convolve_freq(const Frame &img, const FrequencyFilter &filt) {
  detail::check_filter(img, filt);
  return detail::apply_spectrum(detail::padded_spectrum(img, filt.pad), filt, img.width(), img.height());
}

inline Frame convolve_freq(const Frame &img, const Kernel &k) {
  const auto d = padded_dims(img.width(), img.height(), k.size);
  return convolve_freq(img, forward_filter(k, d.rows, d.cols));
}

/// Applies several filters sharing one padded grid; the image spectrum is computed once.
inline std::vector<Frame> convolve_freq(const Frame &img, const std::vector<FrequencyFilter> &filters) {
  std::vector<Frame> out;
  if (filters.empty()) return out;
  for (const auto &f : filters) {
    detail::check_filter(img, f);
    if (f.pad != filters.front().pad) throw DataError("filters in one bank must share padding");
  }
  const auto spec = detail::padded_spectrum(img, filters.front().pad);
  out.reserve(filters.size());
  for (const auto &f : filters) out.push_back(detail::apply_spectrum(spec, f, img.width(), img.height()));
  return out;
}

/// Spatial taps of the inverse filter computed on a size x size grid, centered.
inline Kernel inverse_kernel(const Kernel &k, int size, double eps_inv) {
  if (size < k.size || size % 2 == 0) throw DataError("inverse kernel size must be odd and >= kernel size");
  FrequencyFilter f = inverse_filter(k, size, size, eps_inv);
  fft2(f.response, size, size, true);
  Kernel out = make_kernel(size, std::vector<double>(static_cast<std::size_t>(size) * size, 0.0));
  const int h = out.half();
  for (int dy = -h; dy <= h; ++dy)
    for (int dx = -h; dx <= h; ++dx)
      out.at(dx, dy) = f.response[static_cast<std::size_t>((dy + size) % size) * size + (dx + size) % size].real();
  return out;
}

} // namespace pcseg
