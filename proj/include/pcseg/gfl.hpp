#pragma once

// Generalized fused lasso on the 4-connected pixel grid:
//
//   ||e||_gfl = ||e||_1 + gamma * sum_{(p,q) in N} w_pq |e_p - e_q|
//   w_pq      = exp(-(I_p - I_q)^2 / (2 sigma^2))
//
// and its proximal operator
//
//   prox(v) = argmin_e 1/2 ||e - v||^2 + tau * ||e||_gfl.
//
// The prox is computed as soft_threshold(prox_TV(v), tau): the l1 prox commutes
// with the weighted-TV prox on any graph, because soft thresholding is monotone
// and so preserves the sign pattern of every edge difference that the TV dual
// certificate depends on. prox_TV is solved by accelerated projected gradient
// (FISTA) on its box-constrained dual with step 1/L, L = 2 * max vertex degree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pcseg/core.hpp"
#include "pcseg/error.hpp"

namespace pcseg {

/// Edge weights of one frame. horizontal[y*(width-1)+x] joins (x,y)-(x+1,y);
/// vertical[y*width+x] joins (x,y)-(x,y+1). Each undirected edge is stored once.
struct EdgeWeights {
  int width = 0;
  int height = 0;
  std::vector<double> horizontal;
  std::vector<double> vertical;
  double sigma = 1.0;

  std::size_t edge_count() const { return horizontal.size() + vertical.size(); }
};

struct GflParams {
  double gamma = 0.5;  ///< gamma: balance between sparsity and structure
  double sigma = 0.0;  ///< sigma of the edge weights; 0 selects the per-frame median heuristic
  int inner_max_iters = 200;
  double inner_tol = 1e-6; ///< duality gap of the inner solve, relative to its primal objective

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gfl.gamma must be >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("gfl.sigma must be > 0 (or 0 for automatic)");
    if (inner_max_iters < 1) throw ConfigError("gfl.inner_max_iters must be >= 1");
    if (!(inner_tol > 0.0)) throw ConfigError("gfl.inner_tol must be > 0");
  }
};

inline EdgeWeights uniform_weights(int width, int height, double value = 1.0) {
  EdgeWeights w;
  w.width = width;
  w.height = height;
  w.horizontal.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width - 1), value);
  w.vertical.assign(static_cast<std::size_t>(height - 1) * static_cast<std::size_t>(width), value);
  w.sigma = std::numeric_limits<double>::infinity();
  return w;
}

/// Median absolute neighbor difference over all 4-connected edges, floored at 1e-3.
inline double default_sigma(std::span<const double> img, int width, int height) {
  std::vector<double> diffs;
  diffs.reserve(2 * img.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width) diffs.push_back(std::abs(img[i + 1] - img[i]));
      if (y + 1 < height) diffs.push_back(std::abs(img[i + width] - img[i]));
    }
  if (diffs.empty()) return 1e-3;
  const auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
  std::nth_element(diffs.begin(), mid, diffs.end());
  double med = *mid;
  if (diffs.size() % 2 == 0) med = 0.5 * (med + *std::max_element(diffs.begin(), mid));
  return std::max(med, 1e-3);
}

inline EdgeWeights neighbor_weights(std::span<const double> img, int width, int height, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive, got " + std::to_string(sigma));
  if (img.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw DataError("neighbor_weights: image size does not match dimensions");
  EdgeWeights w;
  w.width = width;
  w.height = height;
  w.sigma = sigma;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  w.horizontal.resize(static_cast<std::size_t>(height) * static_cast<std::size_t>(width - 1));
  w.vertical.resize(static_cast<std::size_t>(height - 1) * static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x + 1 < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const double d = img[i + 1] - img[i];
      w.horizontal[static_cast<std::size_t>(y) * (width - 1) + x] = std::exp(-d * d * inv);
    }
  for (int y = 0; y + 1 < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const double d = img[i + width] - img[i];
      w.vertical[i] = std::exp(-d * d * inv);
    }
  return w;
}

inline EdgeWeights neighbor_weights(const Frame &frame, double sigma) {
  return neighbor_weights(frame.data(), frame.width(), frame.height(), sigma);
}

namespace detail {
inline void check_shape(std::span<const double> e, const EdgeWeights &w) {
  if (e.size() != static_cast<std::size_t>(w.width) * static_cast<std::size_t>(w.height))
    throw DataError("dimension mismatch between frame (" + std::to_string(e.size()) + " px) and edge weights (" +
                    std::to_string(w.width) + "x" + std::to_string(w.height) + ")");
}
} // namespace detail

inline double gfl_norm(std::span<const double> e, const EdgeWeights &w, double gamma) {
  detail::check_shape(e, w);
  double l1 = 0.0;
  for (double v : e) l1 += std::abs(v);
  double tv = 0.0;
  const int W = w.width, H = w.height;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x + 1 < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      tv += w.horizontal[static_cast<std::size_t>(y) * (W - 1) + x] * std::abs(e[i + 1] - e[i]);
    }
  for (int y = 0; y + 1 < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      tv += w.vertical[i] * std::abs(e[i + W] - e[i]);
    }
  return l1 + gamma * tv;
}

inline double gfl_norm(const Frame &e, const EdgeWeights &w, double gamma) { return gfl_norm(e.data(), w, gamma); }

/// 1/2 ||e - v||^2 + tau * ||e||_gfl
inline double gfl_objective(std::span<const double> v, std::span<const double> e, double tau, double gamma,
                            const EdgeWeights &w) {
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sq += (e[i] - v[i]) * (e[i] - v[i]);
  return 0.5 * sq + tau * gfl_norm(e, w, gamma);
}

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Dual variables of the TV subproblem, kept between calls for warm starts.
struct GflDual {
  std::vector<double> horizontal;
  std::vector<double> vertical;
};

struct ProxResult {
  std::vector<double> value;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true; ///< false when inner_max_iters ran out first; value is still the best iterate
};

inline ProxResult gfl_prox(std::span<const double> v, double tau, double gamma, const EdgeWeights &w,
                           int max_iters, double tol, GflDual *warm = nullptr) {
  detail::check_shape(v, w);
  if (!(tau > 0.0)) throw DataError("gfl_prox: tau must be positive");
  if (!(gamma >= 0.0)) throw DataError("gfl_prox: gamma must be nonnegative");
  const int W = w.width, H = w.height;
  const std::size_t n = v.size();
  const std::size_t nh = w.horizontal.size(), nv = w.vertical.size();

  ProxResult out;
  out.value.resize(n);

  std::vector<double> bh(nh), bv(nv);
  bool any_edge = false;
  for (std::size_t i = 0; i < nh; ++i) any_edge |= (bh[i] = tau * gamma * w.horizontal[i]) > 0.0;
  for (std::size_t i = 0; i < nv; ++i) any_edge |= (bv[i] = tau * gamma * w.vertical[i]) > 0.0;

  std::vector<double> x(v.begin(), v.end());
  if (any_edge) {
    std::vector<double> zh(nh, 0.0), zv(nv, 0.0);
    if (warm && warm->horizontal.size() == nh && warm->vertical.size() == nv) {
      for (std::size_t i = 0; i < nh; ++i) zh[i] = std::clamp(warm->horizontal[i], -bh[i], bh[i]);
      for (std::size_t i = 0; i < nv; ++i) zv[i] = std::clamp(warm->vertical[i], -bv[i], bv[i]);
    }
    std::vector<double> yh = zh, yv = zv;
    const int degree = (W > 1 ? 2 : 0) + (H > 1 ? 2 : 0);
    const double step = 1.0 / (2.0 * degree);

    // x = v - D^T z, with (D e) on edge (p, q) = e_q - e_p; one gather per pixel.
    auto primal = [&](const std::vector<double> &ph, const std::vector<double> &pv) {
      for (int yy = 0; yy < H; ++yy) {
        const std::size_t row = static_cast<std::size_t>(yy) * W;
        const double *hrow = W > 1 ? ph.data() + static_cast<std::size_t>(yy) * (W - 1) : nullptr;
        const double *vdown = yy + 1 < H ? pv.data() + row : nullptr;
        const double *vup = yy > 0 ? pv.data() + row - W : nullptr;
        for (int xx = 0; xx < W; ++xx) {
          double s = v[row + xx];
          if (xx + 1 < W) s += hrow[xx];
          if (xx > 0) s -= hrow[xx - 1];
          if (vdown) s += vdown[xx];
          if (vup) s -= vup[xx];
          x[row + xx] = s;
        }
      }
    };
    // Duality gap of the TV subproblem at x = v - D^T z:
    // [1/2 ||x - v||^2 + sum b_e |(D x)_e|] - [1/2 ||v||^2 - 1/2 ||x||^2].
    double half_v2 = 0.0;
    for (double vi : v) half_v2 += 0.5 * vi * vi;
    auto gap = [&](double &primal_obj) {
      double fit = 0.0, half_x2 = 0.0, tv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        fit += 0.5 * (x[i] - v[i]) * (x[i] - v[i]);
        half_x2 += 0.5 * x[i] * x[i];
      }
      for (int yy = 0; yy < H; ++yy)
        for (int xx = 0; xx + 1 < W; ++xx) {
          const std::size_t i = static_cast<std::size_t>(yy) * W + xx;
          tv += bh[static_cast<std::size_t>(yy) * (W - 1) + xx] * std::abs(x[i + 1] - x[i]);
        }
      for (std::size_t i = 0; i + W < n; ++i) tv += bv[i] * std::abs(x[i + W] - x[i]);
      primal_obj = fit + tv;
      return primal_obj - (half_v2 - half_x2);
    };
    // Projected gradient step from y into z, then the momentum extrapolation into y.
    auto advance = [&](double &y, double &z, double grad, double bound, double mom) {
      const double nz = std::min(std::max(y + step * grad, -bound), bound);
      y = nz + mom * (nz - z);
      z = nz;
    };

    constexpr int kGapInterval = 10;
    double t = 1.0;
    out.converged = false;
    int it = 0;
    while (it < max_iters) {
      ++it;
      primal(yh, yv);
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double mom = (t - 1.0) / tn;
      for (int yy = 0; yy < H; ++yy) {
        const double *xr = x.data() + static_cast<std::size_t>(yy) * W;
        const std::size_t e0 = static_cast<std::size_t>(yy) * (W - 1);
        for (int xx = 0; xx + 1 < W; ++xx)
          advance(yh[e0 + xx], zh[e0 + xx], xr[xx + 1] - xr[xx], bh[e0 + xx], mom);
      }
      for (std::size_t i = 0; i < nv; ++i) advance(yv[i], zv[i], x[i + W] - x[i], bv[i], mom);
      t = tn;

      if (it % kGapInterval != 0 && it < max_iters) continue;
      primal(zh, zv);
      double primal_obj = 0.0;
      if (gap(primal_obj) <= tol * std::max(primal_obj, std::numeric_limits<double>::min())) {
        out.converged = true;
        break;
      }
    }
    primal(zh, zv);
    out.iterations = it;
    if (warm) {
      warm->horizontal = std::move(zh);
      warm->vertical = std::move(zv);
    }
  }

  for (std::size_t i = 0; i < n; ++i) out.value[i] = soft_threshold(x[i], tau);
  out.objective = gfl_objective(v, out.value, tau, gamma, w);

  // Guarantee the result is no worse than either trivial candidate.
  const std::vector<double> zero(n, 0.0);
  const double obj_zero = gfl_objective(v, zero, tau, gamma, w);
  const double obj_v = gfl_objective(v, v, tau, gamma, w);
  if (obj_zero < out.objective) {
    out.value = zero;
    out.objective = obj_zero;
  }
  if (obj_v < out.objective) {
    out.value.assign(v.begin(), v.end());
    out.objective = obj_v;
  }
  return out;
}

inline Frame gfl_prox(const Frame &v, double tau, double gamma, const EdgeWeights &w, int max_iters = 200,
                      double tol = 1e-6) {
  auto r = gfl_prox(v.data(), tau, gamma, w, max_iters, tol);
  return Frame(v.width(), v.height(), std::move(r.value));
}

} // namespace pcseg
