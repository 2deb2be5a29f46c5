#pragma once

// Low-rank + structured-sparse decomposition  min ||B||_* + lambda ||E||_gfl  s.t. A = B + E,
// solved with augmented Lagrange multipliers:
//
//   B_{t+1} = svt(A - E_t + Y_t / mu_t, 1 / mu_t)
//   E_{t+1} = prox_{(lambda / mu_t) ||.||_gfl}(A - B_{t+1} + Y_t / mu_t)      (column by column)
//   Y_{t+1} = Y_t + mu_t (A - B_{t+1} - E_{t+1})
//   mu_{t+1} = rho * mu_t  if mu_t ||E_{t+1} - E_t||_F / ||A||_F < epsilon, else mu_t
//
// The E step separates exactly over columns: the GFL norm is a sum of per-frame
// terms and the quadratic coupling is elementwise.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pcseg/core.hpp"
#include "pcseg/error.hpp"
#include "pcseg/gfl.hpp"
#include "pcseg/parallel.hpp"

namespace pcseg {

struct AlmParams {
  double lambda = 0.0;     ///< lambda; 0 selects 1/sqrt(max(pixels, frames))
  double mu0 = 0.0;        ///< initial mu; 0 selects 1.25 / sigma_max(A)
  double rho = 1.5;        ///< rho > 1, growth factor of mu
  double epsilon_mu = 1e-3; ///< epsilon of the mu growth test
  double stop_tol = 1e-6;  ///< stop when ||A - B - E||_F / ||A||_F <= stop_tol
  int max_iters = 300;
  GflParams gfl;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("alm.lambda must be > 0 (or 0 for automatic)");
    if (!(mu0 >= 0.0) || !std::isfinite(mu0)) throw ConfigError("alm.mu0 must be > 0 (or 0 for automatic)");
    if (!(rho > 1.0) || !std::isfinite(rho)) throw ConfigError("alm.rho must exceed 1");
    if (!(epsilon_mu > 0.0)) throw ConfigError("alm.epsilon must be > 0");
    if (!(stop_tol > 0.0)) throw ConfigError("alm.stop_tol must be > 0");
    if (max_iters < 1) throw ConfigError("alm.max_iters must be >= 1");
    gfl.validate();
  }
};

struct Decomposition {
  StackedMatrix background;
  StackedMatrix foreground;
  StackedMatrix multiplier;
  int iterations = 0;
  std::vector<double> residual_history; ///< ||A - B_t - E_t||_F / ||A||_F per iteration
  std::vector<double> mu_history;       ///< mu_t used in iteration t
  bool converged = false;
  double lambda = 0.0;
  int inner_nonconverged = 0; ///< prox calls that exhausted inner_max_iters
};

/// Singular value soft-thresholding: U diag(max(s - tau, 0)) V^T.
inline Eigen::MatrixXd svt(const Eigen::MatrixXd &m, double tau) {
  if (!(tau >= 0.0)) throw DataError("svt: tau must be nonnegative");
  if (!m.allFinite()) throw NumericalError("svt: SVD of non-finite matrix");
  if (m.size() == 0) return m;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svt: SVD failed");
  const Eigen::VectorXd &s = svd.singularValues();
  Eigen::Index keep = 0;
  while (keep < s.size() && s[keep] > tau) ++keep;
  if (keep == 0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  const Eigen::VectorXd shrunk = (s.head(keep).array() - tau).matrix();
  return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

inline StackedMatrix svt(const StackedMatrix &m, double tau) { return {svt(m.data, tau), m.width, m.height}; }

inline double spectral_norm(const Eigen::MatrixXd &m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

inline Decomposition decompose(const StackedMatrix &a, const AlmParams &params, int threads = 1) {
  params.validate();
  const Eigen::MatrixXd &A = a.data;
  const Eigen::Index p = A.rows(), n = A.cols();
  if (n < 2) throw DataError("insufficient frames: decomposition needs at least 2, got " + std::to_string(n));
  if (p != static_cast<Eigen::Index>(a.width) * a.height) throw DataError("stacked matrix rows do not match frame size");
  if (!A.allFinite()) throw DataError("decompose: input contains non-finite values");

  Decomposition out;
  out.lambda = params.lambda > 0.0 ? params.lambda : 1.0 / std::sqrt(static_cast<double>(std::max(p, n)));
  auto as_stacked = [&](Eigen::MatrixXd m) { return StackedMatrix{std::move(m), a.width, a.height}; };

  const double norm_a = A.norm();
  if (norm_a == 0.0) {
    out.background = as_stacked(Eigen::MatrixXd::Zero(p, n));
    out.foreground = out.background;
    out.multiplier = out.background;
    out.iterations = 1;
    out.residual_history = {0.0};
    out.mu_history = {params.mu0};
    out.converged = true;
    return out;
  }

  const double sigma_max = spectral_norm(A);
  double mu = params.mu0 > 0.0 ? params.mu0 : 1.25 / sigma_max;
  const double lambda = out.lambda;
  Eigen::MatrixXd Y = A / std::max(sigma_max, A.lpNorm<Eigen::Infinity>() / lambda);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(p, n);
  Eigen::MatrixXd B(p, n), En(p, n);

  // Edge weights come from the observed frames, not from the evolving foreground.
  std::vector<EdgeWeights> weights(static_cast<std::size_t>(n));
  std::vector<GflDual> duals(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t k) {
    std::span<const double> col(A.col(static_cast<Eigen::Index>(k)).data(), static_cast<std::size_t>(p));
    const double sigma = params.gfl.sigma > 0.0 ? params.gfl.sigma : default_sigma(col, a.width, a.height);
    weights[k] = neighbor_weights(col, a.width, a.height, sigma);
  });

  Eigen::MatrixXd bestB, bestE, bestY;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<int> inner_failures(static_cast<std::size_t>(n), 0);

  for (int t = 1; t <= params.max_iters; ++t) {
    const double inv_mu = 1.0 / mu;
    B = svt(A - E + inv_mu * Y, inv_mu);
    const Eigen::MatrixXd V = A - B + inv_mu * Y;
    const double tau = lambda * inv_mu;
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t k) {
      const auto c = static_cast<Eigen::Index>(k);
      std::span<const double> col(V.col(c).data(), static_cast<std::size_t>(p));
      ProxResult r = gfl_prox(col, tau, params.gfl.gamma, weights[k], params.gfl.inner_max_iters,
                              params.gfl.inner_tol, &duals[k]);
      if (!r.converged) ++inner_failures[k];
      En.col(c) = Eigen::Map<const Eigen::VectorXd>(r.value.data(), p);
    });

    Y += mu * (A - B - En);
    const double change = (En - E).norm();
    E.swap(En);
    const double residual = (A - B - E).norm() / norm_a;
    out.residual_history.push_back(residual);
    out.mu_history.push_back(mu);
    out.iterations = t;

    if (residual < best_residual) {
      best_residual = residual;
      bestB = B;
      bestE = E;
      bestY = Y;
    }
    if (residual <= params.stop_tol) {
      out.converged = true;
      break;
    }
    if (mu * change / norm_a < params.epsilon_mu) mu *= params.rho;
  }

  for (int f : inner_failures) out.inner_nonconverged += f;
  if (out.converged) {
    out.background = as_stacked(std::move(B));
    out.foreground = as_stacked(std::move(E));
    out.multiplier = as_stacked(std::move(Y));
  } else {
    out.background = as_stacked(std::move(bestB));
    out.foreground = as_stacked(std::move(bestE));
    out.multiplier = as_stacked(std::move(bestY));
  }
  return out;
}

/// Columns: iteration, relative_residual, mu, converged (final flag, repeated per row).
inline void write_decomposition_csv(const std::filesystem::path &path, const Decomposition &d) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "iteration,relative_residual,mu,converged\n";
  for (std::size_t i = 0; i < d.residual_history.size(); ++i)
    out << (i + 1) << ',' << d.residual_history[i] << ',' << d.mu_history[i] << ','
        << (d.converged ? "true" : "false") << '\n';
}

} // namespace pcseg
