#pragma once

#include "franson/coincidence.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace franson {

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd values;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0; ///< sqrt of the weighted sum of squared residuals
  std::size_t dof = 0;
  int iterations = 0;
  bool converged = false;

  double value(const std::string &name) const;
  double error(const std::string &name) const;
  double reduced_chi2() const;
};

/// y = f(x; p)
using ScalarModel = std::function<double(double x, std::span<const double> p)>;

struct Bounds {
  std::vector<double> lower; ///< empty means unbounded
  std::vector<double> upper;
};

struct NllsOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;
  /// Multiply the covariance by the reduced chi^2 (use when weights are only
  /// relative, not inverse variances).
  bool scale_covariance = false;
  /// Central-difference step is cbrt(eps) * max(|p_j|, step_floor).
  double step_floor = 1.0;
};

/// Central-difference Jacobian d f(x_i) / d p_j, rows = points.
Eigen::MatrixXd numeric_jacobian(const ScalarModel &model, std::span<const double> x,
                                 std::span<const double> p, double step_scale = 1.0,
                                 double step_floor = 1.0);

/// Levenberg-Marquardt minimization of sum_i w_i (y_i - f(x_i; p))^2 with
/// Marquardt diagonal scaling and box bounds enforced by projection. A failure
/// to solve the damped normal equations yields converged == false.
FitResult nlls_fit(const ScalarModel &model, std::span<const double> x, std::span<const double> y,
                   std::span<const double> weights, std::span<const double> p0,
                   std::vector<std::string> names, const Bounds &bounds = {},
                   const NllsOptions &options = {});

/// sinc^2 temperature response; parameters t_peak, fwhm, p_max.
FitResult fit_shg(std::span<const double> temps_c, std::span<const double> powers_mw);

struct HistogramFitOptions {
  /// Independent widths sigma_sl, sigma_ls, sigma_central instead of one sigma.
  bool per_peak_sigma = false;
};

/// Three Gaussians at -delta_t, 0, +delta_t over a flat floor, integrated over
/// each bin. Parameters h_sl, h_ls, h_central, sigma, h_acc, delta_t; heights
/// are peak counts per bin of the underlying density. Poisson weights.
FitResult fit_histogram_triplet(const CoincidenceHistogram &hist, double delta_t_guess_ps,
                                const HistogramFitOptions &options = {});

struct FringeFitOptions {
  bool fit_alpha = true;
  double alpha = 1.0; ///< used as-is when fit_alpha is false
};

/// C(phi) = B [1 + V cos(alpha phi + phi0)]; parameters b, v, alpha, phi0.
FitResult fit_fringe(std::span<const double> phases, std::span<const double> counts,
                     std::span<const double> errors, const FringeFitOptions &options = {});

/// Ordinary least squares on (log10 x, log10 y); parameters log_prefactor, slope.
FitResult fit_powerlaw(std::span<const double> x, std::span<const double> y);

} // namespace franson
