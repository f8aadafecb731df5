#include "franson/fitters.hpp"

#include "franson/errors.hpp"
#include "franson/physics_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace franson {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t index_of(const std::vector<std::string> &names, const std::string &name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw InvalidParameter("no fit parameter named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void project(Eigen::VectorXd &p, const Bounds &b) {
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    if (k < b.lower.size())
      p[j] = std::max(p[j], b.lower[k]);
    if (k < b.upper.size())
      p[j] = std::min(p[j], b.upper[k]);
  }
}

double weighted_cost(const ScalarModel &model, std::span<const double> x, std::span<const double> y,
                     std::span<const double> w, std::span<const double> p) {
  double cost = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model(x[i], p);
    cost += w[i] * r * r;
  }
  return cost;
}

std::span<const double> as_span(const Eigen::VectorXd &v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

} // namespace

double FitResult::value(const std::string &name) const {
  return values[static_cast<Eigen::Index>(index_of(names, name))];
}

double FitResult::error(const std::string &name) const {
  const auto j = static_cast<Eigen::Index>(index_of(names, name));
  return std::sqrt(covariance(j, j));
}

double FitResult::reduced_chi2() const {
  return dof > 0 ? residual_norm * residual_norm / static_cast<double>(dof) : kNaN;
}

Eigen::MatrixXd numeric_jacobian(const ScalarModel &model, std::span<const double> x,
                                 std::span<const double> p, double step_scale, double step_floor) {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon()) * step_scale;
  Eigen::MatrixXd J(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(p.size()));
  std::vector<double> hi(p.begin(), p.end()), lo(p.begin(), p.end());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double h = base * std::max(std::abs(p[j]), step_floor);
    hi[j] = p[j] + h;
    lo[j] = p[j] - h;
    const double span = hi[j] - lo[j];
    for (std::size_t i = 0; i < x.size(); ++i)
      J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (model(x[i], hi) - model(x[i], lo)) / span;
    hi[j] = lo[j] = p[j];
  }
  return J;
}

FitResult nlls_fit(const ScalarModel &model, std::span<const double> x, std::span<const double> y,
                   std::span<const double> weights, std::span<const double> p0,
                   std::vector<std::string> names, const Bounds &bounds,
                   const NllsOptions &opt) {
  const std::size_t n = x.size(), m = p0.size();
  if (y.size() != n || weights.size() != n)
    throw InvalidParameter("x, y and weights must have equal length");
  if (n < m || m == 0)
    throw InvalidParameter("need at least as many points as parameters");
  if (names.size() != m)
    throw InvalidParameter("one name per parameter required");
  if (std::any_of(weights.begin(), weights.end(), [](double w) { return !(w > 0.0); }))
    throw InvalidParameter("weights must be positive");

  FitResult fit;
  fit.names = std::move(names);
  fit.dof = n - m;
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(p0.data(), static_cast<Eigen::Index>(m));
  project(p, bounds);
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
  const double scale = std::max(1.0, (w.array() * yv.array().square()).sum());

  auto residuals = [&](const Eigen::VectorXd &par) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    const auto ps = as_span(par);
    for (std::size_t i = 0; i < n; ++i)
      r[static_cast<Eigen::Index>(i)] = y[i] - model(x[i], ps);
    return r;
  };

  double cost = weighted_cost(model, x, y, weights, as_span(p));
  double lambda = 1e-3;
  bool failed = false;
  for (fit.iterations = 0; fit.iterations < opt.max_iterations; ++fit.iterations) {
    if (!std::isfinite(cost)) {
      failed = true;
      break;
    }
    if (cost <= 1e-28 * scale) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd J = numeric_jacobian(model, x, as_span(p), 1.0, opt.step_floor);
    const Eigen::MatrixXd A = J.transpose() * w.asDiagonal() * J;
    const Eigen::VectorXd g = J.transpose() * (w.array() * residuals(p).array()).matrix();
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = A;
      for (Eigen::Index j = 0; j < damped.rows(); ++j)
        damped(j, j) += lambda * std::max(A(j, j), 1e-12);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd step = ldlt.solve(g);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        lambda *= 10.0;
        if (lambda > 1e16) {
          failed = true;
          break;
        }
        continue;
      }
      Eigen::VectorXd trial = p + step;
      project(trial, bounds);
      const double trial_cost = weighted_cost(model, x, y, weights, as_span(trial));
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double rel_cost = (cost - trial_cost) / std::max(cost, 1e-300);
        const Eigen::VectorXd moved = trial - p;
        double rel_step = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j)
          rel_step = std::max(rel_step, std::abs(moved[j]) / (std::abs(p[j]) + opt.tolerance));
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (rel_cost < opt.tolerance && rel_step < opt.tolerance)
          fit.converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left: p is a minimum to working precision.
          fit.converged = true;
          break;
        }
      }
    }
    if (failed || fit.converged)
      break;
  }
  if (failed)
    fit.converged = false;

  fit.values = p;
  fit.residual_norm = std::sqrt(std::max(cost, 0.0));
  const Eigen::MatrixXd J = numeric_jacobian(model, x, as_span(p), 1.0, opt.step_floor);
  const Eigen::MatrixXd A = J.transpose() * w.asDiagonal() * J;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.isInvertible()) {
    fit.covariance = lu.inverse();
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());
    if (opt.scale_covariance && fit.dof > 0)
      fit.covariance *= fit.reduced_chi2();
  } else {
    fit.covariance = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m), kNaN);
    fit.converged = false;
  }
  return fit;
}

FitResult fit_shg(std::span<const double> temps, std::span<const double> powers) {
  const std::size_t n = temps.size();
  if (powers.size() != n)
    throw InvalidParameter("temperature and power lists differ in length");
  if (n < 5)
    throw InvalidParameter("SHG fit needs at least 5 points");
  if (!std::is_sorted(temps.begin(), temps.end()))
    throw InvalidParameter("temperatures must be sorted");
  const auto k = static_cast<std::size_t>(std::max_element(powers.begin(), powers.end()) - powers.begin());
  if (k == 0 || k + 1 == n)
    throw InitializationError("SHG peak is not bracketed by the temperature grid");
  const double p_max = powers[k];
  const double half = 0.5 * p_max;
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double f = (powers[inside] - half) / (powers[inside] - powers[outside]);
    return temps[inside] + f * (temps[outside] - temps[inside]);
  };
  std::size_t l = k, r = k;
  while (l > 0 && powers[l - 1] >= half)
    --l;
  while (r + 1 < n && powers[r + 1] >= half)
    ++r;
  if (l == 0 || r + 1 == n)
    throw InitializationError("SHG half-maximum crossings not found on both sides of the peak");
  const double fwhm0 = crossing(r, r + 1) - crossing(l, l - 1);
  // sinc^2 side lobes stay below 5% of the main lobe; anything stronger past the
  // first zero means the argmax is itself a side lobe.
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(temps[j] - temps[k]) > 1.2 * fwhm0 && powers[j] > 0.25 * p_max)
      throw InitializationError("SHG maximum is not the main lobe; grid likely misses the peak");

  ScalarModel model = [](double t, std::span<const double> p) {
    return shg_response(t, p[0], std::max(p[1], 1e-12), p[2]);
  };
  const std::vector<double> w(n, 1.0);
  const double p0[] = {temps[k], fwhm0, p_max};
  Bounds b{{-std::numeric_limits<double>::infinity(), 1e-9, 0.0}, {}};
  NllsOptions opt;
  opt.scale_covariance = true;
  auto fit = nlls_fit(model, temps, powers, w, p0, {"t_peak", "fwhm", "p_max"}, b, opt);
  if (fit.value("t_peak") < temps.front() || fit.value("t_peak") > temps.back())
    throw InitializationError("fitted SHG peak lies outside the temperature grid");
  return fit;
}

FitResult fit_histogram_triplet(const CoincidenceHistogram &hist, double delta_t_guess,
                                const HistogramFitOptions &options) {
  const std::size_t nb = hist.bins();
  if (nb < 7)
    throw InvalidParameter("histogram too short to fit three peaks");
  if (!(delta_t_guess > 0.0))
    throw InvalidParameter("delta_t guess must be positive");
  const double bw = static_cast<double>(hist.bin_width_ps);
  const double lag_lo = static_cast<double>(hist.lag_min_ps);
  const double lag_hi = static_cast<double>(hist.lag_max_ps);
  if (lag_lo > -delta_t_guess - 2.0 * bw || lag_hi < delta_t_guess + 2.0 * bw)
    throw InvalidParameter("histogram does not span both side peaks");

  std::vector<double> x(nb), y(nb), w(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    x[k] = static_cast<double>(hist.bin_lower(k)) - 0.5 * static_cast<double>(hist.tick_ps);
    y[k] = static_cast<double>(hist.counts[k]);
    w[k] = 1.0 / std::max(y[k], 1.0);
  }
  std::vector<double> sorted = y;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(nb / 2), sorted.end());
  const double floor0 = sorted[nb / 2];

  // Largest bin within delta_t / 2 of a nominal peak centre.
  auto peak_near = [&](double centre) {
    std::size_t best = nb;
    for (std::size_t k = 0; k < nb; ++k) {
      const double c = x[k] + 0.5 * bw;
      if (std::abs(c - centre) <= 0.5 * delta_t_guess && (best == nb || y[k] > y[best]))
        best = k;
    }
    return best;
  };
  const std::size_t k_sl = peak_near(-delta_t_guess);
  const std::size_t k_ls = peak_near(delta_t_guess);
  const std::size_t k_c = peak_near(0.0);
  const double threshold = 5.0 * std::max(floor0, 1.0);
  if (k_sl == nb || k_ls == nb || y[k_sl] <= threshold || y[k_ls] <= threshold)
    throw InitializationError("side peaks not found above 5x the histogram floor");

  // Width from the floor-subtracted second moment of the side peaks (Sheppard corrected).
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t pk : {k_sl, k_ls}) {
    const double c = x[pk] + 0.5 * bw;
    for (std::size_t k = 0; k < nb; ++k) {
      const double d = x[k] + 0.5 * bw - c;
      if (std::abs(d) > 0.5 * delta_t_guess)
        continue;
      const double v = std::max(y[k] - floor0, 0.0);
      m0 += v;
      m2 += v * d * d;
    }
  }
  double sigma0 = m0 > 0.0 ? std::sqrt(std::max(m2 / m0 - bw * bw / 12.0, 0.0)) : bw;
  sigma0 = std::max(sigma0, 0.25 * bw);

  // Peak height per bin -> model amplitude for a peak centred in a bin.
  const double centred_mass = std::erf(0.5 * bw / (sigma0 * std::numbers::sqrt2));
  const double norm0 = sigma0 * std::sqrt(2.0 * std::numbers::pi) / bw;
  auto height = [&](std::size_t k) { return std::max(y[k] - floor0, 0.0) / (norm0 * centred_mass); };

  const bool split = options.per_peak_sigma;
  // Layout: h_sl, h_ls, h_central, sigma..., h_acc, delta_t
  const std::size_t i_acc = split ? 6 : 4;
  const std::size_t i_dt = i_acc + 1;
  ScalarModel model = [bw, split, i_acc, i_dt](double lo, std::span<const double> p) {
    const double hi = lo + bw;
    const double dt = p[i_dt];
    auto peak = [&](double h, double centre, double sigma) {
      sigma = std::max(sigma, 1e-9);
      const double s = sigma * std::numbers::sqrt2;
      const double mass = 0.5 * (std::erf((hi - centre) / s) - std::erf((lo - centre) / s));
      return h * sigma * std::sqrt(2.0 * std::numbers::pi) / bw * mass;
    };
    const double s_sl = p[3];
    const double s_ls = split ? p[4] : p[3];
    const double s_c = split ? p[5] : p[3];
    return p[i_acc] + peak(p[0], -dt, s_sl) + peak(p[1], dt, s_ls) + peak(p[2], 0.0, s_c);
  };

  std::vector<double> p0 = {height(k_sl), height(k_ls), k_c == nb ? 0.0 : height(k_c), sigma0};
  std::vector<std::string> names = {"h_sl", "h_ls", "h_central", "sigma"};
  if (split) {
    p0 = {height(k_sl), height(k_ls), k_c == nb ? 0.0 : height(k_c), sigma0, sigma0, sigma0};
    names = {"h_sl", "h_ls", "h_central", "sigma_sl", "sigma_ls", "sigma_central"};
  }
  p0.push_back(floor0);
  p0.push_back(delta_t_guess);
  names.emplace_back("h_acc");
  names.emplace_back("delta_t");

  const double inf = std::numeric_limits<double>::infinity();
  Bounds b;
  b.lower.assign(p0.size(), -inf);
  for (std::size_t j = 3; j < i_acc; ++j)
    b.lower[j] = 1e-3;
  b.lower[i_dt] = bw;
  return nlls_fit(model, x, y, w, p0, std::move(names), b);
}

FitResult fit_fringe(std::span<const double> phases, std::span<const double> counts,
                     std::span<const double> errors, const FringeFitOptions &options) {
  const std::size_t n = phases.size();
  if (counts.size() != n || errors.size() != n)
    throw InvalidParameter("phase, count and error lists differ in length");
  if (n < 8)
    throw InvalidParameter("fringe fit needs at least 8 phase points");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(errors[i] > 0.0))
      throw InvalidParameter("fringe errors must be positive");
    w[i] = 1.0 / (errors[i] * errors[i]);
  }

  // Dominant frequency: weighted projection onto {1, cos, sin} over a grid of
  // candidate alphas, keeping the one that explains the most variance.
  auto project = [&](double alpha) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d f(1.0, std::cos(alpha * phases[i]), std::sin(alpha * phases[i]));
      A += w[i] * f * f.transpose();
      rhs += w[i] * counts[i] * f;
    }
    Eigen::Vector3d c = A.ldlt().solve(rhs);
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = counts[i] - c[0] - c[1] * std::cos(alpha * phases[i]) - c[2] * std::sin(alpha * phases[i]);
      ssr += w[i] * r * r;
    }
    return std::pair{c, ssr};
  };
  double best_alpha = options.alpha;
  auto [best, best_ssr] = project(best_alpha);
  if (options.fit_alpha) {
    for (double a = 0.25; a <= 4.0 + 1e-12; a += 0.005) {
      auto [c, ssr] = project(a);
      if (c.allFinite() && ssr < best_ssr) {
        best = c;
        best_ssr = ssr;
        best_alpha = a;
      }
    }
  }
  const double amp = std::hypot(best[1], best[2]);
  if (!best.allFinite() || !(best[0] > 0.0) || !(amp > 0.0))
    throw InitializationError("no dominant fringe frequency found");
  const double v0 = std::clamp(amp / best[0], 0.0, 1.05);
  const double phi00 = std::atan2(-best[2], best[1]);

  const double inf = std::numeric_limits<double>::infinity();
  if (options.fit_alpha) {
    ScalarModel model = [](double phi, std::span<const double> p) {
      return p[0] * (1.0 + p[1] * std::cos(p[2] * phi + p[3]));
    };
    const double p0[] = {best[0], v0, best_alpha, phi00};
    Bounds b{{0.0, 0.0, 1e-6, -inf}, {inf, 1.05, inf, inf}};
    return nlls_fit(model, phases, counts, w, p0, {"b", "v", "alpha", "phi0"}, b);
  }
  const double alpha = options.alpha;
  ScalarModel model = [alpha](double phi, std::span<const double> p) {
    return p[0] * (1.0 + p[1] * std::cos(alpha * phi + p[2]));
  };
  const double p0[] = {best[0], v0, phi00};
  Bounds b{{0.0, 0.0, -inf}, {inf, 1.05, inf}};
  FitResult r = nlls_fit(model, phases, counts, w, p0, {"b", "v", "phi0"}, b);
  // Report alpha as a fixed (zero-variance) parameter in the usual layout.
  FitResult out = r;
  out.names = {"b", "v", "alpha", "phi0"};
  out.values = Eigen::Vector4d(r.values[0], r.values[1], alpha, r.values[2]);
  out.covariance = Eigen::Matrix4d::Zero();
  const int map[] = {0, 1, -1, 2};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (map[i] >= 0 && map[j] >= 0)
        out.covariance(i, j) = r.covariance(map[i], map[j]);
  return out;
}

FitResult fit_powerlaw(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n)
    throw InvalidParameter("x and y differ in length");
  if (n < 3)
    throw InvalidParameter("power-law fit needs at least 3 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw InvalidParameter("power-law fit needs positive data");
    lx[i] = std::log10(x[i]);
    ly[i] = std::log10(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0))
    throw InvalidParameter("power-law fit needs at least two distinct x values");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - intercept - slope * lx[i];
    ssr += r * r;
  }
  FitResult f;
  f.names = {"log_prefactor", "slope"};
  f.values = Eigen::Vector2d(intercept, slope);
  f.dof = n - 2;
  const double s2 = ssr / static_cast<double>(f.dof);
  const double sum_x2 = sxx + static_cast<double>(n) * mx * mx;
  f.covariance.resize(2, 2);
  f.covariance(1, 1) = s2 / sxx;
  f.covariance(0, 0) = s2 * sum_x2 / (static_cast<double>(n) * sxx);
  f.covariance(0, 1) = f.covariance(1, 0) = -s2 * mx / sxx;
  f.residual_norm = std::sqrt(ssr);
  f.converged = true;
  return f;
}

} // namespace franson
