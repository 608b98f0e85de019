#include "pmrm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmrm {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
// Largest change of one coordinate in a single iteration, relative to
// max(1, |x_i|). Keeps an early step from leaping across a ridge into another
// basin while the metric is still a poor local model.
constexpr double kMaxRelativeStep = 0.25;

double step_cap(const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  double scale = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double limit = kMaxRelativeStep * std::max(1.0, std::abs(x[i]));
    if (std::abs(p[i]) > limit) scale = std::min(scale, limit / std::abs(p[i]));
  }
  return scale;
}

// Negative curvature (a start on the wrong side of an inflection) still sets
// the coordinate's scale, so its magnitude is used rather than a unit metric.
Eigen::MatrixXd diagonal_inverse(const Eigen::VectorXd& diag_hessian) {
  Eigen::VectorXd inv(diag_hessian.size());
  for (Eigen::Index i = 0; i < diag_hessian.size(); ++i) {
    const double h = std::abs(diag_hessian[i]);
    inv[i] = (std::isfinite(h) && h > 1e-8) ? 1.0 / h : 1.0;
  }
  return inv.asDiagonal();
}

}  // namespace

double fd_step(double x) { return std::max(1e-5, 1e-5 * std::abs(x)); }

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double fx,
                                 Eigen::VectorXd* diag_hessian) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  if (diag_hessian) diag_hessian->resize(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
    if (diag_hessian) (*diag_hessian)[i] = (fp - 2.0 * fx + fm) / (h * h);
  }
  return g;
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double fx) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = fd_step(x[i]);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * fx + fm) / (h[i] * h[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      xp[i] = x[i] + h[i];
      xp[j] = x[j] + h[j];
      const double fpp = f(xp);
      xp[j] = x[j] - h[j];
      const double fpm = f(xp);
      xp[i] = x[i] - h[i];
      const double fmm = f(xp);
      xp[j] = x[j] + h[j];
      const double fmp = f(xp);
      xp[i] = x[i];
      xp[j] = x[j];
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

MinimizeResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                             const MinimizeOptions& options) {
  const Eigen::Index n = x0.size();
  int evaluations = 0;
  auto counted = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  const Objective objective = counted;

  MinimizeResult r;
  r.x = x0;
  r.value = objective(x0);
  r.initial_value = r.value;
  if (!std::isfinite(r.value)) {
    r.gradient = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    r.evaluations = evaluations;
    return r;
  }

  Eigen::VectorXd diag;
  Eigen::VectorXd g = numeric_gradient(objective, r.x, r.value, &diag);
  Eigen::MatrixXd h_init = diagonal_inverse(diag);
  Eigen::MatrixXd h_inv = h_init;
  bool just_reset = true;

  for (r.iterations = 0; r.iterations < options.max_iter; ++r.iterations) {
    Eigen::VectorXd p = -h_inv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h_inv = h_init;
      p = -h_inv * g;
      slope = g.dot(p);
      just_reset = true;
      if (!(slope < 0.0)) break;
    }

    double step = step_cap(r.x, p);
    double f_new = objective(r.x + step * p);
    int backtracks = 0;
    while (!(f_new <= r.value + kArmijo * step * slope) && backtracks < kMaxBacktracks) {
      step *= 0.5;
      f_new = objective(r.x + step * p);
      ++backtracks;
    }
    if (!(f_new <= r.value + kArmijo * step * slope)) {
      // No acceptable step along this direction; retry once from the diagonal metric.
      if (just_reset) break;
      h_inv = h_init;
      just_reset = true;
      continue;
    }

    const Eigen::VectorXd s = step * p;
    const Eigen::VectorXd x_new = r.x + s;
    Eigen::VectorXd diag_new;
    const Eigen::VectorXd g_new = numeric_gradient(objective, x_new, f_new, &diag_new);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);

    r.last_rel_change = std::abs(r.value - f_new) / std::max(1.0, std::abs(f_new));
    r.x = x_new;
    r.value = f_new;
    g = g_new;
    h_init = diagonal_inverse(diag_new);
    just_reset = false;

    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      const double yhy = y.dot(hy);
      h_inv += ((sy + yhy) * rho * rho) * (s * s.transpose()) -
               rho * (hy * s.transpose() + s * hy.transpose());
    }

    if (r.last_rel_change < options.rel_tol && g.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      r.converged = true;
      ++r.iterations;
      break;
    }
  }
  r.gradient = g;
  r.evaluations = evaluations;
  return r;
}

}  // namespace pmrm
