#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "pmrm/simulation.hpp"
#include "pmrm/trial_data.hpp"

namespace pmrm::oracles {

inline Eigen::MatrixXd toy_covariance(int d) {
  Eigen::MatrixXd r(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      r(i, j) = (1.0 + 0.3 * i) * (1.0 + 0.3 * j) * std::pow(0.6, std::abs(i - j));
    }
  }
  return r;
}

inline TrialDataset complete_trial(int n_per_arm, std::uint64_t seed) {
  const VisitSchedule schedule({0.0, 1.0, 2.0, 3.0});
  const MeanProfile means = [](Arm arm, std::optional<Group>) {
    Eigen::VectorXd mu(4);
    mu << 10.0, 11.0, 12.5, 14.0;
    if (arm == Arm::active) mu.tail(3).array() -= Eigen::Array3d(0.2, 0.5, 0.9);
    return mu;
  };
  return generate_mvn_trial(schedule, toy_covariance(4), means, {n_per_arm, false}, seed);
}

// Row of the cLDA design for (arm, visit) over (alpha[0..m], alpha_active[1..m]).
inline Eigen::RowVectorXd clda_row(int m, Arm arm, int visit) {
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(2 * m + 1);
  if (visit == 0) {
    x[0] = 1.0;
  } else {
    x[arm == Arm::placebo ? visit : m + visit] = 1.0;
  }
  return x;
}

struct GlsOracle {
  Eigen::VectorXd theta;
  Eigen::MatrixXd r;
  Eigen::MatrixXd vcov;
};

// Alternates generalized least squares for the means with the ML covariance
// of the residuals until both settle.
inline GlsOracle gls_oracle(const TrialDataset& data) {
  const int d = data.schedule().size();
  const int m = d - 1;
  const double n = static_cast<double>(data.n_subjects());
  GlsOracle o;
  o.r = Eigen::MatrixXd::Identity(d, d);
  o.theta = Eigen::VectorXd::Zero(2 * m + 1);
  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::MatrixXd w = o.r.inverse();
    Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
    Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(2 * m + 1);
    for (const auto& s : data.subjects()) {
      Eigen::MatrixXd x(d, 2 * m + 1);
      Eigen::VectorXd y(d);
      for (int j = 0; j < d; ++j) {
        x.row(j) = clda_row(m, s.arm, j);
        y[j] = s.observations[static_cast<std::size_t>(j)].value;
      }
      xtwx += x.transpose() * w * x;
      xtwy += x.transpose() * w * y;
    }
    const Eigen::VectorXd theta = xtwx.ldlt().solve(xtwy);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : data.subjects()) {
      Eigen::VectorXd e(d);
      for (int j = 0; j < d; ++j) {
        e[j] = s.observations[static_cast<std::size_t>(j)].value - clda_row(m, s.arm, j).dot(theta);
      }
      r += e * e.transpose();
    }
    r /= n;
    const double change = (theta - o.theta).cwiseAbs().maxCoeff() + (r - o.r).cwiseAbs().maxCoeff();
    o.theta = theta;
    o.r = r;
    o.vcov = xtwx.inverse();
    if (change < 1e-14) break;
  }
  // Final information at the converged covariance.
  const Eigen::MatrixXd w = o.r.inverse();
  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
  for (const auto& s : data.subjects()) {
    Eigen::MatrixXd x(d, 2 * m + 1);
    for (int j = 0; j < d; ++j) x.row(j) = clda_row(m, s.arm, j);
    xtwx += x.transpose() * w * x;
  }
  o.vcov = xtwx.inverse();
  return o;
}

inline double log_normal_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                          const Eigen::MatrixXd& r) {
  const Eigen::LLT<Eigen::MatrixXd> llt(r);
  const Eigen::VectorXd z = llt.matrixL().solve(y - mu);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + logdet +
                 z.squaredNorm());
}

// Log of the density of (y0, y2) obtained by integrating the middle
// coordinate of a trivariate normal out with composite Simpson over +-14 SD.
inline double marginal_log_density_simpson(double y0, double y2, const Eigen::Vector3d& mu,
                                           const Eigen::Matrix3d& r) {
  const double lo = mu[1] - 14.0 * std::sqrt(r(1, 1));
  const double hi = mu[1] + 14.0 * std::sqrt(r(1, 1));
  const int n = 40000;
  const double h = (hi - lo) / n;
  double integral = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const Eigen::Vector3d y(y0, lo + k * h, y2);
    integral += w * std::exp(log_normal_density(y, mu, r));
  }
  return std::log(integral * h / 3.0);
}

}  // namespace pmrm::oracles
