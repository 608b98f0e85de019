#include "pmrm/estimation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>

#include "pmrm/errors.hpp"
#include "pmrm/optimizer.hpp"

namespace pmrm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

}  // namespace

std::vector<std::string> theta_names(const MeanModelSpec& spec) {
  auto names = spec.parameter_names();
  const int d = spec.schedule.size();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      names.push_back("cov[" + std::to_string(i) + "," + std::to_string(j) + "]");
    }
  }
  return names;
}

LikelihoodEvaluator::LikelihoodEvaluator(const MeanModelSpec& spec, const TrialDataset& data)
    : spec_(spec), dim_(spec.schedule.size()), n_mean_(spec.n_mean_parameters()) {
  spec_.validate();
  if (!(data.schedule() == spec_.schedule)) {
    throw ContractError("dataset schedule differs from the model schedule");
  }

  using Key = std::tuple<int, int, std::vector<int>, std::vector<double>>;
  std::map<Key, std::size_t> group_index;
  std::map<std::vector<int>, std::size_t> pattern_index;
  // Running sums per group, turned into means and scatter below.
  std::vector<Eigen::VectorXd> sums;
  std::vector<std::vector<Eigen::VectorXd>> members;

  for (const auto& s : data.subjects()) {
    const auto rows = observed_rows(s);
    const std::vector<double> times(rows.times.data(), rows.times.data() + rows.times.size());
    const int sub = s.group ? static_cast<int>(*s.group) : -1;
    Key key{static_cast<int>(s.arm), sub, rows.visits, times};
    auto it = group_index.find(key);
    if (it == group_index.end()) {
      it = group_index.emplace(std::move(key), groups_.size()).first;
      Group g;
      g.arm = s.arm;
      g.subgroup = s.group;
      g.visits = rows.visits;
      g.times = times;
      g.first_subject = s.subject_id;
      groups_.push_back(std::move(g));
      sums.push_back(Eigen::VectorXd::Zero(rows.values.size()));
      members.emplace_back();
    }
    const std::size_t gi = it->second;
    groups_[gi].n += 1.0;
    sums[gi] += rows.values;
    members[gi].push_back(rows.values);
  }

  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& g = groups_[gi];
    g.mean = sums[gi] / g.n;
    auto pit = pattern_index.find(g.visits);
    if (pit == pattern_index.end()) {
      pit = pattern_index.emplace(g.visits, patterns_.size()).first;
      Pattern p;
      p.visits = g.visits;
      const auto k = static_cast<Eigen::Index>(g.visits.size());
      p.scatter = Eigen::MatrixXd::Zero(k, k);
      patterns_.push_back(std::move(p));
    }
    auto& p = patterns_[pit->second];
    for (const auto& y : members[gi]) {
      const Eigen::VectorXd r = y - g.mean;
      p.scatter.noalias() += r * r.transpose();
    }
    p.n += g.n;
    p.groups.push_back(gi);
  }
}

double LikelihoodEvaluator::evaluate(const ParameterVector& params, const Eigen::MatrixXd& L) const {
  const MeanFunction mean(spec_, params);
  const Eigen::MatrixXd R = L * L.transpose();
  double ll = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (const auto& p : patterns_) {
    const auto k = static_cast<Eigen::Index>(p.visits.size());
    llt.compute(submatrix(R, p.visits));
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd& Ls = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) logdet += 2.0 * std::log(Ls(i, i));
    const double trace = llt.solve(p.scatter).trace();
    double quad = trace;
    for (const std::size_t gi : p.groups) {
      const auto& g = groups_[gi];
      Eigen::VectorXd diff(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        const double mu = mean(g.arm, g.subgroup, g.visits[a], g.times[a]);
        if (!std::isfinite(mu)) {
          throw EvaluationError(g.first_subject, g.visits[a], "non-finite mean");
        }
        diff[a] = g.mean[a] - mu;
      }
      llt.matrixL().solveInPlace(diff);
      quad += g.n * diff.squaredNorm();
    }
    ll += -0.5 * (p.n * static_cast<double>(k) * kLog2Pi + p.n * logdet + quad);
  }
  return ll;
}

double LikelihoodEvaluator::operator()(const ParameterVector& params,
                                       const CovarianceSpec& cov) const {
  params.check_layout(spec_);
  if (cov.dimension() != dim_) throw ContractError("covariance dimension mismatch");
  return evaluate(params, cov.cholesky_factor());
}

double LikelihoodEvaluator::operator()(const Eigen::VectorXd& theta) const {
  if (theta.size() != n_theta()) throw ContractError("theta has the wrong length");
  const ParameterVector params = ParameterVector::unflatten(spec_, theta.head(n_mean_));
  Eigen::MatrixXd L;
  cholesky_from_coords(dim_, theta.tail(n_coords()), L);
  return evaluate(params, L);
}

double log_likelihood(const MeanModelSpec& spec, const ParameterVector& params,
                      const CovarianceSpec& cov, const TrialDataset& data) {
  return LikelihoodEvaluator(spec, data)(params, cov);
}

double subject_log_likelihood(const MeanModelSpec& spec, const ParameterVector& params,
                              const CovarianceSpec& cov, const SubjectRecord& subject) {
  params.check_layout(spec);
  const auto rows = observed_rows(subject);
  const MeanFunction mean(spec, params);
  const auto k = static_cast<Eigen::Index>(rows.visits.size());
  Eigen::VectorXd r(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const double mu = mean(subject.arm, subject.group, rows.visits[a], rows.times[a]);
    if (!std::isfinite(mu)) throw EvaluationError(subject.subject_id, rows.visits[a], "non-finite mean");
    r[a] = rows.values[a] - mu;
  }
  const Eigen::MatrixXd Rs = submatrix(cov.matrix(), rows.visits);
  const Eigen::LLT<Eigen::MatrixXd> llt(Rs);
  const Eigen::MatrixXd Ls = llt.matrixL();
  const double logdet = 2.0 * Ls.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(k) * kLog2Pi + logdet + r.dot(llt.solve(r)));
}

Eigen::MatrixXd initial_covariance(const TrialDataset& data) {
  const int d = data.schedule().size();
  Eigen::MatrixXd sum[2] = {Eigen::MatrixXd::Zero(d, 1), Eigen::MatrixXd::Zero(d, 1)};
  Eigen::VectorXd cnt[2] = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  for (const auto& s : data.subjects()) {
    const int a = static_cast<int>(s.arm);
    for (const auto& o : s.observations) {
      sum[a](o.visit, 0) += o.value;
      cnt[a][o.visit] += 1.0;
    }
  }
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd pairs = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : data.subjects()) {
    const int a = static_cast<int>(s.arm);
    for (const auto& o1 : s.observations) {
      const double r1 = o1.value - sum[a](o1.visit, 0) / cnt[a][o1.visit];
      for (const auto& o2 : s.observations) {
        const double r2 = o2.value - sum[a](o2.visit, 0) / cnt[a][o2.visit];
        cross(o1.visit, o2.visit) += r1 * r2;
        pairs(o1.visit, o2.visit) += 1.0;
      }
    }
  }
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (pairs(i, j) > 0) R(i, j) = cross(i, j) / pairs(i, j);
    }
  }
  for (int i = 0; i < d; ++i) {
    if (!(R(i, i) > 0.0)) R(i, i) = 1.0;
  }
  double ridge = 1e-6 * R.trace() / d;
  for (int attempt = 0; attempt < 40; ++attempt) {
    if (Eigen::LLT<Eigen::MatrixXd>(R).info() == Eigen::Success) return R;
    R.diagonal().array() += ridge;
    ridge *= 10.0;
  }
  throw FitError("could not build a positive definite starting covariance");
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& information,
                                   const std::vector<std::string>& names, double noise_floor) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  if (eig.info() != Eigen::Success) {
    throw SingularInformationError("", "eigen-decomposition of the information failed");
  }
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  const double threshold = std::max(noise_floor, 1e-10 * largest);
  if (!(values[0] > threshold)) {
    Eigen::Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    const std::string name =
        worst < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(worst)] : "";
    throw SingularInformationError(
        name, "information matrix is singular (smallest eigenvalue " + std::to_string(values[0]) +
                  "); null direction dominated by " + name);
  }
  return eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

// Coordinate steps of 1e-5 leave curvature errors of order eps * |f| / h^2,
// which swamps weakly determined directions such as a rate parameter sitting
// near a turning point of the placebo curve. Eigen-directions inside that band
// are measured again along the eigenvector with a step where rounding is
// negligible. A direction that is truly flat stays flat at any step.
constexpr double kReassessStep = 1e-3;

double reassessed_noise_floor(double value) {
  return 8.0 * std::numeric_limits<double>::epsilon() * std::abs(value) /
         (kReassessStep * kReassessStep);
}

Eigen::MatrixXd reassess_weak_directions(const Objective& f, const Eigen::VectorXd& x,
                                         double value, const Eigen::MatrixXd& information,
                                         double noise_floor) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  if (eig.info() != Eigen::Success) return information;
  Eigen::VectorXd values = eig.eigenvalues();
  bool changed = false;
  const double floor_at_step = reassessed_noise_floor(value);
  for (Eigen::Index k = 0; k < values.size() && values[k] <= noise_floor; ++k) {
    const Eigen::VectorXd v = eig.eigenvectors().col(k);
    const double step = kReassessStep;
    const double up = f(x + step * v);
    const double down = f(x - step * v);
    if (!std::isfinite(up) || !std::isfinite(down)) continue;
    const double curvature = (up - 2.0 * value + down) / (step * step);
    values[k] = curvature > floor_at_step ? curvature : 0.0;
    changed = true;
  }
  if (!changed) return information;
  Eigen::MatrixXd out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

struct Attempt {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd hessian;
  double max_gradient = std::numeric_limits<double>::infinity();
  double last_rel_change = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Newton steps on a fixed finite-difference Hessian, accepted only when they
// lower the objective.
Attempt refine(const Objective& f, const MinimizeResult& start, const FitOptions& options) {
  Attempt a;
  a.x = start.x;
  a.value = start.value;
  a.iterations = start.iterations;
  a.last_rel_change = start.last_rel_change;
  if (!std::isfinite(a.value)) return a;

  Eigen::VectorXd hessian_at = a.x;
  a.hessian = numeric_hessian(f, a.x, a.value);
  Eigen::VectorXd g = start.gradient;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a.hessian);
  const bool usable = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                      (ldlt.vectorD().array() > 0.0).all();
  for (int k = 0; usable && k < 4; ++k) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-3 * options.grad_tol) break;
    const Eigen::VectorXd step = -ldlt.solve(g);
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 8; ++half, t *= 0.5) {
      const Eigen::VectorXd x_new = a.x + t * step;
      const double v = f(x_new);
      if (v < a.value) {
        a.last_rel_change = std::abs(a.value - v) / std::max(1.0, std::abs(v));
        a.x = x_new;
        a.value = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    g = numeric_gradient(f, a.x, a.value);
  }
  if (((a.x - hessian_at).cwiseAbs().array() >
       1e-6 * (1.0 + hessian_at.cwiseAbs().array())).any()) {
    a.hessian = numeric_hessian(f, a.x, a.value);
  }
  a.max_gradient = g.lpNorm<Eigen::Infinity>();
  a.converged = a.max_gradient < options.grad_tol && a.last_rel_change < options.rel_tol;
  return a;
}

}  // namespace

namespace {

struct ScanRange {
  int index;
  double lo;
  double hi;
};

// Coordinates of theta that act on the time axis of the interpolated placebo
// curve, with the range each one is scanned over.
std::vector<ScanRange> time_axis_ranges(const MeanModelSpec& spec) {
  const auto layout = ParameterLayout::of(spec);
  const double last = spec.schedule.time(spec.schedule.size() - 1);
  std::vector<ScanRange> out;
  switch (spec.variant) {
    case Variant::time_pmrm:
    case Variant::prop_slowing:
    case Variant::prop_slowing_with_improvement:
    case Variant::prop_slowing_subgroup:
      for (int k = 0; k < spec.n_beta(); ++k) out.push_back({layout.beta + k, -1.0, 3.0});
      break;
    case Variant::delay_general:
      for (int k = 0; k < spec.n_beta(); ++k) {
        const double t = spec.schedule.time(k + 1);
        out.push_back({layout.beta + k, -2.0 * t, 2.0 * t});
      }
      break;
    case Variant::delay_constant:
    case Variant::delay_two_param:
      for (int k = 0; k < spec.n_beta(); ++k) out.push_back({layout.beta + k, -2.0 * last, 2.0 * last});
      break;
    case Variant::clda:
    case Variant::prop_decline:
      break;
  }
  return out;
}

constexpr int kScanPoints = 401;
// A basin whose best point along the scanned line is further than this below
// the current optimum is not worth a restart.
constexpr double kBasinMargin = 2.0;

// The interpolated placebo curve need not be monotone, so a time-axis
// parameter can have several local optima. Each one is profiled on a grid with
// every other coordinate held at the optimum; BFGS restarts from the grid
// minima of other basins and the best converged result is kept.
void search_other_basins(const Objective& objective, const MeanModelSpec& spec,
                         const MinimizeOptions& mopt, const FitOptions& options, Attempt& best) {
  const auto ranges = time_axis_ranges(spec);
  for (int round = 0; round < 3; ++round) {
    bool improved = false;
    for (const auto& r : ranges) {
      const double step = (r.hi - r.lo) / (kScanPoints - 1);
      std::vector<double> grid(kScanPoints), value(kScanPoints);
      Eigen::VectorXd x = best.x;
      for (int g = 0; g < kScanPoints; ++g) {
        grid[g] = r.lo + g * step;
        x[r.index] = grid[g];
        value[g] = objective(x);
      }
      for (int g = 0; g < kScanPoints; ++g) {
        const bool local_min = (g == 0 || value[g] <= value[g - 1]) &&
                               (g + 1 == kScanPoints || value[g] <= value[g + 1]);
        if (!local_min || !std::isfinite(value[g])) continue;
        if (value[g] > best.value + kBasinMargin) continue;
        if (std::abs(grid[g] - best.x[r.index]) <= 2.0 * step) continue;
        Eigen::VectorXd x0 = best.x;
        x0[r.index] = grid[g];
        Attempt a = refine(objective, bfgs_minimize(objective, x0, mopt), options);
        if (a.converged && a.value < best.value - 1e-7) {
          best = std::move(a);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

}  // namespace

FitResult fit_model(const MeanModelSpec& spec, const TrialDataset& data,
                    const FitOptions& options) {
  spec.validate();
  const int d = spec.schedule.size();
  if (data.n_subjects() < static_cast<std::size_t>(d)) {
    throw FitError("covariance not identifiable: " + std::to_string(data.n_subjects()) +
                   " subjects for " + std::to_string(d) + " visits");
  }
  const LikelihoodEvaluator loglik(spec, data);
  const ParameterVector start_params = initial_parameters(spec, data);
  const CovarianceSpec start_cov = CovarianceSpec::from_matrix(initial_covariance(data));

  Eigen::VectorXd theta0(loglik.n_theta());
  theta0 << start_params.flatten(), start_cov.coords();

  const Objective objective = [&loglik](const Eigen::VectorXd& theta) {
    try {
      const double v = -loglik(theta);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const EvaluationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  MinimizeOptions mopt;
  mopt.max_iter = options.max_iter;
  mopt.rel_tol = options.rel_tol;
  mopt.grad_tol = options.grad_tol;

  const auto layout = ParameterLayout::of(spec);
  boost::random::mt19937_64 rng(options.seed);
  boost::random::uniform_real_distribution<double> jitter(-0.1, 0.1);

  Attempt best;
  double initial_value = std::numeric_limits<double>::infinity();
  int restarts_used = 0;
  for (int attempt = 0; attempt <= options.n_restarts; ++attempt) {
    Eigen::VectorXd x0 = theta0;
    if (attempt > 0) {
      if (spec.n_beta() == 0) break;
      for (int k = 0; k < spec.n_beta(); ++k) x0[layout.beta + k] += jitter(rng);
      restarts_used = attempt;
    }
    const MinimizeResult run = bfgs_minimize(objective, x0, mopt);
    if (attempt == 0) initial_value = run.initial_value;
    Attempt a = refine(objective, run, options);
    if (a.value < best.value || (a.converged && !best.converged)) best = std::move(a);
    if (best.converged) break;
  }
  if (!std::isfinite(best.value)) {
    throw FitError("log-likelihood is not finite at the starting values");
  }
  if (best.converged) search_other_basins(objective, spec, mopt, options, best);

  FitResult fit;
  fit.spec = spec;
  fit.estimates = ParameterVector::unflatten(spec, best.x.head(loglik.n_mean()));
  fit.covariance_coords = CovarianceSpec(d, best.x.tail(loglik.n_coords()));
  fit.covariance = fit.covariance_coords.matrix();
  fit.loglik = -best.value;
  fit.initial_loglik = -initial_value;
  // Rounding in the second differences is about eps * |loglik| / h^2.
  const double noise = std::numeric_limits<double>::epsilon() * std::abs(best.value) / 1e-10;
  fit.information = reassess_weak_directions(objective, best.x, best.value, best.hessian, noise);
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  fit.restarts_used = restarts_used;
  fit.max_gradient = best.max_gradient;
  fit.n_subjects = data.n_subjects();
  fit.n_observations = data.n_observations();

  try {
    const Eigen::MatrixXd vcov =
        invert_information(fit.information, theta_names(spec), reassessed_noise_floor(best.value));
    const int p = loglik.n_mean();
    fit.vcov_mean_params = 0.5 * (vcov.topLeftCorner(p, p) + vcov.topLeftCorner(p, p).transpose());
  } catch (const SingularInformationError& e) {
    fit.information_singular = true;
    fit.null_direction = e.direction();
  }
  return fit;
}

StandardErrors standard_errors(const FitResult& fit) {
  if (!fit.converged) throw ContractError("standard errors need a converged fit");
  if (fit.information_singular) {
    throw SingularInformationError(fit.null_direction,
                                   "information matrix is singular; null direction dominated by " +
                                       fit.null_direction);
  }
  StandardErrors out;
  out.names = fit.spec.parameter_names();
  out.vcov = fit.vcov_mean_params;
  out.se = out.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace pmrm
