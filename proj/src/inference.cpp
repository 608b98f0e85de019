#include "pmrm/inference.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "pmrm/errors.hpp"

namespace pmrm {

namespace {

const Eigen::MatrixXd& usable_vcov(const FitResult& fit) {
  if (!fit.converged) throw ContractError("inference needs a converged fit");
  if (fit.information_singular || fit.vcov_mean_params.size() == 0) {
    throw SingularInformationError(fit.null_direction,
                                   "information matrix is singular; null direction dominated by " +
                                       fit.null_direction);
  }
  return fit.vcov_mean_params;
}

void require_clda(const FitResult& fit, const char* what) {
  if (fit.spec.variant != Variant::clda) {
    throw ContractError(std::string(what) + " needs a clda fit, got " +
                        std::string(to_string(fit.spec.variant)));
  }
}

double chi2_upper(double statistic, int df) {
  if (statistic <= 0.0) return 1.0;
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

}  // namespace

LinearContrast select_parameter(const FitResult& fit, std::string_view selector) {
  const auto names = fit.spec.parameter_names();
  const auto n = static_cast<Eigen::Index>(names.size());
  LinearContrast out;
  out.name = std::string(selector);
  out.weights = Eigen::VectorXd::Zero(n);

  const auto index_of = [&](const std::string& name) -> Eigen::Index {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<Eigen::Index>(it - names.begin());
  };

  constexpr std::string_view prefix = "contrast[";
  if (selector.starts_with(prefix) && selector.ends_with("]")) {
    require_clda(fit, "an arm contrast");
    const std::string j(selector.substr(prefix.size(), selector.size() - prefix.size() - 1));
    const auto active = index_of("alpha_active[" + j + "]");
    const auto placebo = index_of("alpha[" + j + "]");
    if (active < 0 || placebo < 0) {
      throw ContractError("no arm contrast '" + std::string(selector) + "' in this fit");
    }
    out.weights[active] = 1.0;
    out.weights[placebo] = -1.0;
    return out;
  }
  const auto k = index_of(std::string(selector));
  if (k < 0) throw ContractError("parameter '" + std::string(selector) + "' is not in this fit");
  out.weights[k] = 1.0;
  return out;
}

BenefitSide benefit_side(const FitResult& fit, std::string_view selector, bool higher_is_better) {
  const bool treatment_parameter = selector.starts_with("beta");
  if (!treatment_parameter) {
    return higher_is_better ? BenefitSide::above_null : BenefitSide::below_null;
  }
  return effect_family(fit.spec.variant) == EffectFamily::time_shift ? BenefitSide::above_null
                                                                     : BenefitSide::below_null;
}

TestResult wald_from_estimate(double estimate, double se, double null_value, BenefitSide side) {
  TestResult r;
  r.estimate = estimate;
  r.se = se;
  r.ci_low = estimate - kNormalQuantile975 * se;
  r.ci_high = estimate + kNormalQuantile975 * se;
  const boost::math::normal std_normal;
  if (!(se > 0.0) || !std::isfinite(se)) {
    r.statistic = 0.0;
    r.p_one_sided = 0.5;
    r.p_two_sided = 1.0;
    if (std::isinf(se)) return r;
    throw ContractError("Wald test needs a positive standard error");
  }
  const double z = (estimate - null_value) / se;
  r.statistic = z;
  const double lower = boost::math::cdf(std_normal, z);
  const double upper = boost::math::cdf(boost::math::complement(std_normal, z));
  r.p_one_sided = side == BenefitSide::below_null ? lower : upper;
  r.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper));
  return r;
}

TestResult wald_test(const FitResult& fit, std::string_view selector, double null_value,
                     BenefitSide side) {
  const auto contrast = select_parameter(fit, selector);
  const auto& vcov = usable_vcov(fit);
  const double estimate = contrast.weights.dot(fit.estimates.flatten());
  const double var = contrast.weights.dot(vcov * contrast.weights);
  return wald_from_estimate(estimate, std::sqrt(std::max(var, 0.0)), null_value, side);
}

TestResult auc_contrast(const FitResult& clda_fit, bool higher_is_better) {
  require_clda(clda_fit, "AUC contrast");
  const auto& t = clda_fit.spec.schedule.times();
  const int m = clda_fit.spec.schedule.post_baseline();
  const auto layout = ParameterLayout::of(clda_fit.spec);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size);
  // Baseline terms cancel between arms; each later visit gets its trapezoid weight.
  for (int j = 1; j <= m; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double right = j < m ? t[ju + 1] - t[ju] : 0.0;
    const double weight = 0.5 * ((t[ju] - t[ju - 1]) + right);
    w[layout.clda_active + j - 1] += weight;
    w[layout.alpha + j] -= weight;
  }
  const auto& vcov = usable_vcov(clda_fit);
  const double estimate = w.dot(clda_fit.estimates.flatten());
  const double var = w.dot(vcov * w);
  return wald_from_estimate(estimate, std::sqrt(std::max(var, 0.0)), 0.0,
                            higher_is_better ? BenefitSide::above_null : BenefitSide::below_null);
}

TestResult type3_treatment_test(const FitResult& clda_fit) {
  require_clda(clda_fit, "type-3 treatment test");
  const int m = clda_fit.spec.schedule.post_baseline();
  const auto layout = ParameterLayout::of(clda_fit.spec);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, layout.size);
  for (int j = 1; j <= m; ++j) {
    c(j - 1, layout.clda_active + j - 1) = 1.0;
    c(j - 1, layout.alpha + j) = -1.0;
  }
  const auto& vcov = usable_vcov(clda_fit);
  const Eigen::VectorXd est = c * clda_fit.estimates.flatten();
  const Eigen::MatrixXd v = c * vcov * c.transpose();
  const Eigen::LLT<Eigen::MatrixXd> llt(v);
  if (llt.info() != Eigen::Success) {
    throw SingularInformationError("contrast", "covariance of the arm contrasts is singular");
  }
  TestResult r;
  r.statistic = est.dot(llt.solve(est));
  r.df = m;
  r.p_two_sided = chi2_upper(r.statistic, m);
  return r;
}

TestResult lrt_proportional_slowing(const FitResult& restricted, const FitResult& general) {
  if (restricted.spec.variant != Variant::prop_slowing ||
      general.spec.variant != Variant::time_pmrm) {
    throw ContractError("LRT compares a prop_slowing fit against a time_pmrm fit");
  }
  if (!restricted.converged || !general.converged) {
    throw ContractError("LRT needs two converged fits");
  }
  if (restricted.n_subjects != general.n_subjects ||
      restricted.n_observations != general.n_observations ||
      !(restricted.spec.schedule == general.spec.schedule)) {
    throw ContractError("LRT fits must come from the same dataset");
  }
  const double raw = 2.0 * (general.loglik - restricted.loglik);
  if (raw < -1e-4) {
    throw OptimizerFailure("restricted model log-likelihood exceeds the general model's by " +
                           std::to_string(-raw / 2.0));
  }
  TestResult r;
  r.statistic = std::max(raw, 0.0);
  r.df = general.spec.n_beta() - restricted.spec.n_beta();
  r.p_two_sided = chi2_upper(r.statistic, *r.df);
  return r;
}

}  // namespace pmrm
