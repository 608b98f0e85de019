#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>

#include "pmrm/estimation.hpp"

namespace pmrm {

struct TestResult {
  double statistic = 0.0;
  std::optional<int> df;
  std::optional<double> p_one_sided;
  double p_two_sided = 1.0;
  std::optional<double> estimate;
  std::optional<double> se;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
};

// Which side of the null value counts as treatment benefit.
enum class BenefitSide { below_null, above_null };

inline constexpr double kNormalQuantile975 = 1.959964;

// A linear combination of the mean parameters of a fit.
struct LinearContrast {
  std::string name;
  Eigen::VectorXd weights;  // over the flattened mean parameters
};

// Resolves a selector to a contrast. Accepts any name from
// MeanModelSpec::parameter_names() and, for clda fits, "contrast[j]" meaning
// alpha_active[j] - alpha[j]. Throws ContractError for unknown selectors.
LinearContrast select_parameter(const FitResult& fit, std::string_view selector);

// Benefit side for a selector: outcome-scale contrasts benefit when negative
// (when positive if `higher_is_better`); multiplicative treatment parameters
// when below 1; delays when above 0.
BenefitSide benefit_side(const FitResult& fit, std::string_view selector,
                         bool higher_is_better = false);

// z-test from an estimate and its standard error.
TestResult wald_from_estimate(double estimate, double se, double null_value, BenefitSide side);

// Throws ContractError for unconverged fits or unknown selectors and
// SingularInformationError when the fit's information is singular.
TestResult wald_test(const FitResult& fit, std::string_view selector, double null_value,
                     BenefitSide side);

// Trapezoidal area between the fitted arm trajectories of a clda fit.
TestResult auc_contrast(const FitResult& clda_fit, bool higher_is_better = false);

// Joint Wald chi-square of all post-baseline arm contrasts of a clda fit.
TestResult type3_treatment_test(const FitResult& clda_fit);

// Likelihood ratio of proportional slowing (restricted) against the Time-PMRM.
// Throws OptimizerFailure when the restricted fit beats the general one by
// more than 1e-4 on the log-likelihood.
TestResult lrt_proportional_slowing(const FitResult& restricted, const FitResult& general);

}  // namespace pmrm
