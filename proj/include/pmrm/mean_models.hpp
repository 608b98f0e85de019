#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmrm/interpolation.hpp"
#include "pmrm/trial_data.hpp"

namespace pmrm {

enum class Variant {
  clda,
  prop_decline,
  time_pmrm,
  prop_slowing,
  delay_general,
  delay_constant,
  delay_two_param,
  prop_slowing_with_improvement,
  prop_slowing_subgroup,
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

// How the effect parameter acts on the placebo trajectory.
enum class EffectFamily { none, outcome_scale, time_scale, time_shift };
EffectFamily effect_family(Variant v);

// No-effect value of the treatment parameters: 1 for outcome- and time-scale
// families, 0 for delays.
double null_effect_value(Variant v);

struct MeanModelSpec {
  Variant variant = Variant::clda;
  InterpolationKind interpolation = InterpolationKind::natural_cubic;
  VisitSchedule schedule{std::vector<double>{0.0, 1.0}};
  // Scheduled visit times that carry an additive improvement term (both arms).
  std::vector<double> improvement_times;
  // First visit index j' at which the maximal delay applies (delay_two_param).
  std::optional<int> plateau_visit;

  // Throws ContractError on an inconsistent spec.
  void validate() const;

  // Treatment-parameter count k for this variant.
  int n_beta() const;
  int n_delta() const { return static_cast<int>(improvement_times.size()); }
  bool has_rho() const { return variant == Variant::prop_slowing_subgroup; }
  int n_clda_active() const { return variant == Variant::clda ? schedule.post_baseline() : 0; }
  // Total number of mean-structure parameters.
  int n_mean_parameters() const;
  // Human-readable slot names in flat order, e.g. "alpha[0]", "beta[5]".
  std::vector<std::string> parameter_names() const;
};

// Mean-structure parameters. Flat order: alpha, clda_active, beta, delta, rho.
struct ParameterVector {
  Eigen::VectorXd alpha;        // alpha[0] pooled baseline, alpha[1..m] placebo means
  Eigen::VectorXd clda_active;  // active means at visits 1..m (clda only)
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  std::optional<double> rho;

  Eigen::VectorXd flatten() const;
  static ParameterVector unflatten(const MeanModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& flat);
  // Throws ContractError when the layout does not match `spec`.
  void check_layout(const MeanModelSpec& spec) const;
};

// Slot offsets of each block inside the flat vector.
struct ParameterLayout {
  int alpha = 0;
  int clda_active = 0;
  int beta = 0;
  int delta = 0;
  int rho = -1;
  int size = 0;
  static ParameterLayout of(const MeanModelSpec& spec);
};

// Coefficients V_ij over the augmented treatment vector. For the proportional
// and Time-PMRM variants slot 0 is the fixed entry 1 of (1, beta...); for the
// delay variants the vector is beta itself. The effect applied to the placebo
// trajectory is dot(coefficients, augmented).
struct DesignVector {
  std::vector<double> coefficients;
  bool engages(int slot) const {
    return slot >= 0 && slot < static_cast<int>(coefficients.size()) &&
           coefficients[static_cast<std::size_t>(slot)] != 0.0;
  }
};

DesignVector design_vector(const MeanModelSpec& spec, Arm arm, std::optional<Group> group,
                           int visit);

// Augmented treatment vector matching design_vector's slots.
Eigen::VectorXd augmented_beta(const MeanModelSpec& spec, const ParameterVector& params);

// Mean function for a fixed parameter vector; builds the placebo interpolant once.
// `spec` must outlive the object.
class MeanFunction {
 public:
  MeanFunction(const MeanModelSpec& spec, const ParameterVector& params);

  double operator()(Arm arm, std::optional<Group> group, int visit, double t) const;
  const Interpolant& placebo_trajectory() const { return f0_; }

 private:
  const MeanModelSpec& spec_;
  ParameterVector params_;
  Interpolant f0_;
  Eigen::VectorXd augmented_;
};

double mean_value(const MeanModelSpec& spec, const ParameterVector& params, Arm arm,
                  std::optional<Group> group, int visit, double t);

// Starting values: per-visit placebo means (baseline pooled), no-effect treatment
// parameters, zero covariate terms. Throws ValidationError naming a visit
// without placebo observations.
ParameterVector initial_parameters(const MeanModelSpec& spec, const TrialDataset& data);

}  // namespace pmrm
