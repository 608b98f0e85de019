#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "pmrm/trial_data.hpp"

namespace pmrm {

// ---------------------------------------------------------------------------
// Multivariate normal trials

// Mean vector over all visits for a subject in the given arm and subgroup.
using MeanProfile = std::function<Eigen::VectorXd(Arm, std::optional<Group>)>;

struct MvnTrialOptions {
  int n_per_arm = 300;
  // Alternate subjects between group1 and group2 within each arm.
  bool assign_subgroups = false;
};

// Complete trajectories y = mean + L z with L the Cholesky factor of
// `covariance`. Placebo subjects are drawn first. Throws ValidationError when
// the covariance is not positive definite or dimensions disagree.
TrialDataset generate_mvn_trial(const VisitSchedule& schedule, const Eigen::MatrixXd& covariance,
                                const MeanProfile& means, const MvnTrialOptions& options,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Simulated trial on the 36-month schedule (0, 6, 12, 18, 24, 36)

enum class Cs1Effect {
  none,
  stable_symptomatic,
  fading_symptomatic,
  reduced_decline_20,
  stable_delay_4m,
  slowed_20,
  increasing_slowing,
};

std::string_view to_string(Cs1Effect effect);
Cs1Effect parse_cs1_effect(std::string_view text);
const std::vector<Cs1Effect>& all_cs1_effects();

VisitSchedule cs1_schedule();
Eigen::VectorXd cs1_placebo_means();
Eigen::MatrixXd cs1_covariance();

// Active-arm means implied by `effect` for any placebo mean vector on `schedule`.
// Time transforms use the linear interpolant of the placebo means. The
// symptomatic effects lower the score (benefit on a scale where higher is worse).
Eigen::VectorXd active_means_for(Cs1Effect effect, const Eigen::VectorXd& placebo,
                                 const VisitSchedule& schedule);
Eigen::VectorXd cs1_active_means(Cs1Effect effect);

struct Cs1Scenario {
  Cs1Effect effect = Cs1Effect::none;
  int n_per_arm = 300;
  Eigen::VectorXd mean_placebo = cs1_placebo_means();
  Eigen::MatrixXd covariance = cs1_covariance();
  VisitSchedule schedule = cs1_schedule();

  Eigen::VectorXd active_means() const;
};

TrialDataset generate_cs1_trial(const Cs1Scenario& scenario, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Resampling from a pool of historical placebo subjects (schedule in weeks)

enum class PoolEffect { none, stable_benefit, reduced_decline_20, delay_16w, slowed_20 };
enum class EffectImplementation { mean_level, subject_level };
// Subject-level reduced decline either scales every value or only the change
// from the subject's baseline.
enum class BaselineScaling { all_visits, change_from_baseline };

std::string_view to_string(PoolEffect effect);
PoolEffect parse_pool_effect(std::string_view text);
std::string_view to_string(EffectImplementation impl);
EffectImplementation parse_effect_implementation(std::string_view text);
std::string_view to_string(BaselineScaling scaling);
BaselineScaling parse_baseline_scaling(std::string_view text);

inline constexpr double kDelayWeeks = 16.0;
inline constexpr double kDelayBuildUpWeeks = 40.0;

VisitSchedule cs2_schedule();

// Per-visit mean change from baseline over subjects observed at both baseline
// and that visit. Throws ValidationError for a visit without such subjects.
Eigen::VectorXd change_from_baseline_means(const SubjectPool& pool);

// Linear interpolant through (0, 0) and (t_j, deltas_j) for j >= 1.
double mean_change_at(const Eigen::VectorXd& deltas, const VisitSchedule& schedule, double t);

// Shifts post-baseline values by the population-level effect. The baseline
// value is never changed.
SubjectRecord apply_effect_mean_level(const SubjectRecord& subject, PoolEffect effect,
                                      const Eigen::VectorXd& deltas,
                                      const VisitSchedule& schedule);

// Applies the effect to the subject's own trajectory. Time transforms evaluate
// the linear interpolant of the subject's observations, held constant outside
// the observed span. Throws ContractError for stable_benefit, which has no
// subject-level form.
SubjectRecord apply_effect_subject_level(const SubjectRecord& subject, PoolEffect effect,
                                         BaselineScaling scaling = BaselineScaling::all_visits);

struct PoolScenario {
  std::shared_ptr<const SubjectPool> pool;
  PoolEffect effect = PoolEffect::none;
  EffectImplementation implementation = EffectImplementation::mean_level;
  int n_per_arm = 300;
  Eigen::VectorXd deltas;  // per post-baseline visit
  BaselineScaling scaling = BaselineScaling::all_visits;

  // Throws ContractError on an inconsistent scenario.
  void validate() const;
};

// 2 * n_per_arm draws with replacement; the first n_per_arm form the placebo
// arm and the rest the active arm, which receives the scenario's effect.
TrialDataset resample_pool(const PoolScenario& scenario, std::uint64_t seed);

struct SyntheticPoolOptions {
  std::vector<std::size_t> retained = {1024, 889, 833, 769};  // subjects observed per visit
  std::vector<double> visit_means = {5.18, 5.69, 6.43, 7.01};  // available-case means
  std::vector<double> mean_changes = {0.68, 1.46, 2.20};       // change-from-baseline means
  std::uint64_t seed = 20221108;
};

// Synthetic stand-in for a historical placebo pool on cs2_schedule(), with
// monotone dropout. Values are calibrated per dropout cohort so that the
// available-case means and the change-from-baseline means equal the options.
SubjectPool synthetic_cs2_pool(const SyntheticPoolOptions& options = {});

// ---------------------------------------------------------------------------
// 78-week covariate scenarios (weeks 0, 12, 26, 39, 52, 65, 78)

struct Cs3Truth {
  VisitSchedule schedule = VisitSchedule({0.0, 12.0, 26.0, 39.0, 52.0, 65.0, 78.0});
  double beta = 0.7;
  double rho = 0.1;
  std::vector<double> improvement_times = {12.0, 26.0};
  std::vector<double> improvement_effects = {-1.0, -0.8};

  // Hypothetical natural-history curve of the placebo arm.
  double natural_history(double t) const { return 22.0 + 0.04 * t + 0.0006 * t * t; }
  Eigen::MatrixXd covariance() const;
};

// Proportional slowing plus an identical additive improvement in both arms.
TrialDataset generate_cs3_improvement_trial(const Cs3Truth& truth, int n_per_arm,
                                            std::uint64_t seed);
// Proportional slowing where group2 progresses at rate (1 - rho); half of each
// arm is in group2.
TrialDataset generate_cs3_subgroup_trial(const Cs3Truth& truth, int n_per_arm,
                                         std::uint64_t seed);

}  // namespace pmrm
