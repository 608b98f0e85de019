#include "pmrm/simulation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmrm/errors.hpp"
#include "pmrm/interpolation.hpp"
#include "pmrm/rng.hpp"

namespace pmrm {

namespace {

std::string make_id(char prefix, std::size_t k) {
  std::string digits = std::to_string(k);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Linear interpolation through the subject's own observations, constant
// outside the observed span.
double subject_trajectory(const SubjectRecord& s, double t) {
  const auto& obs = s.observations;
  if (t <= obs.front().time) return obs.front().value;
  if (t >= obs.back().time) return obs.back().value;
  for (std::size_t k = 1; k < obs.size(); ++k) {
    if (t <= obs[k].time) {
      const double w = (t - obs[k - 1].time) / (obs[k].time - obs[k - 1].time);
      return obs[k - 1].value + w * (obs[k].value - obs[k - 1].value);
    }
  }
  return obs.back().value;
}

double delayed_time(double t) { return t - std::min(t, kDelayBuildUpWeeks) / kDelayBuildUpWeeks * kDelayWeeks; }

}  // namespace

TrialDataset generate_mvn_trial(const VisitSchedule& schedule, const Eigen::MatrixXd& covariance,
                                const MeanProfile& means, const MvnTrialOptions& options,
                                std::uint64_t seed) {
  const int d = schedule.size();
  if (covariance.rows() != d || covariance.cols() != d) {
    throw ValidationError("covariance dimension does not match the schedule");
  }
  if (options.n_per_arm < 1) throw ValidationError("n_per_arm must be at least 1");
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success || !covariance.isApprox(covariance.transpose())) {
    throw ValidationError("generating covariance is not symmetric positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();

  auto rng = make_rng(seed);
  std::vector<SubjectRecord> subjects;
  subjects.reserve(2 * static_cast<std::size_t>(options.n_per_arm));
  Eigen::VectorXd z(d);
  for (const Arm arm : {Arm::placebo, Arm::active}) {
    for (int k = 0; k < options.n_per_arm; ++k) {
      SubjectRecord s;
      s.subject_id = make_id(arm == Arm::placebo ? 'P' : 'A', static_cast<std::size_t>(k + 1));
      s.arm = arm;
      if (options.assign_subgroups) s.group = k % 2 == 0 ? Group::group1 : Group::group2;
      const Eigen::VectorXd mu = means(arm, s.group);
      if (mu.size() != d) throw ValidationError("mean profile length does not match the schedule");
      for (int j = 0; j < d; ++j) z[j] = standard_normal(rng);
      const Eigen::VectorXd y = mu + L * z;
      for (int j = 0; j < d; ++j) s.observations.push_back({j, schedule.time(j), y[j]});
      subjects.push_back(std::move(s));
    }
  }
  return TrialDataset(schedule, std::move(subjects));
}

// --- 36-month scenarios ------------------------------------------------------

std::string_view to_string(Cs1Effect effect) {
  switch (effect) {
    case Cs1Effect::none: return "none";
    case Cs1Effect::stable_symptomatic: return "stable_symptomatic";
    case Cs1Effect::fading_symptomatic: return "fading_symptomatic";
    case Cs1Effect::reduced_decline_20: return "reduced_decline_20";
    case Cs1Effect::stable_delay_4m: return "stable_delay_4m";
    case Cs1Effect::slowed_20: return "slowed_20";
    case Cs1Effect::increasing_slowing: return "increasing_slowing";
  }
  return "none";
}

const std::vector<Cs1Effect>& all_cs1_effects() {
  static const std::vector<Cs1Effect> all = {
      Cs1Effect::none,          Cs1Effect::stable_symptomatic, Cs1Effect::fading_symptomatic,
      Cs1Effect::reduced_decline_20, Cs1Effect::stable_delay_4m, Cs1Effect::slowed_20,
      Cs1Effect::increasing_slowing};
  return all;
}

Cs1Effect parse_cs1_effect(std::string_view text) {
  for (const auto e : all_cs1_effects()) {
    if (to_string(e) == text) return e;
  }
  throw ValidationError("unknown effect '" + std::string(text) + "'");
}

VisitSchedule cs1_schedule() { return VisitSchedule({0.0, 6.0, 12.0, 18.0, 24.0, 36.0}); }

Eigen::VectorXd cs1_placebo_means() {
  Eigen::VectorXd mu(6);
  mu << 19.6, 20.5, 20.9, 22.7, 23.8, 27.4;
  return mu;
}

Eigen::MatrixXd cs1_covariance() {
  Eigen::MatrixXd r(6, 6);
  r << 45.1, 40.0, 45.1, 54.9, 53.6, 60.8,  //
      40.0, 57.8, 54.4, 66.3, 64.1, 74.7,   //
      45.1, 54.4, 72.0, 80.0, 77.6, 93.1,   //
      54.9, 66.3, 80.0, 109.8, 99.3, 121.7, //
      53.6, 64.1, 77.6, 99.3, 111.4, 127.8, //
      60.8, 74.7, 93.1, 121.7, 127.8, 191.4;
  return r;
}

Eigen::VectorXd active_means_for(Cs1Effect effect, const Eigen::VectorXd& placebo,
                                 const VisitSchedule& schedule) {
  const int d = schedule.size();
  if (placebo.size() != d) throw ValidationError("placebo means do not match the schedule");
  const auto& t = schedule.times();
  const auto values = to_std(placebo);
  const Interpolant theta(InterpolationKind::linear, t, values);

  // Offsets and time shifts are tabulated for the six-visit schedule.
  const auto require_six = [&] {
    if (d != 6) throw ValidationError(std::string(to_string(effect)) + " needs six visits");
  };
  Eigen::VectorXd out(d);
  switch (effect) {
    case Cs1Effect::none:
      return placebo;
    case Cs1Effect::stable_symptomatic: {
      require_six();
      Eigen::VectorXd off(6);
      off << 0, 0.39, 0.78, 0.78, 0.78, 0.78;
      return placebo - off;
    }
    case Cs1Effect::fading_symptomatic: {
      require_six();
      Eigen::VectorXd off(6);
      off << 0, 0.39, 0.78, 0.78, 0.52, 0.39;
      return placebo - off;
    }
    case Cs1Effect::reduced_decline_20:
      return (0.8 * (placebo.array() - placebo[0]) + placebo[0]).matrix();
    case Cs1Effect::stable_delay_4m: {
      require_six();
      const double shift[6] = {0, 1, 2, 4, 4, 4};
      for (int j = 0; j < d; ++j) out[j] = theta(t[static_cast<std::size_t>(j)] - shift[j]);
      return out;
    }
    case Cs1Effect::slowed_20:
      for (int j = 0; j < d; ++j) out[j] = theta(0.8 * t[static_cast<std::size_t>(j)]);
      return out;
    case Cs1Effect::increasing_slowing: {
      require_six();
      const double shift[6] = {0, 0.5, 1, 2.5, 2.5, 7.2};
      for (int j = 0; j < d; ++j) out[j] = theta(t[static_cast<std::size_t>(j)] - shift[j]);
      return out;
    }
  }
  return placebo;
}

Eigen::VectorXd cs1_active_means(Cs1Effect effect) {
  return active_means_for(effect, cs1_placebo_means(), cs1_schedule());
}

Eigen::VectorXd Cs1Scenario::active_means() const {
  return active_means_for(effect, mean_placebo, schedule);
}

TrialDataset generate_cs1_trial(const Cs1Scenario& scenario, std::uint64_t seed) {
  const Eigen::VectorXd placebo = scenario.mean_placebo;
  const Eigen::VectorXd active = scenario.active_means();
  return generate_mvn_trial(
      scenario.schedule, scenario.covariance,
      [&](Arm arm, std::optional<Group>) { return arm == Arm::placebo ? placebo : active; },
      {.n_per_arm = scenario.n_per_arm}, seed);
}

// --- pool resampling ---------------------------------------------------------

std::string_view to_string(PoolEffect effect) {
  switch (effect) {
    case PoolEffect::none: return "none";
    case PoolEffect::stable_benefit: return "stable_benefit";
    case PoolEffect::reduced_decline_20: return "reduced_decline_20";
    case PoolEffect::delay_16w: return "delay_16w";
    case PoolEffect::slowed_20: return "slowed_20";
  }
  return "none";
}

PoolEffect parse_pool_effect(std::string_view text) {
  for (const auto e : {PoolEffect::none, PoolEffect::stable_benefit, PoolEffect::reduced_decline_20,
                       PoolEffect::delay_16w, PoolEffect::slowed_20}) {
    if (to_string(e) == text) return e;
  }
  throw ValidationError("unknown pool effect '" + std::string(text) + "'");
}

std::string_view to_string(EffectImplementation impl) {
  return impl == EffectImplementation::mean_level ? "mean_level" : "subject_level";
}

EffectImplementation parse_effect_implementation(std::string_view text) {
  if (text == "mean_level") return EffectImplementation::mean_level;
  if (text == "subject_level") return EffectImplementation::subject_level;
  throw ValidationError("unknown effect implementation '" + std::string(text) + "'");
}

std::string_view to_string(BaselineScaling scaling) {
  return scaling == BaselineScaling::all_visits ? "all" : "change";
}

BaselineScaling parse_baseline_scaling(std::string_view text) {
  if (text == "all") return BaselineScaling::all_visits;
  if (text == "change") return BaselineScaling::change_from_baseline;
  throw ValidationError("unknown baseline scaling '" + std::string(text) + "'");
}

VisitSchedule cs2_schedule() { return VisitSchedule({0.0, 28.0, 52.0, 80.0}); }

Eigen::VectorXd change_from_baseline_means(const SubjectPool& pool) {
  const int m = pool.schedule().post_baseline();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(m);
  for (const auto& s : pool.subjects()) {
    if (!s.has_baseline()) continue;
    const double y0 = s.observations.front().value;
    for (const auto& o : s.observations) {
      if (o.visit == 0) continue;
      sum[o.visit - 1] += o.value - y0;
      count[o.visit - 1] += 1.0;
    }
  }
  for (int j = 0; j < m; ++j) {
    if (count[j] == 0.0) {
      throw ValidationError("no subject has both baseline and visit " + std::to_string(j + 1));
    }
  }
  return sum.cwiseQuotient(count);
}

double mean_change_at(const Eigen::VectorXd& deltas, const VisitSchedule& schedule, double t) {
  if (deltas.size() != schedule.post_baseline()) {
    throw ContractError("mean changes must have one entry per post-baseline visit");
  }
  std::vector<double> values(1, 0.0);
  values.insert(values.end(), deltas.data(), deltas.data() + deltas.size());
  return Interpolant(InterpolationKind::linear, schedule.times(), values)(t);
}

SubjectRecord apply_effect_mean_level(const SubjectRecord& subject, PoolEffect effect,
                                      const Eigen::VectorXd& deltas,
                                      const VisitSchedule& schedule) {
  if (deltas.size() != schedule.post_baseline()) {
    throw ContractError("mean changes must have one entry per post-baseline visit");
  }
  if (effect == PoolEffect::none) return subject;
  std::vector<double> knots_values(1, 0.0);
  knots_values.insert(knots_values.end(), deltas.data(), deltas.data() + deltas.size());
  const Interpolant theta(InterpolationKind::linear, schedule.times(), knots_values);
  const double final_change = deltas[deltas.size() - 1];

  SubjectRecord out = subject;
  for (auto& o : out.observations) {
    if (o.visit == 0) continue;
    const double tj = schedule.time(o.visit);
    const double dj = deltas[o.visit - 1];
    double shift = 0.0;
    switch (effect) {
      case PoolEffect::none: break;
      case PoolEffect::stable_benefit: shift = 0.2 * final_change; break;
      case PoolEffect::reduced_decline_20: shift = 0.2 * dj; break;
      case PoolEffect::delay_16w: shift = dj - theta(delayed_time(tj)); break;
      case PoolEffect::slowed_20: shift = dj - theta(0.8 * tj); break;
    }
    o.value -= shift;
  }
  return out;
}

SubjectRecord apply_effect_subject_level(const SubjectRecord& subject, PoolEffect effect,
                                         BaselineScaling scaling) {
  if (effect == PoolEffect::stable_benefit) {
    throw ContractError("stable_benefit has no subject-level implementation");
  }
  if (effect == PoolEffect::none || subject.observations.empty()) return subject;
  SubjectRecord out = subject;
  if (effect == PoolEffect::reduced_decline_20) {
    // Without a baseline the first observation serves as the reference.
    const double ref = subject.observations.front().value;
    for (auto& o : out.observations) {
      o.value = scaling == BaselineScaling::all_visits ? 0.8 * o.value
                                                       : ref + 0.8 * (o.value - ref);
    }
    return out;
  }
  for (auto& o : out.observations) {
    const double t = effect == PoolEffect::delay_16w ? delayed_time(o.time) : 0.8 * o.time;
    o.value = subject_trajectory(subject, t);
  }
  return out;
}

void PoolScenario::validate() const {
  if (!pool) throw ContractError("pool scenario has no pool");
  if (n_per_arm < 1) throw ContractError("n_per_arm must be at least 1");
  if (deltas.size() != pool->schedule().post_baseline()) {
    throw ContractError("mean changes must have one entry per post-baseline visit");
  }
  if (implementation == EffectImplementation::subject_level &&
      effect == PoolEffect::stable_benefit) {
    throw ContractError("stable_benefit has no subject-level implementation");
  }
}

TrialDataset resample_pool(const PoolScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const auto& pool = *scenario.pool;
  auto rng = make_rng(seed);
  boost::random::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const auto n = static_cast<std::size_t>(scenario.n_per_arm);
  std::vector<SubjectRecord> subjects;
  subjects.reserve(2 * n);
  for (std::size_t k = 0; k < 2 * n; ++k) {
    const auto& source = pool.subjects()[pick(rng)];
    const bool active = k >= n;
    SubjectRecord s;
    if (!active) {
      s = source;
    } else if (scenario.implementation == EffectImplementation::mean_level) {
      s = apply_effect_mean_level(source, scenario.effect, scenario.deltas, pool.schedule());
    } else {
      s = apply_effect_subject_level(source, scenario.effect, scenario.scaling);
    }
    s.subject_id = make_id('R', k + 1);
    s.arm = active ? Arm::active : Arm::placebo;
    s.group.reset();
    subjects.push_back(std::move(s));
  }
  return TrialDataset(pool.schedule(), std::move(subjects), pool.time_mode());
}

SubjectPool synthetic_cs2_pool(const SyntheticPoolOptions& options) {
  const VisitSchedule schedule = cs2_schedule();
  const int d = schedule.size();
  const auto& kept = options.retained;
  if (static_cast<int>(kept.size()) != d || static_cast<int>(options.visit_means.size()) != d ||
      static_cast<int>(options.mean_changes.size()) != d - 1) {
    throw ValidationError("synthetic pool options must cover every visit");
  }
  for (int j = 1; j < d; ++j) {
    if (kept[j] > kept[j - 1] || kept[j] == 0) {
      throw ValidationError("retained counts must be positive and non-increasing");
    }
  }
  const std::size_t n = kept[0];
  auto rng = make_rng(options.seed);

  // Random-intercept, random-rate trajectories around the target changes.
  std::vector<double> intercept(n), rate(n);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    intercept[i] = 1.6 * standard_normal(rng);
    rate[i] = 1.0 + 1.0 * standard_normal(rng);
    const auto r = static_cast<Eigen::Index>(i);
    y(r, 0) = intercept[i];
    for (int j = 1; j < d; ++j) {
      y(r, j) = intercept[i] + options.mean_changes[static_cast<std::size_t>(j - 1)] * rate[i] +
                0.8 * standard_normal(rng);
    }
  }

  // Subjects with higher baseline scores tend to leave earlier; the rate of
  // change does not affect dropout. cohort[i] = last observed visit.
  std::vector<double> propensity(n);
  for (std::size_t i = 0; i < n; ++i) propensity[i] = intercept[i] + 1.6 * standard_normal(rng);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return propensity[a] > propensity[b]; });
  std::vector<int> cohort(n, d - 1);
  {
    std::size_t pos = 0;
    for (int j = 0; j < d - 1; ++j) {
      const std::size_t leaving = kept[static_cast<std::size_t>(j)] - kept[static_cast<std::size_t>(j + 1)];
      for (std::size_t c = 0; c < leaving; ++c) cohort[order[pos++]] = j;
    }
  }

  // Baseline mean required among subjects still observed at visit j.
  std::vector<double> baseline_target(static_cast<std::size_t>(d));
  baseline_target[0] = options.visit_means[0];
  for (int j = 1; j < d; ++j) {
    baseline_target[static_cast<std::size_t>(j)] =
        options.visit_means[static_cast<std::size_t>(j)] -
        options.mean_changes[static_cast<std::size_t>(j - 1)];
  }
  // Shift whole trajectories per cohort so every nested set hits its target.
  for (int k = 0; k < d; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double in_set = static_cast<double>(kept[ku]);
    const double next = k + 1 < d ? static_cast<double>(kept[ku + 1]) : 0.0;
    const double next_target = k + 1 < d ? baseline_target[ku + 1] : 0.0;
    const double size = in_set - next;
    if (size == 0.0) continue;
    const double want = (in_set * baseline_target[ku] - next * next_target) / size;
    double have = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cohort[i] == k) have += y(static_cast<Eigen::Index>(i), 0);
    }
    have /= size;
    for (std::size_t i = 0; i < n; ++i) {
      if (cohort[i] == k) y.row(static_cast<Eigen::Index>(i)).array() += want - have;
    }
  }
  // Then shift each post-baseline visit so its available-case mean is exact.
  for (int j = 1; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cohort[i] >= j) sum += y(static_cast<Eigen::Index>(i), j);
    }
    const double shift =
        options.visit_means[static_cast<std::size_t>(j)] - sum / static_cast<double>(kept[static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < n; ++i) {
      if (cohort[i] >= j) y(static_cast<Eigen::Index>(i), j) += shift;
    }
  }

  std::vector<SubjectRecord> subjects;
  subjects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord s;
    s.subject_id = make_id('H', i + 1);
    s.arm = Arm::placebo;
    for (int j = 0; j <= cohort[i]; ++j) {
      s.observations.push_back({j, schedule.time(j), y(static_cast<Eigen::Index>(i), j)});
    }
    subjects.push_back(std::move(s));
  }
  return SubjectPool(schedule, std::move(subjects));
}

// --- 78-week covariate scenarios ---------------------------------------------

Eigen::MatrixXd Cs3Truth::covariance() const {
  const int d = schedule.size();
  Eigen::MatrixXd r(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const double ta = schedule.time(a), tb = schedule.time(b);
      const double corr =
          a == b ? 1.0 : 0.6 + 0.35 * std::exp(-std::abs(ta - tb) / 40.0);
      const double sa = 6.0 + 3.0 * ta / schedule.last_time();
      const double sb = 6.0 + 3.0 * tb / schedule.last_time();
      r(a, b) = corr * sa * sb;
    }
  }
  return r;
}

TrialDataset generate_cs3_improvement_trial(const Cs3Truth& truth, int n_per_arm,
                                            std::uint64_t seed) {
  const int d = truth.schedule.size();
  if (truth.improvement_times.size() != truth.improvement_effects.size()) {
    throw ValidationError("each improvement time needs one effect");
  }
  const auto profile = [&](Arm arm, std::optional<Group>) {
    const double scale = arm == Arm::active ? truth.beta : 1.0;
    Eigen::VectorXd mu(d);
    for (int j = 0; j < d; ++j) {
      const double t = truth.schedule.time(j);
      mu[j] = truth.natural_history(scale * t);
      for (std::size_t k = 0; k < truth.improvement_times.size(); ++k) {
        if (std::abs(truth.improvement_times[k] - t) <= 1e-9) mu[j] += truth.improvement_effects[k];
      }
    }
    return mu;
  };
  return generate_mvn_trial(truth.schedule, truth.covariance(), profile,
                            {.n_per_arm = n_per_arm}, seed);
}

TrialDataset generate_cs3_subgroup_trial(const Cs3Truth& truth, int n_per_arm,
                                         std::uint64_t seed) {
  const int d = truth.schedule.size();
  const auto profile = [&](Arm arm, std::optional<Group> group) {
    double scale = arm == Arm::active ? truth.beta : 1.0;
    if (group == Group::group2) scale *= 1.0 - truth.rho;
    Eigen::VectorXd mu(d);
    for (int j = 0; j < d; ++j) mu[j] = truth.natural_history(scale * truth.schedule.time(j));
    return mu;
  };
  return generate_mvn_trial(truth.schedule, truth.covariance(), profile,
                            {.n_per_arm = n_per_arm, .assign_subgroups = true}, seed);
}

}  // namespace pmrm
