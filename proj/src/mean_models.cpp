#include "pmrm/mean_models.hpp"

#include <cmath>

#include "pmrm/errors.hpp"

namespace pmrm {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::clda:
      return "clda";
    case Variant::prop_decline:
      return "prop_decline";
    case Variant::time_pmrm:
      return "time_pmrm";
    case Variant::prop_slowing:
      return "prop_slowing";
    case Variant::delay_general:
      return "delay_general";
    case Variant::delay_constant:
      return "delay_constant";
    case Variant::delay_two_param:
      return "delay_two_param";
    case Variant::prop_slowing_with_improvement:
      return "prop_slowing_with_improvement";
    case Variant::prop_slowing_subgroup:
      return "prop_slowing_subgroup";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  for (const Variant v :
       {Variant::clda, Variant::prop_decline, Variant::time_pmrm, Variant::prop_slowing,
        Variant::delay_general, Variant::delay_constant, Variant::delay_two_param,
        Variant::prop_slowing_with_improvement, Variant::prop_slowing_subgroup}) {
    if (to_string(v) == text) return v;
  }
  throw ValidationError("unknown model variant '" + std::string(text) + "'");
}

EffectFamily effect_family(Variant v) {
  switch (v) {
    case Variant::clda:
      return EffectFamily::none;
    case Variant::prop_decline:
      return EffectFamily::outcome_scale;
    case Variant::delay_general:
    case Variant::delay_constant:
    case Variant::delay_two_param:
      return EffectFamily::time_shift;
    default:
      return EffectFamily::time_scale;
  }
}

double null_effect_value(Variant v) {
  return effect_family(v) == EffectFamily::time_shift ? 0.0 : 1.0;
}

void MeanModelSpec::validate() const {
  const int m = schedule.post_baseline();
  if (variant == Variant::delay_two_param) {
    if (!plateau_visit || *plateau_visit < 1 || *plateau_visit > m) {
      throw ContractError("delay_two_param needs a plateau visit in 1..m");
    }
  } else if (plateau_visit) {
    throw ContractError("plateau visit only applies to delay_two_param");
  }
  if (variant == Variant::prop_slowing_with_improvement) {
    for (const double t : improvement_times) {
      const auto v = schedule.visit_at(t);
      if (!v || *v == 0) {
        throw ContractError("improvement time " + std::to_string(t) +
                            " is not a post-baseline visit");
      }
    }
  } else if (!improvement_times.empty()) {
    throw ContractError("improvement terms only apply to prop_slowing_with_improvement");
  }
}

int MeanModelSpec::n_beta() const {
  const int m = schedule.post_baseline();
  switch (variant) {
    case Variant::clda:
      return 0;
    case Variant::time_pmrm:
    case Variant::delay_general:
      return m;
    case Variant::delay_two_param:
      return 2;
    default:
      return 1;
  }
}

int MeanModelSpec::n_mean_parameters() const { return ParameterLayout::of(*this).size; }

ParameterLayout ParameterLayout::of(const MeanModelSpec& spec) {
  ParameterLayout l;
  l.alpha = 0;
  l.clda_active = spec.schedule.size();
  l.beta = l.clda_active + spec.n_clda_active();
  l.delta = l.beta + spec.n_beta();
  l.size = l.delta + spec.n_delta();
  if (spec.has_rho()) l.rho = l.size++;
  return l;
}

std::vector<std::string> MeanModelSpec::parameter_names() const {
  std::vector<std::string> names;
  for (int j = 0; j < schedule.size(); ++j) names.push_back("alpha[" + std::to_string(j) + "]");
  for (int j = 1; j <= n_clda_active(); ++j) {
    names.push_back("alpha_active[" + std::to_string(j) + "]");
  }
  if (variant == Variant::time_pmrm || variant == Variant::delay_general) {
    for (int j = 1; j <= n_beta(); ++j) names.push_back("beta[" + std::to_string(j) + "]");
  } else if (variant == Variant::delay_two_param) {
    names.emplace_back("beta[1]");
    names.emplace_back("beta_max");
  } else if (n_beta() == 1) {
    names.emplace_back("beta");
  }
  for (const double t : improvement_times) {
    std::string label = std::to_string(t);
    label.erase(label.find_last_not_of('0') + 1);
    if (!label.empty() && label.back() == '.') label.pop_back();
    names.push_back("delta[t=" + label + "]");
  }
  if (has_rho()) names.emplace_back("rho");
  return names;
}

Eigen::VectorXd ParameterVector::flatten() const {
  const Eigen::Index n =
      alpha.size() + clda_active.size() + beta.size() + delta.size() + (rho ? 1 : 0);
  Eigen::VectorXd out(n);
  out << alpha, clda_active, beta, delta;
  if (rho) out[n - 1] = *rho;
  return out;
}

ParameterVector ParameterVector::unflatten(const MeanModelSpec& spec,
                                           const Eigen::Ref<const Eigen::VectorXd>& flat) {
  const auto l = ParameterLayout::of(spec);
  if (flat.size() != l.size) {
    throw ContractError("flat parameter vector has length " + std::to_string(flat.size()) +
                        ", expected " + std::to_string(l.size));
  }
  ParameterVector p;
  p.alpha = flat.segment(l.alpha, spec.schedule.size());
  p.clda_active = flat.segment(l.clda_active, spec.n_clda_active());
  p.beta = flat.segment(l.beta, spec.n_beta());
  p.delta = flat.segment(l.delta, spec.n_delta());
  if (l.rho >= 0) p.rho = flat[l.rho];
  return p;
}

void ParameterVector::check_layout(const MeanModelSpec& spec) const {
  const bool ok = alpha.size() == spec.schedule.size() &&
                  clda_active.size() == spec.n_clda_active() && beta.size() == spec.n_beta() &&
                  delta.size() == spec.n_delta() && rho.has_value() == spec.has_rho();
  if (!ok) {
    throw ContractError("parameter layout does not match variant " +
                        std::string(to_string(spec.variant)));
  }
}

DesignVector design_vector(const MeanModelSpec& spec, Arm arm, std::optional<Group> /*group*/,
                           int visit) {
  const int m = spec.schedule.post_baseline();
  const bool active = arm == Arm::active;
  DesignVector d;
  switch (spec.variant) {
    case Variant::clda:
      break;
    case Variant::prop_decline:
    case Variant::prop_slowing:
    case Variant::prop_slowing_with_improvement:
    case Variant::prop_slowing_subgroup:
      d.coefficients = active ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
      break;
    case Variant::time_pmrm:
      d.coefficients.assign(static_cast<std::size_t>(m + 1), 0.0);
      d.coefficients[active ? static_cast<std::size_t>(visit) : 0] = 1.0;
      break;
    case Variant::delay_general:
      d.coefficients.assign(static_cast<std::size_t>(m), 0.0);
      if (active && visit > 0) d.coefficients[static_cast<std::size_t>(visit - 1)] = 1.0;
      break;
    case Variant::delay_constant:
      d.coefficients = {active && visit > 0 ? 1.0 : 0.0};
      break;
    case Variant::delay_two_param: {
      const int jp = spec.plateau_visit.value_or(m);
      d.coefficients = {active && visit > 0 && visit < jp ? 1.0 : 0.0,
                        active && visit >= jp ? 1.0 : 0.0};
      break;
    }
  }
  return d;
}

Eigen::VectorXd augmented_beta(const MeanModelSpec& spec, const ParameterVector& params) {
  switch (effect_family(spec.variant)) {
    case EffectFamily::none:
      return {};
    case EffectFamily::time_shift:
      return params.beta;
    default: {
      Eigen::VectorXd out(params.beta.size() + 1);
      out << 1.0, params.beta;
      return out;
    }
  }
}

MeanFunction::MeanFunction(const MeanModelSpec& spec, const ParameterVector& params)
    : spec_(spec),
      params_(params),
      f0_(spec.variant == Variant::clda ? InterpolationKind::zero_order : spec.interpolation,
          spec.schedule.times(),
          std::span<const double>(params.alpha.data(), static_cast<std::size_t>(params.alpha.size()))),
      augmented_(augmented_beta(spec, params)) {}

double MeanFunction::operator()(Arm arm, std::optional<Group> group, int visit, double t) const {
  const auto& p = params_;
  if (spec_.variant == Variant::clda) {
    if (visit == 0) return p.alpha[0];
    return arm == Arm::placebo ? p.alpha[visit] : p.clda_active[visit - 1];
  }

  const DesignVector d = design_vector(spec_, arm, group, visit);
  double effect = 0.0;
  for (std::size_t k = 0; k < d.coefficients.size(); ++k) {
    if (d.coefficients[k] != 0.0) effect += d.coefficients[k] * augmented_[static_cast<Eigen::Index>(k)];
  }

  double time_scale = 1.0;
  if (spec_.variant == Variant::prop_slowing_subgroup && group == Group::group2) {
    time_scale = 1.0 - *p.rho;
  }

  double mu = 0.0;
  switch (effect_family(spec_.variant)) {
    case EffectFamily::outcome_scale:
      mu = effect * (f0_(t) - p.alpha[0]) + p.alpha[0];
      break;
    case EffectFamily::time_scale:
      mu = f0_(effect * time_scale * t);
      break;
    case EffectFamily::time_shift:
      mu = f0_(t - effect);
      break;
    case EffectFamily::none:
      break;
  }

  if (spec_.variant == Variant::prop_slowing_with_improvement) {
    const double scheduled = spec_.schedule.time(visit);
    for (std::size_t k = 0; k < spec_.improvement_times.size(); ++k) {
      if (std::abs(spec_.improvement_times[k] - scheduled) <= 1e-9) {
        mu += p.delta[static_cast<Eigen::Index>(k)];
      }
    }
  }
  return mu;
}

double mean_value(const MeanModelSpec& spec, const ParameterVector& params, Arm arm,
                  std::optional<Group> group, int visit, double t) {
  params.check_layout(spec);
  if (visit < 0 || visit > spec.schedule.post_baseline()) {
    throw ContractError("visit " + std::to_string(visit) + " outside the schedule");
  }
  return MeanFunction(spec, params)(arm, group, visit, t);
}

ParameterVector initial_parameters(const MeanModelSpec& spec, const TrialDataset& data) {
  spec.validate();
  const int n_visits = spec.schedule.size();
  Eigen::VectorXd sum[2] = {Eigen::VectorXd::Zero(n_visits), Eigen::VectorXd::Zero(n_visits)};
  Eigen::VectorXi count[2] = {Eigen::VectorXi::Zero(n_visits), Eigen::VectorXi::Zero(n_visits)};
  for (const auto& s : data.subjects()) {
    const int a = s.arm == Arm::placebo ? 0 : 1;
    for (const auto& o : s.observations) {
      sum[a][o.visit] += o.value;
      count[a][o.visit] += 1;
    }
  }

  ParameterVector p;
  p.alpha.resize(n_visits);
  const int baseline_n = count[0][0] + count[1][0];
  if (baseline_n == 0) throw ValidationError("no baseline observations in either arm");
  p.alpha[0] = (sum[0][0] + sum[1][0]) / baseline_n;
  for (int j = 1; j < n_visits; ++j) {
    if (count[0][j] == 0) {
      throw ValidationError("visit " + std::to_string(j) + " has no placebo observations");
    }
    p.alpha[j] = sum[0][j] / count[0][j];
  }
  p.clda_active.resize(spec.n_clda_active());
  for (int j = 1; j <= spec.n_clda_active(); ++j) {
    if (count[1][j] == 0) {
      throw ValidationError("visit " + std::to_string(j) + " has no active observations");
    }
    p.clda_active[j - 1] = sum[1][j] / count[1][j];
  }
  p.beta = Eigen::VectorXd::Constant(spec.n_beta(), null_effect_value(spec.variant));
  p.delta = Eigen::VectorXd::Zero(spec.n_delta());
  if (spec.has_rho()) p.rho = 0.0;
  return p;
}

}  // namespace pmrm
