#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "pmrm/errors.hpp"
#include "pmrm/simulation.hpp"

using namespace pmrm;

namespace {

// Published group means at months 0, 6, 12, 18, 24, 36.
const std::map<Cs1Effect, std::vector<double>> kPrintedCs1 = {
    {Cs1Effect::none, {19.6, 20.5, 20.9, 22.7, 23.8, 27.4}},
    {Cs1Effect::stable_symptomatic, {19.6, 20.1, 20.1, 21.9, 23.0, 26.7}},
    {Cs1Effect::fading_symptomatic, {19.6, 20.1, 20.1, 21.9, 23.3, 27.0}},
    {Cs1Effect::reduced_decline_20, {19.6, 20.3, 20.6, 22.1, 23.0, 25.9}},
    {Cs1Effect::stable_delay_4m, {19.6, 20.3, 20.7, 21.5, 23.1, 26.2}},
    {Cs1Effect::slowed_20, {19.6, 20.3, 20.7, 21.6, 22.9, 25.3}},
    {Cs1Effect::increasing_slowing, {19.6, 20.4, 20.8, 21.9, 23.3, 25.3}},
};

SubjectRecord subject(std::vector<double> times, std::vector<double> values) {
  const auto schedule = cs2_schedule();
  SubjectRecord s{"s", Arm::placebo, std::nullopt, {}};
  for (std::size_t k = 0; k < times.size(); ++k) {
    s.observations.push_back({*schedule.visit_at(times[k]), times[k], values[k]});
  }
  return s;
}

}  // namespace

TEST_CASE("active-arm means of the 36-month scenarios") {
  for (const auto& [effect, row] : kPrintedCs1) {
    const auto mu = cs1_active_means(effect);
    for (int j = 0; j < 6; ++j) CHECK(std::abs(mu[j] - row[static_cast<std::size_t>(j)]) <= 0.1);
  }
  Eigen::VectorXd slowed(6);
  slowed << 19.6, 20.32, 20.74, 21.62, 22.92, 25.24;  // placebo curve at 0.8 t
  CHECK((cs1_active_means(Cs1Effect::slowed_20) - slowed).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cs1_active_means(Cs1Effect::none) == cs1_placebo_means());
  Eigen::VectorXd symptomatic = cs1_placebo_means();
  symptomatic.tail(5).array() -= Eigen::Array<double, 5, 1>(0.39, 0.78, 0.78, 0.78, 0.78);
  CHECK((cs1_active_means(Cs1Effect::stable_symptomatic) - symptomatic).cwiseAbs().maxCoeff() <
        1e-12);
  // Increasing slowing evaluates the placebo curve at 0, 5.5, 11, 15.5, 21.5, 28.8.
  CHECK(cs1_active_means(Cs1Effect::increasing_slowing)[5] == doctest::Approx(25.24));
}

TEST_CASE("scenario parsing") {
  for (auto e : all_cs1_effects()) CHECK(parse_cs1_effect(to_string(e)) == e);
  CHECK_THROWS_AS(parse_cs1_effect("sideways"), ValidationError);
  CHECK(parse_pool_effect("delay_16w") == PoolEffect::delay_16w);
  CHECK(parse_baseline_scaling("change") == BaselineScaling::change_from_baseline);
}

TEST_CASE("multivariate normal trials") {
  const Cs1Scenario sc;
  const auto a = generate_cs1_trial(sc, 1234);
  const auto b = generate_cs1_trial(sc, 1234);
  REQUIRE(a.n_subjects() == 600);
  for (std::size_t i = 0; i < a.n_subjects(); ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(a.subjects()[i].observations[k].value == b.subjects()[i].observations[k].value);
    }
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(6);
  for (const auto& s : a.subjects()) {
    if (s.arm != Arm::placebo) continue;
    for (const auto& o : s.observations) sum[o.visit] += o.value;
  }
  const Eigen::VectorXd mean = sum / 300.0;
  for (int j = 0; j < 6; ++j) {
    const double bound = 3.0 * std::sqrt(sc.covariance(j, j) / 300.0);
    CHECK(std::abs(mean[j] - sc.mean_placebo[j]) < bound);
  }

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(6, 6);
  bad(0, 0) = -1.0;
  const MeanProfile zero = [](Arm, std::optional<Group>) { return Eigen::VectorXd::Zero(6); };
  CHECK_THROWS_AS(generate_mvn_trial(cs1_schedule(), bad, zero, {}, 1), ValidationError);
  CHECK_THROWS_AS(
      generate_mvn_trial(cs1_schedule(), Eigen::MatrixXd::Identity(3, 3), zero, {}, 1),
      ValidationError);
}

TEST_CASE("sample covariance of generated trials tracks the target") {
  Cs1Scenario sc;
  sc.n_per_arm = 4000;
  const auto data = generate_cs1_trial(sc, 77);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(data.n_subjects()), 6);
  Eigen::Index row = 0;
  for (const auto& s : data.subjects()) {
    const Eigen::VectorXd mu = s.arm == Arm::placebo ? sc.mean_placebo : sc.active_means();
    for (const auto& o : s.observations) y(row, o.visit) = o.value - mu[o.visit];
    ++row;
  }
  const Eigen::MatrixXd cov = y.transpose() * y / static_cast<double>(y.rows());
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double se = std::sqrt((sc.covariance(i, i) * sc.covariance(j, j) +
                                   sc.covariance(i, j) * sc.covariance(i, j)) /
                                  static_cast<double>(y.rows()));
      CHECK(std::abs(cov(i, j) - sc.covariance(i, j)) < 4.0 * se);
    }
  }
}

TEST_CASE("mean-level pool effects") {
  const Eigen::Vector3d deltas(0.68, 1.46, 2.20);
  const auto schedule = cs2_schedule();
  CHECK(mean_change_at(deltas, schedule, 0.0) == 0.0);
  CHECK(mean_change_at(deltas, schedule, 16.8) == doctest::Approx(0.408));

  const auto pool_means = subject({0, 28, 52, 80}, {5.18, 5.69, 6.43, 7.01});
  const auto delay = apply_effect_mean_level(pool_means, PoolEffect::delay_16w, deltas, schedule);
  CHECK(delay.observations[1].value == doctest::Approx(5.418).epsilon(1e-12));
  const auto slowed = apply_effect_mean_level(pool_means, PoolEffect::slowed_20, deltas, schedule);
  CHECK(slowed.observations[2].value == doctest::Approx(6.092).epsilon(1e-12));
  CHECK(slowed.observations[0].value == 5.18);

  // Printed mean-level rows.
  const std::vector<std::pair<PoolEffect, std::vector<double>>> rows = {
      {PoolEffect::stable_benefit, {5.18, 5.25, 5.99, 6.57}},
      {PoolEffect::reduced_decline_20, {5.18, 5.55, 6.14, 6.57}},
      {PoolEffect::delay_16w, {5.18, 5.42, 5.91, 6.59}},
      {PoolEffect::slowed_20, {5.18, 5.55, 6.09, 6.59}},
  };
  for (const auto& [effect, row] : rows) {
    const auto shifted = apply_effect_mean_level(pool_means, effect, deltas, schedule);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(shifted.observations[k].value - row[k]) <= 0.01);
    }
  }
  const auto none = apply_effect_mean_level(pool_means, PoolEffect::none, deltas, schedule);
  CHECK(none.observations[3].value == 7.01);
}

TEST_CASE("subject-level pool effects") {
  const auto full = subject({0, 28, 52, 80}, {5, 6, 7, 8});
  const auto scaled = apply_effect_subject_level(full, PoolEffect::reduced_decline_20);
  const std::vector<double> expected{4.0, 4.8, 5.6, 6.4};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(scaled.observations[k].value == doctest::Approx(expected[k]).epsilon(1e-12));
  }
  const auto change =
      apply_effect_subject_level(full, PoolEffect::reduced_decline_20,
                                 BaselineScaling::change_from_baseline);
  CHECK(change.observations[0].value == doctest::Approx(5.0));
  CHECK(change.observations[3].value == doctest::Approx(5.0 + 0.8 * 3.0));

  const auto two = subject({0, 28}, {5, 6});
  const auto delayed = apply_effect_subject_level(two, PoolEffect::delay_16w);
  CHECK(delayed.observations[1].value == doctest::Approx(5.6).epsilon(1e-12));
  CHECK(delayed.observations[0].value == doctest::Approx(5.0));

  const auto flat = subject({0, 28, 80}, {3, 3, 3});
  const auto slowed = apply_effect_subject_level(flat, PoolEffect::slowed_20);
  for (const auto& o : slowed.observations) CHECK(o.value == 3.0);

  const auto single = subject({0}, {4.2});
  CHECK(apply_effect_subject_level(single, PoolEffect::slowed_20).observations[0].value == 4.2);
  CHECK_THROWS_AS(apply_effect_subject_level(full, PoolEffect::stable_benefit), ContractError);

  // Missing visits stay missing.
  const auto gap = subject({0, 52}, {5, 7});
  const auto g = apply_effect_subject_level(gap, PoolEffect::slowed_20);
  REQUIRE(g.observations.size() == 2);
  CHECK(g.observations[1].visit == 2);
  CHECK(g.observations[1].value == doctest::Approx(5.0 + 2.0 * (0.8 * 52.0) / 52.0));
}

TEST_CASE("synthetic pool reproduces the summary statistics it was built from") {
  const auto pool = synthetic_cs2_pool();
  CHECK(pool.size() == 1024);
  std::vector<double> sum(4, 0.0);
  std::vector<int> count(4, 0);
  for (const auto& s : pool.subjects()) {
    for (const auto& o : s.observations) {
      sum[static_cast<std::size_t>(o.visit)] += o.value;
      ++count[static_cast<std::size_t>(o.visit)];
    }
  }
  const std::vector<int> retained{1024, 889, 833, 769};
  const std::vector<double> means{5.18, 5.69, 6.43, 7.01};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(count[j] == retained[j]);
    CHECK(sum[j] / count[j] == doctest::Approx(means[j]).epsilon(1e-10));
  }
  const auto deltas = change_from_baseline_means(pool);
  CHECK(deltas[0] == doctest::Approx(0.68).epsilon(1e-10));
  CHECK(deltas[1] == doctest::Approx(1.46).epsilon(1e-10));
  CHECK(deltas[2] == doctest::Approx(2.20).epsilon(1e-10));
}

TEST_CASE("pool resampling") {
  auto pool = std::make_shared<const SubjectPool>(synthetic_cs2_pool());
  PoolScenario sc;
  sc.pool = pool;
  sc.n_per_arm = 500;
  sc.deltas = change_from_baseline_means(*pool);
  const auto a = resample_pool(sc, 5);
  const auto b = resample_pool(sc, 5);
  REQUIRE(a.n_subjects() == 1000);
  CHECK(a.n_in_arm(Arm::active) == 500);
  for (std::size_t i = 0; i < a.n_subjects(); ++i) {
    CHECK(a.subjects()[i].observations.front().value == b.subjects()[i].observations.front().value);
  }

  // Duplicate draws against the occupancy oracle: drawing k of N with
  // replacement leaves N (1 - (1 - 1/N)^k) distinct subjects on average.
  const double n_pool = 1024.0, k = 1000.0;
  const double p_miss = std::pow(1.0 - 1.0 / n_pool, k);
  const double expected_duplicates = k - n_pool * (1.0 - p_miss);
  // Variance of the number of distinct draws.
  const double p_miss2 = std::pow(1.0 - 2.0 / n_pool, k);
  const double var_distinct =
      n_pool * p_miss * (1.0 - p_miss) + n_pool * (n_pool - 1.0) * (p_miss2 - p_miss * p_miss);
  const int reps = 40;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto d = resample_pool(sc, 100 + static_cast<std::uint64_t>(r));
    std::set<double> baselines;  // baseline values identify pool subjects
    for (const auto& s : d.subjects()) baselines.insert(s.observations.front().value);
    total += k - static_cast<double>(baselines.size());
  }
  const double mean_dup = total / reps;
  CHECK(std::abs(mean_dup - expected_duplicates) < 4.0 * std::sqrt(var_distinct / reps));

  sc.effect = PoolEffect::stable_benefit;
  sc.implementation = EffectImplementation::subject_level;
  CHECK_THROWS_AS(sc.validate(), ContractError);
}

TEST_CASE("78-week covariate scenario generators") {
  const Cs3Truth truth;
  const auto imp = generate_cs3_improvement_trial(truth, 50, 3);
  CHECK(imp.n_subjects() == 100);
  const auto sub = generate_cs3_subgroup_trial(truth, 50, 3);
  int g2 = 0;
  for (const auto& s : sub.subjects()) {
    REQUIRE(s.group.has_value());
    g2 += s.in_group2() ? 1 : 0;
  }
  CHECK(g2 == 50);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(truth.covariance()).info() == Eigen::Success);
}
