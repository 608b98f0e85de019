#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmrm/errors.hpp"
#include "pmrm/estimation.hpp"
#include "pmrm/optimizer.hpp"
#include "pmrm/simulation.hpp"
#include "support/oracles.hpp"

using namespace pmrm;
using namespace pmrm::oracles;

namespace {

TrialDataset duplicated(const TrialDataset& data) {
  auto subjects = data.subjects();
  for (const auto& s : data.subjects()) {
    auto copy = s;
    copy.subject_id += "_dup";
    subjects.push_back(copy);
  }
  return TrialDataset(data.schedule(), subjects);
}

MeanModelSpec clda_spec(const VisitSchedule& schedule) {
  MeanModelSpec spec;
  spec.variant = Variant::clda;
  spec.schedule = schedule;
  return spec;
}

}  // namespace

TEST_CASE("log-Cholesky coordinates round-trip") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int d : {1, 2, 4, 6}) {
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd coords(CovarianceSpec::n_coords(d));
      for (auto& c : coords) c = z(rng);
      const CovarianceSpec spec(d, coords);
      const Eigen::MatrixXd r = spec.matrix();
      CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(Eigen::LLT<Eigen::MatrixXd>(r).info() == Eigen::Success);
      const auto back = CovarianceSpec::from_matrix(r);
      CHECK((back.coords() - coords).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(CovarianceSpec::from_matrix(indefinite), ValidationError);
}

TEST_CASE("likelihood of tiny cases") {
  const VisitSchedule two({0.0, 1.0});
  const auto spec = clda_spec(two);
  ParameterVector p;
  p.alpha = Eigen::Vector2d(0.0, 0.0);
  p.clda_active = Eigen::VectorXd::Zero(1);
  SubjectRecord s{"s", Arm::placebo, std::nullopt, {{0, 0.0, 0.0}}};
  const auto cov = CovarianceSpec::from_matrix(Eigen::Matrix2d::Identity());
  CHECK(subject_log_likelihood(spec, p, cov, s) == doctest::Approx(-0.9189385332).epsilon(1e-9));

  s.observations = {{0, 0.0, 0.7}, {1, 1.0, -1.2}};
  Eigen::Matrix2d diag;
  diag << 2.0, 0.0, 0.0, 0.5;
  const auto cd = CovarianceSpec::from_matrix(diag);
  const double expected = -0.5 * std::log(2 * std::numbers::pi * 2.0) - 0.49 / 4.0 -
                          0.5 * std::log(2 * std::numbers::pi * 0.5) - 1.44 / 1.0;
  CHECK(subject_log_likelihood(spec, p, cd, s) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("missing visit equals numeric marginalization of the full density") {
  const VisitSchedule three({0.0, 1.0, 2.0});
  const auto spec = clda_spec(three);
  ParameterVector p;
  p.alpha = Eigen::Vector3d(1.0, 1.5, 2.5);
  p.clda_active = Eigen::Vector2d(1.2, 2.0);
  Eigen::Matrix3d r;
  r << 1.0, 0.5, 0.3, 0.5, 1.5, 0.6, 0.3, 0.6, 2.0;
  const auto cov = CovarianceSpec::from_matrix(r);

  const double y0 = 0.4, y2 = 3.1;
  const SubjectRecord s{"s", Arm::active, std::nullopt, {{0, 0.0, y0}, {2, 2.0, y2}}};
  const double direct = subject_log_likelihood(spec, p, cov, s);

  const Eigen::Vector3d mu(1.0, 1.2, 2.0);
  const double integral = std::exp(marginal_log_density_simpson(y0, y2, mu, r));
  CHECK(direct == doctest::Approx(std::log(integral)).epsilon(1e-9));
  CHECK(std::abs(direct - std::log(integral)) < 1e-6);
}

TEST_CASE("likelihood is invariant to subject order") {
  const auto data = complete_trial(15, 11);
  auto shuffled = data.subjects();
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const TrialDataset other(data.schedule(), shuffled);
  MeanModelSpec spec;
  spec.variant = Variant::prop_slowing;
  spec.schedule = data.schedule();
  const auto p = initial_parameters(spec, data);
  const auto cov = CovarianceSpec::from_matrix(initial_covariance(data));
  CHECK(log_likelihood(spec, p, cov, data) ==
        doctest::Approx(log_likelihood(spec, p, cov, other)).epsilon(1e-12));
}

TEST_CASE("numeric gradient is self-consistent across step sizes") {
  const auto data = complete_trial(20, 2);
  MeanModelSpec spec;
  spec.variant = Variant::time_pmrm;
  spec.schedule = data.schedule();
  const LikelihoodEvaluator ll(spec, data);
  const Objective f = [&](const Eigen::VectorXd& x) { return ll(x); };
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z(0.0, 0.2);
  Eigen::VectorXd base(ll.n_theta());
  base << initial_parameters(spec, data).flatten(),
      CovarianceSpec::from_matrix(initial_covariance(data)).coords();
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd x = base;
    for (auto& v : x) v += z(rng);
    const Eigen::VectorXd g = numeric_gradient(f, x, f(x));
    Eigen::VectorXd oracle(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-4 * std::max(1.0, std::abs(x[i]));
      Eigen::VectorXd a = x, b = x;
      a[i] += h;
      b[i] -= h;
      oracle[i] = (f(a) - f(b)) / (2.0 * h);
    }
    CHECK((g - oracle).norm() <= 1e-5 * oracle.norm());
  }
}

TEST_CASE("optimizer solves Rosenbrock and never worsens its start") {
  const Objective rosen = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto r = bfgs_minimize(rosen, Eigen::Vector2d(-1.2, 1.0), {2000, 1e-14, 1e-6});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.value <= r.initial_value);

  const Objective bumpy = [](const Eigen::VectorXd& x) {
    return std::sin(3.0 * x[0]) + 0.1 * x[0] * x[0] + std::cos(2.0 * x[1]) + 0.05 * x[1] * x[1];
  };
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Vector2d x0(u(rng), u(rng));
    const auto res = bfgs_minimize(bumpy, x0);
    CHECK(res.value <= bumpy(x0));
  }
}

TEST_CASE("cLDA fit matches the closed-form GLS oracle") {
  const auto data = complete_trial(20, 42);
  REQUIRE(data.n_subjects() == 40);
  const auto spec = clda_spec(data.schedule());
  const auto fit = fit_model(spec, data);
  REQUIRE(fit.converged);
  const auto oracle = gls_oracle(data);
  const Eigen::VectorXd est = fit.estimates.flatten();
  CHECK((est - oracle.theta).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fit.covariance - oracle.r).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(fit.loglik >= fit.initial_loglik);

  // Standard errors equal the square roots of the inverse GLS information.
  const auto se = standard_errors(fit);
  for (Eigen::Index k = 0; k < est.size(); ++k) {
    CHECK(se.se[k] == doctest::Approx(std::sqrt(oracle.vcov(k, k))).epsilon(1e-4));
  }
}

TEST_CASE("mean of one visit has standard error sigma over root n") {
  // Placebo subjects are seen at the final visit only, so the placebo mean
  // there is a plain sample mean with no borrowing through the baseline.
  const VisitSchedule two({0.0, 1.0});
  const Eigen::Matrix2d r{{4.0, 1.5}, {1.5, 3.0}};
  const MeanProfile means = [](Arm, std::optional<Group>) { return Eigen::Vector2d(3.0, 5.0); };
  const auto full = generate_mvn_trial(two, r, means, {60, false}, 9);
  auto subjects = full.subjects();
  double sum = 0.0, n = 0.0;
  for (auto& s : subjects) {
    if (s.arm != Arm::placebo) continue;
    s.observations.erase(s.observations.begin());
    sum += s.observations.front().value;
    n += 1.0;
  }
  const TrialDataset data(two, subjects);
  const auto fit = fit_model(clda_spec(two), data);
  REQUIRE(fit.converged);
  CHECK(fit.estimates.alpha[1] == doctest::Approx(sum / n).epsilon(1e-8));
  const double sigma = std::sqrt(fit.covariance(1, 1));
  CHECK(standard_errors(fit).se[1] == doctest::Approx(sigma / std::sqrt(n)).epsilon(1e-4));
}

TEST_CASE("duplicating every subject shrinks standard errors by root two") {
  const auto data = complete_trial(40, 77);
  MeanModelSpec spec;
  spec.variant = Variant::prop_slowing;
  spec.schedule = data.schedule();
  const auto a = fit_model(spec, data);
  const auto b = fit_model(spec, duplicated(data));
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(b.estimates.beta[0] == doctest::Approx(a.estimates.beta[0]).epsilon(1e-5));
  CHECK(b.loglik == doctest::Approx(2.0 * a.loglik).epsilon(1e-9));
  const auto sa = standard_errors(a).se;
  const auto sb = standard_errors(b).se;
  for (Eigen::Index k = 0; k < sa.size(); ++k) {
    CHECK(sa[k] / sb[k] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
  }
}

TEST_CASE("fit needs at least as many subjects as visits") {
  const auto data = complete_trial(1, 4);
  CHECK_THROWS_AS(fit_model(clda_spec(data.schedule()), data), FitError);
}

TEST_CASE("singular information names the null direction") {
  Eigen::Matrix3d info;
  info << 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0;
  try {
    invert_information(info, {"alpha[0]", "beta", "rho"});
    FAIL("expected a singular information error");
  } catch (const SingularInformationError& e) {
    CHECK((e.direction() == "beta" || e.direction() == "rho"));
  }

  // Flat placebo trajectory: every deviation vector appears with both signs, so
  // the fitted visit means are equal and the slowing factor has no information.
  const VisitSchedule schedule({0.0, 1.0, 2.0, 3.0});
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<SubjectRecord> subjects;
  for (int k = 0; k < 40; ++k) {
    Eigen::Vector4d e;
    for (auto& v : e) v = z(rng);
    for (double sign : {1.0, -1.0}) {
      SubjectRecord s;
      s.subject_id = "s" + std::to_string(subjects.size());
      s.arm = k % 2 ? Arm::active : Arm::placebo;
      for (int j = 0; j < 4; ++j) s.observations.push_back({j, schedule.time(j), 5.0 + sign * e[j]});
      subjects.push_back(s);
    }
  }
  const TrialDataset flat(schedule, subjects);
  MeanModelSpec spec;
  spec.variant = Variant::prop_slowing;
  spec.schedule = schedule;
  const auto fit = fit_model(spec, flat);
  CHECK(fit.information_singular);
  CHECK(fit.null_direction == "beta");
  if (fit.converged) CHECK_THROWS_AS(standard_errors(fit), SingularInformationError);
}

TEST_CASE("unconverged fits refuse standard errors") {
  const auto data = complete_trial(10, 6);
  MeanModelSpec spec;
  spec.variant = Variant::time_pmrm;
  spec.schedule = data.schedule();
  FitOptions opt;
  opt.max_iter = 1;
  opt.n_restarts = 0;
  const auto fit = fit_model(spec, data, opt);
  CHECK_FALSE(fit.converged);
  CHECK(fit.loglik >= fit.initial_loglik);
  CHECK_THROWS_AS(standard_errors(fit), ContractError);
}

TEST_CASE("time-PMRM and general delay reach the same optimum") {
  const auto data = generate_cs1_trial(Cs1Scenario{Cs1Effect::slowed_20, 150}, 5);
  MeanModelSpec a;
  a.variant = Variant::time_pmrm;
  a.schedule = data.schedule();
  MeanModelSpec b = a;
  b.variant = Variant::delay_general;
  const auto fa = fit_model(a, data);
  const auto fb = fit_model(b, data);
  REQUIRE(fa.converged);
  REQUIRE(fb.converged);
  CHECK(std::abs(fa.loglik - fb.loglik) < 1e-4);
}
