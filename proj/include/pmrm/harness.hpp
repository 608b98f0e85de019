#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmrm/config.hpp"
#include "pmrm/inference.hpp"

namespace pmrm {

// Outcome of one method on one replication. Invalid outcomes (fit failures,
// non-convergence, singular information) are excluded from the aggregates.
struct MethodOutcome {
  Method method = Method::clda_final_visit;
  bool valid = false;
  std::string failure;
  TestResult test;
  double loglik = 0.0;  // of the fit the method was computed from

  // p-value the method's decision is based on.
  double p_value() const {
    return is_two_sided(method) ? test.p_two_sided : test.p_one_sided.value_or(1.0);
  }
};

struct ReplicationRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::vector<MethodOutcome> outcomes;
  std::optional<TestResult> lrt;
  std::string lrt_failure;

  const MethodOutcome* find(Method m) const;
};

struct MethodSummary {
  Method method = Method::clda_final_visit;
  int n_replications = 0;
  int n_valid = 0;
  int n_excluded = 0;
  int n_rejected = 0;
  double rejection_rate = 0.0;
  double cutoff = 0.0;
  bool calibrated = false;
  std::optional<double> mean_estimate;
  std::optional<double> median_estimate;
  std::optional<double> sd_estimate;
  std::optional<double> truth;
  std::optional<double> coverage;
};

struct LrtSummary {
  int n_valid = 0;
  int n_failed = 0;
  int n_rejected = 0;
  double alpha = 0.05;
  double rejection_rate = 0.0;
};

struct StudyReport {
  StudyConfig config;
  std::vector<ReplicationRecord> replications;  // ordered by index
  std::vector<MethodSummary> summaries;         // in config.methods order
  std::optional<LrtSummary> lrt;
  std::map<Method, double> cutoffs;             // cutoffs actually applied
  bool calibrated = false;
  std::vector<std::string> warnings;
  double runtime_seconds = 0.0;
  int workers_used = 1;

  const MethodSummary& summary(Method m) const;
  std::vector<double> p_values(Method m) const;  // valid replications, index order
};

// Draws replication datasets for a study. Holds the resampling pool, if any;
// immutable after construction and safe to share between threads.
class ScenarioSampler {
 public:
  explicit ScenarioSampler(const StudyConfig& config);

  // Dataset of replication `index`, seeded with base_seed + index.
  TrialDataset generate(int index) const;
  const VisitSchedule& schedule() const { return schedule_; }
  // Scenario means by arm for closed-form scenarios.
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> true_means() const;

 private:
  StudyConfig config_;
  VisitSchedule schedule_;
  std::optional<Cs1Scenario> cs1_;
  std::optional<PoolScenario> pool_;
};

std::uint64_t replication_seed(const StudyConfig& config, int index);

// Fits the models the configured methods need and evaluates every method.
ReplicationRecord run_replication(const StudyConfig& config, const ScenarioSampler& sampler,
                                  int index);
ReplicationRecord run_replication(const StudyConfig& config, int index);

// Model variants a study needs to fit.
std::vector<Variant> required_variants(const StudyConfig& config);
MeanModelSpec study_spec(const StudyConfig& config, const VisitSchedule& schedule, Variant v);

struct CutoffOptions {
  std::map<Method, double> cutoffs;  // missing methods use the nominal level
  bool calibrated = false;
};

// Runs every replication on a bounded worker pool, then aggregates in index
// order so the result does not depend on scheduling. Loads cutoffs from
// config.calibrate_from when set. Throws FitError when no replication yields a
// valid result for any method.
StudyReport run_study(const StudyConfig& config);

// Re-aggregates replication records under the given cutoffs.
void summarize(StudyReport& report, const CutoffOptions& cutoffs);

// Nominal level per method: alpha_one_sided, or alpha_two_sided for type-3.
double nominal_level(const StudyConfig& config, Method m);

struct Calibration {
  std::map<Method, double> cutoffs;
  std::vector<std::string> warnings;
};

// Type-7 empirical quantile of sorted-or-unsorted values at probability p.
double quantile_type7(std::vector<double> values, double p);

// cutoff[method] = alpha-quantile of the method's null p-values, with alpha the
// one-sided level, doubled for the two-sided type-3 test. Warns when a method
// has fewer than 1/alpha null replications.
Calibration recalibrate_cutoffs(const std::map<Method, std::vector<double>>& null_p_values,
                                double alpha_one_sided);
Calibration recalibrate_cutoffs(const StudyReport& null_report, double alpha_one_sided);

// Fraction of valid replications whose 95% interval contains `truth`. Throws
// ContractError for methods without intervals.
double coverage_summary(const std::vector<ReplicationRecord>& replications, double truth,
                        Method method);
double coverage_summary(const StudyReport& report, double truth, Method method);

// True effect on a method's own scale for a closed-form scenario: the value
// minimising the squared distance between the true active means and the
// model's active means, with the placebo trajectory interpolated by
// `interpolation`. Absent when the scenario lies outside the model family
// under the generating (linear) interpolation, and always for type-3.
std::optional<double> derive_true_time_effect(const Cs1Scenario& scenario, Method method,
                                              InterpolationKind interpolation =
                                                  InterpolationKind::natural_cubic);

// Truth used for coverage: explicit config value, else the derived value for
// closed-form scenarios. Single-parameter models report the generating value
// (linear interpolation); the final-visit Time-PMRM parameter is matched on the
// estimation interpolant.
std::optional<double> study_truth(const StudyConfig& config, Method method);

// Replication-level CSV. One row per (replication, method) plus LRT rows.
void write_replications_csv(std::ostream& out, const std::vector<ReplicationRecord>& records);
std::vector<ReplicationRecord> read_replications_csv(std::istream& in);
// Accepts a report directory or a replications.csv path.
std::vector<ReplicationRecord> load_replications(const std::filesystem::path& path);
std::map<Method, std::vector<double>> null_p_values(const std::vector<ReplicationRecord>& records);

}  // namespace pmrm
