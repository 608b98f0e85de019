#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "pmrm/covariance.hpp"
#include "pmrm/mean_models.hpp"
#include "pmrm/trial_data.hpp"

namespace pmrm {

// Gaussian log-likelihood of a dataset under a mean model and an unstructured
// covariance shared by all subjects. Each subject contributes the marginal
// density of its observed visits only.
//
// Subjects with identical (arm, subgroup, observed visits, visit times) are
// pooled into sufficient statistics at construction, so one evaluation costs
// O(groups * visits^3) regardless of the number of subjects.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(const MeanModelSpec& spec, const TrialDataset& data);

  double operator()(const ParameterVector& params, const CovarianceSpec& cov) const;
  // theta = (flattened mean parameters, covariance coordinates).
  double operator()(const Eigen::VectorXd& theta) const;

  int n_mean() const { return n_mean_; }
  int n_coords() const { return CovarianceSpec::n_coords(dim_); }
  int n_theta() const { return n_mean_ + n_coords(); }
  std::size_t n_groups() const { return groups_.size(); }

 private:
  struct Group {
    Arm arm;
    std::optional<pmrm::Group> subgroup;
    std::vector<int> visits;
    std::vector<double> times;
    double n = 0.0;
    Eigen::VectorXd mean;
    std::string first_subject;
  };
  struct Pattern {
    std::vector<int> visits;
    Eigen::MatrixXd scatter;  // pooled within-group scatter
    double n = 0.0;
    std::vector<std::size_t> groups;
  };

  double evaluate(const ParameterVector& params, const Eigen::MatrixXd& L) const;

  MeanModelSpec spec_;
  int dim_;
  int n_mean_;
  std::vector<Group> groups_;
  std::vector<Pattern> patterns_;
};

double log_likelihood(const MeanModelSpec& spec, const ParameterVector& params,
                      const CovarianceSpec& cov, const TrialDataset& data);

// Direct multivariate-normal log-density of one subject's observed values.
double subject_log_likelihood(const MeanModelSpec& spec, const ParameterVector& params,
                              const CovarianceSpec& cov, const SubjectRecord& subject);

// Available-case covariance of residuals from per-visit arm means, ridged until
// positive definite.
Eigen::MatrixXd initial_covariance(const TrialDataset& data);

struct FitOptions {
  int max_iter = 500;
  double rel_tol = 1e-9;
  double grad_tol = 1e-4;
  int n_restarts = 2;
  std::uint64_t seed = 0;  // drives the restart jitter of beta
};

struct FitResult {
  MeanModelSpec spec;
  ParameterVector estimates;
  Eigen::MatrixXd covariance;
  CovarianceSpec covariance_coords;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  // Observed information over (mean parameters, covariance coordinates).
  Eigen::MatrixXd information;
  // Inverse information restricted to the mean parameters; empty when singular.
  Eigen::MatrixXd vcov_mean_params;
  bool information_singular = false;
  std::string null_direction;
  bool converged = false;
  int iterations = 0;
  int restarts_used = 0;
  double max_gradient = 0.0;
  std::size_t n_subjects = 0;
  std::size_t n_observations = 0;
};

// Joint maximum likelihood over mean parameters and covariance coordinates:
// BFGS from the sample-based start, then Newton refinement steps on the
// finite-difference Hessian, which also supplies the observed information.
// Throws FitError when there are fewer subjects than visits.
FitResult fit_model(const MeanModelSpec& spec, const TrialDataset& data,
                    const FitOptions& options = {});

struct StandardErrors {
  std::vector<std::string> names;
  Eigen::VectorXd se;
  Eigen::MatrixXd vcov;
};

// Throws ContractError for an unconverged fit and SingularInformationError when
// the information matrix has a null direction.
StandardErrors standard_errors(const FitResult& fit);

// Inverts an information matrix, throwing SingularInformationError naming the
// parameter that dominates the weakest direction. Eigenvalues at or below
// `noise_floor` (or 1e-10 of the largest) count as zero.
Eigen::MatrixXd invert_information(const Eigen::MatrixXd& information,
                                   const std::vector<std::string>& names,
                                   double noise_floor = 0.0);

// Names of every coordinate of theta: mean parameters, then "cov[i,j]".
std::vector<std::string> theta_names(const MeanModelSpec& spec);

}  // namespace pmrm
