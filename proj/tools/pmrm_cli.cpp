#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "pmrm/config.hpp"
#include "pmrm/errors.hpp"
#include "pmrm/estimation.hpp"
#include "pmrm/harness.hpp"
#include "pmrm/inference.hpp"
#include "pmrm/report.hpp"

namespace fs = std::filesystem;
using namespace pmrm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

std::vector<double> parse_times(const std::string& text) {
  if (text.empty()) return {};
  std::vector<double> out;
  std::string buf = text;
  for (auto& c : buf) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(buf);
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ValidationError("bad time '" + tok + "'");
    }
  }
  return out;
}

void print_test(const std::string& label, const TestResult& t) {
  std::cout << label << ": statistic=" << t.statistic;
  if (t.df) std::cout << " df=" << *t.df;
  if (t.estimate) std::cout << " estimate=" << *t.estimate << " se=" << *t.se;
  if (t.ci_low) std::cout << " ci95=[" << *t.ci_low << ", " << *t.ci_high << "]";
  if (t.p_one_sided) std::cout << " p_one_sided=" << *t.p_one_sided;
  std::cout << " p_two_sided=" << t.p_two_sided << "\n";
}

void print_summary(const StudyReport& r) {
  std::cout << r.config.name << " (" << r.config.scenario.label() << "), "
            << r.config.n_replications << " replications"
            << (r.calibrated ? ", recalibrated cutoffs" : ", nominal cutoffs") << "\n";
  std::cout << std::left << std::setw(24) << "method" << std::right << std::setw(10) << "cutoff"
            << std::setw(10) << "reject" << std::setw(9) << "valid" << std::setw(12) << "mean"
            << std::setw(10) << "sd" << std::setw(10) << "truth" << std::setw(10) << "coverage"
            << "\n";
  std::cout << std::fixed;
  for (const auto& s : r.summaries) {
    std::cout << std::left << std::setw(24) << to_string(s.method) << std::right
              << std::setprecision(4) << std::setw(10) << s.cutoff << std::setw(10)
              << s.rejection_rate << std::setw(9) << s.n_valid;
    const auto opt = [](const std::optional<double>& v, int w) {
      if (v) {
        std::cout << std::setw(w) << *v;
      } else {
        std::cout << std::setw(w) << "-";
      }
    };
    opt(s.mean_estimate, 12);
    opt(s.sd_estimate, 10);
    opt(s.truth, 10);
    opt(s.coverage, 10);
    std::cout << "\n";
  }
  if (r.lrt) {
    std::cout << "lrt_proportional_slowing rejection at " << r.lrt->alpha << ": "
              << r.lrt->rejection_rate << " (" << r.lrt->n_valid << " valid)\n";
  }
  std::cout.unsetf(std::ios::fixed);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_fit(const std::string& data_path, const std::string& model, const std::string& schedule_text,
            const std::string& interpolation, const std::string& time_mode,
            const std::string& improvement, int plateau, std::uint64_t seed, bool higher_is_better) {
  MeanModelSpec spec;
  spec.variant = parse_variant(model);
  spec.interpolation = parse_interpolation_kind(interpolation);
  spec.schedule = VisitSchedule::parse(schedule_text);
  spec.improvement_times = parse_times(improvement);
  if (plateau > 0) spec.plateau_visit = plateau;
  spec.validate();
  TimeMode mode = TimeMode::scheduled;
  if (time_mode == "actual") {
    mode = TimeMode::actual;
  } else if (time_mode != "scheduled") {
    throw ValidationError("time mode must be 'scheduled' or 'actual'");
  }
  const auto data = load_long_csv(data_path, spec.schedule, mode);
  FitOptions options;
  options.seed = seed;
  const auto fit = fit_model(spec, data, options);

  std::cout << std::setprecision(8);
  std::cout << "model: " << to_string(spec.variant) << " (" << to_string(spec.interpolation)
            << ")\n";
  std::cout << "subjects: " << fit.n_subjects << ", observations: " << fit.n_observations << "\n";
  std::cout << "loglik: " << fit.loglik << "\n";
  std::cout << "converged: " << (fit.converged ? "yes" : "no") << " after " << fit.iterations
            << " iterations (max gradient " << fit.max_gradient << ")\n";
  if (!fit.converged) {
    std::cerr << "error: optimizer did not converge\n";
    return kExitConvergence;
  }
  const auto names = spec.parameter_names();
  const Eigen::VectorXd est = fit.estimates.flatten();
  std::optional<StandardErrors> se;
  try {
    se = standard_errors(fit);
  } catch (const SingularInformationError& e) {
    std::cerr << "warning: " << e.what() << "\n";
  }
  std::cout << "parameter,estimate,se\n";
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::cout << names[k] << ',' << est[static_cast<Eigen::Index>(k)] << ',';
    if (se) std::cout << se->se[static_cast<Eigen::Index>(k)];
    std::cout << "\n";
  }
  std::cout << "covariance:\n" << fit.covariance << "\n";
  if (!se) return kExitOk;
  const int m = spec.schedule.post_baseline();
  switch (spec.variant) {
    case Variant::clda: {
      const auto sel = "contrast[" + std::to_string(m) + "]";
      print_test("final-visit contrast",
                 wald_test(fit, sel, 0.0, benefit_side(fit, sel, higher_is_better)));
      print_test("AUC contrast", auc_contrast(fit, higher_is_better));
      print_test("type-3 treatment test", type3_treatment_test(fit));
      break;
    }
    case Variant::time_pmrm:
    case Variant::delay_general: {
      const auto sel = "beta[" + std::to_string(m) + "]";
      print_test("final-visit " + sel,
                 wald_test(fit, sel, null_effect_value(spec.variant), benefit_side(fit, sel)));
      break;
    }
    case Variant::delay_two_param:
      print_test("beta_max", wald_test(fit, "beta_max", 0.0, benefit_side(fit, "beta_max")));
      break;
    default:
      print_test("beta", wald_test(fit, "beta", null_effect_value(spec.variant),
                                   benefit_side(fit, "beta")));
      break;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int limit) {
  const auto config = load_study_config(config_path);
  const ScenarioSampler sampler(config);
  fs::create_directories(out_dir);
  const int n = limit > 0 ? std::min(limit, config.n_replications) : config.n_replications;
  for (int i = 0; i < n; ++i) {
    std::ostringstream name;
    name << "replication_" << std::setw(5) << std::setfill('0') << i << ".csv";
    save_long_csv(fs::path(out_dir) / name.str(), sampler.generate(i));
  }
  std::ofstream cfg(fs::path(out_dir) / "config.ini");
  write_study_config(cfg, config);
  std::cout << "wrote " << n << " datasets to " << out_dir << "\n";
  return kExitOk;
}

int cmd_power(const std::string& config_path, const std::string& calibrate_from,
              const std::string& out_dir, int workers, int replications) {
  auto config = load_study_config(config_path);
  if (!calibrate_from.empty()) config.calibrate_from = fs::absolute(calibrate_from);
  if (workers >= 0) config.workers = workers;
  if (replications > 0) config.n_replications = replications;
  config.validate();
  const auto report = run_study(config);
  print_summary(report);
  const fs::path dir = out_dir.empty() ? fs::path("reports") / config.name : fs::path(out_dir);
  emit_report(report, dir);
  std::cout << "report written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_calibrate(const std::string& null_report, double alpha, const std::string& out_path) {
  const auto records = load_replications(null_report);
  const auto p = null_p_values(records);
  const auto cal = recalibrate_cutoffs(p, alpha);
  for (const auto& w : cal.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream table;
  table << std::setprecision(10) << "method,level,cutoff,n_null\n";
  for (const auto& [m, cutoff] : cal.cutoffs) {
    table << to_string(m) << ',' << (is_two_sided(m) ? 2 * alpha : alpha) << ',' << cutoff << ','
          << p.at(m).size() << "\n";
  }
  std::cout << table.str();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << table.str();
  }
  return kExitOk;
}

int cmd_coverage(const std::string& report_path, double truth, const std::string& method) {
  const auto records = load_replications(report_path);
  const double cov = coverage_summary(records, truth, parse_method(method));
  std::cout << std::setprecision(6) << "coverage of " << truth << " by " << method << ": " << cov
            << "\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& studies, const std::string& format,
               const std::string& out_path, int replication, const std::string& model) {
  if (format == "csv") {
    std::vector<StudyReport> reports;
    reports.reserve(studies.size());
    for (const auto& s : studies) reports.push_back(load_report(s));
    std::vector<const StudyReport*> ptrs;
    for (const auto& r : reports) ptrs.push_back(&r);
    if (out_path.empty()) {
      write_summary_csv(std::cout, ptrs);
    } else {
      std::ofstream out(out_path);
      if (!out) throw IoError("cannot write '" + out_path + "'");
      write_summary_csv(out, ptrs);
    }
    return kExitOk;
  }
  if (format == "svg") {
    if (studies.size() != 1) throw ValidationError("svg output takes exactly one study");
    fs::path cfg = studies.front();
    if (fs::is_directory(cfg)) cfg /= "config.ini";
    const auto config = load_study_config(cfg);
    const auto svg = trajectory_plot(config, replication, parse_variant(model));
    if (out_path.empty()) {
      std::cout << svg;
    } else {
      std::ofstream out(out_path);
      if (!out) throw IoError("cannot write '" + out_path + "'");
      out << svg;
    }
    return kExitOk;
  }
  throw ValidationError("format must be csv or svg");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progression models for repeated measures: fitting, testing and trial simulation"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "Fit one model to a long-format CSV dataset");
  std::string data_path, model = "time_pmrm", schedule, interpolation = "natural_cubic",
                         time_mode = "scheduled", improvement;
  int plateau = 0;
  std::uint64_t seed = 0;
  bool higher_is_better = false;
  fit->add_option("data", data_path, "CSV with subject_id,arm,group,visit,time,value")
      ->required();
  fit->add_option("--model", model, "Mean model variant")->capture_default_str();
  fit->add_option("--schedule", schedule, "Visit times, e.g. 0,6,12,18,24,36")->required();
  fit->add_option("--interpolation", interpolation, "zero_order, linear or natural_cubic")
      ->capture_default_str();
  fit->add_option("--time-mode", time_mode, "scheduled or actual")->capture_default_str();
  fit->add_option("--improvement-times", improvement, "Visit times with improvement terms");
  fit->add_option("--plateau-visit", plateau, "First visit of the maximal delay");
  fit->add_option("--seed", seed, "Seed of the restart jitter");
  fit->add_flag("--higher-is-better", higher_is_better, "Outcome improves upward");

  auto* simulate = app.add_subcommand("simulate", "Write simulated datasets of a study");
  std::string config_path, out_dir;
  int limit = 0;
  simulate->add_option("config", config_path, "Study config (INI)")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--replications", limit, "Only the first N replications");

  auto* power = app.add_subcommand("power", "Run a Monte-Carlo study and write its report");
  std::string calibrate_from;
  int workers = -1, replications = 0;
  power->add_option("config", config_path, "Study config (INI)")->required();
  power->add_option("--calibrate-from", calibrate_from, "Null-run report directory");
  power->add_option("--out", out_dir, "Report directory (default reports/<name>)");
  power->add_option("--workers", workers, "Worker threads (0 = all cores)");
  power->add_option("--replications", replications, "Override n_replications");

  auto* calibrate = app.add_subcommand("calibrate", "Recalibrated cutoffs from a null run");
  std::string null_report, cal_out;
  double alpha = 0.025;
  calibrate->add_option("null_report", null_report, "Null-run report directory")->required();
  calibrate->add_option("--alpha", alpha, "One-sided level")->capture_default_str();
  calibrate->add_option("--out", cal_out, "Also write the table here");

  auto* coverage = app.add_subcommand("coverage", "CI coverage of a true value");
  std::string report_path, method;
  double truth = 0.0;
  coverage->add_option("report", report_path, "Report directory")->required();
  coverage->add_option("--truth", truth, "True effect value")->required();
  coverage->add_option("--method", method, "Method name")->required();

  auto* report = app.add_subcommand("report", "Summary CSV or trajectory SVG");
  std::vector<std::string> studies;
  std::string format = "csv", out_path, plot_model = "time_pmrm";
  int replication = 0;
  report->add_option("study", studies, "Report directories (svg: one directory or config)")
      ->required();
  report->add_option("--format", format, "csv or svg")->capture_default_str();
  report->add_option("--out", out_path, "Output file (default stdout)");
  report->add_option("--replication", replication, "Replication to plot")->capture_default_str();
  report->add_option("--model", plot_model, "Model to fit for the plot")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*fit) {
      return cmd_fit(data_path, model, schedule, interpolation, time_mode, improvement, plateau,
                     seed, higher_is_better);
    }
    if (*simulate) return cmd_simulate(config_path, out_dir, limit);
    if (*power) return cmd_power(config_path, calibrate_from, out_dir, workers, replications);
    if (*calibrate) return cmd_calibrate(null_report, alpha, cal_out);
    if (*coverage) return cmd_coverage(report_path, truth, method);
    if (*report) return cmd_report(studies, format, out_path, replication, plot_model);
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const OptimizerFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
