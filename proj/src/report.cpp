#include "pmrm/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pmrm/errors.hpp"
#include "pmrm/rng.hpp"

namespace pmrm {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<const StudyReport*>& reports) {
  out << "study,scenario,method,n_replications,n_valid,n_excluded,cutoff,calibrated,n_rejected,"
         "rejection_rate,mean_estimate,median_estimate,sd_estimate,truth,coverage\n";
  for (const auto* r : reports) {
    for (const auto& s : r->summaries) {
      out << r->config.name << ',' << r->config.scenario.label() << ',' << to_string(s.method)
          << ',' << s.n_replications << ',' << s.n_valid << ',' << s.n_excluded << ','
          << num(s.cutoff) << ',' << (s.calibrated ? 1 : 0) << ',' << s.n_rejected << ','
          << num(s.rejection_rate) << ',' << num(s.mean_estimate) << ','
          << num(s.median_estimate) << ',' << num(s.sd_estimate) << ',' << num(s.truth) << ','
          << num(s.coverage) << '\n';
    }
  }
}

void write_diagnostics_csv(std::ostream& out, const std::vector<const StudyReport*>& reports) {
  out << "study,scenario,check,n_valid,n_failed,n_rejected,level,rejection_rate\n";
  for (const auto* r : reports) {
    const auto label = r->config.scenario.label();
    if (r->lrt) {
      const auto& l = *r->lrt;
      out << r->config.name << ',' << label << ",lrt_proportional_slowing," << l.n_valid << ','
          << l.n_failed << ',' << l.n_rejected << ',' << num(l.alpha) << ','
          << num(l.rejection_rate) << '\n';
    }
    for (const auto& s : r->summaries) {
      out << r->config.name << ',' << label << ",excluded:" << to_string(s.method) << ','
          << s.n_valid << ',' << s.n_excluded << ",,,\n";
    }
  }
}

void write_metadata(std::ostream& out, const StudyReport& report) {
  const auto& c = report.config;
  out << "study: " << c.name << "\n";
  out << "scenario: " << c.scenario.label() << "\n";
  out << "n_replications: " << c.n_replications << "\n";
  out << "base_seed: " << c.base_seed << "\n";
  out << "rng: " << kRngIdentifier << "\n";
  out << "workers_configured: " << c.workers << "\n";
  out << "workers_used: " << report.workers_used << "\n";
  out << "interpolation: " << to_string(c.interpolation) << "\n";
  out << "optimizer: BFGS with central-difference gradients, Newton refinement on the "
         "finite-difference Hessian\n";
  out << "max_iter: " << c.fit.max_iter << "\n";
  out << "rel_tol: " << num(c.fit.rel_tol) << "\n";
  out << "grad_tol: " << num(c.fit.grad_tol) << "\n";
  out << "n_restarts: " << c.fit.n_restarts << "\n";
  out << "alpha_one_sided: " << num(c.alpha_one_sided) << "\n";
  out << "alpha_two_sided: " << num(c.alpha_two_sided) << "\n";
  out << "higher_is_better: " << (c.higher_is_better ? "true" : "false") << "\n";
  out << "calibrated: " << (report.calibrated ? "true" : "false") << "\n";
  if (c.calibrate_from) out << "calibrate_from: " << c.calibrate_from->string() << "\n";
  for (const auto& [m, v] : report.cutoffs) {
    out << "cutoff." << to_string(m) << ": " << num(v) << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  out << "runtime_seconds: " << num(report.runtime_seconds) << "\n";
}

void emit_report(const StudyReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const std::vector<const StudyReport*> one = {&report};
  {
    auto out = open_out(dir / "summary.csv");
    write_summary_csv(out, one);
  }
  {
    auto out = open_out(dir / "replications.csv");
    write_replications_csv(out, report.replications);
  }
  {
    auto out = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(out, one);
  }
  {
    auto out = open_out(dir / "metadata.txt");
    write_metadata(out, report);
  }
  {
    // Relative paths in the copy would resolve against the report directory.
    StudyConfig copy = report.config;
    if (copy.calibrate_from) {
      copy.calibrate_from = std::filesystem::absolute(resolve_path(copy, *copy.calibrate_from));
    }
    if (copy.scenario.kind == ScenarioKind::pool && copy.scenario.pool_source != "synthetic") {
      copy.scenario.pool_source =
          std::filesystem::absolute(resolve_path(copy, copy.scenario.pool_source)).string();
    }
    auto out = open_out(dir / "config.ini");
    write_study_config(out, copy);
  }
}

StudyReport load_report(const std::filesystem::path& dir) {
  StudyReport report;
  report.config = load_study_config(dir / "config.ini");
  report.replications = load_replications(dir / "replications.csv");
  CutoffOptions cutoffs;
  if (report.config.calibrate_from) {
    const auto null_records =
        load_replications(resolve_path(report.config, *report.config.calibrate_from));
    auto cal = recalibrate_cutoffs(null_p_values(null_records), report.config.alpha_one_sided);
    cutoffs.cutoffs = std::move(cal.cutoffs);
    cutoffs.calibrated = true;
    report.warnings = std::move(cal.warnings);
  }
  summarize(report, cutoffs);
  return report;
}

std::string render_trajectory_svg(const std::string& title, const std::vector<double>& times,
                                  const std::vector<PlotSeries>& series) {
  if (times.size() < 2) throw ContractError("a trajectory plot needs at least two time points");
  const double width = 640, height = 420, left = 60, right = 180, top = 40, bottom = 50;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    if (s.values.size() != static_cast<Eigen::Index>(times.size())) {
      throw ContractError("series '" + s.label + "' does not match the time axis");
    }
    lo = std::min(lo, s.values.minCoeff());
    hi = std::max(hi, s.values.maxCoeff());
  }
  if (series.empty()) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double t0 = times.front(), t1 = times.back();
  const auto px = [&](double t) { return left + (t - t0) / (t1 - t0) * (width - left - right); };
  const auto py = [&](double y) { return top + (hi - y) / (hi - lo) * (height - top - bottom); };

  std::ostringstream svg;
  svg << std::setprecision(8);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";
  // Axes with ticks at the visit times and at five outcome levels.
  svg << "<g stroke=\"#444\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\"/>\n";
  svg << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  for (const double t : times) {
    svg << "<text x=\"" << px(t) << "\" y=\"" << height - bottom + 16
        << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double y = lo + (hi - lo) * k / 4.0;
    std::ostringstream lab;
    lab << std::fixed << std::setprecision(2) << y;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << lab.str() << "</text>\n";
  }
  svg << "</g>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << " data-label=\"" << s.label << "\" data-values=\"";
    for (Eigen::Index j = 0; j < s.values.size(); ++j) {
      svg << (j ? " " : "") << std::setprecision(10) << s.values[j];
    }
    svg << std::setprecision(8) << "\" points=\"";
    for (std::size_t j = 0; j < times.size(); ++j) {
      svg << (j ? " " : "") << px(times[j]) << ',' << py(s.values[static_cast<Eigen::Index>(j)]);
    }
    svg << "\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << width - right + 12 << "\" y1=\"" << ly << "\" x2=\""
        << width - right + 36 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    svg << "<text x=\"" << width - right + 42 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string trajectory_plot(const StudyConfig& config, int index, Variant variant) {
  const ScenarioSampler sampler(config);
  const TrialDataset data = sampler.generate(index);
  const auto& schedule = data.schedule();
  const int d = schedule.size();

  std::vector<PlotSeries> series;
  if (const auto truth = sampler.true_means()) {
    series.push_back({"placebo (scenario)", truth->first, "#1f77b4", false});
    series.push_back({"active (scenario)", truth->second, "#d62728", false});
  } else {
    for (const Arm arm : {Arm::placebo, Arm::active}) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), count = Eigen::VectorXd::Zero(d);
      for (const auto& s : data.subjects()) {
        if (s.arm != arm) continue;
        for (const auto& o : s.observations) {
          sum[o.visit] += o.value;
          count[o.visit] += 1.0;
        }
      }
      series.push_back({std::string(to_string(arm)) + " (observed)", sum.cwiseQuotient(count),
                        arm == Arm::placebo ? "#1f77b4" : "#d62728", false});
    }
  }

  FitOptions options = config.fit;
  options.seed = replication_seed(config, index);
  const auto spec = study_spec(config, schedule, variant);
  const auto fit = fit_model(spec, data, options);
  const MeanFunction mean(fit.spec, fit.estimates);
  for (const Arm arm : {Arm::placebo, Arm::active}) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = mean(arm, std::nullopt, j, schedule.time(j));
    series.push_back({std::string(to_string(arm)) + " (" + std::string(to_string(variant)) + ")", v,
                      arm == Arm::placebo ? "#1f77b4" : "#d62728", true});
  }
  const std::string title =
      config.scenario.label() + ", replication " + std::to_string(index) +
      (fit.converged ? "" : " (fit did not converge)");
  return render_trajectory_svg(title, schedule.times(), series);
}

}  // namespace pmrm
