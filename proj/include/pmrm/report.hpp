#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmrm/harness.hpp"

namespace pmrm {

// One row per (study, method): rejection rate, cutoff, estimate summaries,
// truth and coverage. Contains no timing data, so identical configs produce
// identical bytes.
void write_summary_csv(std::ostream& out, const std::vector<const StudyReport*>& reports);
// LRT rejection and per-method exclusion counts per study.
void write_diagnostics_csv(std::ostream& out, const std::vector<const StudyReport*>& reports);
// Seeds, RNG, tolerances, cutoffs and runtime as "key: value" lines.
void write_metadata(std::ostream& out, const StudyReport& report);

// Writes summary.csv, replications.csv, diagnostics.csv, metadata.txt and
// config.ini into `dir` (created if needed). Throws IoError.
void emit_report(const StudyReport& report, const std::filesystem::path& dir);

// Rebuilds a report from a directory written by emit_report, re-aggregating
// the stored replications.
StudyReport load_report(const std::filesystem::path& dir);

struct PlotSeries {
  std::string label;
  Eigen::VectorXd values;
  std::string color = "#1f77b4";
  bool dashed = false;
};

// Line chart over visit times. Every polyline carries its raw values in a
// data-values attribute.
std::string render_trajectory_svg(const std::string& title, const std::vector<double>& times,
                                  const std::vector<PlotSeries>& series);

// Scenario means (closed-form scenarios) or observed arm means, together with
// the fitted arm means of `variant` on replication `index`.
std::string trajectory_plot(const StudyConfig& config, int index, Variant variant);

}  // namespace pmrm
