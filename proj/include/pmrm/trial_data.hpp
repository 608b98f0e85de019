#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmrm {

enum class Arm { placebo, active };
enum class Group { group1, group2 };
enum class TimeMode { scheduled, actual };

std::string_view to_string(Arm arm);
std::string_view to_string(Group group);
Arm parse_arm(std::string_view text);  // throws ValidationError

// Visit times since baseline. Strictly increasing, starts at 0, at least two visits.
class VisitSchedule {
 public:
  explicit VisitSchedule(std::vector<double> times);

  // "0,6,12" or "0 6 12"
  static VisitSchedule parse(std::string_view text);

  const std::vector<double>& times() const { return times_; }
  double time(int visit) const { return times_.at(static_cast<std::size_t>(visit)); }
  int size() const { return static_cast<int>(times_.size()); }
  // Number of post-baseline visits (m).
  int post_baseline() const { return size() - 1; }
  double last_time() const { return times_.back(); }

  // Index of the visit scheduled at `t`, if any (tolerance 1e-9).
  std::optional<int> visit_at(double t) const;

  bool operator==(const VisitSchedule&) const = default;

 private:
  std::vector<double> times_;
};

struct Observation {
  int visit = 0;
  double time = 0.0;
  double value = 0.0;
};

struct SubjectRecord {
  std::string subject_id;
  Arm arm = Arm::placebo;
  std::optional<Group> group;
  std::vector<Observation> observations;  // sorted by visit after validation

  bool has_baseline() const {
    return !observations.empty() && observations.front().visit == 0;
  }
  bool in_group2() const { return group == Group::group2; }
};

class TrialDataset {
 public:
  // Sorts each subject's observations by visit and validates every invariant.
  TrialDataset(VisitSchedule schedule, std::vector<SubjectRecord> subjects,
               TimeMode mode = TimeMode::scheduled);

  const VisitSchedule& schedule() const { return schedule_; }
  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  TimeMode time_mode() const { return mode_; }

  std::size_t n_subjects() const { return subjects_.size(); }
  std::size_t n_observations() const;
  std::size_t n_in_arm(Arm arm) const;

 private:
  VisitSchedule schedule_;
  std::vector<SubjectRecord> subjects_;
  TimeMode mode_;
};

// Subjects drawn from historical data for resampling. Same per-subject
// invariants as TrialDataset, but no requirement on arm balance.
class SubjectPool {
 public:
  SubjectPool(VisitSchedule schedule, std::vector<SubjectRecord> subjects,
              TimeMode mode = TimeMode::scheduled);

  const VisitSchedule& schedule() const { return schedule_; }
  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  TimeMode time_mode() const { return mode_; }
  std::size_t size() const { return subjects_.size(); }

 private:
  VisitSchedule schedule_;
  std::vector<SubjectRecord> subjects_;
  TimeMode mode_;
};

// Sorts observations by visit and checks the per-subject invariants. Throws
// ValidationError.
void validate_subjects(const VisitSchedule& schedule, std::vector<SubjectRecord>& subjects,
                       TimeMode mode);

struct ObservedRows {
  std::vector<int> visits;
  Eigen::VectorXd times;
  Eigen::VectorXd values;
};

ObservedRows observed_rows(const SubjectRecord& subject);

// Long format: subject_id,arm,group,visit,time,value. Empty value cells are missing.
// Subjects appear in first-seen order.
TrialDataset load_long_csv(const std::filesystem::path& path, const VisitSchedule& schedule,
                           TimeMode mode = TimeMode::scheduled);
TrialDataset read_long_csv(std::istream& in, const VisitSchedule& schedule,
                           TimeMode mode = TimeMode::scheduled);

SubjectPool load_pool_csv(const std::filesystem::path& path, const VisitSchedule& schedule,
                          TimeMode mode = TimeMode::scheduled);
SubjectPool read_pool_csv(std::istream& in, const VisitSchedule& schedule,
                          TimeMode mode = TimeMode::scheduled);

void write_long_csv(std::ostream& out, const TrialDataset& data);
void write_long_csv(std::ostream& out, const std::vector<SubjectRecord>& subjects);
void save_long_csv(const std::filesystem::path& path, const TrialDataset& data);

}  // namespace pmrm
