#include "pmrm/trial_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "pmrm/errors.hpp"

namespace pmrm {

namespace {

constexpr double kTimeTolerance = 1e-9;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // strtod accepts forms from_chars rejects (leading '+'); both are fine for decimals.
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(Arm arm) { return arm == Arm::placebo ? "placebo" : "active"; }

std::string_view to_string(Group group) { return group == Group::group1 ? "group1" : "group2"; }

Arm parse_arm(std::string_view text) {
  if (text == "placebo") return Arm::placebo;
  if (text == "active") return Arm::active;
  throw ValidationError("unknown arm '" + std::string(text) + "'");
}

VisitSchedule::VisitSchedule(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw ValidationError("visit schedule needs at least two visits");
  if (times_.front() != 0.0) throw ValidationError("visit schedule must start at time 0");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw ValidationError("visit schedule must be strictly increasing");
    }
  }
}

VisitSchedule VisitSchedule::parse(std::string_view text) {
  std::vector<double> times;
  std::string buf(text);
  std::replace(buf.begin(), buf.end(), ',', ' ');
  std::istringstream in(buf);
  std::string tok;
  while (in >> tok) {
    const auto v = to_double(tok);
    if (!v) throw ValidationError("bad schedule entry '" + tok + "'");
    times.push_back(*v);
  }
  return VisitSchedule(std::move(times));
}

std::optional<int> VisitSchedule::visit_at(double t) const {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (std::abs(times_[k] - t) <= kTimeTolerance) return static_cast<int>(k);
  }
  return std::nullopt;
}

void validate_subjects(const VisitSchedule& schedule, std::vector<SubjectRecord>& subjects,
                       TimeMode mode) {
  const int m = schedule.post_baseline();
  for (auto& s : subjects) {
    if (s.observations.empty()) {
      throw ValidationError("subject '" + s.subject_id + "' has no observations");
    }
    std::sort(s.observations.begin(), s.observations.end(),
              [](const Observation& a, const Observation& b) { return a.visit < b.visit; });
    for (std::size_t k = 0; k < s.observations.size(); ++k) {
      const auto& o = s.observations[k];
      if (o.visit < 0 || o.visit > m) {
        throw ValidationError("subject '" + s.subject_id + "' has visit " +
                              std::to_string(o.visit) + " outside the schedule");
      }
      if (k > 0 && s.observations[k - 1].visit == o.visit) {
        throw ValidationError("subject '" + s.subject_id + "' has duplicate visit " +
                              std::to_string(o.visit));
      }
      if (!std::isfinite(o.value) || !std::isfinite(o.time)) {
        throw ValidationError("subject '" + s.subject_id + "' has a non-finite observation");
      }
      if (mode == TimeMode::scheduled) {
        if (std::abs(o.time - schedule.time(o.visit)) > kTimeTolerance) {
          throw ValidationError("subject '" + s.subject_id + "' visit " +
                                std::to_string(o.visit) + " time does not match the schedule");
        }
      } else if (o.time < 0.0) {
        throw ValidationError("subject '" + s.subject_id + "' has a negative visit time");
      }
    }
  }
}

TrialDataset::TrialDataset(VisitSchedule schedule, std::vector<SubjectRecord> subjects,
                           TimeMode mode)
    : schedule_(std::move(schedule)), subjects_(std::move(subjects)), mode_(mode) {
  validate_subjects(schedule_, subjects_, mode_);
  const auto placebo = n_in_arm(Arm::placebo);
  if (placebo == 0 || placebo == subjects_.size()) {
    throw ValidationError("dataset needs at least one subject in each arm");
  }
}

SubjectPool::SubjectPool(VisitSchedule schedule, std::vector<SubjectRecord> subjects,
                         TimeMode mode)
    : schedule_(std::move(schedule)), subjects_(std::move(subjects)), mode_(mode) {
  if (subjects_.empty()) throw ValidationError("subject pool is empty");
  validate_subjects(schedule_, subjects_, mode_);
}

std::size_t TrialDataset::n_observations() const {
  std::size_t n = 0;
  for (const auto& s : subjects_) n += s.observations.size();
  return n;
}

std::size_t TrialDataset::n_in_arm(Arm arm) const {
  return static_cast<std::size_t>(std::count_if(
      subjects_.begin(), subjects_.end(), [arm](const SubjectRecord& s) { return s.arm == arm; }));
}

ObservedRows observed_rows(const SubjectRecord& subject) {
  std::vector<Observation> obs = subject.observations;
  std::sort(obs.begin(), obs.end(),
            [](const Observation& a, const Observation& b) { return a.visit < b.visit; });
  ObservedRows rows;
  rows.visits.reserve(obs.size());
  rows.times.resize(static_cast<Eigen::Index>(obs.size()));
  rows.values.resize(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t k = 0; k < obs.size(); ++k) {
    rows.visits.push_back(obs[k].visit);
    rows.times[static_cast<Eigen::Index>(k)] = obs[k].time;
    rows.values[static_cast<Eigen::Index>(k)] = obs[k].value;
  }
  return rows;
}

namespace {

std::vector<SubjectRecord> parse_long_csv(std::istream& in, const VisitSchedule& schedule,
                                          TimeMode mode) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++line_no;
  const auto header = split(line, ',');
  const std::vector<std::string_view> expected = {"subject_id", "arm", "group",
                                                  "visit",      "time", "value"};
  if (header != expected) {
    throw ParseError(1, "header must be subject_id,arm,group,visit,time,value");
  }

  std::vector<SubjectRecord> subjects;
  std::unordered_map<std::string, std::size_t> index;
  std::unordered_map<std::string, std::size_t> first_line;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 6) throw ParseError(line_no, "expected 6 columns");
    const std::string id(cells[0]);
    if (id.empty()) throw ParseError(line_no, "empty subject_id");

    Arm arm;
    try {
      arm = parse_arm(cells[1]);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    std::optional<Group> group;
    if (cells[2] == "group1" || cells[2] == "1") {
      group = Group::group1;
    } else if (cells[2] == "group2" || cells[2] == "2") {
      group = Group::group2;
    } else if (!cells[2].empty()) {
      throw ParseError(line_no, "unknown group '" + std::string(cells[2]) + "'");
    }
    const auto visit = to_int(cells[3]);
    if (!visit) throw ParseError(line_no, "non-integer visit '" + std::string(cells[3]) + "'");
    std::optional<double> time;
    if (cells[4].empty() && mode == TimeMode::scheduled && *visit >= 0 &&
        *visit < schedule.size()) {
      time = schedule.time(*visit);
    } else {
      time = to_double(cells[4]);
    }
    if (!time) throw ParseError(line_no, "non-numeric time '" + std::string(cells[4]) + "'");

    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, subjects.size()).first;
      first_line.emplace(id, line_no);
      SubjectRecord rec;
      rec.subject_id = id;
      rec.arm = arm;
      rec.group = group;
      subjects.push_back(std::move(rec));
    }
    auto& rec = subjects[it->second];
    if (rec.arm != arm || rec.group != group) {
      throw ParseError(line_no, "subject '" + id + "' changes arm or group");
    }
    if (cells[5].empty()) continue;  // missing
    const auto value = to_double(cells[5]);
    if (!value) throw ParseError(line_no, "non-numeric value '" + std::string(cells[5]) + "'");
    for (const auto& o : rec.observations) {
      if (o.visit == *visit) {
        throw ValidationError("line " + std::to_string(line_no) + ": duplicate visit " +
                              std::to_string(*visit) + " for subject '" + id + "'");
      }
    }
    rec.observations.push_back({*visit, *time, *value});
  }
  return subjects;
}

}  // namespace

TrialDataset read_long_csv(std::istream& in, const VisitSchedule& schedule, TimeMode mode) {
  return TrialDataset(schedule, parse_long_csv(in, schedule, mode), mode);
}

SubjectPool read_pool_csv(std::istream& in, const VisitSchedule& schedule, TimeMode mode) {
  return SubjectPool(schedule, parse_long_csv(in, schedule, mode), mode);
}

SubjectPool load_pool_csv(const std::filesystem::path& path, const VisitSchedule& schedule,
                          TimeMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_pool_csv(in, schedule, mode);
}

TrialDataset load_long_csv(const std::filesystem::path& path, const VisitSchedule& schedule,
                           TimeMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_long_csv(in, schedule, mode);
}

void write_long_csv(std::ostream& out, const TrialDataset& data) {
  write_long_csv(out, data.subjects());
}

void write_long_csv(std::ostream& out, const std::vector<SubjectRecord>& subjects) {
  out << "subject_id,arm,group,visit,time,value\n";
  std::ostringstream num;
  num << std::setprecision(17);
  for (const auto& s : subjects) {
    for (const auto& o : s.observations) {
      num.str("");
      num << o.time << ',' << o.value;
      out << s.subject_id << ',' << to_string(s.arm) << ','
          << (s.group ? to_string(*s.group) : std::string_view{}) << ',' << o.visit << ','
          << num.str() << '\n';
    }
  }
}

void save_long_csv(const std::filesystem::path& path, const TrialDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_long_csv(out, data);
}

}  // namespace pmrm
