#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmrm/estimation.hpp"
#include "pmrm/interpolation.hpp"
#include "pmrm/simulation.hpp"

namespace pmrm {

// The six treatment-effect quantifications compared in a study.
enum class Method {
  clda_final_visit,
  clda_auc,
  clda_type3,
  pmrm_prop_decline,
  time_pmrm_final,
  time_pmrm_prop_slowing,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
const std::vector<Method>& all_methods();
// Type-3 is the only two-sided method; it has no point estimate or interval.
inline bool is_two_sided(Method m) { return m == Method::clda_type3; }

enum class ScenarioKind { cs1, pool };

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::cs1;
  int n_per_arm = 300;
  Cs1Effect cs1_effect = Cs1Effect::none;
  PoolEffect pool_effect = PoolEffect::none;
  EffectImplementation implementation = EffectImplementation::mean_level;
  BaselineScaling baseline_scaling = BaselineScaling::all_visits;
  // "synthetic" or a long-format CSV path (relative paths resolve against the config file).
  std::string pool_source = "synthetic";
  std::string pool_schedule = "0,28,52,80";
  std::uint64_t pool_seed = SyntheticPoolOptions{}.seed;

  // e.g. "cs1:slowed_20:n300" or "pool:delay_16w:subject_level:n500"
  std::string label() const;
};

struct StudyConfig {
  std::string name = "study";
  ScenarioConfig scenario;
  std::vector<Method> methods = all_methods();
  int n_replications = 500;
  std::uint64_t base_seed = 1;
  double alpha_one_sided = 0.025;
  double alpha_two_sided = 0.05;
  // Null-run report directory (or its replications.csv) supplying recalibrated cutoffs.
  std::optional<std::filesystem::path> calibrate_from;
  int workers = 1;  // 0 means one per hardware thread
  bool lrt = true;
  double lrt_alpha = 0.05;
  bool higher_is_better = false;
  InterpolationKind interpolation = InterpolationKind::natural_cubic;
  FitOptions fit;
  // Explicit true effect per method; otherwise derived from the scenario when possible.
  std::map<Method, double> truth;
  // Directory of the config file, for resolving relative paths.
  std::filesystem::path base_dir;

  // Throws ValidationError.
  void validate() const;
};

// INI document with sections [study], [scenario], [fit] and [truth].
StudyConfig parse_study_config(std::istream& in, const std::filesystem::path& base_dir = {});
StudyConfig load_study_config(const std::filesystem::path& path);
void write_study_config(std::ostream& out, const StudyConfig& config);

std::filesystem::path resolve_path(const StudyConfig& config, const std::filesystem::path& p);

}  // namespace pmrm
