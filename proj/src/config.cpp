#include "pmrm/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pmrm/errors.hpp"

namespace pmrm {

namespace pt = boost::property_tree;

std::string_view to_string(Method method) {
  switch (method) {
    case Method::clda_final_visit: return "clda_final_visit";
    case Method::clda_auc: return "clda_auc";
    case Method::clda_type3: return "clda_type3";
    case Method::pmrm_prop_decline: return "pmrm_prop_decline";
    case Method::time_pmrm_final: return "time_pmrm_final";
    case Method::time_pmrm_prop_slowing: return "time_pmrm_prop_slowing";
  }
  return "clda_final_visit";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> all = {Method::clda_final_visit,  Method::clda_auc,
                                          Method::clda_type3,        Method::pmrm_prop_decline,
                                          Method::time_pmrm_final,   Method::time_pmrm_prop_slowing};
  return all;
}

Method parse_method(std::string_view text) {
  for (const auto m : all_methods()) {
    if (to_string(m) == text) return m;
  }
  throw ValidationError("unknown method '" + std::string(text) + "'");
}

std::string ScenarioConfig::label() const {
  std::string out;
  if (kind == ScenarioKind::cs1) {
    out = "cs1:" + std::string(to_string(cs1_effect));
  } else {
    out = "pool:" + std::string(to_string(pool_effect));
    if (pool_effect != PoolEffect::none) out += ":" + std::string(to_string(implementation));
  }
  return out + ":n" + std::to_string(n_per_arm);
}

void StudyConfig::validate() const {
  if (n_replications < 1) throw ValidationError("n_replications must be at least 1");
  if (scenario.n_per_arm < 1) throw ValidationError("n_per_arm must be at least 1");
  const auto in_unit = [](double a) { return a > 0.0 && a < 1.0; };
  if (!in_unit(alpha_one_sided) || !in_unit(alpha_two_sided) || !in_unit(lrt_alpha)) {
    throw ValidationError("significance levels must lie in (0, 1)");
  }
  if (methods.empty() && !lrt) throw ValidationError("study selects no methods");
  if (workers < 0) throw ValidationError("workers must be nonnegative");
  if (scenario.kind == ScenarioKind::pool && scenario.pool_effect == PoolEffect::stable_benefit &&
      scenario.implementation == EffectImplementation::subject_level) {
    throw ValidationError("stable_benefit has no subject-level implementation");
  }
  if (fit.max_iter < 1 || !(fit.rel_tol > 0.0) || !(fit.grad_tol > 0.0) || fit.n_restarts < 0) {
    throw ValidationError("invalid optimizer settings");
  }
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string buf = text;
  for (auto& c : buf) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(buf);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ValidationError("expected a boolean, got '" + s + "'");
}

template <class T>
T get_or(const pt::ptree& tree, const std::string& key, T fallback) {
  try {
    return tree.get<T>(key, fallback);
  } catch (const pt::ptree_bad_data&) {
    throw ValidationError("bad value for '" + key + "'");
  }
}

void reject_unknown(const pt::ptree& tree, const std::vector<std::string>& sections) {
  for (const auto& [section, body] : tree) {
    if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
      throw ValidationError("unknown config section [" + section + "]");
    }
  }
}

}  // namespace

StudyConfig parse_study_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  reject_unknown(tree, {"study", "scenario", "fit", "truth"});

  StudyConfig c;
  c.base_dir = base_dir;
  c.name = get_or<std::string>(tree, "study.name", c.name);
  c.n_replications = get_or(tree, "study.n_replications", c.n_replications);
  c.base_seed = get_or<std::uint64_t>(tree, "study.base_seed", c.base_seed);
  c.alpha_one_sided = get_or(tree, "study.alpha_one_sided", c.alpha_one_sided);
  c.alpha_two_sided = get_or(tree, "study.alpha_two_sided", c.alpha_two_sided);
  c.workers = get_or(tree, "study.workers", c.workers);
  c.lrt = parse_bool(get_or<std::string>(tree, "study.lrt", c.lrt ? "true" : "false"));
  c.lrt_alpha = get_or(tree, "study.lrt_alpha", c.lrt_alpha);
  c.higher_is_better = parse_bool(
      get_or<std::string>(tree, "study.higher_is_better", c.higher_is_better ? "true" : "false"));
  c.interpolation = parse_interpolation_kind(
      get_or<std::string>(tree, "study.interpolation", std::string(to_string(c.interpolation))));
  if (const auto m = tree.get_optional<std::string>("study.methods")) {
    c.methods.clear();
    for (const auto& name : split_list(*m)) c.methods.push_back(parse_method(name));
  }
  if (const auto p = tree.get_optional<std::string>("study.calibrate_from")) {
    if (!p->empty()) c.calibrate_from = *p;
  }

  auto& s = c.scenario;
  const auto kind = get_or<std::string>(tree, "scenario.kind", "cs1");
  if (kind == "cs1") {
    s.kind = ScenarioKind::cs1;
    s.cs1_effect = parse_cs1_effect(get_or<std::string>(tree, "scenario.effect", "none"));
  } else if (kind == "pool") {
    s.kind = ScenarioKind::pool;
    s.pool_effect = parse_pool_effect(get_or<std::string>(tree, "scenario.effect", "none"));
    s.implementation = parse_effect_implementation(
        get_or<std::string>(tree, "scenario.implementation", "mean_level"));
    s.baseline_scaling =
        parse_baseline_scaling(get_or<std::string>(tree, "scenario.baseline_scaling", "all"));
    s.pool_source = get_or<std::string>(tree, "scenario.pool", s.pool_source);
    s.pool_schedule = get_or<std::string>(tree, "scenario.pool_schedule", s.pool_schedule);
    s.pool_seed = get_or<std::uint64_t>(tree, "scenario.pool_seed", s.pool_seed);
  } else {
    throw ValidationError("unknown scenario kind '" + kind + "'");
  }
  s.n_per_arm = get_or(tree, "scenario.n_per_arm", s.n_per_arm);

  c.fit.max_iter = get_or(tree, "fit.max_iter", c.fit.max_iter);
  c.fit.rel_tol = get_or(tree, "fit.rel_tol", c.fit.rel_tol);
  c.fit.grad_tol = get_or(tree, "fit.grad_tol", c.fit.grad_tol);
  c.fit.n_restarts = get_or(tree, "fit.n_restarts", c.fit.n_restarts);

  if (const auto truth = tree.get_child_optional("truth")) {
    for (const auto& [key, value] : *truth) {
      try {
        c.truth[parse_method(key)] = value.get_value<double>();
      } catch (const pt::ptree_bad_data&) {
        throw ValidationError("bad truth value for '" + key + "'");
      }
    }
  }
  c.validate();
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_study_config(in, path.parent_path());
}

void write_study_config(std::ostream& out, const StudyConfig& c) {
  out << std::setprecision(17);
  out << "[study]\n";
  out << "name = " << c.name << "\n";
  out << "n_replications = " << c.n_replications << "\n";
  out << "base_seed = " << c.base_seed << "\n";
  out << "alpha_one_sided = " << c.alpha_one_sided << "\n";
  out << "alpha_two_sided = " << c.alpha_two_sided << "\n";
  out << "workers = " << c.workers << "\n";
  out << "lrt = " << (c.lrt ? "true" : "false") << "\n";
  out << "lrt_alpha = " << c.lrt_alpha << "\n";
  out << "higher_is_better = " << (c.higher_is_better ? "true" : "false") << "\n";
  out << "interpolation = " << to_string(c.interpolation) << "\n";
  out << "methods = ";
  for (std::size_t k = 0; k < c.methods.size(); ++k) {
    out << (k ? ", " : "") << to_string(c.methods[k]);
  }
  out << "\n";
  if (c.calibrate_from) out << "calibrate_from = " << c.calibrate_from->string() << "\n";

  const auto& s = c.scenario;
  out << "\n[scenario]\n";
  if (s.kind == ScenarioKind::cs1) {
    out << "kind = cs1\neffect = " << to_string(s.cs1_effect) << "\n";
  } else {
    out << "kind = pool\neffect = " << to_string(s.pool_effect) << "\n";
    out << "implementation = " << to_string(s.implementation) << "\n";
    out << "baseline_scaling = " << to_string(s.baseline_scaling) << "\n";
    out << "pool = " << s.pool_source << "\n";
    out << "pool_schedule = " << s.pool_schedule << "\n";
    out << "pool_seed = " << s.pool_seed << "\n";
  }
  out << "n_per_arm = " << s.n_per_arm << "\n";

  out << "\n[fit]\n";
  out << "max_iter = " << c.fit.max_iter << "\n";
  out << "rel_tol = " << c.fit.rel_tol << "\n";
  out << "grad_tol = " << c.fit.grad_tol << "\n";
  out << "n_restarts = " << c.fit.n_restarts << "\n";

  if (!c.truth.empty()) {
    out << "\n[truth]\n";
    for (const auto& [m, v] : c.truth) out << to_string(m) << " = " << v << "\n";
  }
}

std::filesystem::path resolve_path(const StudyConfig& config, const std::filesystem::path& p) {
  if (p.is_absolute() || config.base_dir.empty()) return p;
  return config.base_dir / p;
}

}  // namespace pmrm
