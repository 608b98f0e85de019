#include "pmrm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "pmrm/errors.hpp"

namespace pmrm {

// --- records -------------------------------------------------------------------

const MethodOutcome* ReplicationRecord::find(Method m) const {
  for (const auto& o : outcomes) {
    if (o.method == m) return &o;
  }
  return nullptr;
}

const MethodSummary& StudyReport::summary(Method m) const {
  for (const auto& s : summaries) {
    if (s.method == m) return s;
  }
  throw ContractError("method " + std::string(to_string(m)) + " is not part of this report");
}

std::vector<double> StudyReport::p_values(Method m) const {
  std::vector<double> out;
  for (const auto& r : replications) {
    if (const auto* o = r.find(m); o && o->valid) out.push_back(o->p_value());
  }
  return out;
}

// --- scenarios -------------------------------------------------------------------

std::uint64_t replication_seed(const StudyConfig& config, int index) {
  return config.base_seed + static_cast<std::uint64_t>(index);
}

namespace {

VisitSchedule scenario_schedule(const StudyConfig& config) {
  if (config.scenario.kind == ScenarioKind::cs1) return cs1_schedule();
  if (config.scenario.pool_source == "synthetic") return cs2_schedule();
  return VisitSchedule::parse(config.scenario.pool_schedule);
}

}  // namespace

ScenarioSampler::ScenarioSampler(const StudyConfig& config)
    : config_(config), schedule_(scenario_schedule(config)) {
  const auto& sc = config.scenario;
  if (sc.kind == ScenarioKind::cs1) {
    Cs1Scenario s;
    s.effect = sc.cs1_effect;
    s.n_per_arm = sc.n_per_arm;
    cs1_ = s;
    return;
  }
  std::shared_ptr<const SubjectPool> pool;
  if (sc.pool_source == "synthetic") {
    SyntheticPoolOptions opts;
    opts.seed = sc.pool_seed;
    pool = std::make_shared<const SubjectPool>(synthetic_cs2_pool(opts));
  } else {
    pool = std::make_shared<const SubjectPool>(
        load_pool_csv(resolve_path(config, sc.pool_source), schedule_));
  }
  PoolScenario p;
  p.pool = pool;
  p.effect = sc.pool_effect;
  p.implementation = sc.implementation;
  p.n_per_arm = sc.n_per_arm;
  p.scaling = sc.baseline_scaling;
  p.deltas = change_from_baseline_means(*pool);
  p.validate();
  pool_ = std::move(p);
}

TrialDataset ScenarioSampler::generate(int index) const {
  const auto seed = replication_seed(config_, index);
  if (cs1_) return generate_cs1_trial(*cs1_, seed);
  return resample_pool(*pool_, seed);
}

std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> ScenarioSampler::true_means() const {
  if (!cs1_) return std::nullopt;
  return std::make_pair(cs1_->mean_placebo, cs1_->active_means());
}

// --- one replication ---------------------------------------------------------------

std::vector<Variant> required_variants(const StudyConfig& config) {
  std::vector<Variant> out;
  const auto need = [&](Variant v) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  for (const auto m : config.methods) {
    switch (m) {
      case Method::clda_final_visit:
      case Method::clda_auc:
      case Method::clda_type3: need(Variant::clda); break;
      case Method::pmrm_prop_decline: need(Variant::prop_decline); break;
      case Method::time_pmrm_final: need(Variant::time_pmrm); break;
      case Method::time_pmrm_prop_slowing: need(Variant::prop_slowing); break;
    }
  }
  if (config.lrt) {
    need(Variant::time_pmrm);
    need(Variant::prop_slowing);
  }
  return out;
}

MeanModelSpec study_spec(const StudyConfig& config, const VisitSchedule& schedule, Variant v) {
  MeanModelSpec spec;
  spec.variant = v;
  spec.interpolation = config.interpolation;
  spec.schedule = schedule;
  spec.validate();
  return spec;
}

namespace {

struct FitSlot {
  std::optional<FitResult> fit;
  std::string failure;
};

FitSlot try_fit(const MeanModelSpec& spec, const TrialDataset& data, const FitOptions& options) {
  FitSlot slot;
  try {
    auto fit = fit_model(spec, data, options);
    if (fit.converged) {
      slot.fit = std::move(fit);
    } else {
      slot.failure = std::string(to_string(spec.variant)) + " did not converge";
    }
  } catch (const Error& e) {
    slot.failure = std::string(to_string(spec.variant)) + ": " + e.what();
  }
  return slot;
}

Variant variant_of(Method m) {
  switch (m) {
    case Method::clda_final_visit:
    case Method::clda_auc:
    case Method::clda_type3: return Variant::clda;
    case Method::pmrm_prop_decline: return Variant::prop_decline;
    case Method::time_pmrm_final: return Variant::time_pmrm;
    case Method::time_pmrm_prop_slowing: return Variant::prop_slowing;
  }
  return Variant::clda;
}

TestResult evaluate_method(Method m, const FitResult& fit, bool higher_is_better) {
  const int last = fit.spec.schedule.post_baseline();
  switch (m) {
    case Method::clda_final_visit: {
      const std::string sel = "contrast[" + std::to_string(last) + "]";
      return wald_test(fit, sel, 0.0, benefit_side(fit, sel, higher_is_better));
    }
    case Method::clda_auc: return auc_contrast(fit, higher_is_better);
    case Method::clda_type3: return type3_treatment_test(fit);
    case Method::pmrm_prop_decline:
    case Method::time_pmrm_prop_slowing:
      return wald_test(fit, "beta", 1.0, benefit_side(fit, "beta"));
    case Method::time_pmrm_final: {
      const std::string sel = "beta[" + std::to_string(last) + "]";
      return wald_test(fit, sel, 1.0, benefit_side(fit, sel));
    }
  }
  throw ContractError("unknown method");
}

}  // namespace

ReplicationRecord run_replication(const StudyConfig& config, const ScenarioSampler& sampler,
                                  int index) {
  ReplicationRecord rec;
  rec.index = index;
  rec.seed = replication_seed(config, index);
  const TrialDataset data = sampler.generate(index);

  FitOptions options = config.fit;
  options.seed = rec.seed;
  std::map<Variant, FitSlot> fits;
  for (const auto v : required_variants(config)) {
    fits.emplace(v, try_fit(study_spec(config, data.schedule(), v), data, options));
  }

  for (const auto m : config.methods) {
    MethodOutcome out;
    out.method = m;
    const auto& slot = fits.at(variant_of(m));
    if (!slot.fit) {
      out.failure = slot.failure;
    } else {
      out.loglik = slot.fit->loglik;
      try {
        out.test = evaluate_method(m, *slot.fit, config.higher_is_better);
        out.valid = true;
      } catch (const Error& e) {
        out.failure = e.what();
      }
    }
    rec.outcomes.push_back(std::move(out));
  }

  if (config.lrt) {
    const auto& restricted = fits.at(Variant::prop_slowing);
    const auto& general = fits.at(Variant::time_pmrm);
    if (!restricted.fit || !general.fit) {
      rec.lrt_failure = !restricted.fit ? restricted.failure : general.failure;
    } else {
      try {
        rec.lrt = lrt_proportional_slowing(*restricted.fit, *general.fit);
      } catch (const Error& e) {
        rec.lrt_failure = e.what();
      }
    }
  }
  return rec;
}

ReplicationRecord run_replication(const StudyConfig& config, int index) {
  return run_replication(config, ScenarioSampler(config), index);
}

// --- aggregation -------------------------------------------------------------------

double nominal_level(const StudyConfig& config, Method m) {
  return is_two_sided(m) ? config.alpha_two_sided : config.alpha_one_sided;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void summarize(StudyReport& report, const CutoffOptions& cutoffs) {
  const auto& config = report.config;
  report.summaries.clear();
  report.cutoffs.clear();
  report.calibrated = cutoffs.calibrated;
  for (const auto m : config.methods) {
    MethodSummary s;
    s.method = m;
    const auto it = cutoffs.cutoffs.find(m);
    s.calibrated = it != cutoffs.cutoffs.end();
    s.cutoff = s.calibrated ? it->second : nominal_level(config, m);
    report.cutoffs[m] = s.cutoff;
    std::vector<double> estimates;
    for (const auto& r : report.replications) {
      const auto* o = r.find(m);
      if (!o) continue;
      ++s.n_replications;
      if (!o->valid) {
        ++s.n_excluded;
        continue;
      }
      ++s.n_valid;
      if (o->p_value() <= s.cutoff) ++s.n_rejected;
      if (o->test.estimate) estimates.push_back(*o->test.estimate);
    }
    if (s.n_valid > 0) s.rejection_rate = static_cast<double>(s.n_rejected) / s.n_valid;
    if (!estimates.empty()) {
      const double n = static_cast<double>(estimates.size());
      const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
      s.mean_estimate = mean;
      s.median_estimate = quantile_type7(estimates, 0.5);
      if (estimates.size() > 1) {
        double ss = 0.0;
        for (const double e : estimates) ss += (e - mean) * (e - mean);
        s.sd_estimate = std::sqrt(ss / (n - 1.0));
      }
    }
    s.truth = study_truth(config, m);
    if (s.truth && !is_two_sided(m) && s.n_valid > 0) {
      s.coverage = coverage_summary(report.replications, *s.truth, m);
    }
    report.summaries.push_back(s);
  }

  report.lrt.reset();
  if (config.lrt) {
    LrtSummary l;
    l.alpha = config.lrt_alpha;
    for (const auto& r : report.replications) {
      if (!r.lrt) {
        ++l.n_failed;
        continue;
      }
      ++l.n_valid;
      if (r.lrt->p_two_sided <= l.alpha) ++l.n_rejected;
    }
    if (l.n_valid > 0) l.rejection_rate = static_cast<double>(l.n_rejected) / l.n_valid;
    report.lrt = l;
  }
}

Calibration recalibrate_cutoffs(const std::map<Method, std::vector<double>>& null_p_values,
                                double alpha_one_sided) {
  if (!(alpha_one_sided > 0.0 && alpha_one_sided < 0.5)) {
    throw ValidationError("alpha must lie in (0, 0.5)");
  }
  Calibration out;
  for (const auto& [m, p] : null_p_values) {
    const double level = is_two_sided(m) ? 2.0 * alpha_one_sided : alpha_one_sided;
    if (p.empty()) {
      out.warnings.push_back(std::string(to_string(m)) + ": no valid null replications");
      continue;
    }
    if (static_cast<double>(p.size()) < 1.0 / level) {
      out.warnings.push_back(std::string(to_string(m)) + ": only " + std::to_string(p.size()) +
                             " null replications; the quantile is unstable");
    }
    out.cutoffs[m] = quantile_type7(p, level);
  }
  return out;
}

Calibration recalibrate_cutoffs(const StudyReport& null_report, double alpha_one_sided) {
  std::map<Method, std::vector<double>> p;
  for (const auto m : null_report.config.methods) p[m] = null_report.p_values(m);
  return recalibrate_cutoffs(p, alpha_one_sided);
}

double coverage_summary(const std::vector<ReplicationRecord>& replications, double truth,
                        Method method) {
  if (is_two_sided(method)) {
    throw ContractError(std::string(to_string(method)) + " has no confidence interval");
  }
  int n = 0;
  int covered = 0;
  for (const auto& r : replications) {
    const auto* o = r.find(method);
    if (!o || !o->valid || !o->test.ci_low || !o->test.ci_high) continue;
    ++n;
    if (*o->test.ci_low <= truth && truth <= *o->test.ci_high) ++covered;
  }
  if (n == 0) throw ContractError("no valid intervals for " + std::string(to_string(method)));
  return static_cast<double>(covered) / n;
}

double coverage_summary(const StudyReport& report, double truth, Method method) {
  return coverage_summary(report.replications, truth, method);
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.config = config;

  CutoffOptions cutoffs;
  if (config.calibrate_from) {
    const auto null_records = load_replications(resolve_path(config, *config.calibrate_from));
    auto cal = recalibrate_cutoffs(null_p_values(null_records), config.alpha_one_sided);
    cutoffs.cutoffs = std::move(cal.cutoffs);
    cutoffs.calibrated = true;
    report.warnings = std::move(cal.warnings);
  }

  const ScenarioSampler sampler(config);
  const int n = config.n_replications;
  int workers = config.workers == 0 ? static_cast<int>(std::thread::hardware_concurrency())
                                    : config.workers;
  workers = std::clamp(workers, 1, n);
  report.workers_used = workers;

  std::vector<ReplicationRecord> records(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        records[static_cast<std::size_t>(i)] = run_replication(config, sampler, i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  report.replications = std::move(records);
  summarize(report, cutoffs);

  bool any_valid = report.lrt && report.lrt->n_valid > 0;
  for (const auto& s : report.summaries) any_valid = any_valid || s.n_valid > 0;
  if (!any_valid) throw FitError("every replication failed to converge");

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// --- true effects ------------------------------------------------------------------

namespace {

// Grid search on [lo, hi] followed by golden-section refinement.
double argmin_1d(const std::function<double(double)>& f, double lo, double hi) {
  const int steps = 4000;
  double best_x = lo;
  double best_f = f(lo);
  for (int k = 1; k <= steps; ++k) {
    const double x = lo + (hi - lo) * k / steps;
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  const double h = (hi - lo) / steps;
  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-13) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double slowing_residual(const Interpolant& f0, const std::vector<double>& t,
                        const Eigen::VectorXd& active, double beta) {
  double ss = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double r = active[static_cast<Eigen::Index>(j)] - f0(beta * t[j]);
    ss += r * r;
  }
  return ss;
}

}  // namespace

std::optional<double> derive_true_time_effect(const Cs1Scenario& scenario, Method method,
                                              InterpolationKind interpolation) {
  if (method == Method::clda_type3) return std::nullopt;
  const Eigen::VectorXd p = scenario.mean_placebo;
  const Eigen::VectorXd a = scenario.active_means();
  const auto& t = scenario.schedule.times();
  const int m = scenario.schedule.post_baseline();
  const std::vector<double> pv(p.data(), p.data() + p.size());
  const double tol = 1e-10 * (1.0 + p.squaredNorm());

  if (scenario.effect == Cs1Effect::none) {
    return method == Method::clda_final_visit || method == Method::clda_auc ? 0.0 : 1.0;
  }
  switch (method) {
    case Method::clda_type3: return std::nullopt;
    case Method::clda_final_visit: return a[m] - p[m];
    case Method::clda_auc: {
      double auc = 0.0;
      for (int j = 0; j < m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        auc += 0.5 * ((a[j] - p[j]) + (a[j + 1] - p[j + 1])) * (t[ju + 1] - t[ju]);
      }
      return auc;
    }
    case Method::pmrm_prop_decline: {
      const Eigen::ArrayXd dp = p.array() - p[0];
      const Eigen::ArrayXd da = a.array() - p[0];
      const double denom = (dp * dp).sum();
      if (denom == 0.0) return std::nullopt;
      const double b = (dp * da).sum() / denom;
      if ((da - b * dp).square().sum() > tol) return std::nullopt;
      return b;
    }
    case Method::time_pmrm_final: {
      const Interpolant f0(interpolation, t, pv);
      const double target = a[m];
      const double tm = t.back();
      return argmin_1d([&](double b) { return std::pow(target - f0(b * tm), 2); }, 0.0, 2.0);
    }
    case Method::time_pmrm_prop_slowing: {
      const Interpolant linear(InterpolationKind::linear, t, pv);
      const double b_lin =
          argmin_1d([&](double b) { return slowing_residual(linear, t, a, b); }, 0.0, 2.0);
      if (slowing_residual(linear, t, a, b_lin) > tol) return std::nullopt;
      if (interpolation == InterpolationKind::linear) return b_lin;
      const Interpolant f0(interpolation, t, pv);
      return argmin_1d([&](double b) { return slowing_residual(f0, t, a, b); }, 0.0, 2.0);
    }
  }
  return std::nullopt;
}

std::optional<double> study_truth(const StudyConfig& config, Method method) {
  if (const auto it = config.truth.find(method); it != config.truth.end()) return it->second;
  if (config.scenario.kind == ScenarioKind::pool) {
    if (config.scenario.pool_effect != PoolEffect::none || method == Method::clda_type3) {
      return std::nullopt;
    }
    return method == Method::clda_final_visit || method == Method::clda_auc ? 0.0 : 1.0;
  }
  Cs1Scenario scenario;
  scenario.effect = config.scenario.cs1_effect;
  scenario.n_per_arm = config.scenario.n_per_arm;
  const auto kind = method == Method::time_pmrm_final ? config.interpolation
                                                      : InterpolationKind::linear;
  return derive_true_time_effect(scenario, method, kind);
}

// --- CSV ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kLrtName = "lrt_proportional_slowing";
constexpr std::string_view kReplicationHeader =
    "replication,seed,method,valid,statistic,df,p_one_sided,p_two_sided,estimate,se,ci_low,"
    "ci_high,loglik,failure";

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string sanitize(std::string text) {
  for (auto& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

void write_row(std::ostream& out, const ReplicationRecord& r, std::string_view method, bool valid,
               const TestResult& t, std::optional<double> loglik, const std::string& failure) {
  out << r.index << ',' << r.seed << ',' << method << ',' << (valid ? 1 : 0) << ',';
  if (valid) {
    out << fmt(t.statistic) << ',' << (t.df ? std::to_string(*t.df) : "") << ','
        << fmt(t.p_one_sided) << ',' << fmt(t.p_two_sided) << ',' << fmt(t.estimate) << ','
        << fmt(t.se) << ',' << fmt(t.ci_low) << ',' << fmt(t.ci_high) << ',' << fmt(loglik);
  } else {
    out << ",,,,,,,,";
  }
  out << ',' << sanitize(failure) << '\n';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> opt_double(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "bad number '" + s + "'");
  }
}

}  // namespace

void write_replications_csv(std::ostream& out, const std::vector<ReplicationRecord>& records) {
  out << kReplicationHeader << '\n';
  for (const auto& r : records) {
    for (const auto& o : r.outcomes) {
      write_row(out, r, to_string(o.method), o.valid, o.test,
                o.valid ? std::optional<double>(o.loglik) : std::nullopt, o.failure);
    }
    if (r.lrt || !r.lrt_failure.empty()) {
      write_row(out, r, kLrtName, r.lrt.has_value(), r.lrt.value_or(TestResult{}), std::nullopt,
                r.lrt_failure);
    }
  }
}

std::vector<ReplicationRecord> read_replications_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReplicationHeader) throw ParseError(1, "unexpected replication header");
  std::map<int, ReplicationRecord> by_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 14) throw ParseError(line_no, "expected 14 columns");
    int index = 0;
    std::uint64_t seed = 0;
    try {
      index = std::stoi(cells[0]);
      seed = std::stoull(cells[1]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad replication index or seed");
    }
    auto& rec = by_index[index];
    rec.index = index;
    rec.seed = seed;
    const bool valid = cells[3] == "1";
    TestResult t;
    if (valid) {
      t.statistic = opt_double(cells[4], line_no).value_or(0.0);
      if (!cells[5].empty()) t.df = static_cast<int>(*opt_double(cells[5], line_no));
      t.p_one_sided = opt_double(cells[6], line_no);
      t.p_two_sided = opt_double(cells[7], line_no).value_or(1.0);
      t.estimate = opt_double(cells[8], line_no);
      t.se = opt_double(cells[9], line_no);
      t.ci_low = opt_double(cells[10], line_no);
      t.ci_high = opt_double(cells[11], line_no);
    }
    if (cells[2] == kLrtName) {
      if (valid) rec.lrt = t;
      rec.lrt_failure = cells[13];
      continue;
    }
    MethodOutcome o;
    try {
      o.method = parse_method(cells[2]);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    o.valid = valid;
    o.test = t;
    o.loglik = opt_double(cells[12], line_no).value_or(0.0);
    o.failure = cells[13];
    rec.outcomes.push_back(std::move(o));
  }
  std::vector<ReplicationRecord> out;
  out.reserve(by_index.size());
  for (auto& [i, r] : by_index) out.push_back(std::move(r));
  return out;
}

std::vector<ReplicationRecord> load_replications(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / "replications.csv" : path;
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  return read_replications_csv(in);
}

std::map<Method, std::vector<double>> null_p_values(const std::vector<ReplicationRecord>& records) {
  std::map<Method, std::vector<double>> out;
  for (const auto& r : records) {
    for (const auto& o : r.outcomes) {
      auto& v = out[o.method];
      if (o.valid) v.push_back(o.p_value());
    }
  }
  return out;
}

}  // namespace pmrm
