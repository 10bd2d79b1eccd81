#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "certmf/complexity.hpp"
#include "certmf/trace_io.hpp"

namespace certmf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& opts) {
  if (opts.seeds) {
    if (opts.seeds->empty()) throw ConfigError("seeds", "must not be empty");
    config.seeds = *opts.seeds;
  }
  if (opts.grid_resolution) {
    if (!(*opts.grid_resolution > 0.0)) throw ConfigError("grid_resolution", "must be > 0");
    config.grid_resolution = opts.grid_resolution;
  }
  return config;
}

std::string run_stem(const RunJob& job) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "run_e%02zu_s%llu", job.eps_index,
                static_cast<unsigned long long>(job.seed));
  return buf;
}

RunRecord execute(const Experiment& exp, const RunJob& job) {
  const auto& c = exp.config;
  RunRecord rec;
  rec.job = job;
  try {
    if (exp.stochastic) {
      StoRunConfig sc;
      sc.gamma = c.gamma;
      sc.variance = c.environment.variance;
      sc.noise = c.environment.noise;
      sc.seed = job.seed;
      sc.L = exp.L;
      sc.eps = job.eps;
      sc.budget = c.budget;
      sc.max_depth = c.max_depth;
      rec.result = run_stochastic(exp.partition, exp.objective, sc);
      rec.hidden = exp.objective;
      for (const auto& row : rec.result.trace) {
        if (std::abs(row.y - exp.objective(row.x)) > row.alpha) ++rec.contract_violations;
      }
    } else {
      DeterministicEnvironment env(exp.env_kind, exp.objective, exp.bump);
      rec.result = run_cmfdoo(exp.partition, env, exp.L, exp.cost, job.eps, c.budget, c.max_depth);
      rec.hidden = env.hidden_objective();
      rec.contract_violations = env.violations();
    }
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    if (msg.find("budget") != std::string::npos) throw ConfigError("budget", msg);
    throw ConfigError("partition", msg);
  }
  return rec;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

fs::path output_dir(const Experiment& exp, const CommandOptions& opts) {
  fs::path dir = opts.out.empty() ? fs::path(exp.config.output) : opts.out;
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

std::vector<RunJob> make_jobs(const Experiment& exp) {
  std::vector<RunJob> jobs;
  for (std::size_t k = 0; k < exp.config.eps.size(); ++k) {
    for (auto seed : exp.config.seeds) jobs.push_back({k, exp.config.eps[k], seed});
  }
  return jobs;
}

json outcome_json(const Experiment& exp, const RunRecord& rec) {
  const auto& o = rec.result.outcome;
  json j;
  j["config_hash"] = exp.hash;
  j["seed"] = rec.job.seed;
  j["eps"] = rec.job.eps;
  j["sigma"] = num_or_null(o.sigma);
  j["tau"] = o.tau ? json(*o.tau) : json();
  j["stop_reason"] = std::string(to_string(o.stop_reason));
  j["final_xi"] = o.final_xi;
  j["final_rec"] = o.final_rec;
  j["n_evals"] = o.n_evals;
  j["total_cost"] = o.total_cost;
  j["total_samples"] = o.total_samples;
  return j;
}

int exit_for(const std::vector<RunRecord>& records) {
  for (const auto& r : records) {
    if (r.result.outcome.stop_reason != StopReason::certified) return kBudgetExhausted;
  }
  return kOk;
}

std::string summary_csv(const Experiment& exp, const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "config_hash,seed,eps,sigma,tau,stop_reason,n_evals,total_cost,total_samples,final_xi,trace_file\n";
  for (const auto& r : records) {
    const auto& o = r.result.outcome;
    os << exp.hash << ',' << r.job.seed << ',' << format_double(r.job.eps) << ','
       << format_double(o.sigma) << ',' << (o.tau ? std::to_string(*o.tau) : "") << ','
       << to_string(o.stop_reason) << ',' << o.n_evals << ',' << format_double(o.total_cost) << ','
       << o.total_samples << ',' << format_double(o.final_xi) << ',' << run_stem(r.job)
       << ".trace.csv\n";
  }
  return os.str();
}

}  // namespace

int cmd_run(const Experiment& exp, const CommandOptions& opts, std::ostream& log) {
  const fs::path dir = output_dir(exp, opts);
  const auto jobs = make_jobs(exp);
  std::vector<RunRecord> records(jobs.size());
  const TraceCsvOptions csv{exp.stochastic};
  parallel_for(jobs.size(), opts.parallel, [&](std::size_t i) {
    records[i] = execute(exp, jobs[i]);
    const std::string stem = run_stem(jobs[i]);
    write_file(dir / (stem + ".trace.csv"), trace_csv(records[i].result.trace, csv));
    write_file(dir / (stem + ".outcome.json"), outcome_json(exp, records[i]).dump(2) + "\n");
  });
  write_file(dir / "summary.csv", summary_csv(exp, records));
  for (const auto& r : records) {
    const auto& o = r.result.outcome;
    log << run_stem(r.job) << " eps=" << format_double(r.job.eps) << ' ' << to_string(o.stop_reason)
        << " sigma=" << format_double(o.sigma) << " n_evals=" << o.n_evals << '\n';
  }
  return exit_for(records);
}

int cmd_complexity(const Experiment& exp, const CommandOptions& opts, std::ostream& log) {
  const fs::path dir = output_dir(exp, opts);
  const std::size_t d = exp.partition.domain().dim();
  const double beta = exp.config.beta ? *exp.config.beta : exp.partition.delta() / 3.0;
  for (std::size_t k = 0; k < exp.config.eps.size(); ++k) {
    const double eps = exp.config.eps[k];
    const double grid = exp.grid_for(eps);
    const auto profile = complexity_profile(exp.objective, exp.L, eps, grid);
    const SValue s = evaluate_s(profile, beta, exp.cost);
    const double upper = upper_bound_prediction(profile, exp.cost, exp.partition.constants(), exp.L, d);
    const auto lower = lower_bound_prediction(profile, exp.objective.lip_true, exp.cost, d);
    const double integral = integral_approximation(exp.objective, eps, exp.cost, beta, grid);

    json j;
    j["config_hash"] = exp.hash;
    j["eps"] = eps;
    j["beta"] = beta;
    j["grid_resolution"] = profile.grid_resolution;
    j["packings_exact"] = profile.packings_exact;
    j["eps_schedule"] = {{"eps0", profile.schedule.eps0},
                         {"m", profile.schedule.m},
                         {"values", profile.schedule.values}};
    json layers = json::array();
    for (const auto& t : s.layers) {
      layers.push_back({{"k", t.k}, {"eps_k", t.eps_k}, {"packing", t.packing}, {"cost_term", t.term}});
    }
    j["per_layer"] = layers;
    j["base_packing"] = profile.base_packing;
    j["base_term"] = s.base_term;
    j["S"] = s.S;
    j["upper_pred"] = upper;
    j["lower_pred"] = lower.value;
    if (!lower.warning.empty()) j["lower_warning"] = lower.warning;
    j["integral"] = integral;
    char name[64];
    std::snprintf(name, sizeof name, "complexity_e%02zu.json", k);
    write_file(dir / name, j.dump(2) + "\n");
    log << name << " eps=" << format_double(eps) << " S=" << format_double(s.S)
        << " upper_pred=" << format_double(upper) << " lower_pred=" << format_double(lower.value)
        << " integral=" << format_double(integral) << '\n';
    if (!lower.warning.empty()) log << "warning: " << lower.warning << '\n';
  }
  return kOk;
}

namespace {

struct Check {
  std::string name;
  std::string run;
  bool pass = true;
  bool informational = false;
  std::string detail;
};

std::vector<Check> validate_run(const Experiment& exp, const RunRecord& rec) {
  std::vector<Check> checks;
  const std::string stem = run_stem(rec.job);
  const auto& trace = rec.result.trace;

  {
    const auto bad = certificate_validity_check(trace, *rec.hidden);
    Check c{"certificate", stem, bad.empty(), exp.stochastic, ""};
    c.detail = bad.empty() ? "xi_t >= f_max - f(x*_t) at every t"
                           : "violated at t=" + std::to_string(bad.front()) + " (" +
                                 std::to_string(bad.size()) + " rounds)";
    checks.push_back(c);
  }
  {
    Check c{"bounded_error_audit", stem, rec.contract_violations == 0, false, ""};
    c.detail = std::to_string(rec.contract_violations) + " responses with |y - f(x)| > alpha";
    if (exp.env_kind == EnvironmentKind::bump && !exp.stochastic) {
      c.informational = true;
      c.detail += " (adversarial w.r.t. f by construction; honest for the hidden function)";
    } else if (exp.stochastic) {
      c.informational = true;
      c.detail += " (allowed with probability at most gamma)";
    }
    checks.push_back(c);
  }
  if (exp.stochastic) return checks;

  // Envelopes from the observations: err_tau at every tau, the lower bound
  // against the noiseless environment, and consistency.
  EnvelopeTracker env(exp.partition.domain(), exp.L, exp.grid_for(rec.job.eps));
  const double slack = exp.L * env.grid_step() + 1e-12;
  const double eps0 = exp.eps0();
  double min_alpha = std::numeric_limits<double>::infinity();
  std::size_t dominance_bad = 0, floor_bad = 0, first_dom = 0, first_floor = 0;
  for (const auto& row : trace) {
    env.add(row.x, row.alpha, row.y);
    min_alpha = std::min(min_alpha, row.alpha);
    const double err = env.err(row.rec);
    if (row.xi < err - slack) {
      if (dominance_bad++ == 0) first_dom = row.t;
    }
    if (exp.env_kind == EnvironmentKind::noiseless && err < std::min(min_alpha, eps0 / 2.0) - slack) {
      if (floor_bad++ == 0) first_floor = row.t;
    }
  }
  checks.push_back({"err_tau_dominance", stem, dominance_bad == 0, false,
                    dominance_bad == 0 ? "xi_tau >= err_tau - L*step at every tau"
                                       : "violated first at tau=" + std::to_string(first_dom)});
  if (exp.env_kind == EnvironmentKind::noiseless) {
    checks.push_back({"err_tau_floor", stem, floor_bad == 0, false,
                      floor_bad == 0 ? "err_tau >= min(min alpha_t, eps0/2) - L*step"
                                     : "violated first at tau=" + std::to_string(first_floor)});
  }
  const auto& inc = env.inconsistent();
  checks.push_back({"envelope_consistency", stem, inc.empty(), false,
                    inc.empty() ? "U(x_t) >= y_t - alpha_t for all t"
                                : "inconsistent observation at t=" + std::to_string(inc.front())});
  return checks;
}

}  // namespace

int cmd_validate(const Experiment& exp, const CommandOptions& opts, std::ostream& log) {
  const fs::path dir = output_dir(exp, opts);
  const auto& vc = exp.config.validate;
  std::vector<Check> checks;

  const auto report = verify_assumptions(exp.partition, vc.assumption_depth, vc.samples_per_cell, 0);
  {
    std::ostringstream os;
    os << "R_observed=" << format_double(report.radius_observed)
       << " nu_observed=" << format_double(report.nu_observed);
    if (!report.pass()) os << " witness: " << report.witness;
    checks.push_back({"assumptions", "", report.pass(), false, os.str()});
  }
  {
    const auto lc = check_lipschitz(exp.objective, vc.lipschitz_pairs, 0);
    checks.push_back({"lipschitz", "", lc.pass, false,
                      "max_ratio=" + format_double(lc.max_ratio) + " L=" + format_double(exp.L)});
  }

  const auto jobs = make_jobs(exp);
  std::vector<std::vector<Check>> per_run(jobs.size());
  std::vector<RunRecord> records(jobs.size());
  parallel_for(jobs.size(), opts.parallel, [&](std::size_t i) {
    records[i] = execute(exp, jobs[i]);
    per_run[i] = validate_run(exp, records[i]);
  });
  for (auto& v : per_run) checks.insert(checks.end(), v.begin(), v.end());

  const Check* first_fail = nullptr;
  json arr = json::array();
  for (const auto& c : checks) {
    if (!c.pass && !c.informational && !first_fail) first_fail = &c;
    arr.push_back({{"name", c.name}, {"run", c.run}, {"pass", c.pass},
                   {"informational", c.informational}, {"detail", c.detail}});
    log << (c.pass ? "PASS " : (c.informational ? "INFO " : "FAIL ")) << c.name
        << (c.run.empty() ? "" : " [" + c.run + "]") << ": " << c.detail << '\n';
  }
  json j;
  j["config_hash"] = exp.hash;
  j["pass"] = first_fail == nullptr;
  j["checks"] = arr;
  if (first_fail) j["first_failure"] = first_fail->name;
  write_file(dir / "validation.json", j.dump(2) + "\n");
  if (first_fail) {
    log << "validation failed: " << first_fail->name << '\n';
    return kValidationFailed;
  }
  return kOk;
}

int cmd_sweep(const Experiment& exp, const CommandOptions& opts, std::ostream& log) {
  const fs::path dir = output_dir(exp, opts);
  const auto jobs = make_jobs(exp);
  std::vector<RunRecord> records(jobs.size());
  std::vector<std::size_t> cert_violations(jobs.size(), 0);
  parallel_for(jobs.size(), opts.parallel, [&](std::size_t i) {
    records[i] = execute(exp, jobs[i]);
    cert_violations[i] = certificate_validity_check(records[i].result.trace, *records[i].hidden).size();
  });

  std::ostringstream csv;
  csv << "config_hash,seed,eps,log2_inv_eps,sigma,log2_sigma,tau,stop_reason,n_evals,total_samples,"
         "certificate_violations\n";
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& o = r.result.outcome;
    const double lx = -std::log2(r.job.eps);
    const double ly = std::log2(o.sigma);
    csv << exp.hash << ',' << r.job.seed << ',' << format_double(r.job.eps) << ','
        << format_double(lx) << ',' << format_double(o.sigma) << ',' << format_double(ly) << ','
        << (o.tau ? std::to_string(*o.tau) : "") << ',' << to_string(o.stop_reason) << ','
        << o.n_evals << ',' << o.total_samples << ',' << cert_violations[i] << '\n';
    if (o.stop_reason == StopReason::certified) {
      xs.push_back(lx);
      ys.push_back(ly);
    }
  }
  write_file(dir / "sweep.csv", csv.str());

  json summary;
  summary["config_hash"] = exp.hash;
  summary["n_runs"] = records.size();
  summary["n_certified"] = xs.size();
  json slope;  // least squares of log2 sigma on log2 (1/eps)
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx > 0) slope = sxy / sxx;
  }
  summary["slope"] = slope;
  write_file(dir / "sweep_summary.json", summary.dump(2) + "\n");
  log << "sweep: " << records.size() << " runs, slope=" << slope.dump() << '\n';

  if (exp.stochastic) {
    const std::size_t d = exp.partition.domain().dim();
    for (std::size_t k = 0; k < exp.config.eps.size(); ++k) {
      const double eps = exp.config.eps[k];
      const auto profile = complexity_profile(exp.objective, exp.L, eps, exp.grid_for(eps));
      const double bound = upper_bound_prediction(profile, exp.cost, exp.partition.constants(), exp.L, d);
      std::vector<std::uint64_t> samples;
      std::size_t violations = 0, pac_failures = 0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].job.eps_index != k) continue;
        const auto total = records[i].result.outcome.total_samples;
        samples.push_back(total);
        if (cert_violations[i] > 0) ++violations;
        if (cert_violations[i] > 0 || static_cast<double>(total) > bound) ++pac_failures;
      }
      std::sort(samples.begin(), samples.end());
      json q;
      for (double level : {0.5, 0.9, 0.95, 0.99, 1.0}) {
        const auto idx = static_cast<std::size_t>(std::ceil(level * samples.size())) - 1;
        q[format_double(level)] = samples[std::min(idx, samples.size() - 1)];
      }
      json mc;
      mc["config_hash"] = exp.hash;
      mc["eps"] = eps;
      mc["n_runs"] = samples.size();
      mc["gamma"] = exp.config.gamma;
      mc["violations"] = violations;
      mc["max_total_samples"] = samples.back();
      mc["quantiles"] = q;
      mc["pac_bound"] = bound;
      mc["pac_failures"] = pac_failures;
      char name[64];
      std::snprintf(name, sizeof name, "montecarlo_e%02zu.json", k);
      write_file(dir / name, mc.dump(2) + "\n");
      log << name << ": n_runs=" << samples.size() << " violations=" << violations
          << " pac_failures=" << pac_failures << " max_total_samples=" << samples.back() << '\n';
    }
  }
  return exit_for(records);
}

}  // namespace certmf::cli
