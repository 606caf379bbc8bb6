#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "CLI11.hpp"
#include "diagcoag/diagcoag.hpp"

namespace diagcoag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::merge_json(const json& j) {
  auto num = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
  };
  num("gamma", gamma);
  num("beta", beta);
  num("rho", rho);
  num("z", z);
  num("xmax", x_max);
  if (j.contains("c")) c = j.at("c").get<double>();
  if (j.contains("m")) m = j.at("m").get<int>();
  if (j.contains("tol")) tol = j.at("tol").get<double>();
  if (j.contains("out")) out = j.at("out").get<std::string>();
  if (j.contains("format")) format = j.at("format").get<std::string>();
  if (j.contains("allow_degenerate")) allow_degenerate = j.at("allow_degenerate").get<bool>();
}

double RunConfig::resolve_beta() const {
  if (!gamma) throw DomainError("--gamma is required");
  if (beta.has_value() == rho.has_value()) {
    throw DomainError("exactly one of --beta and --rho must be given");
  }
  return beta ? *beta : beta_from_rho(*gamma, *rho);
}

namespace {

/// Shared flags of one subcommand. Values are kept raw so that a --config
/// file only fills what was not given explicitly.
struct Flags {
  std::string config_path;
  double gamma = 0, beta = 0, rho = 0, c = 1, z = 0, x_max = 0, tol = 1e-12;
  int m = 64;
  std::string out, format = "csv";
  bool allow_degenerate = false;
  CLI::Option *o_gamma{}, *o_beta{}, *o_rho{}, *o_c{}, *o_z{}, *o_m{}, *o_xmax{}, *o_tol{},
      *o_out{}, *o_format{}, *o_allow{};

  void add_params(CLI::App* app) {
    o_gamma = app->add_option("--gamma", gamma, "kernel homogeneity (< 1)");
    o_beta = app->add_option("--beta", beta, "similarity exponent (>= 1/(1-gamma))");
    o_rho = app->add_option("--rho", rho, "tail exponent in (gamma, 1); alternative to --beta");
    app->add_option("--config", config_path, "JSON file with defaults for the flags");
  }
  void add_profile(CLI::App* app) {
    o_c = app->add_option("--c", c, "bifurcation amplitude (0 gives the constant solution)");
    o_z = app->add_option("--z", z, "right end of the local expansion (default automatic)");
    o_m = app->add_option("--m", m, "nodes per octave (even)");
    o_xmax = app->add_option("--xmax", x_max, "right end of the integration (raw coordinate)");
    o_tol = app->add_option("--tol", tol, "fixed-point tolerance");
    o_allow = app->add_flag("--allow-degenerate", allow_degenerate,
                            "accept beta = 1/(1-gamma)");
  }
  void add_output(CLI::App* app, const std::string& what) {
    o_out = app->add_option("--out", out, what);
    o_format = app->add_option("--format", format, "csv or json")
                   ->check(CLI::IsMember({"csv", "json"}));
  }

  /// Config file first, then explicit flags on top.
  RunConfig resolve() {
    RunConfig r;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw IoError("cannot read config " + config_path);
      json j;
      try {
        is >> j;
      } catch (const json::exception& e) {
        throw IoError("malformed config: " + std::string(e.what()));
      }
      r.merge_json(j);
    }
    auto given = [](CLI::Option* o) { return o && o->count() > 0; };
    if (given(o_gamma)) r.gamma = gamma;
    if (given(o_beta)) {
      r.beta = beta;
      r.rho.reset();
    }
    if (given(o_rho)) {
      r.rho = rho;
      if (!given(o_beta)) r.beta.reset();
    }
    if (given(o_c)) r.c = c;
    if (given(o_z)) r.z = z;
    if (given(o_m)) r.m = m;
    if (given(o_xmax)) r.x_max = x_max;
    if (given(o_tol)) r.tol = tol;
    if (given(o_out)) r.out = out;
    if (given(o_format)) r.format = format;
    if (given(o_allow)) r.allow_degenerate = allow_degenerate;
    return r;
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t"));
    if (cell.empty()) continue;
    try {
      v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw DomainError("not a number: '" + cell + "'");
    }
  }
  return v;
}

ProfileOptions profile_options(const RunConfig& cfg) {
  ProfileOptions o;
  o.c = cfg.c;
  o.z = cfg.z;
  o.m = cfg.m;
  o.x_max = cfg.x_max;
  o.tol = cfg.tol;
  return o;
}

/// Empty string when the node values satisfy positivity, the upper value A
/// and strict decrease (or, for c = 0, equal A).
std::string profile_invariant_failure(const Profile& pr) {
  const double A = pr.params.stationary_value();
  for (std::size_t k = 0; k < pr.size(); ++k) {
    if (pr.is_constant()) {
      if (std::abs(pr.h[k] - A) > 1e-10 * A) return "constant profile departs from A";
      continue;
    }
    if (!(pr.h[k] > 0.0) || !(pr.dev[k] < 0.0)) {
      return "h outside (0, A) at x = " + io::fmt(pr.x[k]);
    }
    if (k > 0 && !(pr.h[k] < pr.h[k - 1] || pr.dev[k] < pr.dev[k - 1])) {
      return "h not decreasing at x = " + io::fmt(pr.x[k]);
    }
  }
  return {};
}

json profile_json(const Profile& pr) {
  json j = io::profile_metadata(pr);
  std::vector<double> g(pr.size());
  for (std::size_t k = 0; k < pr.size(); ++k) {
    g[k] = std::pow(pr.x[k], -(1.0 + pr.params.gamma())) * pr.h[k];
  }
  j["x"] = pr.x;
  j["h"] = pr.h;
  j["g"] = g;
  j["dhdx"] = pr.dh;
  j["dev"] = pr.dev;
  j["p"] = pr.p;
  return j;
}

// Subcommands.

int cmd_mu(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  double beta = 0.0;
  MuSolveReport rep;
  try {
    beta = cfg.resolve_beta();
    rep = solve_mu(*cfg.gamma, beta);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const Error& e) {
    err << "error: mu solver: " << e.what() << '\n';
    return kSolverFailure;
  }
  json j = to_json(rep);
  j["gamma"] = *cfg.gamma;
  j["beta"] = beta;
  out << j.dump(2) << '\n';
  if (!(std::abs(rep.residual) <= detail::kMuResidualTol)) {
    err << "error: residual " << rep.residual << " above tolerance\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_profile(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  SimilarityParams params;
  try {
    params = make_params(cfg.gamma.value_or(NAN), cfg.resolve_beta());
    if (params.degenerate && !cfg.allow_degenerate) {
      throw DomainError("beta = 1/(1-gamma) is degenerate; pass --allow-degenerate to proceed");
    }
    if (cfg.m < 2 || cfg.m % 2 != 0) throw DomainError("--m must be a positive even number");
    if (cfg.c < 0.0) throw DomainError("--c must be >= 0");
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }

  ProfileRun run;
  try {
    run = build_profile(params, profile_options(cfg));
  } catch (const PipelineError& e) {
    err << "error: stage " << e.stage() << " failed: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const Error& e) {
    err << "error: stage setup failed: " << e.what() << '\n';
    return kSolverFailure;
  }
  const Profile& pr = run.profile;

  const fs::path path = cfg.out.empty() ? fs::path(cfg.format == "json" ? "profile.json"
                                                                        : "profile.csv")
                                        : fs::path(cfg.out);
  try {
    if (cfg.format == "json") {
      io::write_json(path, profile_json(pr));
    } else {
      io::write_profile(path, pr);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  const std::string failure = profile_invariant_failure(pr);
  json summary = to_json(params);
  summary["c"] = pr.c;
  summary["z"] = pr.z;
  summary["m"] = run.m_used;
  summary["nodes"] = pr.size();
  summary["x_min"] = pr.x_min();
  summary["x_max"] = pr.x_max();
  summary["decades"] = std::log10(pr.x_max() / pr.x_min());
  summary["normalized"] = pr.normalized;
  summary["tail_clamped"] = run.tail_clamped;
  summary["kappa"] = run.kappa;
  summary["expansion_iterations"] = run.expansion.iterations;
  summary["output"] = path.string();
  summary["invariants_ok"] = failure.empty();
  out << summary.dump(2) << '\n';
  if (!failure.empty()) {
    err << "error: stage invariants failed: " << failure << '\n';
    return kSolverFailure;
  }
  return kOk;
}

/// Names of the failed checks of a tail report.
std::vector<std::string> failed_checks(const TailReport& r, const SimilarityParams& p,
                                       double residual_tol) {
  std::vector<std::string> failed;
  if (!r.upper_bound_ok) failed.push_back("upper_bound");
  if (!r.lower_bound_ok) failed.push_back("lower_bound");
  if (!r.hineq_ok) failed.push_back("hineq");
  if (!r.cauchy_ok()) failed.push_back("cauchy");
  if (!r.d_in_range()) failed.push_back("d_range");
  if (!r.slope_ok(p.beta)) failed.push_back("slope");
  if (!(r.max_integral_residual <= residual_tol)) failed.push_back("integral_residual");
  return failed;
}

int cmd_verify(const std::string& csv, const std::string& meta, const std::string& report,
               std::ostream& out, std::ostream& err) {
  Profile pr;
  try {
    pr = io::read_profile(csv, meta);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (pr.is_constant() || !pr.normalized) {
    err << "error: verify needs a normalized non-constant profile (h(1) = 1/2)\n";
    return kInvalid;
  }
  TailReport rep;
  const TailOptions opt;
  try {
    rep = analyze_tail(pr, opt);
  } catch (const Error& e) {
    err << "error: tail analysis failed: " << e.what() << '\n';
    return kBoundFailure;
  }
  const auto failed = failed_checks(rep, pr.params, opt.residual_tol);
  json j = to_json(rep);
  j["failed"] = failed;
  j["passed"] = failed.empty();
  out << j.dump(2) << '\n';
  if (!report.empty()) io::write_json(report, j);
  if (!failed.empty()) {
    err << "error: failed bounds:";
    for (const auto& f : failed) err << ' ' << f;
    err << '\n';
    return kBoundFailure;
  }
  return kOk;
}

struct SimulateArgs {
  std::string init = "profile";
  std::string profile_csv;
  double B = 1.0;
  std::optional<double> a;
  int k0 = 64;
  double amplitude = 1.0;
  double t_start = 1.0;
  double t_end = 4.0;
  int snapshots = 6;
  double xi_min = std::ldexp(1.0, -20);
  int m_d = 16;
  int octaves = 40;
  double eta = 0.1;
};

int cmd_simulate(const RunConfig& cfg, const SimulateArgs& sa, std::ostream& out,
                 std::ostream& err) {
  KernelParams kernel;
  double beta = 0.0;
  std::optional<Profile> profile;
  try {
    if (!cfg.gamma) throw DomainError("--gamma is required");
    kernel = make_kernel(*cfg.gamma);
    beta = (cfg.beta || cfg.rho) ? cfg.resolve_beta() : beta_star_of(*cfg.gamma);
    if (!(sa.t_end > sa.t_start) || !(sa.t_start >= 1.0)) {
      throw DomainError("need 1 <= t_start < t_end");
    }
    if (sa.snapshots < 1) throw DomainError("--snapshots must be >= 1");
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }

  NumberDensityField field;
  try {
    field = make_field(kernel, sa.xi_min, sa.m_d, sa.octaves, sa.t_start);
    if (sa.init == "profile") {
      if (!sa.profile_csv.empty()) {
        profile = io::read_profile(sa.profile_csv);
        beta = profile->params.beta;
        if (std::abs(profile->params.gamma() - kernel.gamma) > 0.0) {
          throw DomainError("profile gamma differs from --gamma");
        }
      } else {
        const auto params = make_params(kernel.gamma, beta);
        profile = build_profile(params, profile_options(cfg)).profile;
      }
      set_from_profile(field, *profile);
    } else if (sa.init == "power-law") {
      set_power_law(field, sa.B, sa.a.value_or(0.5 * (3.0 + kernel.gamma)));
    } else if (sa.init == "pulse") {
      set_pulse(field, static_cast<std::size_t>(sa.k0), sa.amplitude);
    } else {
      throw DomainError("--init must be profile, power-law or pulse");
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const PipelineError& e) {
    err << "error: stage " << e.stage() << " failed: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  // Stationarity diagnostic of the initial data, interior nodes only.
  double rhs_rel = 0.0;
  {
    const auto rate = coag_rhs(field);
    const double e = 1.0 + kernel.gamma;
    for (std::size_t k = static_cast<std::size_t>(sa.m_d); k < field.size(); ++k) {
      const double scale = std::pow(field.xi[k], e) * field.f[k] * field.f[k];
      if (scale > 0.0) rhs_rel = std::max(rhs_rel, std::abs(rate[k]) / scale);
    }
  }

  const fs::path dir = cfg.out.empty() ? fs::path("simulation") : fs::path(cfg.out);
  const auto times = geometric_times(sa.t_start, sa.t_end, sa.snapshots);
  std::vector<NumberDensityField> snaps;
  json report;
  try {
    const Moments m0 = moments(field);
    if (profile) {
      const CollapseReport rep = track_collapse(field, *profile, beta, times, sa.eta, &snaps);
      report["collapse"] = to_json(rep);
    } else {
      snaps.push_back(field);
      for (double t : times) {
        if (t <= field.t) continue;
        field = advance_to(std::move(field), t, sa.eta);
        snaps.push_back(field);
      }
    }
    double balance = 0.0;
    bool n_nonincreasing = true;
    json mom = json::array();
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      const Moments mi = moments(snaps[i]);
      if (i > 0 && mi.number > moments(snaps[i - 1]).number) n_nonincreasing = false;
      const double elapsed = snaps[i].t - sa.t_start;
      if (elapsed > 0.0 && m0.mass > 0.0) {
        balance = std::max(balance,
                           std::abs(mi.mass + snaps[i].outflow - m0.mass) / (m0.mass * elapsed));
      }
      mom.push_back({{"t", snaps[i].t},
                     {"number", mi.number},
                     {"mass", mi.mass},
                     {"loss_flux", mi.loss_flux},
                     {"outflow", snaps[i].outflow}});
    }
    report["init"] = sa.init;
    report["gamma"] = kernel.gamma;
    report["beta"] = beta;
    report["max_interior_rhs_relative"] = rhs_rel;
    report["mass_balance_per_time"] = balance;
    report["number_nonincreasing"] = n_nonincreasing;
    report["moments"] = mom;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      auto os = io::open_out(dir / ("snapshot_" + std::to_string(i) + ".csv"));
      io::write_snapshot_csv(os, snaps[i], beta);
    }
    io::write_json(dir / "collapse_report.json", report);
  } catch (const StepCollapse& e) {
    err << "error: " << e.what() << '\n';
    return kStepCollapse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  out << report.dump(2) << '\n';
  return kOk;
}

struct SweepRow {
  double gamma = 0.0;
  double rho = 0.0;
  std::string status = "ok";
  std::string message;
  double beta = NAN, mu = NAN, kappa = NAN, d = NAN, slope_error = NAN;
  double upper = NAN, lower = NAN, lower_literal = NAN, hineq = NAN, cauchy = NAN,
         residual = NAN;
};

SweepRow sweep_row(double gamma, double rho, const RunConfig& cfg) {
  SweepRow row;
  row.gamma = gamma;
  row.rho = rho;
  SimilarityParams params;
  try {
    params = make_params(gamma, beta_from_rho(gamma, rho));
  } catch (const Error& e) {
    row.status = "invalid";
    row.message = e.what();
    return row;
  }
  row.beta = params.beta;
  row.mu = params.mu;
  try {
    RunConfig c = cfg;
    c.x_max.reset();
    const auto run = build_profile(params, profile_options(c));
    row.kappa = run.kappa;
    const TailOptions opt;
    const TailReport rep = analyze_tail(run.profile, opt);
    row.d = rep.d_estimate;
    row.slope_error = std::abs(rep.slope_fit + 1.0 / params.beta) * params.beta;
    row.upper = rep.bounds.upper_margin;
    row.lower = rep.bounds.lower_margin;
    row.lower_literal = rep.bounds.lower_literal_margin;
    row.hineq = rep.bounds.hineq_margin;
    row.cauchy = rep.cauchy_max_violation + 1.0;
    row.residual = rep.max_integral_residual;
    std::string failure = profile_invariant_failure(run.profile);
    const auto failed = failed_checks(rep, params, opt.residual_tol);
    for (const auto& f : failed) failure += (failure.empty() ? "" : " ") + f;
    if (!failure.empty()) {
      row.status = "bound_failed";
      row.message = failure;
    }
  } catch (const std::exception& e) {
    row.status = "failed";
    row.message = e.what();
  }
  return row;
}

int cmd_sweep(const RunConfig& cfg, const std::string& gammas, const std::optional<std::string>& rhos,
              const std::optional<std::string>& fractions, std::ostream& out, std::ostream& err) {
  std::vector<double> gamma_list;
  std::vector<double> rho_list;
  std::vector<double> frac_list;
  try {
    gamma_list = parse_list(gammas);
    if (rhos) rho_list = parse_list(*rhos);
    if (fractions) frac_list = parse_list(*fractions);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }
  if (gamma_list.empty()) {
    err << "error: empty gamma list\n";
    return kInvalid;
  }
  if ((rhos && rho_list.empty()) || (fractions && frac_list.empty())) {
    err << "error: empty rho list\n";
    return kInvalid;
  }
  if (!rhos && !fractions) frac_list = {1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6};

  std::vector<std::pair<double, double>> cases;
  for (double g : gamma_list) {
    if (rhos) {
      for (double r : rho_list) cases.emplace_back(g, r);
    } else {
      for (double f : frac_list) cases.emplace_back(g, g + f * (1.0 - g));
    }
  }
  // Rows are independent pipelines.
  std::vector<std::future<SweepRow>> jobs;
  for (const auto& [g, r] : cases) {
    jobs.push_back(std::async(std::launch::async, sweep_row, g, r, cfg));
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  std::ostringstream table;
  if (cfg.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"gamma", r.gamma}, {"rho", r.rho}, {"beta", r.beta}, {"mu", r.mu},
                     {"kappa", r.kappa}, {"d_estimate", r.d}, {"slope_error", r.slope_error},
                     {"upper_margin", r.upper}, {"lower_margin", r.lower},
                     {"lower_literal_margin", r.lower_literal}, {"hineq_margin", r.hineq},
                     {"cauchy_ratio", r.cauchy}, {"integral_residual", r.residual},
                     {"status", r.status}, {"message", r.message}});
    }
    table << arr.dump(2) << '\n';
  } else {
    table << "gamma,rho,beta,mu,kappa,d_estimate,slope_error,upper_margin,lower_margin,"
             "lower_literal_margin,hineq_margin,cauchy_ratio,integral_residual,status,message\n";
    for (const auto& r : rows) {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      for (double v : {r.gamma, r.rho, r.beta, r.mu, r.kappa, r.d, r.slope_error, r.upper,
                       r.lower, r.lower_literal, r.hineq, r.cauchy, r.residual}) {
        table << io::fmt(v) << ',';
      }
      table << r.status << ',' << msg << '\n';
    }
  }
  if (cfg.out.empty()) {
    out << table.str();
  } else {
    try {
      auto os = io::open_out(cfg.out);
      os << table.str();
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kUsage;
    }
    out << "wrote " << rows.size() << " rows to " << cfg.out << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-similar profiles of the diagonal coagulation equation"};
  app.require_subcommand(1);

  Flags mu_flags, profile_flags, sim_flags, sweep_flags;

  auto* mu = app.add_subcommand("mu", "solve for the bifurcation exponent mu");
  mu_flags.add_params(mu);

  auto* prof = app.add_subcommand("profile", "compute and normalize a profile");
  profile_flags.add_params(prof);
  profile_flags.add_profile(prof);
  profile_flags.add_output(prof, "output table (metadata goes next to it as .meta.json)");

  auto* ver = app.add_subcommand("verify", "check the tail bounds of a stored profile");
  std::string verify_csv, verify_meta, verify_report;
  ver->add_option("profile", verify_csv, "profile CSV")->required();
  ver->add_option("--meta", verify_meta, "metadata JSON (default next to the CSV)");
  ver->add_option("--out", verify_report, "also write the report to this file");

  auto* sim = app.add_subcommand("simulate", "evolve the time-dependent equation");
  sim_flags.add_params(sim);
  sim_flags.add_profile(sim);
  sim_flags.add_output(sim, "output directory");
  SimulateArgs sa;
  sim->add_option("--init", sa.init, "profile, power-law or pulse");
  sim->add_option("--profile", sa.profile_csv, "profile CSV for --init profile");
  sim->add_option("--B", sa.B, "power-law amplitude");
  sim->add_option("--a", sa.a, "power-law exponent (default (3+gamma)/2)");
  sim->add_option("--k0", sa.k0, "pulse node");
  sim->add_option("--amplitude", sa.amplitude, "pulse amplitude");
  sim->add_option("--t-start", sa.t_start, "initial time (>= 1)");
  sim->add_option("--t-end", sa.t_end, "final time");
  sim->add_option("--snapshots", sa.snapshots, "number of geometric output intervals");
  sim->add_option("--xi-min", sa.xi_min, "smallest grid size");
  sim->add_option("--md", sa.m_d, "grid nodes per octave");
  sim->add_option("--octaves", sa.octaves, "grid octaves");
  sim->add_option("--eta", sa.eta, "time step factor");

  auto* sweep = app.add_subcommand("sweep", "profiles and tail checks over a (gamma, rho) table");
  std::string gammas = "-1,0,0.5";
  std::string rhos_text, fractions_text;
  sweep->add_option("--config", sweep_flags.config_path, "JSON file with defaults");
  sweep_flags.o_m = sweep->add_option("--m", sweep_flags.m, "nodes per octave");
  sweep_flags.o_tol = sweep->add_option("--tol", sweep_flags.tol, "fixed-point tolerance");
  sweep_flags.add_output(sweep, "output table (default stdout)");
  auto* o_gammas = sweep->add_option("--gamma", gammas, "comma-separated gamma values");
  auto* o_rhos = sweep->add_option("--rho", rhos_text, "comma-separated rho values");
  auto* o_fracs = sweep->add_option("--rho-fractions", fractions_text,
                                    "rho = gamma + f (1 - gamma) for each listed f");
  o_gammas->allow_extra_args(false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (mu->parsed()) return cmd_mu(mu_flags.resolve(), out, err);
    if (prof->parsed()) return cmd_profile(profile_flags.resolve(), out, err);
    if (ver->parsed()) return cmd_verify(verify_csv, verify_meta, verify_report, out, err);
    if (sim->parsed()) return cmd_simulate(sim_flags.resolve(), sa, out, err);
    if (sweep->parsed()) {
      const RunConfig cfg = sweep_flags.resolve();
      std::optional<std::string> r, f;
      if (o_rhos->count() > 0) r = rhos_text;
      if (o_fracs->count() > 0) f = fractions_text;
      return cmd_sweep(cfg, gammas, r, f, out, err);
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace diagcoag::cli
