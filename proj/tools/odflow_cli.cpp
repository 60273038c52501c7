// odflow command-line front end.
//
// Every run writes <out>/<run_id>/{report.txt, *.csv, meta}. The run id
// defaults to the command name plus a hash of the resolved configuration, so
// identical inputs give identical output trees.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "odflow/odflow.hpp"

namespace fs = std::filesystem;
using namespace odflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

struct Common {
  std::string out = "runs";
  std::string run_id;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output root directory")->capture_default_str();
  sub->add_option("--run-id", c.run_id, "Run directory name (default: command + config hash)");
  sub->add_option("--config", c.config, "key=value file supplying defaults for this command's flags");
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Resolved option values of a subcommand, sorted by name; output-location
/// options are left out so they do not feed the run id.
std::map<std::string, std::string> resolved_options(const CLI::App* sub) {
  std::map<std::string, std::string> out;
  for (const auto* opt : sub->get_options()) {
    const auto name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "out" || name == "run-id" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      if (res.empty()) value = "true";
    } else {
      value = opt->get_default_str();
    }
    out[name] = value;
  }
  return out;
}

class RunDir {
 public:
  RunDir(const CLI::App* sub, const Common& common, std::optional<std::uint64_t> seed, std::string_view rng_id)
      : options_(resolved_options(sub)) {
    std::string canon = sub->get_name() + "\n";
    for (const auto& [k, v] : options_) canon += k + "=" + v + "\n";
    run_id_ = common.run_id;
    if (run_id_.empty()) {
      std::ostringstream id;
      id << sub->get_name() << '-' << std::hex << fnv1a(canon);
      run_id_ = id.str();
    }
    dir_ = fs::path(common.out) / run_id_;
    fs::create_directories(dir_);

    std::ostringstream meta;
    meta << "command=" << sub->get_name() << '\n';
    meta << "run_id=" << run_id_ << '\n';
    meta << "version=" << ODFLOW_VERSION << '\n';
    if (seed) meta << "seed=" << *seed << '\n';
    if (!rng_id.empty()) meta << "rng_id=" << rng_id << '\n';
    for (const auto& [k, v] : options_) meta << "config." << k << '=' << v << '\n';
    files_["meta"] = meta.str();
  }

  void add(const std::string& name, std::string text) { files_[name] = std::move(text); }
  const fs::path& dir() const { return dir_; }

  /// All files are written here, by one writer, at the end of the run.
  void flush() const {
    for (const auto& [name, text] : files_) csv::write_text(dir_ / name, text);
  }

 private:
  std::map<std::string, std::string> options_;
  std::map<std::string, std::string> files_;
  std::string run_id_;
  fs::path dir_;
};

std::string yesno(bool b) { return b ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------
// --config handling: key=value lines become --key=value arguments for keys not
// already given on the command line. Unknown keys are errors.

std::vector<std::string> merge_config(CLI::App& app, std::vector<std::string> args) {
  if (args.size() < 2) return args;
  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands({})) {
    if (s->get_name() == args[1]) sub = s;
  }
  if (sub == nullptr) return args;
  std::string config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) fail(ErrorCode::ParseError, "cannot open config " + config_path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::ParseError, config_path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key(csv::trim(t.substr(0, eq)));
    const std::string value(csv::trim(t.substr(eq + 1)));
    if (key == "config" || sub->get_option_no_throw("--" + key) == nullptr) {
      fail(ErrorCode::InvalidArgument, config_path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                                           "' for " + sub->get_name());
    }
    bool given = false;
    for (std::size_t i = 2; i < args.size(); ++i)
      if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) given = true;
    if (!given) args.push_back("--" + key + "=" + value);
  }
  return args;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  if (csv::trim(text).empty()) return out;
  for (auto f : csv::split(text)) out.push_back(csv::parse_double(f, "list"));
  return out;
}

std::string matrix_report(const std::string& name, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << name << '[' << i << "]=";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << csv::format(m(i, j));
    out << '\n';
  }
  return out.str();
}

std::string vector_text(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::format(v[i]);
  return s;
}

// ---------------------------------------------------------------------------
// solve-od

struct SolveOdArgs {
  std::string margins, costs, beta_sweep;
  double beta = 1.0, tol = 1e-10;
  long max_iter = 100'000;
};

int run_solve_od(const CLI::App* sub, const Common& common, const SolveOdArgs& a) {
  require(a.tol > 0, ErrorCode::InvalidArgument, "--tol must be > 0");
  require(a.max_iter >= 1, ErrorCode::InvalidArgument, "--max-iter must be >= 1");
  const auto inst = load_instance(a.margins, a.costs, a.beta);
  for (const auto& w : instance_warnings(inst)) std::cerr << "warning: " << w << '\n';
  const auto sol = solve_sinkhorn(inst, {a.tol, a.max_iter});
  const auto pd = primal_dual_report(sol, inst);
  const auto feas = check_feasible(sol.d_star, inst, a.tol);

  RunDir run(sub, common, std::nullopt, {});
  run.add("d_star.csv", csv::matrix_text(sol.d_star.d));
  run.add("d_star_counts.csv", csv::matrix_text(to_scale(sol.d_star, inst, Scale::Counts).d));
  run.add("potentials.csv", potentials_text(sol.potentials));

  std::ostringstream rep;
  rep << "command=solve-od\n";
  rep << "n=" << inst.n() << "\nN=" << csv::format(inst.population()) << "\nbeta=" << csv::format(inst.beta) << '\n';
  rep << "converged=" << (sol.converged ? "true" : "false") << "\niterations=" << sol.iterations << '\n';
  rep << "max_margin_violation=" << csv::format(sol.max_violation) << '\n';
  rep << "primal_min_form=" << csv::format(pd.primal) << "\nobjective_max_form=" << csv::format(pd.objective_max) << '\n';
  rep << "entropy_term=" << csv::format(pd.entropy_term) << "\ncost_term=" << csv::format(pd.cost_term) << '\n';
  rep << "lagrangian=" << csv::format(pd.lagrangian) << "\ndual=" << csv::format(pd.dual) << '\n';
  rep << "dual_gap=" << csv::format(pd.gap) << '\n';
  rep << "mean_trip_time=" << csv::format(mean_trip_time(sol.d_star, inst.T)) << '\n';
  rep << "feasibility=" << yesno(feas.pass) << '\n';

  const auto betas = parse_list(a.beta_sweep);
  if (!betas.empty()) {
    std::ostringstream sweep;
    sweep << "beta,mean_trip_time,entropy,iterations,converged\n";
    for (const auto& pt : beta_sweep(inst, betas, {a.tol, a.max_iter}))
      sweep << csv::format(pt.beta) << ',' << csv::format(pt.mean_time) << ',' << csv::format(pt.entropy) << ','
            << pt.iterations << ',' << (pt.converged ? 1 : 0) << '\n';
    run.add("beta_sweep.csv", sweep.str());
    rep << "beta_sweep=beta_sweep.csv\n";
  }
  run.add("report.txt", rep.str());
  run.flush();
  std::cout << rep.str() << "output=" << run.dir().string() << '\n';
  return sol.converged && feas.pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// simulate-exchange

struct ExchangeArgs {
  std::string margins, costs, start = "corner";
  double beta = 1.0, lambda = 1.0, sigma = 0.1;
  std::int64_t events = 0, sample_every = 0, burn_in = -1;
  std::uint64_t seed = 0;
  bool with_state = false, exact = false;
};

int run_simulate_exchange(const CLI::App* sub, const Common& common, const ExchangeArgs& a) {
  require(a.events >= 1, ErrorCode::InvalidArgument, "--events must be >= 1");
  require(a.lambda > 0, ErrorCode::InvalidArgument, "--lambda must be > 0");
  const auto inst = load_instance(a.margins, a.costs, a.beta);
  require(inst.integral_margins(), ErrorCode::InvalidArgument, "exchange simulation needs integer margins");
  const double N = inst.population();
  const auto sol = solve_sinkhorn(inst);

  CountMatrix d0;
  if (a.start == "corner") d0 = farthest_corner(inst, sol.d_star.d);
  else if (a.start == "equilibrium") d0 = round_to_polytope(sol.d_star.d, inst);
  else fail(ErrorCode::InvalidArgument, "--start must be corner or equilibrium");

  const std::int64_t burn_in =
      a.burn_in >= 0 ? a.burn_in : static_cast<std::int64_t>(std::ceil(5.0 * N * std::log(N)));
  const std::int64_t every = a.sample_every >= 1 ? a.sample_every : std::max<std::int64_t>(1, a.events / 1000);
  const auto traj = simulate(inst, d0, a.lambda, a.events, every, a.seed);

  RunDir run(sub, common, a.seed, Rng::kId);
  run.add("trajectory.csv", trajectory_csv(traj, sol.d_star.d, a.with_state));
  run.add("d_star.csv", csv::matrix_text(sol.d_star.d));

  std::ostringstream rep;
  rep << "command=simulate-exchange\nN=" << csv::format(N) << "\nevents=" << traj.events
      << "\nfinal_time=" << csv::format(traj.samples.back().t) << "\nburn_in=" << burn_in
      << "\nsample_every=" << every << '\n';
  bool ok = true;
  try {
    const auto conc = concentration_test(traj, flatten(sol.d_star.d), a.sigma, burn_in);
    rep << "sigma=" << csv::format(conc.sigma) << "\nradius=" << csv::format(conc.radius)
        << "\nsamples=" << conc.samples << "\nexceedances=" << conc.exceedances << "\nallowed=" << conc.allowed
        << "\nfrequency=" << csv::format(conc.frequency) << "\nmean_distance=" << csv::format(conc.mean_distance)
        << "\nconcentration=" << yesno(conc.pass) << '\n';
    ok = conc.pass;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientSamples) throw;
    rep << "concentration=FAIL\nconcentration_error=" << e.what() << '\n';
    ok = false;
  }
  if (a.exact) {
    const auto law = stationary_exact(inst);
    run.add("stationary.csv", stationary_csv(law));
    rep << "stationary_states=" << law.states.size() << "\nstationary=stationary.csv\n";
  }
  run.add("report.txt", rep.str());
  run.flush();
  std::cout << rep.str() << "output=" << run.dir().string() << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// route-eq

struct RouteArgs {
  std::string network, sweep;
  double omega = 0.1, tol = 1e-10, lambda = 1.0;
  std::size_t max_paths = kDefaultMaxPaths;
  std::int64_t agents = 0, events = 0, sample_every = 0;
  std::uint64_t seed = 0;
};

int run_route_eq(const CLI::App* sub, const Common& common, const RouteArgs& a) {
  require(a.omega >= 0, ErrorCode::InvalidArgument, "--omega must be >= 0");
  require(a.tol > 0, ErrorCode::InvalidArgument, "--tol must be > 0");
  const auto net = load_network(a.network);
  const auto ps = enumerate_paths(net, a.max_paths);
  if (ps.truncated) std::cerr << "warning: PATH_LIMIT_HIT, path set truncated at " << a.max_paths << '\n';

  const bool simulating = a.agents > 0;
  if (simulating) require(a.events >= 1, ErrorCode::InvalidArgument, "--events must be >= 1 with --agents");
  RunDir run(sub, common, simulating ? std::optional<std::uint64_t>(a.seed) : std::nullopt,
             simulating ? Rng::kId : std::string_view{});
  run.add("paths.csv", pathset_csv(ps, net));

  std::ostringstream rep;
  rep << "command=route-eq\npaths=" << ps.size() << "\nomega=" << csv::format(a.omega) << '\n';
  bool ok = true;
  Eigen::VectorXd x;
  if (a.omega > 0) {
    SueOptions opt;
    opt.tol = a.tol;
    const auto s = solve_sue(ps, net, a.omega, opt);
    x = s.x;
    rep << "method=sue\nconverged=" << (s.converged ? "true" : "false") << "\niterations=" << s.iterations
        << "\nfixed_point_residual=" << csv::format(s.residual) << "\nobjective=" << csv::format(s.objective) << '\n';
    ok = s.converged;
  } else {
    WardropOptions opt;
    opt.tol = a.tol;
    const auto w = solve_wardrop(ps, net, opt);
    const auto sel = select_entropy_pathflow(ps, w.y, std::max(a.tol, 1e-9));
    x = sel.x;
    rep << "method=wardrop+entropy\nconverged=" << (w.converged ? "true" : "false") << "\niterations=" << w.iterations
        << "\nbeckmann_potential=" << csv::format(w.potential) << "\nselection_residual=" << csv::format(sel.residual)
        << "\nselection_entropy=" << csv::format(sel.entropy) << '\n';
    ok = w.converged;
  }
  const Eigen::VectorXd G = path_costs(ps, net, x);
  const Eigen::VectorXd y = ps.theta * x;
  rep << "complementarity_residual=" << csv::format(wardrop_gap(ps, net, x)) << '\n';
  rep << "beckmann_potential_at_x=" << csv::format(beckmann_potential(ps, net, x)) << '\n';

  std::ostringstream eq;
  eq << "kind,id,flow,cost\n";
  for (Eigen::Index p = 0; p < ps.size(); ++p) eq << "path," << p << ',' << csv::format(x[p]) << ',' << csv::format(G[p]) << '\n';
  const Eigen::VectorXd tau = edge_costs(net, y);
  for (Eigen::Index e = 0; e < y.size(); ++e)
    eq << "edge," << net.edges[static_cast<std::size_t>(e)].id << ',' << csv::format(y[e]) << ',' << csv::format(tau[e]) << '\n';
  run.add("equilibrium.csv", eq.str());

  const auto grid = parse_list(a.sweep);
  if (!grid.empty()) {
    const auto cr = corollary_sweep(ps, net, grid, a.tol);
    std::ostringstream sw;
    sw << "omega,distance,sue_residual\n";
    for (const auto& pt : cr.points)
      sw << csv::format(pt.omega) << ',' << csv::format(pt.distance) << ',' << csv::format(pt.sue_residual) << '\n';
    run.add("sweep.csv", sw.str());
    rep << "sweep_entropy_x=" << vector_text(cr.x_entropy) << "\nsweep_monotone=" << (cr.monotone ? "true" : "false")
        << "\nsweep_final_distance=" << csv::format(cr.points.back().distance) << "\nsweep=" << yesno(cr.pass) << '\n';
    ok = ok && cr.pass;
  }

  if (simulating) {
    require(a.omega > 0, ErrorCode::InvalidArgument, "logit dynamics need --omega > 0");
    const auto x0 = apportion_counts(Eigen::VectorXd::Constant(ps.size(), 1.0), a.agents);
    const std::int64_t every = a.sample_every >= 1 ? a.sample_every : std::max<std::int64_t>(1, a.events / 1000);
    const auto traj = simulate_logit_dynamics(ps, net, x0, a.lambda, a.omega, a.events, every, a.seed);
    run.add("logit_trajectory.csv", route_trajectory_csv(traj, x));
    const double Nd = static_cast<double>(a.agents);
    const auto burn_in = static_cast<std::int64_t>(std::ceil(5.0 * Nd * std::log(Nd)));
    rep << "agents=" << a.agents << "\nsim_events=" << traj.events << "\nsim_burn_in=" << burn_in << '\n';
    try {
      const auto conc = concentration_test(traj, x, 0.25, burn_in);
      rep << "sim_radius=" << csv::format(conc.radius) << "\nsim_samples=" << conc.samples
          << "\nsim_mean_distance=" << csv::format(conc.mean_distance)
          << "\nsim_concentration=" << yesno(conc.pass) << '\n';
      ok = ok && conc.pass;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientSamples) throw;
      rep << "sim_concentration=FAIL\nsim_concentration_error=" << e.what() << '\n';
      ok = false;
    }
  }
  run.add("report.txt", rep.str());
  run.flush();
  std::cout << rep.str() << "output=" << run.dir().string() << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// survey

struct SurveyArgs {
  double epsilon = 0, sigma = 0, beta = 1.0, tol = 1e-10;
  std::string counts, costs, margins;
  std::int64_t respondents = 0;
  std::uint64_t seed = 0;
};

int run_survey(const CLI::App* sub, const Common& common, const SurveyArgs& a) {
  const bool size_mode = a.epsilon > 0 || a.sigma > 0;
  const bool fit_mode = !a.counts.empty();
  const bool gen_mode = !a.margins.empty();
  require(static_cast<int>(size_mode) + static_cast<int>(fit_mode) + static_cast<int>(gen_mode) == 1,
          ErrorCode::InvalidArgument, "choose one of --epsilon/--sigma, --counts, or --margins");

  if (size_mode) {
    const auto n = required_sample_size(a.epsilon, a.sigma);
    RunDir run(sub, common, std::nullopt, {});
    std::ostringstream rep;
    rep << "command=survey\nmode=size\nepsilon=" << csv::format(a.epsilon) << "\nsigma=" << csv::format(a.sigma)
        << "\nrequired_sample_size=" << n << '\n';
    run.add("report.txt", rep.str());
    run.flush();
    std::cout << n << '\n';
    return kExitOk;
  }

  require(!a.costs.empty(), ErrorCode::InvalidArgument, "--costs is required");
  const Eigen::MatrixXd T = csv::read_matrix(a.costs);
  SurveyCounts counts;
  std::optional<Eigen::MatrixXd> truth;
  if (fit_mode) {
    counts = load_counts(a.counts);
  } else {
    require(a.respondents >= 1, ErrorCode::InvalidArgument, "--respondents must be >= 1");
    const auto inst = load_instance(a.margins, a.costs, a.beta);
    truth = solve_sinkhorn(inst, {a.tol, 100'000}).d_star.d;
    counts = sample_survey(*truth, a.respondents, a.seed);
  }
  const auto fit = mle_fit_gravity(counts, T, a.beta, {a.tol, 100'000});
  const Eigen::MatrixXd dbar = counts.empirical();

  RunDir run(sub, common, gen_mode ? std::optional<std::uint64_t>(a.seed) : std::nullopt,
             gen_mode ? kSurveySamplerId : std::string_view{});
  run.add("d_bar.csv", csv::matrix_text(dbar));
  run.add("d_mle.csv", csv::matrix_text(fit.d_star.d));
  run.add("potentials.csv", potentials_text(fit.potentials));
  if (gen_mode) run.add("counts.csv", csv::matrix_text(counts.r));

  std::ostringstream rep;
  rep << "command=survey\nmode=" << (fit_mode ? "fit" : "generate") << "\nrespondents=" << counts.respondents()
      << "\nbeta=" << csv::format(a.beta) << "\nconverged=" << (fit.converged ? "true" : "false")
      << "\niterations=" << fit.iterations << '\n';
  rep << matrix_report("d_bar", dbar) << matrix_report("d_mle", fit.d_star.d);
  if (truth) {
    rep << "dist_dbar_truth=" << csv::format((dbar - *truth).norm()) << '\n';
    rep << "dist_mle_truth=" << csv::format((fit.d_star.d - *truth).norm()) << '\n';
  }
  rep << "note=beta is held fixed; profile the fit over a beta grid to choose it\n";
  run.add("report.txt", rep.str());
  run.flush();
  std::cout << rep.str() << "output=" << run.dir().string() << '\n';
  return fit.converged ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// mixing-scan

struct MixingArgs {
  std::string margins, costs, n_grid = "1000,3000,10000,30000", start = "corner";
  double beta = 1.0, lambda = 1.0, sigma = 0.25, horizon_factor = 50.0;
  int replicas = 10;
  std::uint64_t seed = 0;
};

int run_mixing_scan(const CLI::App* sub, const Common& common, const MixingArgs& a) {
  const auto shape = load_instance(a.margins, a.costs, a.beta);
  MixingConfig cfg;
  cfg.l = shape.l();
  cfg.w = shape.w();
  cfg.T = shape.T;
  cfg.beta = a.beta;
  cfg.lambda = a.lambda;
  cfg.replicas = a.replicas;
  cfg.seed = a.seed;
  cfg.sigma = a.sigma;
  cfg.horizon_factor = a.horizon_factor;
  if (a.start == "corner") cfg.start = MixingStart::FarthestCorner;
  else if (a.start == "equilibrium") cfg.start = MixingStart::Equilibrium;
  else fail(ErrorCode::InvalidArgument, "--start must be corner or equilibrium");
  for (double v : parse_list(a.n_grid)) {
    require(v >= 2 && std::floor(v) == v, ErrorCode::InvalidArgument, "--n-grid entries must be integers >= 2");
    cfg.N_grid.push_back(static_cast<std::int64_t>(v));
  }
  const auto rep = mixing_scaling(cfg);

  RunDir run(sub, common, a.seed, Rng::kId);
  std::ostringstream tab;
  tab << "N,threshold,start_distance,mean_t_half";
  for (int r = 0; r < a.replicas; ++r) tab << ",t_half_" << r;
  tab << '\n';
  for (const auto& pt : rep.points) {
    tab << pt.N << ',' << csv::format(pt.threshold) << ',' << csv::format(pt.start_distance) << ','
        << csv::format(pt.mean_t_half);
    for (auto t : pt.t_half) tab << ',' << t;
    tab << '\n';
  }
  run.add("mixing.csv", tab.str());
  std::ostringstream out;
  out << "command=mixing-scan\nreplicas=" << a.replicas << "\ndegenerate=" << (rep.degenerate ? "true" : "false")
      << "\nslope=" << csv::format(rep.slope) << "\nintercept=" << csv::format(rep.intercept)
      << "\nslope_range=[" << kMixingSlopeLo << "," << kMixingSlopeHi << "]\nscaling=" << yesno(rep.pass) << '\n';
  run.add("report.txt", out.str());
  run.flush();
  std::cout << out.str() << "output=" << run.dir().string() << '\n';
  return rep.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"odflow: entropy models of origin-destination matrices and route choice"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ODFLOW_VERSION));

  Common common;

  SolveOdArgs od;
  auto* solve = app.add_subcommand("solve-od", "Solve the entropy-linear program by log-domain balancing");
  add_common(solve, common);
  solve->add_option("--margins", od.margins, "Margins CSV (district,L,W)")->required();
  solve->add_option("--costs", od.costs, "Cost CSV (n x n)")->required();
  solve->add_option("--beta", od.beta, "Inverse-cost temperature")->capture_default_str();
  solve->add_option("--tol", od.tol, "Margin tolerance in shares")->capture_default_str();
  solve->add_option("--max-iter", od.max_iter, "Sweep limit")->capture_default_str();
  solve->add_option("--beta-sweep", od.beta_sweep, "Comma-separated beta grid for a mean-trip-time sweep");

  ExchangeArgs ex;
  auto* simx = app.add_subcommand("simulate-exchange", "Simulate the residence-exchange chain and test concentration");
  add_common(simx, common);
  simx->add_option("--margins", ex.margins, "Margins CSV with integer counts")->required();
  simx->add_option("--costs", ex.costs, "Cost CSV")->required();
  simx->add_option("--beta", ex.beta, "Inverse-cost temperature")->capture_default_str();
  simx->add_option("--lambda", ex.lambda, "Exchange intensity")->capture_default_str();
  simx->add_option("--events", ex.events, "Number of events to simulate")->required();
  simx->add_option("--sample-every", ex.sample_every, "Snapshot spacing in events (default events/1000)");
  simx->add_option("--burn-in", ex.burn_in, "Events discarded before testing (default 5 N ln N)");
  simx->add_option("--sigma", ex.sigma, "Concentration level")->capture_default_str();
  simx->add_option("--seed", ex.seed, "Generator seed")->required();
  simx->add_option("--start", ex.start, "corner | equilibrium")->capture_default_str();
  simx->add_flag("--with-state", ex.with_state, "Append the flattened state to trajectory rows");
  simx->add_flag("--exact", ex.exact, "Also write the exact stationary law (small instances)");

  RouteArgs rt;
  auto* route = app.add_subcommand("route-eq", "Route-flow equilibria: stochastic (omega > 0) or Wardrop (omega = 0)");
  add_common(route, common);
  route->add_option("--network", rt.network, "Network file")->required();
  route->add_option("--omega", rt.omega, "Logit noise level")->capture_default_str();
  route->add_option("--tol", rt.tol, "Fixed-point residual or duality-gap tolerance")->capture_default_str();
  route->add_option("--max-paths", rt.max_paths, "Path enumeration limit")->capture_default_str();
  route->add_option("--sweep", rt.sweep, "Decreasing omega grid for the vanishing-noise check");
  route->add_option("--agents", rt.agents, "Simulate logit dynamics with this many agents");
  route->add_option("--events", rt.events, "Logit-dynamics events");
  route->add_option("--sample-every", rt.sample_every, "Snapshot spacing in events (default events/1000)");
  route->add_option("--lambda", rt.lambda, "Revision rate")->capture_default_str();
  route->add_option("--seed", rt.seed, "Generator seed (required with --agents)");

  SurveyArgs sv;
  auto* survey = app.add_subcommand("survey", "Survey sizing and gravity-model maximum likelihood");
  add_common(survey, common);
  survey->add_option("--epsilon", sv.epsilon, "Target accuracy (size mode)");
  survey->add_option("--sigma", sv.sigma, "Failure probability (size mode)");
  survey->add_option("--counts", sv.counts, "Respondent counts CSV (fit mode)");
  survey->add_option("--margins", sv.margins, "Margins CSV of the true model (generate mode)");
  survey->add_option("--costs", sv.costs, "Cost CSV");
  survey->add_option("--beta", sv.beta, "Inverse-cost temperature")->capture_default_str();
  survey->add_option("--tol", sv.tol, "Margin tolerance of the fit")->capture_default_str();
  survey->add_option("--respondents", sv.respondents, "Sample size (generate mode)");
  survey->add_option("--seed", sv.seed, "Generator seed (generate mode)");

  MixingArgs mx;
  auto* mix = app.add_subcommand("mixing-scan", "Fit the event-count mixing scale against N ln N");
  add_common(mix, common);
  mix->add_option("--margins", mx.margins, "Margins CSV; only the shares are used")->required();
  mix->add_option("--costs", mx.costs, "Cost CSV")->required();
  mix->add_option("--beta", mx.beta, "Inverse-cost temperature")->capture_default_str();
  mix->add_option("--lambda", mx.lambda, "Exchange intensity")->capture_default_str();
  mix->add_option("--n-grid", mx.n_grid, "Comma-separated population sizes")->capture_default_str();
  mix->add_option("--replicas", mx.replicas, "Seeds per population size")->capture_default_str();
  mix->add_option("--sigma", mx.sigma, "Level of the radius that sets the threshold")->capture_default_str();
  mix->add_option("--horizon-factor", mx.horizon_factor, "Event cap per run, in units of N ln N")->capture_default_str();
  mix->add_option("--start", mx.start, "corner | equilibrium")->capture_default_str();
  mix->add_option("--seed", mx.seed, "Generator seed")->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = merge_config(app, std::move(args));
    std::vector<const char*> cargs;
    for (const auto& s : args) cargs.push_back(s.c_str());
    // CLI11 expects argv order with the program name first
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (*solve) return run_solve_od(solve, common, od);
    if (*simx) return run_simulate_exchange(simx, common, ex);
    if (*route) {
      if (rt.agents > 0) require(route->count("--seed") > 0, ErrorCode::InvalidArgument, "--seed is required with --agents");
      return run_route_eq(route, common, rt);
    }
    if (*survey) {
      if (!sv.margins.empty()) require(survey->count("--seed") > 0, ErrorCode::InvalidArgument, "--seed is required to generate a survey");
      return run_survey(survey, common, sv);
    }
    if (*mix) return run_mixing_scan(mix, common, mx);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
