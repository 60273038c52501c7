#ifndef ODFLOW_ROUTE_GAME_HPP
#define ODFLOW_ROUTE_GAME_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odflow/concentration.hpp"
#include "odflow/csv.hpp"
#include "odflow/error.hpp"
#include "odflow/rng.hpp"
#include "odflow/route.hpp"

namespace odflow {

/// Stochastic user equilibrium objective Psi(theta x) + omega sum x ln x.
inline double sue_objective(const PathSet& ps, const Network& net, const Eigen::VectorXd& x, double omega) {
  double ent = 0.0;
  for (double v : x) ent += v > 0.0 ? v * std::log(v) : 0.0;
  return beckmann_potential(ps, net, x) + omega * ent;
}

/// ||x - logit(G(x), omega)||_inf
inline double sue_residual(const PathSet& ps, const Network& net, const Eigen::VectorXd& x, double omega) {
  return (x - logit_choice(path_costs(ps, net, x), omega)).cwiseAbs().maxCoeff();
}

/// sum_p x_p (G_p - min_q G_q): zero exactly at a Wardrop equilibrium.
inline double wardrop_gap(const PathSet& ps, const Network& net, const Eigen::VectorXd& x) {
  const Eigen::VectorXd G = path_costs(ps, net, x);
  return x.dot((G.array() - G.minCoeff()).matrix());
}

struct SueOptions {
  double tol = 1e-10;
  long max_iter = 100'000;
  /// Averaging sweeps before switching to Newton steps on the objective.
  long averaging_iter = 200;
  std::optional<Eigen::VectorXd> x0;  // default: uniform
};

struct SueResult {
  Eigen::VectorXd x;
  double residual = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;
  long iterations = 0;
  long averaging_iterations = 0;
  bool converged = false;
};

namespace detail {

/// Newton direction for min f on the simplex: solves
///   [H 1; 1^T 0] [dx; nu] = [-grad; 0].
inline Eigen::VectorXd simplex_newton_direction(const Eigen::MatrixXd& H, const Eigen::VectorXd& grad) {
  const auto m = grad.size();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
  K.topLeftCorner(m, m) = H;
  K.block(0, m, m, 1).setOnes();
  K.block(m, 0, 1, m).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs.head(m) = -grad;
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  Eigen::VectorXd dx = sol.head(m);
  dx.array() -= dx.mean();  // remove round-off drift off the simplex tangent
  return dx;
}

}  // namespace detail

/// Minimizes Psi(theta x) + omega sum x ln x over the unit simplex.
///
/// First runs the averaged logit iteration x <- (1 - g_k) x + g_k logit(G(x))
/// with g_k = 2 / (k + 2); the iterates stay strictly interior. Then damped
/// Newton steps on the objective finish the solve. Stops once
/// ||x - logit(G(x), omega)||_inf <= tol.
inline SueResult solve_sue(const PathSet& ps, const Network& net, double omega, const SueOptions& opt = {}) {
  require(omega > 0, ErrorCode::InvalidArgument, "omega must be > 0 (route omega = 0 to solve_wardrop)");
  require(opt.tol > 0, ErrorCode::InvalidArgument, "tol must be > 0");
  const auto m = ps.size();
  SueResult res;
  Eigen::VectorXd x = opt.x0 ? *opt.x0 : Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  require(x.size() == m && (x.array() > 0).all(), ErrorCode::InvalidArgument, "x0 must be strictly positive");
  x /= x.sum();
  res.initial_objective = sue_objective(ps, net, x, omega);

  auto residual = [&](const Eigen::VectorXd& v) { return sue_residual(ps, net, v, omega); };
  double r = residual(x);
  long k = 0;
  for (; k < std::min(opt.averaging_iter, opt.max_iter) && r > opt.tol; ++k) {
    const double gamma = 2.0 / (static_cast<double>(k) + 2.0);
    x = (1.0 - gamma) * x + gamma * logit_choice(path_costs(ps, net, x), omega);
    r = residual(x);
  }
  res.averaging_iterations = k;

  double f = sue_objective(ps, net, x, omega);
  for (; k < opt.max_iter && r > opt.tol; ++k) {
    const Eigen::VectorXd y = ps.theta * x;
    Eigen::VectorXd tau_prime(y.size());
    for (Eigen::Index e = 0; e < y.size(); ++e)
      tau_prime[e] = net.edges[static_cast<std::size_t>(e)].latency.derivative(y[e]);
    const Eigen::VectorXd grad = path_costs(ps, net, x) + omega * (x.array().log() + 1.0).matrix();
    Eigen::MatrixXd H = ps.theta.transpose() * tau_prime.asDiagonal() * ps.theta;
    H.diagonal() += omega * x.cwiseInverse();
    const Eigen::VectorXd dx = detail::simplex_newton_direction(H, grad);

    // largest step keeping every coordinate positive, then Armijo backtracking
    double step = 1.0;
    for (Eigen::Index p = 0; p < m; ++p)
      if (dx[p] < 0) step = std::min(step, -0.99 * x[p] / dx[p]);
    const double slope = grad.dot(dx);
    Eigen::VectorXd trial = x;
    double f_trial = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = x + step * dx;
      f_trial = sue_objective(ps, net, trial, omega);
      if (f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // objective is flat to machine precision here; take the full damped
      // step anyway and let the residual decide
      trial = x + step * dx;
      f_trial = sue_objective(ps, net, trial, omega);
    }
    x = trial / trial.sum();
    f = f_trial;
    r = residual(x);
  }
  res.x = x;
  res.residual = r;
  res.objective = sue_objective(ps, net, x, omega);
  res.iterations = k;
  res.converged = r <= opt.tol;
  return res;
}

struct WardropOptions {
  double tol = 1e-10;
  long max_iter = 1'000'000;
  std::optional<Eigen::VectorXd> x0;  // default: all mass on path 0
};

struct WardropResult {
  Eigen::VectorXd x;  // a path decomposition (not unique in general)
  Eigen::VectorXd y;  // equilibrium edge flows
  double gap = 0.0;   // sum_p x_p (G_p - min G)
  double potential = 0.0;
  long iterations = 0;
  bool converged = false;
};

/// Minimizes the Beckmann potential over the unit simplex with a pairwise
/// conditional-gradient method: each step shifts mass from the costliest
/// used path to the cheapest path (the linear minimization oracle) with an
/// exact line search. Stops when the complementarity gap is <= tol.
inline WardropResult solve_wardrop(const PathSet& ps, const Network& net, const WardropOptions& opt = {}) {
  const auto m = ps.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  if (opt.x0) {
    require(opt.x0->size() == m && (opt.x0->array() >= 0).all() && opt.x0->sum() > 0, ErrorCode::InvalidArgument,
            "x0 must be a nonnegative vector of path flows");
    x = *opt.x0 / opt.x0->sum();
  } else {
    x[0] = 1.0;
  }
  WardropResult res;
  long k = 0;
  double gap = wardrop_gap(ps, net, x);
  for (; k < opt.max_iter && gap > opt.tol; ++k) {
    const Eigen::VectorXd G = path_costs(ps, net, x);
    Eigen::Index best = 0;
    G.minCoeff(&best);
    Eigen::Index worst = -1;
    for (Eigen::Index p = 0; p < m; ++p)
      if (x[p] > 0 && (worst < 0 || G[p] > G[worst])) worst = p;
    if (worst < 0 || worst == best) break;

    const Eigen::VectorXd dir = ps.theta.col(best) - ps.theta.col(worst);
    const Eigen::VectorXd y = ps.theta * x;
    // derivative of the potential along dir at step s: increasing in s
    auto dphi = [&](double s) {
      const Eigen::VectorXd ys = y + s * dir;
      return dir.dot(edge_costs(net, ys));
    };
    const double smax = x[worst];
    double s = smax;
    if (dphi(smax) > 0.0) {
      double lo = 0.0, hi = smax;
      for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dphi(mid) > 0.0) hi = mid;
        else lo = mid;
      }
      s = 0.5 * (lo + hi);
    }
    x[best] += s;
    x[worst] = s == smax ? 0.0 : x[worst] - s;
    gap = wardrop_gap(ps, net, x);
  }
  res.x = x;
  res.y = ps.theta * x;
  res.gap = gap;
  res.potential = beckmann_potential(ps, net, x);
  res.iterations = k;
  res.converged = gap <= opt.tol;
  return res;
}

struct EntropySelection {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||theta x - y*||_inf
  double entropy = 0.0;   // -sum x ln x
  long iterations = 0;
};

/// Maximum-entropy path decomposition of target edge flows:
///   min sum x ln x  s.t.  theta x = y*,  x in the unit simplex.
/// Dual Newton ascent on edge multipliers mu; the primal iterate has the
/// product form x_p proportional to exp(sum_e theta_ep mu_e). Paths through
/// edges with y*_e <= tol carry no flow and are dropped first.
inline EntropySelection select_entropy_pathflow(const PathSet& ps, const Eigen::VectorXd& y_star, double tol = 1e-10,
                                                long max_iter = 500) {
  const auto m = ps.size();
  const auto E = ps.theta.rows();
  require(y_star.size() == E, ErrorCode::DimensionMismatch, "target edge flow has the wrong length");
  require(tol > 0, ErrorCode::InvalidArgument, "tol must be > 0");
  EntropySelection out;
  if (m == 1) {
    out.x = Eigen::VectorXd::Ones(1);
    out.residual = (ps.theta.col(0) - y_star).cwiseAbs().maxCoeff();
    return out;
  }
  require((y_star.array() >= -tol).all() && (y_star.array() <= 1.0 + tol).all(), ErrorCode::InfeasibleTarget,
          "edge flows must lie in [0, 1]");

  std::vector<Eigen::Index> live;
  for (Eigen::Index p = 0; p < m; ++p) {
    bool ok = true;
    for (Eigen::Index e = 0; e < E; ++e)
      if (ps.theta(e, p) > 0 && y_star[e] <= tol) ok = false;
    if (ok) live.push_back(p);
  }
  require(!live.empty(), ErrorCode::InfeasibleTarget, "every path uses an edge with zero target flow");
  const auto ml = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd theta(E, ml);
  for (Eigen::Index p = 0; p < ml; ++p) theta.col(p) = ps.theta.col(live[static_cast<std::size_t>(p)]);

  auto primal = [&](const Eigen::VectorXd& mu) {
    Eigen::VectorXd s = theta.transpose() * mu;
    s.array() -= s.maxCoeff();
    Eigen::VectorXd x = s.array().exp().matrix();
    return Eigen::VectorXd(x / x.sum());
  };
  auto dual_obj = [&](const Eigen::VectorXd& mu) {
    const Eigen::VectorXd s = theta.transpose() * mu;
    const double mx = s.maxCoeff();
    return mx + std::log((s.array() - mx).exp().sum()) - mu.dot(y_star);
  };

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(E);
  Eigen::VectorXd x = primal(mu);
  double res = (theta * x - y_star).cwiseAbs().maxCoeff();
  long it = 0;
  for (; it < max_iter && res > tol; ++it) {
    const Eigen::VectorXd g = theta * x - y_star;
    const Eigen::MatrixXd cov = Eigen::MatrixXd(x.asDiagonal()) - x * x.transpose();
    const Eigen::MatrixXd H = theta * cov * theta.transpose();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);
    cod.setThreshold(1e-13);
    Eigen::VectorXd dir = -cod.solve(g);
    if (!(dir.dot(g) < 0)) dir = -g;
    const double f0 = dual_obj(mu);
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      if (dual_obj(mu + step * dir) <= f0 + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    mu += step * dir;
    x = primal(mu);
    res = (theta * x - y_star).cwiseAbs().maxCoeff();
    require(mu.allFinite(), ErrorCode::InfeasibleTarget, "edge multipliers diverged");
  }
  if (res > tol) {
    fail(ErrorCode::InfeasibleTarget,
         "no path flow reproduces the target edge flows (residual " + csv::format(res) + ")");
  }
  out.x = Eigen::VectorXd::Zero(m);
  for (Eigen::Index p = 0; p < ml; ++p) out.x[live[static_cast<std::size_t>(p)]] = x[p];
  out.residual = (ps.theta * out.x - y_star).cwiseAbs().maxCoeff();
  for (double v : out.x) out.entropy -= v > 0 ? v * std::log(v) : 0.0;
  out.iterations = it;
  return out;
}

struct CorollaryPoint {
  double omega = 0.0;
  double distance = 0.0;  // ||x_sue(omega) - x_entropy||_2
  double sue_residual = 0.0;
  bool sue_converged = false;
};

inline constexpr double kCorollaryFinalTol = 1e-2;

struct CorollaryReport {
  Eigen::VectorXd x_entropy;
  Eigen::VectorXd y_star;
  double wardrop_gap = 0.0;
  std::vector<CorollaryPoint> points;
  bool monotone = true;
  bool pass = false;
};

/// Distance between the SUE path flows at each omega and the
/// entropy-selected decomposition of the Wardrop edge flows.
inline CorollaryReport corollary_sweep(const PathSet& ps, const Network& net, const std::vector<double>& omega_grid,
                                       double tol = 1e-10) {
  require(!omega_grid.empty(), ErrorCode::InvalidArgument, "omega grid is empty");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    require(omega_grid[i] < omega_grid[i - 1], ErrorCode::InvalidArgument, "omega grid must decrease");
  CorollaryReport rep;
  WardropOptions wopt;
  wopt.tol = tol * 1e-2;
  const auto w = solve_wardrop(ps, net, wopt);
  rep.y_star = w.y;
  rep.wardrop_gap = w.gap;
  rep.x_entropy = select_entropy_pathflow(ps, w.y, std::max(tol, 1e-9)).x;
  SueOptions sopt;
  sopt.tol = tol;
  for (double omega : omega_grid) {
    const auto s = solve_sue(ps, net, omega, sopt);
    rep.points.push_back({omega, (s.x - rep.x_entropy).norm(), s.residual, s.converged});
  }
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (rep.points[i].distance > rep.points[i - 1].distance) rep.monotone = false;
  rep.pass = rep.monotone && rep.points.back().distance <= kCorollaryFinalTol;
  return rep;
}

// ---------------------------------------------------------------------------
// Logit dynamics

/// N agents each revise their path at rate lambda; a reviser picks path q
/// with probability logit(G(x / N), omega)_q. Simulated by exact jumps with
/// total rate lambda N; every revision counts as an event, including ones
/// that keep the same path.
class LogitSimulator {
 public:
  LogitSimulator(const PathSet& ps, const Network& net, std::vector<std::int64_t> x0, double lambda, double omega,
                 std::uint64_t seed)
      : ps_(&ps), net_(&net), x_(std::move(x0)), lambda_(lambda), omega_(omega), rng_(seed) {
    require(static_cast<Eigen::Index>(x_.size()) == ps.size(), ErrorCode::DimensionMismatch,
            "initial flow has the wrong length");
    require(lambda > 0 && omega > 0, ErrorCode::InvalidArgument, "lambda and omega must be > 0");
    for (auto v : x_) {
      require(v >= 0, ErrorCode::NegativeEntry, "negative path count");
      N_ += v;
    }
    require(N_ >= 1, ErrorCode::InvalidArgument, "need at least one agent");
  }

  const std::vector<std::int64_t>& state() const { return x_; }
  std::int64_t population() const { return N_; }
  double time() const { return t_; }
  std::int64_t events() const { return events_; }

  Eigen::VectorXd shares() const {
    Eigen::VectorXd s(static_cast<Eigen::Index>(x_.size()));
    for (std::size_t p = 0; p < x_.size(); ++p) s[static_cast<Eigen::Index>(p)] = static_cast<double>(x_[p]) / static_cast<double>(N_);
    return s;
  }

  /// One revision; returns the holding time of the state it left.
  double step() {
    const double dt = rng_.exponential(lambda_ * static_cast<double>(N_));
    // reviser: uniform agent, located by cumulative path counts
    auto agent = static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>(N_)));
    std::size_t from = 0;
    while (agent >= x_[from]) agent -= x_[from++];
    const Eigen::VectorXd probs = logit_choice(path_costs(*ps_, *net_, shares()), omega_);
    const auto to = rng_.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), 1.0);
    --x_[from];
    ++x_[to];
    t_ += dt;
    ++events_;
    return dt;
  }

 private:
  const PathSet* ps_;
  const Network* net_;
  std::vector<std::int64_t> x_;
  std::int64_t N_ = 0;
  double lambda_;
  double omega_;
  Rng rng_;
  double t_ = 0.0;
  std::int64_t events_ = 0;
};

struct RouteSample {
  std::int64_t event = 0;
  double t = 0.0;
  std::vector<std::int64_t> x;
};

struct RouteTrajectory {
  std::vector<RouteSample> samples;
  std::int64_t events = 0;
  std::uint64_t seed = 0;
  std::string rng_id{Rng::kId};
  double N = 0.0;

  std::size_t sample_count() const { return samples.size(); }
  std::int64_t sample_event(std::size_t i) const { return samples[i].event; }
  Eigen::VectorXd sample_shares(std::size_t i) const {
    Eigen::VectorXd s(static_cast<Eigen::Index>(samples[i].x.size()));
    for (std::size_t p = 0; p < samples[i].x.size(); ++p) s[static_cast<Eigen::Index>(p)] = static_cast<double>(samples[i].x[p]) / N;
    return s;
  }
  double population() const { return N; }
};

/// Splits N agents over the paths in proportion to `shares` (largest remainder).
inline std::vector<std::int64_t> apportion_counts(const Eigen::VectorXd& shares, std::int64_t N) {
  const Eigen::VectorXd s = shares / shares.sum();
  std::vector<std::int64_t> out(static_cast<std::size_t>(s.size()));
  std::vector<std::pair<double, std::size_t>> rema;
  std::int64_t assigned = 0;
  for (Eigen::Index p = 0; p < s.size(); ++p) {
    const double exact = s[p] * static_cast<double>(N);
    out[static_cast<std::size_t>(p)] = static_cast<std::int64_t>(std::floor(exact));
    assigned += out[static_cast<std::size_t>(p)];
    rema.emplace_back(exact - std::floor(exact), static_cast<std::size_t>(p));
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < N - assigned; ++r) ++out[rema[static_cast<std::size_t>(r)].second];
  return out;
}

inline RouteTrajectory simulate_logit_dynamics(const PathSet& ps, const Network& net, const std::vector<std::int64_t>& x0,
                                               double lambda, double omega, std::int64_t horizon_events,
                                               std::int64_t sample_every, std::uint64_t seed) {
  require(horizon_events >= 1 && sample_every >= 1, ErrorCode::InvalidArgument,
          "horizon_events and sample_every must be >= 1");
  LogitSimulator sim(ps, net, x0, lambda, omega, seed);
  RouteTrajectory traj;
  traj.seed = seed;
  traj.N = static_cast<double>(sim.population());
  traj.samples.push_back({0, 0.0, sim.state()});
  for (std::int64_t e = 1; e <= horizon_events; ++e) {
    sim.step();
    if (e % sample_every == 0) traj.samples.push_back({e, sim.time(), sim.state()});
  }
  traj.events = sim.events();
  return traj;
}

/// Time-weighted average of ||x(t)/N - reference||_2 over events
/// (burn_in, burn_in + events].
inline double logit_time_average_distance(const PathSet& ps, const Network& net, const std::vector<std::int64_t>& x0,
                                          double lambda, double omega, std::int64_t burn_in, std::int64_t events,
                                          std::uint64_t seed, const Eigen::VectorXd& reference) {
  LogitSimulator sim(ps, net, x0, lambda, omega, seed);
  for (std::int64_t e = 0; e < burn_in; ++e) sim.step();
  double acc = 0.0, total = 0.0;
  for (std::int64_t e = 0; e < events; ++e) {
    const double dist = (sim.shares() - reference).norm();
    const double dt = sim.step();
    acc += dist * dt;
    total += dt;
  }
  return acc / total;
}

inline std::string route_trajectory_csv(const RouteTrajectory& traj, const Eigen::VectorXd& x_star) {
  std::ostringstream out;
  out << "event_index,t,dist_to_xstar";
  for (Eigen::Index p = 0; p < x_star.size(); ++p) out << ",x_" << p;
  out << '\n';
  for (std::size_t s = 0; s < traj.samples.size(); ++s) {
    out << traj.samples[s].event << ',' << csv::format(traj.samples[s].t) << ','
        << csv::format((traj.sample_shares(s) - x_star).norm());
    for (auto v : traj.samples[s].x) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace odflow

#endif  // ODFLOW_ROUTE_GAME_HPP
