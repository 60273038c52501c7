#ifndef ODFLOW_EXCHANGE_HPP
#define ODFLOW_EXCHANGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odflow/concentration.hpp"
#include "odflow/csv.hpp"
#include "odflow/elp.hpp"
#include "odflow/error.hpp"
#include "odflow/model.hpp"
#include "odflow/rng.hpp"
#include "odflow/stats.hpp"

namespace odflow {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Residence swap between an agent living in k and working in m and an agent
/// living in p and working in q. Firing it moves one unit from cells (k,m)
/// and (p,q) to cells (p,m) and (k,q).
struct SwapChannel {
  Eigen::Index k = 0, m = 0, p = 0, q = 0;

  bool is_identity() const { return k == p || m == q; }
  SwapChannel reverse() const { return {p, m, k, q}; }
};

/// All non-identity channels, ordered lexicographically by (k, m, p, q).
/// Each unordered pair of agents appears twice; the factor is absorbed into
/// the exchange intensity.
inline std::vector<SwapChannel> swap_channels(Eigen::Index n) {
  std::vector<SwapChannel> out;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index m = 0; m < n; ++m)
      for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q < n; ++q)
          if (k != p && m != q) out.push_back({k, m, p, q});
  return out;
}

/// Per ordered pair of agents:
///   lambda / N * exp(R(T_km) + R(T_pq) - R(T_pm) - R(T_kq)),  R(T) = beta T / 2.
inline double swap_rate(const SwapChannel& c, const OdInstance& inst, double lambda) {
  require(lambda > 0, ErrorCode::InvalidArgument, "exchange intensity must be positive");
  const auto& T = inst.T;
  const double before = T(c.k, c.m) + T(c.p, c.q);
  const double after = T(c.p, c.m) + T(c.k, c.q);
  return lambda / inst.population() * std::exp(0.5 * inst.beta * (before - after));
}

inline bool in_polytope(const CountMatrix& d, const OdInstance& inst) {
  if (d.rows() != inst.n() || d.cols() != inst.n()) return false;
  if ((d.array() < 0).any()) return false;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (static_cast<double>(d.row(i).sum()) != inst.L[i]) return false;
    if (static_cast<double>(d.col(i).sum()) != inst.W[i]) return false;
  }
  return true;
}

inline Eigen::VectorXd flatten_shares(const CountMatrix& d, double N) {
  Eigen::VectorXd v(d.size());
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) v[idx++] = static_cast<double>(d(i, j)) / N;
  return v;
}

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[idx++] = m(i, j);
  return v;
}

/// ||d/N - reference||_2 with reference a share matrix of the same shape.
inline double share_distance(const CountMatrix& d, double N, const Eigen::MatrixXd& reference) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double diff = static_cast<double>(d(i, j)) / N - reference(i, j);
      acc += diff * diff;
    }
  return std::sqrt(acc);
}

inline std::vector<std::int64_t> state_key(const CountMatrix& d) {
  std::vector<std::int64_t> key;
  key.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) key.push_back(d(i, j));
  return key;
}

// ---------------------------------------------------------------------------
// Integer points of the transport polytope

namespace detail {

inline std::vector<std::int64_t> integer_margins(const Eigen::VectorXd& v, const char* name) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    require(std::floor(v[i]) == v[i], ErrorCode::InvalidArgument, std::string(name) + " must be integer counts");
    out[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(v[i]);
  }
  return out;
}

/// Northwest-corner fill of residual margins into `d` (in place).
inline void northwest_fill(CountMatrix& d, std::vector<std::int64_t> rows, std::vector<std::int64_t> cols,
                           const std::vector<Eigen::Index>& col_order) {
  std::size_t i = 0, jj = 0;
  while (i < rows.size() && jj < col_order.size()) {
    const auto j = static_cast<std::size_t>(col_order[jj]);
    const auto v = std::min(rows[i], cols[j]);
    d(static_cast<Eigen::Index>(i), col_order[jj]) += v;
    rows[i] -= v;
    cols[j] -= v;
    if (rows[i] == 0) ++i;
    else ++jj;
  }
}

}  // namespace detail

/// Vertex of the integer polytope built by the northwest-corner rule with
/// columns visited in `col_order`.
inline CountMatrix corner_state(const OdInstance& inst, const std::vector<Eigen::Index>& col_order) {
  const auto n = inst.n();
  CountMatrix d = CountMatrix::Zero(n, n);
  detail::northwest_fill(d, detail::integer_margins(inst.L, "L"), detail::integer_margins(inst.W, "W"), col_order);
  return d;
}

/// Integer point of the polytope near N * shares: floor, then fill the
/// residual margins by the northwest-corner rule.
inline CountMatrix round_to_polytope(const Eigen::MatrixXd& shares, const OdInstance& inst) {
  const auto n = inst.n();
  const double N = inst.population();
  CountMatrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = static_cast<std::int64_t>(std::floor(shares(i, j) * N));
  auto rows = detail::integer_margins(inst.L, "L");
  auto cols = detail::integer_margins(inst.W, "W");
  for (Eigen::Index i = 0; i < n; ++i) {
    rows[static_cast<std::size_t>(i)] -= d.row(i).sum();
    cols[static_cast<std::size_t>(i)] -= d.col(i).sum();
  }
  // floor can overshoot only if shares violate the margins; clip back to feasibility then
  if (std::any_of(rows.begin(), rows.end(), [](auto r) { return r < 0; }) ||
      std::any_of(cols.begin(), cols.end(), [](auto c) { return c < 0; })) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    return corner_state(inst, order);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  detail::northwest_fill(d, rows, cols, order);
  return d;
}

/// The northwest-corner vertex (over all column orders when n <= 7) that is
/// farthest, in shares, from `reference`.
inline CountMatrix farthest_corner(const OdInstance& inst, const Eigen::MatrixXd& reference) {
  const auto n = inst.n();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::VectorXd ref = flatten(reference);
  CountMatrix best = corner_state(inst, order);
  double best_dist = (flatten_shares(best, inst.population()) - ref).norm();
  if (n > 7) return best;
  while (std::next_permutation(order.begin(), order.end())) {
    CountMatrix c = corner_state(inst, order);
    const double dist = (flatten_shares(c, inst.population()) - ref).norm();
    if (dist > best_dist) {
      best = std::move(c);
      best_dist = dist;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exact-jump simulation

/// Gillespie simulator of the pair-exchange chain. Channel propensity is
/// d_km * d_pq * swap_rate. Each step draws the exponential holding time
/// first and the channel second, both from the same generator.
class ExchangeSimulator {
 public:
  ExchangeSimulator(const OdInstance& inst, CountMatrix d0, double lambda, std::uint64_t seed)
      : n_(inst.n()), d_(std::move(d0)), rng_(seed), channels_(swap_channels(inst.n())) {
    require(in_polytope(d_, inst), ErrorCode::OutOfPolytope, "initial state is not an integer point of A");
    require(lambda > 0, ErrorCode::InvalidArgument, "exchange intensity must be positive");
    rates_.reserve(channels_.size());
    for (const auto& c : channels_) rates_.push_back(swap_rate(c, inst, lambda));
    cell_channels_.resize(static_cast<std::size_t>(n_ * n_));
    for (std::size_t idx = 0; idx < channels_.size(); ++idx) {
      const auto& c = channels_[idx];
      cell_channels_[cell(c.k, c.m)].push_back(idx);
      cell_channels_[cell(c.p, c.q)].push_back(idx);
    }
    propensity_.assign(channels_.size(), 0.0);
    for (std::size_t idx = 0; idx < channels_.size(); ++idx) propensity_[idx] = propensity(idx);
    resum();
  }

  const CountMatrix& state() const { return d_; }
  double time() const { return t_; }
  std::int64_t events() const { return events_; }
  double total_propensity() const { return total_; }

  /// Fires one event and returns the time spent in the state it left.
  double step() {
    if (!(total_ > 0.0)) fail(ErrorCode::EmptyPropensity, "no channel can fire from the current state");
    const double dt = rng_.exponential(total_);
    const auto idx = rng_.categorical(propensity_, total_);
    const auto& c = channels_[idx];
    --d_(c.k, c.m);
    --d_(c.p, c.q);
    ++d_(c.p, c.m);
    ++d_(c.k, c.q);
    t_ += dt;
    ++events_;
    refresh(cell(c.k, c.m));
    refresh(cell(c.p, c.q));
    refresh(cell(c.p, c.m));
    refresh(cell(c.k, c.q));
    if (events_ % kResumEvery == 0) resum();
    return dt;
  }

 private:
  static constexpr std::int64_t kResumEvery = 4096;

  std::size_t cell(Eigen::Index i, Eigen::Index j) const { return static_cast<std::size_t>(i * n_ + j); }

  double propensity(std::size_t idx) const {
    const auto& c = channels_[idx];
    return static_cast<double>(d_(c.k, c.m)) * static_cast<double>(d_(c.p, c.q)) * rates_[idx];
  }

  void refresh(std::size_t cell_index) {
    for (auto idx : cell_channels_[cell_index]) {
      const double p = propensity(idx);
      total_ += p - propensity_[idx];
      propensity_[idx] = p;
    }
  }

  void resum() { total_ = std::accumulate(propensity_.begin(), propensity_.end(), 0.0); }

  Eigen::Index n_;
  CountMatrix d_;
  Rng rng_;
  std::vector<SwapChannel> channels_;
  std::vector<double> rates_;
  std::vector<std::vector<std::size_t>> cell_channels_;
  std::vector<double> propensity_;
  double total_ = 0.0;
  double t_ = 0.0;
  std::int64_t events_ = 0;
};

struct KineticsSample {
  std::int64_t event = 0;
  double t = 0.0;
  CountMatrix d;
};

struct KineticsTrajectory {
  std::vector<KineticsSample> samples;
  std::int64_t events = 0;
  std::uint64_t seed = 0;
  std::string rng_id{Rng::kId};
  double N = 0.0;

  std::size_t sample_count() const { return samples.size(); }
  std::int64_t sample_event(std::size_t i) const { return samples[i].event; }
  Eigen::VectorXd sample_shares(std::size_t i) const { return flatten_shares(samples[i].d, N); }
  double population() const { return N; }
};

/// Runs `horizon_events` events from d0, snapshotting at event 0 and every
/// `sample_every` events after it.
inline KineticsTrajectory simulate(const OdInstance& inst, const CountMatrix& d0, double lambda,
                                   std::int64_t horizon_events, std::int64_t sample_every, std::uint64_t seed) {
  require(horizon_events >= 1, ErrorCode::InvalidArgument, "horizon_events must be >= 1");
  require(sample_every >= 1, ErrorCode::InvalidArgument, "sample_every must be >= 1");
  ExchangeSimulator sim(inst, d0, lambda, seed);
  KineticsTrajectory traj;
  traj.seed = seed;
  traj.N = inst.population();
  traj.samples.push_back({0, 0.0, sim.state()});
  for (std::int64_t e = 1; e <= horizon_events; ++e) {
    sim.step();
    if (e % sample_every == 0) traj.samples.push_back({e, sim.time(), sim.state()});
  }
  traj.events = sim.events();
  return traj;
}

/// Fraction of simulated time spent in each visited state.
inline std::map<std::vector<std::int64_t>, double> occupation_measure(const OdInstance& inst, const CountMatrix& d0,
                                                                      double lambda, std::int64_t events,
                                                                      std::uint64_t seed) {
  ExchangeSimulator sim(inst, d0, lambda, seed);
  std::map<std::vector<std::int64_t>, double> occ;
  for (std::int64_t e = 0; e < events; ++e) {
    auto key = state_key(sim.state());
    const double dt = sim.step();
    occ[std::move(key)] += dt;
  }
  for (auto& [k, v] : occ) v /= sim.time();
  return occ;
}

// ---------------------------------------------------------------------------
// Exact stationary law on small instances

inline constexpr std::size_t kMaxEnumeratedStates = 200'000;

/// Stationary law of the exchange chain: the Poisson product measure
/// prod exp(-beta T_ij d_ij) / d_ij! restricted to the integer points of A.
struct StationaryLaw {
  Eigen::Index n = 0;
  std::vector<CountMatrix> states;
  std::vector<double> prob;
  std::map<std::vector<std::int64_t>, std::size_t> index;

  /// Probability of d, or 0 when d is not an enumerated state.
  double probability(const CountMatrix& d) const {
    const auto it = index.find(state_key(d));
    return it == index.end() ? 0.0 : prob[it->second];
  }

  std::size_t mode() const {
    return static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
  }
};

inline StationaryLaw stationary_exact(const OdInstance& inst, std::size_t max_states = kMaxEnumeratedStates) {
  const auto n = inst.n();
  auto rows = detail::integer_margins(inst.L, "L");
  auto cols = detail::integer_margins(inst.W, "W");
  StationaryLaw law;
  law.n = n;
  std::vector<double> log_weight;
  CountMatrix d = CountMatrix::Zero(n, n);

  // depth-first over cells in row-major order; the lower bound keeps the
  // remaining row fillable from the remaining column capacity
  auto visit = [&](auto&& self, Eigen::Index i, Eigen::Index j) -> void {
    if (i == n) {
      if (law.states.size() >= max_states) {
        fail(ErrorCode::StateSpaceTooLarge, "more than " + std::to_string(max_states) + " integer states");
      }
      double lw = 0.0;
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
          const double v = static_cast<double>(d(a, b));
          lw += -inst.beta * inst.T(a, b) * v - std::lgamma(v + 1.0);
        }
      law.states.push_back(d);
      log_weight.push_back(lw);
      return;
    }
    const auto ii = static_cast<std::size_t>(i);
    const auto jj = static_cast<std::size_t>(j);
    std::int64_t lo = 0, hi = 0;
    if (j == n - 1) {
      lo = hi = rows[ii];
      if (hi > cols[jj]) return;
    } else if (i == n - 1) {
      lo = hi = cols[jj];
      if (hi > rows[ii]) return;
    } else {
      std::int64_t rest = 0;
      for (Eigen::Index b = j + 1; b < n; ++b) rest += cols[static_cast<std::size_t>(b)];
      lo = std::max<std::int64_t>(0, rows[ii] - rest);
      hi = std::min(rows[ii], cols[jj]);
    }
    for (std::int64_t v = lo; v <= hi; ++v) {
      d(i, j) = v;
      rows[ii] -= v;
      cols[jj] -= v;
      if (j + 1 == n) self(self, i + 1, 0);
      else self(self, i, j + 1);
      rows[ii] += v;
      cols[jj] += v;
    }
    d(i, j) = 0;
  };
  visit(visit, 0, 0);

  const double mx = *std::max_element(log_weight.begin(), log_weight.end());
  double z = 0.0;
  law.prob.resize(log_weight.size());
  for (std::size_t s = 0; s < log_weight.size(); ++s) z += law.prob[s] = std::exp(log_weight[s] - mx);
  for (std::size_t s = 0; s < law.prob.size(); ++s) {
    law.prob[s] /= z;
    law.index.emplace(state_key(law.states[s]), s);
  }
  return law;
}

/// Relative residual of the detailed-balance identity
///   (d_km+1)(d_pq+1) p(d + D) lambda_{k,m;p,q} = d_pm d_kq p(d) lambda_{p,m;k,q},
/// with D adding one unit to (k,m) and (p,q) and removing one from (p,m) and
/// (k,q). Both d and d + D must be integer points of A.
inline double detailed_balance_residual(const StationaryLaw& law, const OdInstance& inst, const CountMatrix& d,
                                        const SwapChannel& c, double lambda = 1.0) {
  require(!c.is_identity(), ErrorCode::InvalidArgument, "identity channel (k == p or m == q)");
  require(in_polytope(d, inst), ErrorCode::OutOfPolytope, "state is not an integer point of A");
  CountMatrix image = d;
  ++image(c.k, c.m);
  ++image(c.p, c.q);
  --image(c.p, c.m);
  --image(c.k, c.q);
  require((image.array() >= 0).all(), ErrorCode::OutOfPolytope, "channel image leaves A");
  const double lhs = static_cast<double>(d(c.k, c.m) + 1) * static_cast<double>(d(c.p, c.q) + 1) *
                     law.probability(image) * swap_rate(c, inst, lambda);
  const double rhs = static_cast<double>(d(c.p, c.m)) * static_cast<double>(d(c.k, c.q)) * law.probability(d) *
                     swap_rate(c.reverse(), inst, lambda);
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

inline std::string stationary_csv(const StationaryLaw& law) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < law.n; ++i)
    for (Eigen::Index j = 0; j < law.n; ++j) out << "d_" << i << '_' << j << ',';
  out << "probability\n";
  for (std::size_t s = 0; s < law.states.size(); ++s) {
    for (auto v : state_key(law.states[s])) out << v << ',';
    out << csv::format(law.prob[s]) << '\n';
  }
  return out.str();
}

/// `event_index,t,dist_to_dstar[,d_i_j...]`, one row per snapshot.
inline std::string trajectory_csv(const KineticsTrajectory& traj, const Eigen::MatrixXd& d_star,
                                  bool with_state) {
  std::ostringstream out;
  out << "event_index,t,dist_to_dstar";
  const auto n = d_star.rows();
  if (with_state)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) out << ",d_" << i << '_' << j;
  out << '\n';
  const Eigen::VectorXd ref = flatten(d_star);
  for (std::size_t s = 0; s < traj.samples.size(); ++s) {
    const auto& smp = traj.samples[s];
    out << smp.event << ',' << csv::format(smp.t) << ',' << csv::format((traj.sample_shares(s) - ref).norm());
    if (with_state)
      for (auto v : state_key(smp.d)) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Mixing-time scaling

inline constexpr double kMixingSlopeLo = 0.8;
inline constexpr double kMixingSlopeHi = 1.2;

enum class MixingStart { FarthestCorner, Equilibrium };

struct MixingConfig {
  Eigen::VectorXd l;  // departure shares
  Eigen::VectorXd w;  // arrival shares
  Eigen::MatrixXd T;
  double beta = 1.0;
  double lambda = 1.0;
  std::vector<std::int64_t> N_grid;
  int replicas = 10;
  std::uint64_t seed = 0;
  double sigma = 0.25;
  double threshold_factor = 2.0;
  /// Per-run event cap as a multiple of N ln N.
  double horizon_factor = 50.0;
  MixingStart start = MixingStart::FarthestCorner;
};

struct MixingPoint {
  std::int64_t N = 0;
  double threshold = 0.0;
  double start_distance = 0.0;
  std::vector<std::int64_t> t_half;  // per replica
  double mean_t_half = 0.0;
};

struct MixingReport {
  std::vector<MixingPoint> points;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // some mean t_half is zero, so no log-log fit
  bool pass = false;
};

/// Integer margins summing to N that follow `shares` (largest remainder).
inline Eigen::VectorXd apportion(const Eigen::VectorXd& shares, std::int64_t N) {
  const auto n = shares.size();
  const Eigen::VectorXd s = shares / shares.sum();
  Eigen::VectorXd out(n);
  std::vector<std::pair<double, Eigen::Index>> rema;
  std::int64_t assigned = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double exact = s[i] * static_cast<double>(N);
    out[i] = std::floor(exact);
    assigned += static_cast<std::int64_t>(out[i]);
    rema.emplace_back(exact - out[i], i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < N - assigned; ++r) out[rema[static_cast<std::size_t>(r)].second] += 1.0;
  return out;
}

/// Event count at which ||d(t)/N - d*|| first drops below
/// threshold_factor * rho(sigma, N), per N and replica; then a least-squares
/// fit of log mean t_half against log(N ln N). Replica r uses seed + r.
inline MixingReport mixing_scaling(const MixingConfig& cfg) {
  require(cfg.N_grid.size() >= 2, ErrorCode::InvalidArgument, "need at least two population sizes");
  require(cfg.replicas >= 1, ErrorCode::InvalidArgument, "need at least one replica");
  const auto d_star = solve_sinkhorn(cfg.l / cfg.l.sum(), cfg.w / cfg.w.sum(), cfg.T, cfg.beta).d_star.d;
  const Eigen::VectorXd ref = flatten(d_star);

  MixingReport report;
  for (const auto N : cfg.N_grid) {
    const auto inst = make_instance(apportion(cfg.l, N), apportion(cfg.w, N), cfg.T, cfg.beta);
    const CountMatrix d0 = cfg.start == MixingStart::FarthestCorner ? farthest_corner(inst, d_star)
                                                                     : round_to_polytope(d_star, inst);
    MixingPoint pt;
    pt.N = N;
    pt.threshold = cfg.threshold_factor * concentration_radius(cfg.sigma, static_cast<double>(N));
    pt.start_distance = (flatten_shares(d0, static_cast<double>(N)) - ref).norm();
    const double nd = static_cast<double>(N);
    const auto horizon = static_cast<std::int64_t>(std::ceil(cfg.horizon_factor * nd * std::log(nd)));
    for (int r = 0; r < cfg.replicas; ++r) {
      ExchangeSimulator sim(inst, d0, cfg.lambda, cfg.seed + static_cast<std::uint64_t>(r));
      auto dist = [&] { return share_distance(sim.state(), nd, d_star); };
      while (dist() >= pt.threshold) {
        if (sim.events() >= horizon) {
          fail(ErrorCode::NoCrossing, "N=" + std::to_string(N) + " replica " + std::to_string(r) +
                                          " did not reach the threshold within " + std::to_string(horizon) +
                                          " events");
        }
        sim.step();
      }
      pt.t_half.push_back(sim.events());
    }
    pt.mean_t_half = std::accumulate(pt.t_half.begin(), pt.t_half.end(), 0.0) / cfg.replicas;
    report.points.push_back(std::move(pt));
  }

  std::vector<double> x, y;
  for (const auto& pt : report.points) {
    if (pt.mean_t_half <= 0.0) report.degenerate = true;
    const double nd = static_cast<double>(pt.N);
    x.push_back(std::log(nd * std::log(nd)));
    y.push_back(std::log(pt.mean_t_half));
  }
  if (!report.degenerate) {
    const auto fit = stats::fit_line(x, y);
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.pass = report.slope >= kMixingSlopeLo && report.slope <= kMixingSlopeHi;
  }
  return report;
}

}  // namespace odflow

#endif  // ODFLOW_EXCHANGE_HPP
