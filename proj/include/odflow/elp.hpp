#ifndef ODFLOW_ELP_HPP
#define ODFLOW_ELP_HPP

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "odflow/error.hpp"
#include "odflow/model.hpp"

namespace odflow {

namespace detail {

/// log(sum(exp(v))) with the maximum factored out.
template <class Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log(v.unaryExpr([m](double x) { return std::exp(x - m); }).sum());
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace detail

struct SinkhornOptions {
  double tol = 1e-10;
  long max_iter = 100'000;
};

/// Solution of the entropy-linear program
///   min  sum d ln d + beta sum d T   over the transport polytope (shares).
struct ElpSolution {
  Correspondence d_star;       // shares
  DualPotentials potentials;   // canonical gauge
  double primal_value = 0.0;   // sum d ln d + beta sum d T
  double dual_gap = 0.0;
  double max_violation = 0.0;  // max margin violation in shares
  long iterations = 0;
  bool converged = false;
};

/// Gravity matrix exp(-lamL_i) exp(lamW_j) exp(-beta T_ij), evaluated from
/// its exponent. No normalization or projection is applied.
inline Correspondence gravity_eval(const DualPotentials& p, const Eigen::MatrixXd& T, double beta) {
  const auto n = T.rows();
  require(p.lamL.size() == n && p.lamW.size() == T.cols(), ErrorCode::DimensionMismatch,
          "potentials do not match cost matrix");
  require(p.lamL.allFinite() && p.lamW.allFinite(), ErrorCode::InvalidArgument, "potentials must be finite");
  Eigen::MatrixXd expo = (-beta * T).colwise() - p.lamL;
  expo.rowwise() += p.lamW.transpose();
  if (expo.maxCoeff() > std::log(std::numeric_limits<double>::max())) {
    fail(ErrorCode::Overflow, "gravity exponent " + csv::format(expo.maxCoeff()) + " is not representable");
  }
  return {expo.array().exp().matrix(), Scale::Shares};
}

inline Correspondence gravity_eval(const DualPotentials& p, const OdInstance& inst) {
  return gravity_eval(p, inst.T, inst.beta);
}

/// sum_ij d_ij T_ij in the scale of d.
inline double mean_trip_time(const Eigen::MatrixXd& d, const Eigen::MatrixXd& T) {
  require(d.rows() == T.rows() && d.cols() == T.cols(), ErrorCode::DimensionMismatch,
          "correspondence and cost shapes differ");
  return d.cwiseProduct(T).sum();
}

inline double mean_trip_time(const Correspondence& c, const Eigen::MatrixXd& T) { return mean_trip_time(c.d, T); }

/// sum d ln d (with 0 ln 0 = 0).
inline double neg_entropy(const Eigen::MatrixXd& d) { return d.unaryExpr(&detail::xlogx).sum(); }

struct PrimalDualReport {
  double entropy_term = 0.0;  // sum d ln d
  double cost_term = 0.0;     // beta sum d T
  double primal = 0.0;        // entropy_term + cost_term (minimization form)
  double objective_max = 0.0; // -primal, the maximization form
  double lagrangian = 0.0;    // saddle function at (d, lamL, lamW)
  double dual = 0.0;          // min over the simplex of the saddle function
  double gap = 0.0;           // primal - dual
};

/// Dual function of the saddle problem: the inner minimum over
/// {d >= 0, sum d = 1} has the closed form -logsumexp(-c) with
/// c_ij = beta T_ij + lamL_i - lamW_j.
inline double dual_value(const DualPotentials& p, const Eigen::VectorXd& l, const Eigen::VectorXd& w,
                         const Eigen::MatrixXd& T, double beta) {
  Eigen::MatrixXd expo = (-beta * T).colwise() - p.lamL;
  expo.rowwise() += p.lamW.transpose();
  return -detail::log_sum_exp(expo) - p.lamL.dot(l) + p.lamW.dot(w);
}

inline PrimalDualReport primal_dual_report(const Eigen::MatrixXd& d, const DualPotentials& p,
                                           const OdInstance& inst) {
  const Eigen::VectorXd l = inst.l();
  const Eigen::VectorXd w = inst.w();
  PrimalDualReport r;
  r.entropy_term = neg_entropy(d);
  r.cost_term = inst.beta * mean_trip_time(d, inst.T);
  r.primal = r.entropy_term + r.cost_term;
  r.objective_max = -r.primal;
  r.lagrangian = r.primal + p.lamL.dot(Eigen::VectorXd(d.rowwise().sum()) - l) +
                 p.lamW.dot(w - Eigen::VectorXd(d.colwise().sum().transpose()));
  r.dual = dual_value(p, l, w, inst.T, inst.beta);
  r.gap = r.primal - r.dual;
  return r;
}

inline PrimalDualReport primal_dual_report(const ElpSolution& sol, const OdInstance& inst) {
  return primal_dual_report(sol.d_star.d, sol.potentials, inst);
}

namespace detail {

inline double margin_violation(const Eigen::MatrixXd& d, const Eigen::VectorXd& l, const Eigen::VectorXd& w) {
  const double rv = (d.rowwise().sum() - l).cwiseAbs().maxCoeff();
  const double cv = (d.colwise().sum().transpose() - w).cwiseAbs().maxCoeff();
  return std::max(rv, cv);
}

}  // namespace detail

/// Log-domain balancing of the fixed-point system for the potentials:
///   exp(lamL_i)  = (1/l_i) sum_j exp(lamW_j) exp(-beta T_ij)
///   exp(-lamW_j) = (1/w_j) sum_i exp(-lamL_i) exp(-beta T_ij)
/// Each sweep applies the row equation and then the column equation. Stops
/// once the largest margin violation in shares is <= tol.
inline ElpSolution solve_sinkhorn(const Eigen::VectorXd& l, const Eigen::VectorXd& w, const Eigen::MatrixXd& T,
                                  double beta, const SinkhornOptions& opt = {}) {
  const auto n = l.size();
  require(w.size() == n && T.rows() == n && T.cols() == n, ErrorCode::DimensionMismatch,
          "margins and cost matrix disagree in size");
  require(opt.tol > 0 && opt.max_iter >= 1, ErrorCode::InvalidArgument, "tol must be > 0 and max_iter >= 1");
  require((l.array() > 0).all() && (w.array() > 0).all(), ErrorCode::DegenerateMargin,
          "every district needs a positive departure and arrival share");

  const Eigen::MatrixXd logK = -beta * T;
  const Eigen::ArrayXd log_l = l.array().log();
  const Eigen::ArrayXd log_w = w.array().log();
  DualPotentials pot{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};

  auto current = [&](const DualPotentials& p) { return gravity_eval(p.canonical(), T, beta).d; };

  ElpSolution best;
  best.max_violation = std::numeric_limits<double>::infinity();
  long it = 0;
  for (; it < opt.max_iter;) {
    ++it;
    for (Eigen::Index i = 0; i < n; ++i)
      pot.lamL[i] = detail::log_sum_exp(logK.row(i).transpose() + pot.lamW) - log_l[i];
    for (Eigen::Index j = 0; j < n; ++j)
      pot.lamW[j] = log_w[j] - detail::log_sum_exp(logK.col(j) - pot.lamL);

    // keep the gauge pinned so the potentials cannot drift without bound
    pot = pot.canonical();
    const Eigen::MatrixXd d = current(pot);
    const double viol = detail::margin_violation(d, l, w);
    if (viol < best.max_violation) {
      best.d_star = {d, Scale::Shares};
      best.potentials = pot;
      best.max_violation = viol;
      best.iterations = it;
    }
    if (viol <= opt.tol) break;
  }
  best.converged = best.max_violation <= opt.tol;
  best.iterations = it;
  best.primal_value = neg_entropy(best.d_star.d) + beta * mean_trip_time(best.d_star.d, T);
  best.dual_gap = best.primal_value - dual_value(best.potentials, l, w, T, beta);
  return best;
}

inline ElpSolution solve_sinkhorn(const OdInstance& inst, const SinkhornOptions& opt = {}) {
  return solve_sinkhorn(inst.l(), inst.w(), inst.T, inst.beta, opt);
}

/// Cloud model: exogenous district potentials turn the matrix into a single
/// softmax over all n^2 pairs,
///   d_ij proportional to exp(-beta (T_ij + lamL_i - lamW_j)),   sum d = 1.
/// Margins are not imposed.
inline Correspondence solve_cloud(const OdInstance& inst, const DualPotentials& p) {
  const auto n = inst.n();
  require(p.lamL.size() == n && p.lamW.size() == n, ErrorCode::DimensionMismatch,
          "potentials do not match instance");
  Eigen::MatrixXd expo = inst.T.colwise() + p.lamL;
  expo.rowwise() -= p.lamW.transpose();
  expo *= -inst.beta;
  const double lse = detail::log_sum_exp(expo);
  return {(expo.array() - lse).exp().matrix(), Scale::Shares};
}

struct BetaSweepPoint {
  double beta = 0.0;
  double mean_time = 0.0;  // C(beta)
  double entropy = 0.0;    // F(beta) = -sum d ln d
  long iterations = 0;
  bool converged = false;
};

/// Solves the instance at each beta in `betas`; everything else is held fixed.
inline std::vector<BetaSweepPoint> beta_sweep(const OdInstance& inst, const std::vector<double>& betas,
                                              const SinkhornOptions& opt = {}) {
  std::vector<BetaSweepPoint> out;
  out.reserve(betas.size());
  const Eigen::VectorXd l = inst.l();
  const Eigen::VectorXd w = inst.w();
  for (double b : betas) {
    const auto sol = solve_sinkhorn(l, w, inst.T, b, opt);
    out.push_back({b, mean_trip_time(sol.d_star, inst.T), -neg_entropy(sol.d_star.d), sol.iterations,
                   sol.converged});
  }
  return out;
}

}  // namespace odflow

#endif  // ODFLOW_ELP_HPP
