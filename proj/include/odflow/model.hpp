#ifndef ODFLOW_MODEL_HPP
#define ODFLOW_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odflow/csv.hpp"
#include "odflow/error.hpp"

namespace odflow {

/// Origin-destination problem: departures L, arrivals W, travel costs T and
/// the inverse-cost temperature beta. Margins are kept in the units they were
/// given in (usually person counts); shares are derived on demand.
struct OdInstance {
  Eigen::VectorXd L;
  Eigen::VectorXd W;
  Eigen::MatrixXd T;
  double beta = 0.0;

  Eigen::Index n() const { return L.size(); }
  double population() const { return L.sum(); }
  Eigen::VectorXd l() const { return L / L.sum(); }
  Eigen::VectorXd w() const { return W / W.sum(); }

  bool integral_margins() const {
    auto integral = [](double v) { return std::floor(v) == v; };
    return std::all_of(L.begin(), L.end(), integral) && std::all_of(W.begin(), W.end(), integral);
  }
};

/// Relative mismatch of the margin totals below which W is rescaled onto
/// sum(L) instead of rejecting the instance.
inline constexpr double kMarginRebalanceTol = 1e-9;

/// Validates and assembles an instance. Totals that differ by a relative
/// amount up to kMarginRebalanceTol are rebalanced by rescaling W.
inline OdInstance make_instance(Eigen::VectorXd L, Eigen::VectorXd W, Eigen::MatrixXd T, double beta) {
  const auto n = L.size();
  require(n >= 1, ErrorCode::DimensionMismatch, "at least one district is required");
  require(W.size() == n, ErrorCode::DimensionMismatch,
          "L has " + std::to_string(n) + " entries, W has " + std::to_string(W.size()));
  require(T.rows() == n && T.cols() == n, ErrorCode::DimensionMismatch,
          "cost matrix is " + std::to_string(T.rows()) + "x" + std::to_string(T.cols()) + ", expected " +
              std::to_string(n) + "x" + std::to_string(n));
  require(L.allFinite() && W.allFinite(), ErrorCode::ParseError, "margins must be finite");
  require(T.allFinite(), ErrorCode::ParseError, "costs must be finite");
  require((L.array() >= 0).all() && (W.array() >= 0).all(), ErrorCode::NegativeEntry, "negative margin");
  require((T.array() >= 0).all(), ErrorCode::NegativeEntry, "negative travel cost");
  require(std::isfinite(beta) && beta >= 0, ErrorCode::NegativeEntry, "beta must be finite and >= 0");

  const double sl = L.sum();
  const double sw = W.sum();
  require(sl > 0 && sw > 0, ErrorCode::DegenerateMargin, "margins sum to zero");
  if (sl != sw) {
    const double rel = std::abs(sl - sw) / std::max(sl, sw);
    require(rel <= kMarginRebalanceTol, ErrorCode::MarginTotalsDiffer,
            "sum(L)=" + csv::format(sl) + " but sum(W)=" + csv::format(sw));
    W *= sl / sw;
  }
  return OdInstance{std::move(L), std::move(W), std::move(T), beta};
}

/// Advisory messages for instances that are valid but outside the regime the
/// model is meant for.
inline std::vector<std::string> instance_warnings(const OdInstance& inst) {
  std::vector<std::string> out;
  const double n2 = static_cast<double>(inst.n() * inst.n());
  if (n2 * 10.0 > inst.population()) {
    out.push_back("n^2 = " + csv::format(n2) + " is not small compared to N = " + csv::format(inst.population()));
  }
  return out;
}

enum class Scale { Counts, Shares };

/// Origin-destination matrix in counts (sums to N) or shares (sums to 1).
struct Correspondence {
  Eigen::MatrixXd d;
  Scale scale = Scale::Shares;
};

inline Correspondence to_scale(const Correspondence& c, const OdInstance& inst, Scale target) {
  if (c.scale == target) return c;
  const double N = inst.population();
  return {target == Scale::Counts ? Eigen::MatrixXd(c.d * N) : Eigen::MatrixXd(c.d / N), target};
}

struct FeasibilityReport {
  double max_row_violation = 0.0;
  double max_col_violation = 0.0;
  double min_entry = 0.0;
  bool pass = false;
};

inline constexpr double kFeasibilityTol = 1e-8;

/// Membership test for the transport polytope of `inst`, in the scale of `c`.
inline FeasibilityReport check_feasible(const Correspondence& c, const OdInstance& inst,
                                        double tol = kFeasibilityTol) {
  require(c.d.rows() == inst.n() && c.d.cols() == inst.n(), ErrorCode::DimensionMismatch,
          "correspondence shape does not match instance");
  const Eigen::VectorXd rows = c.scale == Scale::Shares ? inst.l() : inst.L;
  const Eigen::VectorXd cols = c.scale == Scale::Shares ? inst.w() : inst.W;
  FeasibilityReport r;
  r.max_row_violation = (c.d.rowwise().sum() - rows).cwiseAbs().maxCoeff();
  r.max_col_violation = (c.d.colwise().sum().transpose() - cols).cwiseAbs().maxCoeff();
  r.min_entry = c.d.minCoeff();
  r.pass = r.max_row_violation <= tol && r.max_col_violation <= tol && r.min_entry >= -tol;
  return r;
}

/// District potentials of the gravity form
/// d_ij = exp(-lamL_i) exp(lamW_j) exp(-beta T_ij).
/// Shifting both vectors by one constant leaves the gravity matrix unchanged.
struct DualPotentials {
  Eigen::VectorXd lamL;
  Eigen::VectorXd lamW;

  /// Gauge with lamL[0] == 0.
  DualPotentials canonical() const {
    const double c = lamL.size() ? lamL[0] : 0.0;
    return {(lamL.array() - c).matrix(), (lamW.array() - c).matrix()};
  }
};

// ---------------------------------------------------------------------------
// file formats

/// Margins CSV (`district,L,W` header) plus cost CSV (n x n, no header).
inline OdInstance load_instance(const std::filesystem::path& margins_file,
                                const std::filesystem::path& cost_file, double beta) {
  const auto lines = csv::read_lines(margins_file);
  require(!lines.empty(), ErrorCode::ParseError, margins_file.string() + ": empty file");
  const auto header = csv::split(lines.front());
  require(header.size() == 3 && header[0] == "district" && header[1] == "L" && header[2] == "W",
          ErrorCode::ParseError, margins_file.string() + ": header must be 'district,L,W'");
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  Eigen::VectorXd L(n), W(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto fields = csv::split(lines[i + 1]);
    const auto ctx = margins_file.string() + ":" + std::to_string(i + 2);
    require(fields.size() == 3, ErrorCode::ParseError, ctx + ": expected 3 fields");
    L[i] = csv::parse_double(fields[1], ctx);
    W[i] = csv::parse_double(fields[2], ctx);
  }
  return make_instance(std::move(L), std::move(W), csv::read_matrix(cost_file), beta);
}

inline std::string margins_text(const OdInstance& inst) {
  std::ostringstream out;
  out << "district,L,W\n";
  for (Eigen::Index i = 0; i < inst.n(); ++i)
    out << i << ',' << csv::format(inst.L[i]) << ',' << csv::format(inst.W[i]) << '\n';
  return out.str();
}

inline void save_instance(const OdInstance& inst, const std::filesystem::path& margins_file,
                          const std::filesystem::path& cost_file) {
  csv::write_text(margins_file, margins_text(inst));
  csv::write_text(cost_file, csv::matrix_text(inst.T));
}

inline std::string potentials_text(const DualPotentials& p) {
  std::ostringstream out;
  out << "district,lamL,lamW\n";
  for (Eigen::Index i = 0; i < p.lamL.size(); ++i)
    out << i << ',' << csv::format(p.lamL[i]) << ',' << csv::format(p.lamW[i]) << '\n';
  return out.str();
}

inline DualPotentials load_potentials(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  require(!lines.empty() && lines.front() == "district,lamL,lamW", ErrorCode::ParseError,
          path.string() + ": header must be 'district,lamL,lamW'");
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  DualPotentials p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto f = csv::split(lines[i + 1]);
    require(f.size() == 3, ErrorCode::ParseError, path.string() + ": expected 3 fields");
    p.lamL[i] = csv::parse_double(f[1], path.string());
    p.lamW[i] = csv::parse_double(f[2], path.string());
  }
  return p;
}

}  // namespace odflow

#endif  // ODFLOW_MODEL_HPP
