#ifndef ODFLOW_SURVEY_HPP
#define ODFLOW_SURVEY_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>

#include <Eigen/Dense>

#include "odflow/csv.hpp"
#include "odflow/elp.hpp"
#include "odflow/error.hpp"
#include "odflow/exchange.hpp"
#include "odflow/rng.hpp"

namespace odflow {

/// Respondent counts per origin-destination cell.
struct SurveyCounts {
  CountMatrix r;

  std::int64_t respondents() const { return r.sum(); }

  /// Raw empirical estimate r / N_resp.
  Eigen::MatrixXd empirical() const {
    const auto total = respondents();
    require(total >= 1, ErrorCode::InvalidArgument, "survey has no respondents");
    return r.cast<double>() / static_cast<double>(total);
  }
};

/// (4 + 8 ln(1/sigma)) / epsilon^2: respondents needed so that the raw
/// estimate is within epsilon (Euclidean) of the true shares with
/// probability at least 1 - sigma.
inline double sample_size_bound(double epsilon, double sigma) {
  require(sigma > 0.0 && sigma < 0.5, ErrorCode::InvalidRange, "sigma must lie in (0, 0.5)");
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::InvalidRange, "epsilon must be > 0");
  return (4.0 + 8.0 * std::log(1.0 / sigma)) / (epsilon * epsilon);
}

inline std::int64_t required_sample_size(double epsilon, double sigma) {
  return static_cast<std::int64_t>(std::ceil(sample_size_bound(epsilon, sigma)));
}

inline constexpr std::string_view kSurveySamplerId = "mt19937_64/u53-invcdf/cumulative-binary-search";

/// N_resp i.i.d. categorical draws over the flattened (row-major) cells.
inline SurveyCounts sample_survey(const Eigen::MatrixXd& d_star, std::int64_t respondents, std::uint64_t seed) {
  require(respondents >= 0, ErrorCode::InvalidArgument, "respondent count must be >= 0");
  require((d_star.array() >= 0).all() && d_star.sum() > 0, ErrorCode::InvalidArgument,
          "d_star must be a nonnegative matrix with positive mass");
  const Eigen::VectorXd flat = flatten(d_star);
  const CumulativeSampler sampler(std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
  Rng rng(seed);
  SurveyCounts out{CountMatrix::Zero(d_star.rows(), d_star.cols())};
  const auto cols = d_star.cols();
  for (std::int64_t s = 0; s < respondents; ++s) {
    const auto idx = static_cast<Eigen::Index>(sampler(rng));
    ++out.r(idx / cols, idx % cols);
  }
  return out;
}

/// Gravity-model maximum-likelihood fit: balances exp(-beta T) onto the
/// empirical margins of the counts.
inline ElpSolution mle_fit_gravity(const SurveyCounts& counts, const Eigen::MatrixXd& T, double beta,
                                   const SinkhornOptions& opt = {}) {
  require(counts.r.rows() == T.rows() && counts.r.cols() == T.cols(), ErrorCode::DimensionMismatch,
          "counts and cost matrix differ in shape");
  require((counts.r.array() >= 0).all(), ErrorCode::NegativeEntry, "negative respondent count");
  require(counts.respondents() >= 1, ErrorCode::ZeroMargin, "survey has no respondents");
  const Eigen::MatrixXd dbar = counts.empirical();
  const Eigen::VectorXd l = dbar.rowwise().sum();
  const Eigen::VectorXd w = dbar.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    require(l[i] > 0, ErrorCode::ZeroMargin, "district " + std::to_string(i) + " has no residents in the sample");
    require(w[i] > 0, ErrorCode::ZeroMargin, "district " + std::to_string(i) + " has no workers in the sample");
  }
  return solve_sinkhorn(l, w, T, beta, opt);
}

inline SurveyCounts load_counts(const std::filesystem::path& path) {
  const Eigen::MatrixXd m = csv::read_matrix(path);
  require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "counts matrix must be square");
  SurveyCounts out{CountMatrix(m.rows(), m.cols())};
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      require(m(i, j) >= 0, ErrorCode::NegativeEntry, path.string() + ": negative count");
      require(std::floor(m(i, j)) == m(i, j), ErrorCode::ParseError, path.string() + ": counts must be integers");
      out.r(i, j) = static_cast<std::int64_t>(m(i, j));
    }
  return out;
}

}  // namespace odflow

#endif  // ODFLOW_SURVEY_HPP
