#ifndef ODFLOW_CONCENTRATION_HPP
#define ODFLOW_CONCENTRATION_HPP

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "odflow/error.hpp"
#include "odflow/stats.hpp"

namespace odflow {

/// Radius rho(sigma, N) = (2 sqrt 2 + 4 sqrt(ln 1/sigma)) / sqrt N of the
/// ball around the equilibrium share vector that a macrosystem of N agents
/// leaves with probability at most sigma once it has mixed.
inline double concentration_radius(double sigma, double N) {
  require(sigma > 0.0 && sigma < 0.5, ErrorCode::InvalidRange, "sigma must lie in (0, 0.5)");
  require(N > 0.0, ErrorCode::InvalidRange, "N must be positive");
  return (2.0 * std::sqrt(2.0) + 4.0 * std::sqrt(std::log(1.0 / sigma))) / std::sqrt(N);
}

inline constexpr std::size_t kMinConcentrationSamples = 100;
inline constexpr double kConcentrationConfidence = 0.99;

struct ConcentrationReport {
  double sigma = 0.0;
  double radius = 0.0;
  std::size_t samples = 0;
  std::size_t exceedances = 0;     // samples with distance >= radius
  std::size_t allowed = 0;         // 99% one-sided binomial bound at rate sigma
  double frequency = 0.0;
  double mean_distance = 0.0;
  double max_distance = 0.0;
  bool pass = false;
};

/// Exceedance count of `distances` over rho(sigma, N). Passes when the count
/// does not exceed the 99% upper quantile of Binomial(samples, sigma).
inline ConcentrationReport concentration_test(std::span<const double> distances, double sigma, double N) {
  require(distances.size() >= kMinConcentrationSamples, ErrorCode::InsufficientSamples,
          std::to_string(distances.size()) + " post-burn-in samples, need at least " +
              std::to_string(kMinConcentrationSamples));
  ConcentrationReport r;
  r.sigma = sigma;
  r.radius = concentration_radius(sigma, N);
  r.samples = distances.size();
  for (double dist : distances) {
    if (dist >= r.radius) ++r.exceedances;
    r.mean_distance += dist;
    r.max_distance = std::max(r.max_distance, dist);
  }
  r.mean_distance /= static_cast<double>(r.samples);
  r.frequency = static_cast<double>(r.exceedances) / static_cast<double>(r.samples);
  r.allowed = stats::binomial_upper_quantile(r.samples, sigma, kConcentrationConfidence);
  r.pass = r.exceedances <= r.allowed;
  return r;
}

/// A trajectory whose snapshots can be read as normalized share vectors.
template <class Traj>
concept ShareTrajectory = requires(const Traj& t, std::size_t i) {
  { t.sample_count() } -> std::convertible_to<std::size_t>;
  { t.sample_event(i) } -> std::convertible_to<std::int64_t>;
  { t.sample_shares(i) } -> std::convertible_to<Eigen::VectorXd>;
  { t.population() } -> std::convertible_to<double>;
};

/// Euclidean distances of post-burn-in snapshots to `reference` (flattened shares).
template <ShareTrajectory Traj>
std::vector<double> distances_after(const Traj& traj, const Eigen::VectorXd& reference, std::int64_t burn_in) {
  std::vector<double> out;
  for (std::size_t i = 0; i < traj.sample_count(); ++i) {
    if (traj.sample_event(i) < burn_in) continue;
    const Eigen::VectorXd s = traj.sample_shares(i);
    require(s.size() == reference.size(), ErrorCode::DimensionMismatch, "reference has the wrong size");
    out.push_back((s - reference).norm());
  }
  return out;
}

template <ShareTrajectory Traj>
ConcentrationReport concentration_test(const Traj& traj, const Eigen::VectorXd& reference, double sigma,
                                       std::int64_t burn_in) {
  const auto dist = distances_after(traj, reference, burn_in);
  return concentration_test(dist, sigma, traj.population());
}

}  // namespace odflow

#endif  // ODFLOW_CONCENTRATION_HPP
