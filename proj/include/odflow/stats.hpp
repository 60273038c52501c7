#ifndef ODFLOW_STATS_HPP
#define ODFLOW_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>

#include "odflow/error.hpp"

namespace odflow::stats {

/// Smallest k with P(Binomial(n, p) <= k) >= confidence.
inline std::size_t binomial_upper_quantile(std::size_t n, double p, double confidence) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidRange, "p must lie in [0, 1]");
  if (p == 0.0) return 0;
  if (p == 1.0) return n;
  const double ln_p = std::log(p);
  const double ln_q = std::log1p(-p);
  const double ln_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  double cdf = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double ln_pmf = ln_n_fact - std::lgamma(kk + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) +
                          kk * ln_p + static_cast<double>(n - k) * ln_q;
    cdf += std::exp(ln_pmf);
    if (cdf >= confidence) return k;
  }
  return n;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument, "need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, ErrorCode::InvalidArgument, "x values are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace odflow::stats

#endif  // ODFLOW_STATS_HPP
