#pragma once

// Goodness-of-fit tests used by the ensemble checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "ibcjump/errors.hpp"

namespace ibcjump {

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
  bool passes(double alpha = 0.01) const { return p_value >= alpha; }
};

inline ChiSquareResult chi_square_test(const std::vector<double>& observed,
                                       const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.size() < 2) {
    throw DomainError("chi-square needs matching count vectors with >= 2 bins");
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0)) throw DomainError("expected counts must be positive");
    const double d = observed[i] - expected[i];
    r.statistic += d * d / expected[i];
  }
  r.dof = static_cast<int>(observed.size()) - 1;
  r.p_value = boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic);
  return r;
}

/// Chi-square against equal expected counts in every bin.
inline ChiSquareResult chi_square_uniform(const std::vector<double>& counts) {
  double total = 0;
  for (double c : counts) total += c;
  return chi_square_test(counts, std::vector<double>(counts.size(), total / counts.size()));
}

/// Kolmogorov survival function Q(lambda) = P(K > lambda).
inline double kolmogorov_q(double lambda) {
  if (!(lambda > 0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // Jacobi-transformed series, fast for small lambda.
    double s = 0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2 * k - 1;
      s += std::exp(-m * m * pi * pi / (8 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0, sign = 1;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t n = 0;
  bool passes(double alpha = 0.01) const { return p_value >= alpha; }
};

/// One-sample Kolmogorov-Smirnov test; the p-value uses Stephens'
/// finite-n correction of the asymptotic law.
inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("KS test needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  KsResult r;
  r.n = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    r.statistic = std::max({r.statistic, f - i / n, (i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * r.statistic);
  return r;
}

/// z-score of an observed binomial fraction against p under the normal
/// approximation.  Degenerate p gives 0 on agreement and +-inf otherwise.
inline double binomial_z(double p_hat, double p, std::size_t n) {
  const double var = p * (1 - p) / static_cast<double>(n);
  if (var <= 0) return p_hat == p ? 0.0 : std::copysign(INFINITY, p_hat - p);
  return (p_hat - p) / std::sqrt(var);
}

}  // namespace ibcjump
