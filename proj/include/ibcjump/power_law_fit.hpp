#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "ibcjump/errors.hpp"

namespace ibcjump {

struct PowerLawFit {
  double exponent = 0;
  double prefactor = 0;
  double r_squared = 0;
};

/// Ordinary least squares of log y against log x: y ~ prefactor * x^exponent.
inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw FitError("sample arrays differ in length");
  const std::size_t n = x.size();
  if (n < 8) throw FitError("power-law fit needs at least 8 samples");
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw FitError("power-law fit needs finite positive samples");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx, dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0)) throw FitError("abscissae are all equal");
  PowerLawFit f;
  f.exponent = sxy / sxx;
  f.prefactor = std::exp(my - f.exponent * mx);
  // A constant series is fitted exactly.
  f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  return fit_power_law(std::span<const double>(x), std::span<const double>(y));
}

struct OffsetPowerLawFit {
  double exponent = 0;
  double prefactor = 0;
  double offset = 0;
  double rms_residual = 0;
};

/// Least squares of y ~ offset + prefactor * x^exponent with the exponent
/// searched in [lo, hi].  For each trial exponent the linear part is solved
/// exactly, so only a one-dimensional minimisation remains.
inline OffsetPowerLawFit fit_power_law_offset(std::span<const double> x, std::span<const double> y,
                                              double lo, double hi) {
  if (x.size() != y.size()) throw FitError("sample arrays differ in length");
  const std::size_t n = x.size();
  if (n < 8) throw FitError("power-law fit needs at least 8 samples");
  if (!(lo < hi)) throw FitError("empty exponent bracket");
  double x_ref = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw FitError("offset power-law fit needs positive abscissae and finite ordinates");
    }
    x_ref = std::max(x_ref, x[i]);
  }
  struct Linear {
    double a = 0, b = 0, rss = 0;
  };
  auto solve = [&](double beta) {
    double mu = 0, my = 0;
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = std::pow(x[i] / x_ref, beta);
      mu += u[i];
      my += y[i];
    }
    mu /= n;
    my /= n;
    double suu = 0, suy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      suu += (u[i] - mu) * (u[i] - mu);
      suy += (u[i] - mu) * (y[i] - my);
    }
    Linear l;
    if (!(suu > 0)) {
      l.a = my;
      l.rss = INFINITY;
      return l;
    }
    l.b = suy / suu;
    l.a = my - l.b * mu;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = y[i] - l.a - l.b * u[i];
      l.rss += d * d;
    }
    return l;
  };
  const auto best = boost::math::tools::brent_find_minima(
      [&](double beta) { return solve(beta).rss; }, lo, hi, 52);
  const Linear l = solve(best.first);
  if (!std::isfinite(l.rss)) throw FitError("abscissae are all equal");
  OffsetPowerLawFit f;
  f.exponent = best.first;
  f.prefactor = l.b * std::pow(x_ref, -f.exponent);
  f.offset = l.a;
  f.rms_residual = std::sqrt(l.rss / n);
  return f;
}

inline OffsetPowerLawFit fit_power_law_offset(const std::vector<double>& x,
                                              const std::vector<double>& y, double lo,
                                              double hi) {
  return fit_power_law_offset(std::span<const double>(x), std::span<const double>(y), lo, hi);
}

}  // namespace ibcjump
