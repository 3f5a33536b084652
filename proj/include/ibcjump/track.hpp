#pragma once

// Time-dependent short-distance coefficients c_-(t), c_+(t) and the vacuum
// amplitude psi0(t) on a grid, interpolated piecewise cubic (C^1).

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ibcjump/errors.hpp"
#include "ibcjump/params.hpp"
#include "ibcjump/wavefunction.hpp"

namespace ibcjump {

struct TrackPoint {
  double t = 0;
  complex c_minus;
  complex c_plus;
  complex psi0;
};

namespace detail {

/// Three-point derivative estimates on a nonuniform grid (second order).
inline std::vector<double> grid_slopes(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> d(n);
  if (n == 2) {
    d[0] = d[1] = (y[1] - y[0]) / (t[1] - t[0]);
    return d;
  }
  auto three = [&](std::size_t i0, double at) {
    const double t0 = t[i0], t1 = t[i0 + 1], t2 = t[i0 + 2];
    return y[i0] * (2 * at - t1 - t2) / ((t0 - t1) * (t0 - t2)) +
           y[i0 + 1] * (2 * at - t0 - t2) / ((t1 - t0) * (t1 - t2)) +
           y[i0 + 2] * (2 * at - t0 - t1) / ((t2 - t0) * (t2 - t1));
  };
  d[0] = three(0, t[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = three(i - 1, t[i]);
  d[n - 1] = three(n - 3, t[n - 1]);
  return d;
}

}  // namespace detail

class CoefficientTrack {
 public:
  CoefficientTrack(std::vector<double> t, std::vector<complex> cm, std::vector<complex> cp,
                   std::vector<complex> psi0)
      : t_(std::move(t)), cm_(std::move(cm)), cp_(std::move(cp)), psi0_(std::move(psi0)) {
    if (t_.size() < 2) throw DomainError("a track needs at least two grid times");
    if (cm_.size() != t_.size() || cp_.size() != t_.size() || psi0_.size() != t_.size()) {
      throw DomainError("track columns differ in length");
    }
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!std::isfinite(t_[i]) || (i > 0 && !(t_[i] > t_[i - 1]))) {
        throw DomainError("track times must be finite and strictly increasing");
      }
      for (complex z : {cm_[i], cp_[i], psi0_[i]}) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
          throw DomainError("track values must be finite");
        }
      }
    }
    const std::vector<complex>* cols[3] = {&cm_, &cp_, &psi0_};
    for (int c = 0; c < 3; ++c) {
      for (int part = 0; part < 2; ++part) {
        std::vector<double> y(t_.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          y[i] = part == 0 ? (*cols[c])[i].real() : (*cols[c])[i].imag();
        }
        std::vector<double> d = detail::grid_slopes(t_, y);
        std::vector<double> x = t_;
        splines_.emplace_back(std::move(x), std::move(y), std::move(d));
      }
    }
  }

  /// Coefficients held fixed over [t0, t1].
  static CoefficientTrack constant(double t0, double t1, complex cm, complex cp, complex psi0) {
    return CoefficientTrack({t0, t1}, {cm, cm}, {cp, cp}, {psi0, psi0});
  }

  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }
  const std::vector<double>& times() const { return t_; }
  std::size_t size() const { return t_.size(); }
  TrackPoint node(std::size_t i) const { return {t_[i], cm_[i], cp_[i], psi0_[i]}; }

  bool covers(double t) const { return t >= t_.front() && t <= t_.back(); }

  complex c_minus(double t) const { return eval(0, t); }
  complex c_plus(double t) const { return eval(1, t); }
  complex psi0(double t) const { return eval(2, t); }
  TrackPoint at(double t) const { return {t, c_minus(t), c_plus(t), psi0(t)}; }

  /// d|psi0|^2/dt of the interpolant.
  double psi0_norm_rate(double t) const {
    check(t);
    const complex z = psi0(t);
    const complex dz{splines_[4].prime(t), splines_[5].prime(t)};
    return 2.0 * (z.real() * dz.real() + z.imag() * dz.imag());
  }

  /// Index i with t in [t_i, t_{i+1}].
  std::size_t interval(double t) const {
    check(t);
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin());
    return i == 0 ? 0 : std::min(i - 1, t_.size() - 2);
  }

 private:
  void check(double t) const {
    if (!covers(t)) {
      throw DomainError("time " + std::to_string(t) + " outside the track span");
    }
  }
  complex eval(int c, double t) const {
    check(t);
    return {splines_[2 * c](t), splines_[2 * c + 1](t)};
  }

  std::vector<double> t_;
  std::vector<complex> cm_, cp_, psi0_;
  std::vector<boost::math::interpolators::cubic_hermite<std::vector<double>>> splines_;
};

/// Track on the given grid whose vacuum amplitude is real and follows
///   |psi0(t)|^2 = p0 - 4 pi int_{t_0}^t C_r,
/// so the two-sector bookkeeping closes exactly.
inline CoefficientTrack balanced_track(const PhysParams& p, const std::vector<double>& grid,
                                       const std::function<complex(double)>& cm,
                                       const std::function<complex(double)>& cp, double p0) {
  if (grid.size() < 2) throw DomainError("a track needs at least two grid times");
  auto flux = [&](double t) { return 4.0 * kPi * current_coeffs(p, cm(t), cp(t)).C_r; };
  std::vector<complex> vm, vp, v0;
  double norm0 = p0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) {
      norm0 -= boost::math::quadrature::gauss_kronrod<double, 31>::integrate(flux, grid[i - 1],
                                                                             grid[i], 8, 1e-14);
    }
    if (norm0 < 0) throw DomainError("vacuum occupation becomes negative on the grid");
    vm.push_back(cm(grid[i]));
    vp.push_back(cp(grid[i]));
    v0.push_back(std::sqrt(norm0));
  }
  return CoefficientTrack(grid, std::move(vm), std::move(vp), std::move(v0));
}

inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2 || !(t1 > t0)) throw DomainError("need n >= 2 and t1 > t0");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
  g.back() = t1;
  return g;
}

}  // namespace ibcjump
