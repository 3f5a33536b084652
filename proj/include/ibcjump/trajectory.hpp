#pragma once

// Frozen-field Bohmian trajectories near the source.
//
// The integrator works in (s, theta, phi) with s = r^{1-2B}; the leading
// radial law is linear in s, so absorption at r = 0 is approached at a
// uniform rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "ibcjump/params.hpp"
#include "ibcjump/spinor_basis.hpp"
#include "ibcjump/wavefunction.hpp"

namespace ibcjump {

/// Position of the particle; phi is unwrapped.
struct SphericalState {
  double t = 0;
  double r = 1;
  double theta = kPi / 2;
  double phi = 0;
};

enum class Terminal { absorbed, left_inner_region, time_exhausted };

inline const char* to_string(Terminal e) {
  switch (e) {
    case Terminal::absorbed: return "absorbed";
    case Terminal::left_inner_region: return "left_inner_region";
    case Terminal::time_exhausted: return "time_exhausted";
  }
  return "?";
}

/// A crossing of a probe sphere; direction is +1 outward, -1 inward.
struct ProbeCrossing {
  double t = 0;
  double radius = 0;
  int direction = 0;
};

using OdeState = std::array<double, 3>;

class TrajectorySegment {
 public:
  std::vector<SphericalState> samples;
  Terminal terminal = Terminal::time_exhausted;
  /// Time at which r reaches 0; only meaningful if terminal == absorbed.
  double t0 = std::numeric_limits<double>::quiet_NaN();
  std::vector<ProbeCrossing> crossings;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const SphericalState& front() const { return samples.front(); }
  const SphericalState& back() const { return samples.back(); }
  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }

  /// Cubic Hermite dense output between stored steps.
  SphericalState at(double t) const {
    if (samples.empty()) throw DomainError("empty trajectory segment");
    if (t < t_begin() || t > t_end()) throw DomainError("time outside the segment");
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const SphericalState& s) { return v < s.t; });
    std::size_t i = it == samples.begin() ? 0 : static_cast<std::size_t>(it - samples.begin()) - 1;
    if (i + 1 >= samples.size()) return samples.back();
    return interpolate(i, t);
  }

  // Internal: derivative records used for dense output.
  std::vector<OdeState> slopes;
  double exponent = 1.0;  // 1 - 2B

  SphericalState interpolate(std::size_t i, double t) const {
    const auto& a = samples[i];
    const auto& b = samples[i + 1];
    const double h = b.t - a.t;
    if (!(h > 0)) return a;
    const double x = (t - a.t) / h;
    const double h10 = x * (1 - x) * (1 - x);
    const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
    auto mix = [&](double ya, double yb, double da, double db) {
      return ya + h01 * (yb - ya) + h * (h10 * da + h11 * db);
    };
    const double sa = std::pow(a.r, exponent), sb = std::pow(b.r, exponent);
    const double s = mix(sa, sb, slopes[i][0], slopes[i + 1][0]);
    SphericalState out;
    out.t = t;
    out.r = std::pow(std::max(s, 0.0), 1.0 / exponent);
    out.theta = mix(a.theta, b.theta, slopes[i][1], slopes[i + 1][1]);
    out.phi = mix(a.phi, b.phi, slopes[i][2], slopes[i + 1][2]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Velocity fields

/// (ds/dt, dtheta/dt, dphi/dt) for given short-distance coefficients, using
/// the uncut expansion.  Without subleading terms the ratios are evaluated in
/// closed form; otherwise from the spinor algebra.
inline OdeState field_rates(const PhysParams& p, complex cm, complex cp, complex sm,
                            complex sp, double s, double theta, double phi) {
  const double B = p.B(), e = 1.0 - 2.0 * B;
  const double r = std::pow(s, 1.0 / e);
  if (sm == complex{} && sp == complex{}) {
    const double u = std::pow(r, 2.0 * B);
    const complex cc = std::conj(cm) * cp;
    const double nm = std::norm(cm), np = std::norm(cp), q = p.q();
    const double D = nm + 2.0 * q * cc.real() * u + np * u * u;
    if (!(D > 0)) throw ZeroDensity("density vanishes");
    return {e * 2.0 * B * cc.imag() / D, 0.0,
            -p.sgn_mk() * (q * nm + 2.0 * cc.real() * u + q * np * u * u) / (r * D)};
  }
  const ModelWavefunction m(p, cm, cp, 1.0, sm, sp);
  const SphericalVector v = velocity_field(m, r, SpherePoint{theta, phi});
  const double st = std::max(std::abs(std::sin(theta)), 1e-12);
  return {e * std::pow(r, -2.0 * B) * v.r, v.theta / r, v.phi / (r * st)};
}

/// Velocity field of a fixed ModelWavefunction.
struct FrozenField {
  ModelWavefunction model;

  double B() const { return model.params.B(); }
  OdeState operator()(double /*t*/, const OdeState& x) const {
    return field_rates(model.params, model.c_minus, model.c_plus, model.sub_minus,
                       model.sub_plus, x[0], x[1], x[2]);
  }
};

template <class F>
concept TrajectoryField = requires(const F& f, double t, const OdeState& x) {
  { f(t, x) } -> std::convertible_to<OdeState>;
  { f.B() } -> std::convertible_to<double>;
};

/// dr/dt, dtheta/dt, dphi/dt from current_exact / density_exact.
inline SphericalVector ode_rhs(const ModelWavefunction& m, const SphericalState& x) {
  const complex cc = std::conj(m.c_minus) * m.c_plus;
  if (cc.imag() == 0.0) throw DegenerateError("Im[c_-^* c_+] = 0");
  if (!(x.r > 0)) throw OriginError("trajectory at the origin");
  const SpherePoint w{x.theta, x.phi};
  const SphericalVector j = current_exact(m, x.r, w);
  const double rho = density_exact(m, x.r, w);
  if (!(rho > 0)) throw ZeroDensity("density vanishes");
  const double st = std::sin(x.theta);
  if (std::abs(st) < 1e-12) {
    if (j.phi != 0.0) throw PoleError("azimuthal velocity undefined on the axis");
    return {j.r / rho, j.theta / (x.r * rho), 0.0};
  }
  return {j.r / rho, j.theta / (x.r * rho), j.phi / (x.r * st * rho)};
}

inline SphericalVector ode_rhs(const PhysParams& p, complex cm, complex cp,
                               const SphericalState& x) {
  return ode_rhs(ModelWavefunction(p, cm, cp, 4.0 * x.r), x);
}

// ---------------------------------------------------------------------------
// Integration

struct IntegrateOptions {
  double tol = 1e-10;
  double r_min = 1e-8;
  /// Leaving this radius ends the segment (r_cut/2 keeps the field exact).
  double r_max = 0.5;
  std::size_t max_steps = 2'000'000;
  bool keep_samples = true;
  std::vector<double> probes;
};

namespace detail {

inline double hermite_scalar(double t, double ta, double tb, double ya, double yb, double da,
                             double db) {
  const double h = tb - ta, x = (t - ta) / h;
  return ya + x * x * (3 - 2 * x) * (yb - ya) + h * (x * (1 - x) * (1 - x) * da + x * x * (x - 1) * db);
}

// Root of the Hermite interpolant of s on [ta, tb] at level target, by bisection.
inline double hermite_crossing(double target, double ta, double tb, double sa, double sb,
                               double da, double db) {
  double lo = ta, hi = tb;
  const bool rising = sb > sa;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    const double v = hermite_scalar(mid, ta, tb, sa, sb, da, db);
    if ((v < target) == rising) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

template <TrajectoryField Field>
TrajectorySegment integrate(const Field& field, const SphericalState& initial, double t_end,
                            const IntegrateOptions& opt) {
  namespace ode = boost::numeric::odeint;
  const double B = field.B(), e = 1.0 - 2.0 * B;
  if (!(opt.r_min > 0) || !(opt.r_max > opt.r_min)) throw DomainError("need 0 < r_min < r_max");
  if (!(initial.r > opt.r_min) || !(initial.r < opt.r_max)) {
    throw DomainError("initial radius outside (r_min, r_max)");
  }
  if (!(t_end >= initial.t)) throw DomainError("t_end before the initial time");
  if (!(opt.tol > 0)) throw DomainError("tolerance must be positive");

  const double s_min = std::pow(opt.r_min, e), s_max = std::pow(opt.r_max, e);
  const double s_floor = 0.5 * s_min;
  auto system = [&](const OdeState& x, OdeState& dxdt, double t) {
    OdeState y = x;
    y[0] = std::max(y[0], s_floor);
    dxdt = field(t, y);
  };

  TrajectorySegment seg;
  seg.exponent = e;
  OdeState x{std::pow(initial.r, e), initial.theta, initial.phi};
  OdeState dxdt;
  double t = initial.t;
  system(x, dxdt, t);

  auto push = [&](double tt, const OdeState& xs, const OdeState& ds) {
    seg.samples.push_back({tt, std::pow(std::max(xs[0], 0.0), 1.0 / e), xs[1], xs[2]});
    seg.slopes.push_back(ds);
  };
  push(t, x, dxdt);

  auto controlled = ode::make_controlled<ode::runge_kutta_dopri5<OdeState>>(
      1e-3 * opt.tol * s_min, opt.tol);

  // Initial step from the local time scales.
  double dt = 1e-3 * std::min(x[0] / std::max(std::abs(dxdt[0]), 1e-300),
                              1.0 / std::max(std::abs(dxdt[2]), 1e-300));
  if (std::isfinite(t_end)) dt = std::min(dt, t_end - t);
  const double span = std::isfinite(t_end) ? std::max(t_end - initial.t, 1.0) : 1.0;

  auto finish_at = [&](double tc, const OdeState& xa, const OdeState& da, double ta,
                       const OdeState& xb, const OdeState& db, double tb) {
    OdeState xc;
    for (int k = 0; k < 3; ++k) xc[k] = detail::hermite_scalar(tc, ta, tb, xa[k], xb[k], da[k], db[k]);
    OdeState dc;
    system(xc, dc, tc);
    if (!seg.samples.empty() && seg.samples.back().t >= tc) {
      seg.samples.pop_back();
      seg.slopes.pop_back();
    }
    push(tc, xc, dc);
    return dc;
  };

  std::size_t tries = 0;
  while (true) {
    if (seg.accepted_steps >= opt.max_steps || tries > 20 * opt.max_steps) {
      throw StepFailure("step budget exhausted");
    }
    if (std::isfinite(t_end)) {
      const double left = t_end - t;
      if (left <= 1e-14 * span) {
        seg.terminal = Terminal::time_exhausted;
        break;
      }
      dt = std::min(dt, left);
    }
    const OdeState x_old = x, d_old = dxdt;
    const double t_old = t;
    ++tries;
    ode::controlled_step_result res;
    try {
      res = controlled.try_step(system, x, dxdt, t, dt);
    } catch (const ZeroDensity&) {
      x = x_old;
      dxdt = d_old;
      t = t_old;
      dt *= 0.25;
      res = ode::fail;
    }
    if (res == ode::fail) {
      ++seg.rejected_steps;
      if (!(dt > 1e-15 * std::max(std::abs(t), 1e-300))) throw StepFailure("step size underflow");
      continue;
    }
    ++seg.accepted_steps;

    for (double probe : opt.probes) {
      const double sp = std::pow(probe, e);
      if ((x_old[0] < sp) != (x[0] < sp)) {
        const double tc = detail::hermite_crossing(sp, t_old, t, x_old[0], x[0], d_old[0], dxdt[0]);
        seg.crossings.push_back({tc, probe, x[0] > x_old[0] ? +1 : -1});
      }
    }

    if (x[0] <= s_min) {
      const double tc = detail::hermite_crossing(s_min, t_old, t, x_old[0], x[0], d_old[0], dxdt[0]);
      const OdeState dc = finish_at(tc, x_old, d_old, t_old, x, dxdt, t);
      seg.terminal = Terminal::absorbed;
      // Remaining time int_0^{s_min} ds / |ds/dt| with the field held at tc;
      // s(t) is linear in t to leading order, so the integrand is nearly flat.
      static const GaussLegendreRule rule = gauss_legendre(16);
      const OdeState xc{s_min, seg.samples.back().theta, seg.samples.back().phi};
      double rest = 0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        OdeState y = xc, dy;
        y[0] = 0.5 * s_min * (1 + rule.nodes[k]);
        dy = field(tc, y);
        rest += 0.5 * s_min * rule.weights[k] / std::abs(dy[0]);
      }
      seg.t0 = std::isfinite(rest) ? tc + rest : tc + s_min / std::abs(dc[0]);
      break;
    }
    if (x[0] >= s_max) {
      const double tc = detail::hermite_crossing(s_max, t_old, t, x_old[0], x[0], d_old[0], dxdt[0]);
      finish_at(tc, x_old, d_old, t_old, x, dxdt, t);
      seg.terminal = Terminal::left_inner_region;
      break;
    }
    if (opt.keep_samples) {
      push(t, x, dxdt);
    } else {
      seg.samples.resize(1);
      seg.slopes.resize(1);
      push(t, x, dxdt);
    }
  }
  if (!opt.keep_samples && seg.samples.size() > 2) {
    seg.samples.erase(seg.samples.begin() + 1, seg.samples.end() - 1);
    seg.slopes.erase(seg.slopes.begin() + 1, seg.slopes.end() - 1);
  }
  return seg;
}

/// Frozen-field integration with r_max = r_cut/2.
inline TrajectorySegment integrate(const ModelWavefunction& m, const SphericalState& initial,
                                   double t_end, double tol, double r_min) {
  IntegrateOptions opt;
  opt.tol = tol;
  opt.r_min = r_min;
  opt.r_max = 0.5 * m.r_cut;
  return integrate(FrozenField{m}, initial, t_end, opt);
}

// ---------------------------------------------------------------------------
// Closed-form frozen-field solution (no subleading terms)

/// With u = r^{2B} and D = |c_-|^2 + 2q Re u + |c_+|^2 u^2 the frozen equations
///   dr/dt = 2B Im u / D,  r dphi/dt = -sgn (q|c_-|^2 + 2 Re u + q|c_+|^2 u^2) / D
/// integrate exactly to
///   |t - t0| = (|c_-|^2 s/(1-2B) + 2q Re r + |c_+|^2 r^{1+2B}/(1+2B)) / (2B |Im|),
///   phi(r)   = phi* + P r^{-2B} + L log r + Q r^{2B},
/// where Re, Im are parts of c_-^* c_+ and s = r^{1-2B}.
struct AsymptoticCoeffs {
  double B = 0;
  double re = 0, im = 0, nm = 0, np = 0;
  /// r = (K |t - t0|)^{1/(1-2B)} to leading order.
  double K = 0;
  double radial_exponent = 0;
  /// phi ~ A |t - t0|^{phi_exponent} + C_H log|t - t0|.
  double phi_exponent = 0;
  double A = 0;
  double C_H = 0;
  /// r dphi/dt = -q sgn + C_tilde r^{2B} + O(r^{4B}).
  double C_tilde = 0;
  /// Leading dr/dt coefficient of r^{2B}.
  double dr_coeff = 0;
  double P = 0, L = 0, Q = 0;
  double q = 0;
};

inline AsymptoticCoeffs asymptotic_coeffs(const PhysParams& p, complex cm, complex cp) {
  const complex cc = std::conj(cm) * cp;
  if (cc.imag() == 0.0) throw DegenerateError("Im[c_-^* c_+] = 0");
  AsymptoticCoeffs a;
  const double B = p.B(), e = 1.0 - 2.0 * B, sgn = p.sgn_mk();
  a.B = B;
  a.q = p.q();
  a.re = cc.real();
  a.im = cc.imag();
  a.nm = std::norm(cm);
  a.np = std::norm(cp);
  a.K = 2.0 * B * e * std::abs(a.im) / a.nm;
  a.radial_exponent = 1.0 / e;
  a.phi_exponent = -2.0 * B / e;
  a.P = sgn * a.q * a.nm / (4.0 * B * B * a.im);
  a.L = -sgn * a.re / (B * a.im);
  a.Q = -sgn * a.q * a.np / (4.0 * B * B * a.im);
  a.A = a.P * std::pow(a.K, a.phi_exponent);
  a.C_H = a.L / e;
  a.C_tilde = -sgn * 2.0 * B * B * a.re / a.nm;
  a.dr_coeff = 2.0 * B * a.im / a.nm;
  return a;
}

/// |t - t0| at radius r on the exact frozen solution.
inline double exact_elapsed(const AsymptoticCoeffs& a, double r) {
  const double B = a.B;
  return (a.nm * std::pow(r, 1 - 2 * B) / (1 - 2 * B) + 2 * a.q * a.re * r +
          a.np * std::pow(r, 1 + 2 * B) / (1 + 2 * B)) /
         (2 * B * std::abs(a.im));
}

/// phi(r) - phi* on the exact frozen solution.
inline double exact_phi_offset(const AsymptoticCoeffs& a, double r) {
  return a.P * std::pow(r, -2 * a.B) + a.L * std::log(r) + a.Q * std::pow(r, 2 * a.B);
}

/// phi* of the exact solution whose expansion in |t - t0| has constant phi0.
inline double phi_star(const AsymptoticCoeffs& a, double phi0) {
  const double e = 1 - 2 * a.B;
  return phi0 - a.P * 4 * a.B * a.q * a.re / a.nm - a.L / e * std::log(a.K);
}

/// Leading-order state at time t relative to t0 = 0.
inline SphericalState asymptotic_solution(const PhysParams& p, complex cm, complex cp,
                                          double theta0, double phi0, double t) {
  const AsymptoticCoeffs a = asymptotic_coeffs(p, cm, cp);
  if (t == 0.0 || sign_of(t) != sign_of(a.im)) {
    throw SignError("sgn(t) must equal sgn(Im[c_-^* c_+])");
  }
  const double tau = std::abs(t);
  SphericalState s;
  s.t = t;
  s.r = std::pow(a.K * tau, a.radial_exponent);
  s.theta = theta0;
  s.phi = phi0 + a.A * std::pow(tau, a.phi_exponent) + a.C_H * std::log(tau);
  return s;
}

/// Seed state at radius r_seed of the outgoing trajectory emanating at t0 with
/// labels (theta0, phi0), from the exact frozen solution.
inline SphericalState emission_seed(const PhysParams& p, complex cm, complex cp, double t0,
                                    double theta0, double phi0, double r_seed) {
  const AsymptoticCoeffs a = asymptotic_coeffs(p, cm, cp);
  if (!(a.im > 0)) throw DegenerateError("no outgoing trajectories unless Im[c_-^* c_+] > 0");
  SphericalState s;
  s.t = t0 + exact_elapsed(a, r_seed);
  s.r = r_seed;
  s.theta = theta0;
  s.phi = phi_star(a, phi0) + exact_phi_offset(a, r_seed);
  return s;
}

/// Outgoing trajectory emanating from the origin at t0, integrated forward.
template <TrajectoryField Field>
TrajectorySegment emit_trajectory(const Field& field, const PhysParams& p, complex cm,
                                  complex cp, double t0, double theta0, double phi0,
                                  double r_seed, double t_end, const IntegrateOptions& opt) {
  const SphericalState seed = emission_seed(p, cm, cp, t0, theta0, phi0, r_seed);
  if (seed.t >= t_end) {
    // The seed already lies beyond the window.
    TrajectorySegment seg;
    seg.exponent = 1 - 2 * p.B();
    seg.samples.push_back(seed);
    seg.slopes.push_back(field(seed.t, {std::pow(seed.r, seg.exponent), seed.theta, seed.phi}));
    seg.terminal = Terminal::time_exhausted;
    return seg;
  }
  return integrate(field, seed, t_end, opt);
}

inline TrajectorySegment emit_trajectory(const ModelWavefunction& m, double t0, double theta0,
                                         double phi0, double r_seed, double tol,
                                         double t_end = std::numeric_limits<double>::infinity()) {
  IntegrateOptions opt;
  opt.tol = tol;
  opt.r_min = 0.1 * r_seed;
  opt.r_max = 0.5 * m.r_cut;
  return emit_trajectory(FrozenField{m}, m.params, m.c_minus, m.c_plus, t0, theta0, phi0,
                         r_seed, t_end, opt);
}

}  // namespace ibcjump
