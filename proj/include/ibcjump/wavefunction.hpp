#pragma once

// One-particle wave function near the source, its Dirac current and density,
// and the closed-form coefficients of their small-r expansions.

#include <array>
#include <cmath>
#include <complex>

#include "ibcjump/params.hpp"
#include "ibcjump/spinor_basis.hpp"

namespace ibcjump {

/// Exponent of the optional injected subleading terms, r^{-1/2 + delta}.
inline constexpr double kSubleadingDelta = 0.1;
inline constexpr double kSubleadingPower = -0.5 + kSubleadingDelta;

/// psi^(1)(r omega) = chi(r) [ (c_- r^{-1-B} + s_- r^{-0.4}) f^-(omega)
///                           + (c_+ r^{-1+B} + s_+ r^{-0.4}) f^+(omega) ].
struct ModelWavefunction {
  PhysParams params;
  complex c_minus{1.0, 0.0};
  complex c_plus{0.0, 0.0};
  double r_cut = 1.0;
  complex sub_minus{0.0, 0.0};
  complex sub_plus{0.0, 0.0};

  ModelWavefunction(PhysParams p, complex cm, complex cp, double rc = 1.0,
                    complex sm = {}, complex sp = {})
      : params(p), c_minus(cm), c_plus(cp), r_cut(rc), sub_minus(sm), sub_plus(sp) {
    if (!(r_cut > 0) || !std::isfinite(r_cut)) throw DomainError("r_cut must be positive");
  }

  bool has_subleading() const { return sub_minus != complex{} || sub_plus != complex{}; }

  /// Radial amplitudes multiplying f^- and f^+ (without the cutoff).
  std::pair<complex, complex> amplitudes(double r) const {
    const double B = params.B();
    complex am = c_minus * std::pow(r, -1.0 - B);
    complex ap = c_plus * std::pow(r, -1.0 + B);
    if (has_subleading()) {
      const double s = std::pow(r, kSubleadingPower);
      am += sub_minus * s;
      ap += sub_plus * s;
    }
    return {am, ap};
  }
};

/// C^1 cutoff: 1 on [0, r_cut/2], 0 beyond r_cut, cubic smoothstep between.
inline double cutoff(double r, double r_cut) {
  const double inner = 0.5 * r_cut;
  if (r <= inner) return 1.0;
  if (r >= r_cut) return 0.0;
  const double x = (r - inner) / inner;
  return 1.0 - x * x * (3.0 - 2.0 * x);
}

inline Spinor4 eval_psi1(const ModelWavefunction& m, double r, const SpherePoint& w) {
  if (!(r > 0)) throw OriginError("wave function evaluated at the origin");
  const double chi = cutoff(r, m.r_cut);
  if (chi == 0.0) return Spinor4::Zero();
  const auto [am, ap] = m.amplitudes(r);
  const BoundaryPair f = boundary_pair(w, m.params);
  return chi * (am * f.minus + ap * f.plus);
}

inline Spinor4 eval_psi1(const ModelWavefunction& m, const Vec3& x) {
  const double r = x.norm();
  if (!(r > 0)) throw OriginError("wave function evaluated at the origin");
  return eval_psi1(m, r, SpherePoint::from_direction(x));
}

/// Current components (j_r, j_theta, j_phi) in the spherical frame.
struct SphericalVector {
  double r = 0, theta = 0, phi = 0;
};

namespace detail {

inline SphericalVector current_of(const Spinor4& psi, const SpherePoint& w) {
  return {inner(psi, alpha_component(FrameAxis::r, w) * psi).real(),
          inner(psi, alpha_component(FrameAxis::theta, w) * psi).real(),
          inner(psi, alpha_component(FrameAxis::phi, w) * psi).real()};
}

}  // namespace detail

inline SphericalVector current_exact(const ModelWavefunction& m, double r,
                                     const SpherePoint& w) {
  return detail::current_of(eval_psi1(m, r, w), w);
}

inline SphericalVector current_exact(const ModelWavefunction& m, const Vec3& x) {
  const double r = x.norm();
  if (!(r > 0)) throw OriginError("current evaluated at the origin");
  return current_exact(m, r, SpherePoint::from_direction(x));
}

inline double density_exact(const ModelWavefunction& m, double r, const SpherePoint& w) {
  return eval_psi1(m, r, w).squaredNorm();
}

inline double density_exact(const ModelWavefunction& m, const Vec3& x) {
  const double r = x.norm();
  if (!(r > 0)) throw OriginError("density evaluated at the origin");
  return density_exact(m, r, SpherePoint::from_direction(x));
}

/// Coefficients of
///   j_r   = C_r r^{-2},
///   j_phi = sin(theta) (Cphi_leading r^{-2-2B} + Cphi_mid r^{-2} + Cphi_sub r^{-2+2B}),
///   rho   = rho_leading r^{-2-2B} + rho_mid r^{-2} + ...
struct CurrentCoeffs {
  double C_r = 0;
  double Cphi_leading = 0;
  double Cphi_mid = 0;
  double Cphi_sub = 0;
  double rho_leading = 0;
  double rho_mid = 0;
};

inline CurrentCoeffs current_coeffs(const PhysParams& p, complex c_minus, complex c_plus) {
  const double q = p.q(), B = p.B(), s = p.sgn_mk();
  const complex cc = std::conj(c_minus) * c_plus;
  const double nm = std::norm(c_minus), np = std::norm(c_plus);
  CurrentCoeffs c;
  c.C_r = 2.0 * (1.0 + q) * B * cc.imag() / kPi;
  c.Cphi_leading = -q * (1.0 + q) * nm * s / kPi;
  c.Cphi_mid = -2.0 * (1.0 + q) * cc.real() * s / kPi;
  c.Cphi_sub = -q * (1.0 + q) * np * s / kPi;
  c.rho_leading = nm * (1.0 + q) / kPi;
  c.rho_mid = 2.0 * cc.real() * q * (1.0 + q) / kPi;
  return c;
}

/// j / rho at (r, omega).  The cutoff multiplies both j and rho by chi^2, so
/// the ratio is evaluated from the uncut expansion; this extends the field
/// continuously to every r > 0.
inline SphericalVector velocity_field(const ModelWavefunction& m, double r,
                                      const SpherePoint& w) {
  if (!(r > 0)) throw OriginError("velocity evaluated at the origin");
  const auto [am, ap] = m.amplitudes(r);
  const BoundaryPair f = boundary_pair(w, m.params);
  const Spinor4 psi = am * f.minus + ap * f.plus;
  const double rho = psi.squaredNorm();
  if (!(rho > 0) || !std::isfinite(rho)) throw ZeroDensity("density vanishes");
  const SphericalVector j = detail::current_of(psi, w);
  return {j.r / rho, j.theta / rho, j.phi / rho};
}

inline SphericalVector velocity_field(const ModelWavefunction& m, const Vec3& x) {
  const double r = x.norm();
  if (!(r > 0)) throw OriginError("velocity evaluated at the origin");
  return velocity_field(m, r, SpherePoint::from_direction(x));
}

}  // namespace ibcjump
