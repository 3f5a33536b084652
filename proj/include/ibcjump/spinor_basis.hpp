#pragma once

// Angular building blocks: associated Legendre functions, spherical
// harmonics, spinor spherical harmonics Phi^{+-}_{m_j kappa_j}, the boundary
// spinors f^{+-}, Dirac alpha matrices in the spherical frame, and a
// product quadrature rule on the unit sphere.

#include <Eigen/Dense>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "ibcjump/errors.hpp"
#include "ibcjump/params.hpp"

namespace ibcjump {

using Spinor2 = Eigen::Vector2cd;
using Spinor4 = Eigen::Vector4cd;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr complex kI{0.0, 1.0};

/// A direction omega on the unit sphere, theta in [0, pi], phi in [0, 2 pi).
struct SpherePoint {
  double theta = 0.0;
  double phi = 0.0;

  /// Accepts any real phi and reduces it into [0, 2 pi).
  static SpherePoint from_angles(double theta, double phi) {
    if (!(theta >= 0.0 && theta <= kPi)) {
      throw DomainError("polar angle outside [0, pi]: " + std::to_string(theta));
    }
    double p = std::fmod(phi, 2.0 * kPi);
    if (p < 0) p += 2.0 * kPi;
    if (p >= 2.0 * kPi) p = 0.0;
    return SpherePoint{theta, p};
  }

  static SpherePoint from_direction(const Vec3& x) {
    const double r = x.norm();
    if (!(r > 0)) throw OriginError("direction of the zero vector");
    const double c = std::clamp(x.z() / r, -1.0, 1.0);
    return from_angles(std::acos(c), std::atan2(x.y(), x.x()));
  }
};

enum class FrameAxis { r, theta, phi };
enum class Parity { plus, minus };

/// Spherical unit vectors e_r, e_theta, e_phi.  At the poles these are the
/// continuous extension at fixed phi.
inline Vec3 frame_vector(FrameAxis k, const SpherePoint& w) {
  const double st = std::sin(w.theta), ct = std::cos(w.theta);
  const double sp = std::sin(w.phi), cp = std::cos(w.phi);
  switch (k) {
    case FrameAxis::r:
      return {st * cp, st * sp, ct};
    case FrameAxis::theta:
      return {ct * cp, ct * sp, -st};
    case FrameAxis::phi:
      return {-sp, cp, 0.0};
  }
  return Vec3::Zero();
}

inline Vec3 to_cartesian(double r, const SpherePoint& w) {
  return r * frame_vector(FrameAxis::r, w);
}

// ---------------------------------------------------------------------------
// Scalar harmonics

/// P_l^m(x) including the Condon-Shortley factor (-1)^m; negative m via
/// P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m.
/// The overload taking sin(theta) avoids rebuilding it from x near the poles.
inline double assoc_legendre(int l, int m, double x, double somx2) {
  if (l < 0 || std::abs(m) > l) {
    throw DomainError("assoc_legendre: need 0 <= |m| <= l, got l=" + std::to_string(l) +
                      ", m=" + std::to_string(m));
  }
  if (!(std::abs(x) <= 1.0)) throw DomainError("assoc_legendre: |x| > 1");
  const int am = std::abs(m);

  // P_am^am = (-1)^am (2am-1)!! (1-x^2)^{am/2}
  double pmm = 1.0;
  double fact = 1.0;
  for (int i = 1; i <= am; ++i) {
    pmm *= -fact * somx2;
    fact += 2.0;
  }
  double value = pmm;
  if (l > am) {
    double pmmp1 = x * (2.0 * am + 1.0) * pmm;
    value = pmmp1;
    for (int ll = am + 2; ll <= l; ++ll) {
      const double pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + am - 1.0) * pmm) / (ll - am);
      pmm = pmmp1;
      pmmp1 = pll;
      value = pll;
    }
  }
  if (m < 0) {
    // (l-am)!/(l+am)!
    double ratio = 1.0;
    for (int k = l - am + 1; k <= l + am; ++k) ratio /= k;
    value *= ((am % 2) ? -1.0 : 1.0) * ratio;
  }
  return value;
}

inline double assoc_legendre(int l, int m, double x) {
  if (!(std::abs(x) <= 1.0)) throw DomainError("assoc_legendre: |x| > 1");
  return assoc_legendre(l, m, x, std::sqrt((1.0 - x) * (1.0 + x)));
}

inline complex sph_harmonic(int l, int m, const SpherePoint& w) {
  if (l < 0 || std::abs(m) > l) {
    throw DomainError("sph_harmonic: need 0 <= |m| <= l");
  }
  // sqrt((l-m)!/(l+m)!) computed as a running product.
  double ratio = 1.0;
  if (m >= 0) {
    for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
  } else {
    for (int k = l + m + 1; k <= l - m; ++k) ratio *= k;
  }
  const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
  return norm * assoc_legendre(l, m, std::cos(w.theta), std::abs(std::sin(w.theta))) *
         std::polar(1.0, m * w.phi);
}

// ---------------------------------------------------------------------------
// Spinor harmonics

/// Which orbital angular momentum accompanies j: l = j - 1/2 or l = j + 1/2.
enum class OrbitalBranch { lower, upper };

namespace detail {

inline complex harmonic_or_zero(int l, int m, const SpherePoint& w) {
  return std::abs(m) > l ? complex(0.0) : sph_harmonic(l, m, w);
}

inline void check_j_mj(HalfInt j, HalfInt mj) {
  if (j.twice < 1 || j.twice % 2 == 0 || std::abs(mj.twice) > j.twice || mj.twice % 2 == 0) {
    throw DomainError("invalid (j, m_j) = (" + std::to_string(j.value()) + ", " +
                      std::to_string(mj.value()) + ")");
  }
}

}  // namespace detail

/// Two-spinor Psi^{m_j}_{j -+ 1/2}(omega).
inline Spinor2 psi_two_spinor(HalfInt j, OrbitalBranch branch, HalfInt mj,
                              const SpherePoint& w) {
  detail::check_j_mj(j, mj);
  const double jv = j.value(), mv = mj.value();
  const int m_down = (mj.twice - 1) / 2;  // m_j - 1/2
  const int m_up = (mj.twice + 1) / 2;    // m_j + 1/2
  Spinor2 out;
  if (branch == OrbitalBranch::lower) {
    const int l = (j.twice - 1) / 2;
    const double n = 1.0 / std::sqrt(2.0 * jv);
    const double a = std::sqrt(jv + mv), b = std::sqrt(jv - mv);
    out(0) = n * (a == 0 ? complex(0) : a * detail::harmonic_or_zero(l, m_down, w));
    out(1) = n * (b == 0 ? complex(0) : b * detail::harmonic_or_zero(l, m_up, w));
  } else {
    const int l = (j.twice + 1) / 2;
    const double n = 1.0 / std::sqrt(2.0 * jv + 2.0);
    const double a = std::sqrt(jv + 1.0 - mv), b = std::sqrt(jv + 1.0 + mv);
    out(0) = n * a * detail::harmonic_or_zero(l, m_down, w);
    out(1) = -n * b * detail::harmonic_or_zero(l, m_up, w);
  }
  return out;
}

/// Phi^{+-}_{m_j, kappa_j}(omega) in the standard representation:
///   Phi^+_{m_j, -+(j+1/2)} = (i Psi^{m_j}_{j-+1/2}, 0),
///   Phi^-_{m_j, -+(j+1/2)} = (0, Psi^{m_j}_{j+-1/2}).
inline Spinor4 phi_basis(Parity s, HalfInt mj, int kappa, const SpherePoint& w) {
  if (kappa == 0) throw DomainError("kappa_j must be nonzero");
  const HalfInt j{2 * std::abs(kappa) - 1};
  detail::check_j_mj(j, mj);
  const bool negative_kappa = kappa < 0;
  Spinor4 out = Spinor4::Zero();
  if (s == Parity::plus) {
    const auto branch = negative_kappa ? OrbitalBranch::lower : OrbitalBranch::upper;
    out.head<2>() = kI * psi_two_spinor(j, branch, mj, w);
  } else {
    const auto branch = negative_kappa ? OrbitalBranch::upper : OrbitalBranch::lower;
    out.tail<2>() = psi_two_spinor(j, branch, mj, w);
  }
  return out;
}

/// Boundary spinors
///   f^+ = (1+q+B) Phi^+ - (1+q-B) Phi^-,
///   f^- = (1+q-B) Phi^+ - (1+q+B) Phi^-.
/// With this assignment <f^-, alpha_r f^+> = -i(1+q)B/pi while
/// <Phi^+, alpha_r Phi^-> = -i/(4 pi); the opposite assignment cannot satisfy both.
inline Spinor4 f_boundary(Parity s, HalfInt mj, int kappa, const SpherePoint& w,
                          const PhysParams& p) {
  const double lo = 1.0 + p.q() - p.B();
  const double hi = 1.0 + p.q() + p.B();
  const Spinor4 up = phi_basis(Parity::plus, mj, kappa, w);
  const Spinor4 dn = phi_basis(Parity::minus, mj, kappa, w);
  return s == Parity::plus ? Spinor4(hi * up - lo * dn) : Spinor4(lo * up - hi * dn);
}

/// Both boundary spinors for the Hamiltonian's own (m~_j, kappa~_j).
struct BoundaryPair {
  Spinor4 minus;
  Spinor4 plus;
};

inline BoundaryPair boundary_pair(const SpherePoint& w, const PhysParams& p) {
  return {f_boundary(Parity::minus, p.m_tilde(), p.kappa_tilde(), w, p),
          f_boundary(Parity::plus, p.m_tilde(), p.kappa_tilde(), w, p)};
}

// ---------------------------------------------------------------------------
// Dirac matrices

inline Matrix2 pauli(int k) {
  Matrix2 s;
  switch (k) {
    case 1:
      s << 0, 1, 1, 0;
      break;
    case 2:
      s << 0, -kI, kI, 0;
      break;
    case 3:
      s << 1, 0, 0, -1;
      break;
    default:
      throw DomainError("pauli index must be 1, 2 or 3");
  }
  return s;
}

/// alpha_k in the standard representation, k = 1, 2, 3.
inline Matrix4 alpha_cartesian(int k) {
  Matrix4 a = Matrix4::Zero();
  a.block<2, 2>(0, 2) = pauli(k);
  a.block<2, 2>(2, 0) = pauli(k);
  return a;
}

inline Matrix4 alpha_along(const Vec3& e) {
  const Matrix2 s = e.x() * pauli(1) + e.y() * pauli(2) + e.z() * pauli(3);
  Matrix4 a = Matrix4::Zero();
  a.block<2, 2>(0, 2) = s;
  a.block<2, 2>(2, 0) = s;
  return a;
}

/// alpha_k = e_k . alpha for k in {r, theta, phi}.
inline Matrix4 alpha_component(FrameAxis k, const SpherePoint& w) {
  return alpha_along(frame_vector(k, w));
}

/// <u, v> = u^dagger v.
template <class A, class B>
complex inner(const A& u, const B& v) {
  return u.dot(v);  // Eigen's dot conjugates the first argument
}

// ---------------------------------------------------------------------------
// Sphere quadrature

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be >= 1");
  GaussLegendreRule rule;
  const auto zeros = boost::math::legendre_p_zeros<double>(n);  // nonnegative zeros
  auto push = [&](double x) {
    const double dp = boost::math::legendre_p_prime(n, x);
    rule.nodes.push_back(x);
    rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it != 0.0) push(-*it);
  }
  for (double z : zeros) push(z);
  return rule;
}

/// Integral of f over the unit sphere with respect to dOmega, using a product
/// of an order-point Gauss-Legendre rule in cos(theta) and a 2*order-point
/// trapezoid rule in phi.
template <class F>
auto sphere_quadrature(F&& f, int order = 32) {
  using R = std::invoke_result_t<F&, const SpherePoint&>;
  const GaussLegendreRule rule = gauss_legendre(order);
  const int nphi = 2 * order;
  const double dphi = 2.0 * kPi / nphi;
  R total{};
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = std::acos(rule.nodes[i]);
    R ring{};
    for (int k = 0; k < nphi; ++k) {
      ring += f(SpherePoint{theta, k * dphi});
    }
    total += rule.weights[i] * dphi * ring;
  }
  return total;
}

}  // namespace ibcjump
