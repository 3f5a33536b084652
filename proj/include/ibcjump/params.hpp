#pragma once

#include <cmath>
#include <complex>
#include <sstream>

#include "ibcjump/errors.hpp"

namespace ibcjump {

using complex = std::complex<double>;

/// Half-integer quantum number stored as twice its value (m_j = twice / 2).
struct HalfInt {
  int twice = 1;

  static constexpr HalfInt from_twice(int t) { return HalfInt{t}; }
  static HalfInt from_double(double v) {
    const double t = 2.0 * v;
    const double rounded = std::round(t);
    if (std::abs(t - rounded) > 1e-12 || static_cast<long>(rounded) % 2 == 0) {
      throw DomainError("not a half-integer: " + std::to_string(v));
    }
    return HalfInt{static_cast<int>(rounded)};
  }

  constexpr double value() const { return 0.5 * twice; }
  constexpr bool operator==(const HalfInt&) const = default;
};

inline constexpr double sign_of(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

/// Parameters of the interior-boundary Hamiltonian, validated at construction.
/// Units: hbar = c = 1.
class PhysParams {
 public:
  double q() const { return q_; }
  /// B = sqrt(1 - q^2); 0 < B < 1/2 for every accepted q.
  double B() const { return B_; }
  complex g() const { return g_; }
  double a1() const { return a_[0]; }
  double a2() const { return a_[1]; }
  double a3() const { return a_[2]; }
  double a4() const { return a_[3]; }
  HalfInt m_tilde() const { return m_tilde_; }
  int kappa_tilde() const { return kappa_tilde_; }

  /// sgn(m~_j * kappa~_j), the orientation factor in every azimuthal coefficient.
  double sgn_mk() const { return sign_of(m_tilde_.value() * kappa_tilde_); }

  /// Exponent 1/(1 - 2B) of the radial law r ~ |t - t0|^{1/(1-2B)}.
  double radial_exponent() const { return 1.0 / (1.0 - 2.0 * B_); }

  bool operator==(const PhysParams&) const = default;

  friend PhysParams make_params(double q, complex g, double a1, double a2, double a3,
                                double a4, HalfInt m_tilde, int kappa_tilde);

 private:
  PhysParams() = default;

  double q_ = 0;
  double B_ = 0;
  complex g_{1.0, 0.0};
  double a_[4] = {0, 0, 0, 0};
  HalfInt m_tilde_{1};
  int kappa_tilde_ = 1;
};

inline constexpr double kQMin = 0.86602540378443864676;  // sqrt(3)/2
inline constexpr double kConstraintRelTol = 1e-12;

inline PhysParams make_params(double q, complex g, double a1, double a2, double a3,
                              double a4, HalfInt m_tilde, int kappa_tilde) {
  if (!std::isfinite(q) || !(std::abs(q) > kQMin && std::abs(q) < 1.0)) {
    std::ostringstream os;
    os << "Coulomb strength q = " << q << " outside sqrt(3)/2 < |q| < 1";
    throw RangeError(os.str());
  }
  if (g == complex(0.0, 0.0)) throw ZeroCoupling("coupling g must be nonzero");
  if (std::abs(m_tilde.twice) != 1 || std::abs(kappa_tilde) != 1) {
    std::ostringstream os;
    os << "(m~_j, kappa~_j) = (" << m_tilde.value() << ", " << kappa_tilde
       << ") not in {(+-1/2, +-1)}";
    throw SetError(os.str());
  }
  const double B = std::sqrt(1.0 - q * q);
  const double target = 4.0 * B * (1.0 + q);
  const double det = a1 * a4 - a2 * a3;
  if (!(std::abs(det - target) <= kConstraintRelTol * std::abs(target))) {
    std::ostringstream os;
    os.precision(17);
    os << "a1*a4 - a2*a3 = " << det << " but 4B(1+q) = " << target;
    throw ConstraintError(os.str());
  }
  PhysParams p;
  p.q_ = q;
  p.B_ = B;
  p.g_ = g;
  p.a_[0] = a1;
  p.a_[1] = a2;
  p.a_[2] = a3;
  p.a_[3] = a4;
  p.m_tilde_ = m_tilde;
  p.kappa_tilde_ = kappa_tilde;
  return p;
}

/// Parameters with g = 1 and a = (1, 0, 0, 4B(1+q)), the choice for which the
/// boundary condition fixes c_- directly from psi^(0).
inline PhysParams canonical_params(double q, HalfInt m_tilde = HalfInt{1},
                                   int kappa_tilde = 1) {
  const double B = std::sqrt(std::max(0.0, 1.0 - q * q));
  return make_params(q, complex(1.0, 0.0), 1.0, 0.0, 0.0, 4.0 * B * (1.0 + q), m_tilde,
                     kappa_tilde);
}

/// Sense of circling the z axis near the source: -sgn(q) sgn(m~_j kappa~_j).
inline int circling_sign(const PhysParams& p) {
  return static_cast<int>(-sign_of(p.q()) * p.sgn_mk());
}

}  // namespace ibcjump
