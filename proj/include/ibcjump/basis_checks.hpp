#pragma once

// Closed-form spinor identities and their brute-force counterparts.

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "ibcjump/params.hpp"
#include "ibcjump/spinor_basis.hpp"

namespace ibcjump {

inline constexpr std::array<std::pair<HalfInt, int>, 4> kBasisLabels = {
    std::pair{HalfInt{1}, 1}, std::pair{HalfInt{1}, -1}, std::pair{HalfInt{-1}, 1},
    std::pair{HalfInt{-1}, -1}};

/// An identity <u, M v> = closed(omega).  The closed form is either a constant
/// or a constant times sin(theta); `sin_weighted` records which, so that the
/// sphere integral is known exactly.
struct LemmaIdentity {
  std::string name;
  std::function<complex(const SpherePoint&)> brute;
  complex coefficient;
  bool sin_weighted = false;

  complex closed(const SpherePoint& w) const {
    return sin_weighted ? coefficient * std::sin(w.theta) : coefficient;
  }
  /// Integral of the closed form over the unit sphere.
  complex integral() const { return coefficient * (sin_weighted ? kPi * kPi : 4 * kPi); }
};

/// All identities for the labels carried by p.
inline std::vector<LemmaIdentity> lemma_identities(const PhysParams& p) {
  const HalfInt m = p.m_tilde();
  const int k = p.kappa_tilde();
  const double q = p.q(), B = p.B(), s = p.sgn_mk();
  auto up = [m, k](const SpherePoint& w) { return phi_basis(Parity::plus, m, k, w); };
  auto dn = [m, k](const SpherePoint& w) { return phi_basis(Parity::minus, m, k, w); };
  auto fm = [m, k, p](const SpherePoint& w) { return f_boundary(Parity::minus, m, k, w, p); };
  auto fp = [m, k, p](const SpherePoint& w) { return f_boundary(Parity::plus, m, k, w, p); };
  using Gen = std::function<Spinor4(const SpherePoint&)>;
  auto plain = [](Gen a, Gen b) {
    return [a, b](const SpherePoint& w) { return inner(a(w), b(w)); };
  };
  auto with = [](Gen a, FrameAxis axis, Gen b) {
    return [a, b, axis](const SpherePoint& w) {
      return inner(a(w), alpha_component(axis, w) * b(w));
    };
  };
  const double f0 = (1 + q) / kPi;
  std::vector<LemmaIdentity> out = {
      {"|Phi+|^2", plain(up, up), 1 / (4 * kPi)},
      {"|Phi-|^2", plain(dn, dn), 1 / (4 * kPi)},
      {"<Phi+,Phi->", plain(up, dn), 0.0},
      {"<Phi+,a_r Phi->", with(up, FrameAxis::r, dn), complex(0, -1 / (4 * kPi))},
      {"<Phi+,a_th Phi->", with(up, FrameAxis::theta, dn), 0.0},
      {"<Phi+,a_ph Phi->", with(up, FrameAxis::phi, dn), s / (4 * kPi), true},
  };
  const std::pair<const char*, FrameAxis> axes[] = {
      {"r", FrameAxis::r}, {"th", FrameAxis::theta}, {"ph", FrameAxis::phi}};
  for (auto [nm, axis] : axes) {
    out.push_back({std::string("<Phi+,a_") + nm + " Phi+>", with(up, axis, up), 0.0});
    out.push_back({std::string("<Phi-,a_") + nm + " Phi->", with(dn, axis, dn), 0.0});
  }
  out.push_back({"|f+|^2", plain(fp, fp), f0});
  out.push_back({"|f-|^2", plain(fm, fm), f0});
  out.push_back({"<f-,f+>", plain(fm, fp), q * f0});
  out.push_back({"<f-,a_r f+>", with(fm, FrameAxis::r, fp), complex(0, -f0 * B)});
  out.push_back({"<f-,a_th f+>", with(fm, FrameAxis::theta, fp), 0.0});
  out.push_back({"<f-,a_ph f+>", with(fm, FrameAxis::phi, fp), -f0 * s, true});
  for (auto [nm, axis] : axes) {
    const bool az = axis == FrameAxis::phi;
    const complex c = az ? complex(-q * f0 * s) : complex(0.0);
    out.push_back({std::string("<f-,a_") + nm + " f->", with(fm, axis, fm), c, az});
    out.push_back({std::string("<f+,a_") + nm + " f+>", with(fp, axis, fp), c, az});
  }
  return out;
}

/// Largest |brute - closed| over the identities for p at the given points.
inline double pointwise_lemma_residual(const PhysParams& p, const std::vector<SpherePoint>& points) {
  double worst = 0;
  for (const auto& id : lemma_identities(p)) {
    for (const auto& w : points) worst = std::max(worst, std::abs(id.brute(w) - id.closed(w)));
  }
  return worst;
}

struct LemmaResidualRow {
  HalfInt m_tilde;
  int kappa_tilde = 0;
  std::string identity;
  /// max |brute - closed| over the quadrature nodes
  double pointwise = 0;
  /// sphere quadrature of the brute-force product and of the closed form,
  /// both on the same rule
  complex quadrature{};
  complex exact{};
  double integral_residual() const { return std::abs(quadrature - exact); }
};

/// Lemma residual table for all four labels at the given q, plus one
/// orthonormality row per label measured against every other j = 1/2 label.
inline std::vector<LemmaResidualRow> lemma_residual_table(double q, int order) {
  if (order < 2) throw DomainError("quadrature order must be >= 2");
  const GaussLegendreRule rule = gauss_legendre(order);
  std::vector<SpherePoint> nodes;
  for (double x : rule.nodes) {
    for (int k = 0; k < 2 * order; ++k) nodes.push_back(SpherePoint{std::acos(x), k * kPi / order});
  }
  std::vector<LemmaResidualRow> rows;
  for (auto [m, k] : kBasisLabels) {
    const PhysParams p = canonical_params(q, m, k);
    for (const auto& id : lemma_identities(p)) {
      LemmaResidualRow row{m, k, id.name};
      for (const auto& w : nodes) {
        row.pointwise = std::max(row.pointwise, std::abs(id.brute(w) - id.closed(w)));
      }
      row.quadrature = sphere_quadrature(id.brute, order);
      row.exact = sphere_quadrature([&](const SpherePoint& w) { return id.closed(w); }, order);
      rows.push_back(row);
    }
  }
  for (auto [m, k] : kBasisLabels) {
    for (auto s : {Parity::plus, Parity::minus}) {
      LemmaResidualRow row{m, k, s == Parity::plus ? "orthonormality Phi+" : "orthonormality Phi-"};
      double worst = 0;
      for (auto [m2, k2] : kBasisLabels) {
        for (auto s2 : {Parity::plus, Parity::minus}) {
          const complex v = sphere_quadrature(
              [&](const SpherePoint& w) { return inner(phi_basis(s, m, k, w), phi_basis(s2, m2, k2, w)); },
              order);
          const double e = (s == s2 && m == m2 && k == k2) ? 1.0 : 0.0;
          if (std::abs(v - e) >= worst) {
            worst = std::abs(v - e);
            row.quadrature = v;
            row.exact = e;
          }
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ibcjump
