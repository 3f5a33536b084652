#pragma once

// Ensembles of independent process paths and the statistics compared against
// |psi|^2: vacuum occupation, flux through a probe sphere, emission angles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ibcjump/errors.hpp"
#include "ibcjump/jump_process.hpp"
#include "ibcjump/statistics.hpp"

namespace ibcjump {

// ---------------------------------------------------------------------------
// One-particle probability

/// Radial law of rho for psi^(1) without subleading terms.  rho does not
/// depend on the direction, and the probability inside radius r is
///   M(r) = 4(1+q) int_0^r x^{-2B} D(x) chi(x)^2 dx,
/// D = |c_-|^2 + 2q Re[c_-^* c_+] x^{2B} + |c_+|^2 x^{4B}.
class RadialLaw {
 public:
  RadialLaw(const PhysParams& p, complex cm, complex cp, double r_cut)
      : B_(p.B()), q_(p.q()), r_cut_(r_cut) {
    if (!(r_cut > 0)) throw DomainError("r_cut must be positive");
    const complex cc = std::conj(cm) * cp;
    nm_ = std::norm(cm);
    np_ = std::norm(cp);
    re_ = cc.real();
    total_ = mass(r_cut);
  }

  double r_cut() const { return r_cut_; }
  double total() const { return total_; }

  double mass(double r) const {
    if (!(r > 0)) return 0.0;
    r = std::min(r, r_cut_);
    const double half = 0.5 * r_cut_;
    const double inner = std::min(r, half);
    double m = primitive(inner);
    if (r > half) {
      static const GaussLegendreRule rule = gauss_legendre(32);
      const double a = half, b = r;
      double shell = 0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k];
        const double chi = cutoff(x, r_cut_);
        shell += rule.weights[k] * std::pow(x, -2 * B_) * density_factor(x) * chi * chi;
      }
      m += 0.5 * (b - a) * shell;
    }
    return 4 * (1 + q_) * m;
  }

  double cdf(double r) const { return mass(r) / total_; }

  /// Radius with cdf(r) = u, solved in s = r^{1-2B}.
  double quantile(double u) const {
    if (!(u > 0 && u < 1)) throw DomainError("quantile level must lie in (0, 1)");
    const double e = 1 - 2 * B_;
    const double target = u * total_;
    auto f = [&](double s) { return mass(std::pow(s, 1 / e)) - target; };
    std::uintmax_t it = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(
        f, 0.0, std::pow(r_cut_, e), -target, total_ - target,
        boost::math::tools::eps_tolerance<double>(50), it);
    return std::pow(0.5 * (lo + hi), 1 / e);
  }

 private:
  double density_factor(double x) const {
    const double u = std::pow(x, 2 * B_);
    return nm_ + 2 * q_ * re_ * u + np_ * u * u;
  }
  double primitive(double r) const {
    const double B = B_;
    return nm_ * std::pow(r, 1 - 2 * B) / (1 - 2 * B) + 2 * q_ * re_ * r +
           np_ * std::pow(r, 1 + 2 * B) / (1 + 2 * B);
  }

  double B_, q_, r_cut_;
  double nm_ = 0, np_ = 0, re_ = 0;
  double total_ = 0;
};

/// Factor lambda such that lambda c_-, lambda c_+ carry probability 1 - |psi0|^2.
inline double normalization_scale(const PhysParams& p, complex cm, complex cp, double r_cut,
                                  double psi0_norm2) {
  if (!(psi0_norm2 >= 0 && psi0_norm2 < 1)) throw DomainError("|psi0|^2 must lie in [0, 1)");
  return std::sqrt((1 - psi0_norm2) / RadialLaw(p, cm, cp, r_cut).total());
}

inline void check_normalization(const PhysParams& p, const TrackPoint& c, double r_cut,
                                double tol = 1e-6) {
  const double total = std::norm(c.psi0) + RadialLaw(p, c.c_minus, c.c_plus, r_cut).total();
  if (!(std::abs(total - 1) <= tol)) {
    throw NormalizationError("|psi0|^2 + int rho = " + std::to_string(total) + " at t = " +
                             std::to_string(c.t));
  }
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleOptions {
  std::size_t n_paths = 10000;
  double t_begin = 0;
  double t_end = 1;
  std::uint64_t seed = 1;
  /// Times at which the vacuum occupation is recorded.
  std::size_t n_grid = 101;
  std::size_t time_bins = 50;
  int angle_bins = 10;
  /// Probe sphere for the flux estimate; 0 disables it.
  double r_probe = 1e-4;
  unsigned threads = 0;
  bool require_balance = false;
  double balance_tol = 1e-6;
  bool check_normalization = true;
  SimulationOptions sim;
};

struct EnsembleStats {
  std::size_t n_paths = 0;
  double t_begin = 0;
  double t_end = 0;
  std::vector<double> grid;
  std::vector<std::uint64_t> vacuum_count;
  std::size_t vacuum_starts = 0;
  std::vector<std::uint64_t> emission_hist;
  std::vector<std::uint64_t> absorption_hist;
  int angle_bins = 10;
  /// Counts over (cos theta0, phi0) bins, cos theta0 major.
  std::vector<std::uint64_t> angle_hist;
  std::vector<double> emission_cos_theta;
  std::vector<double> emission_phi;
  double r_probe = 0;
  std::uint64_t outward = 0;
  std::uint64_t inward = 0;
  /// Sums over paths of the net outward crossing count and its square.
  double net_sum = 0;
  double net_sum2 = 0;
  /// Radii of the particles inside r_cut at t_end.
  std::vector<double> final_radii;

  std::size_t emissions() const { return emission_cos_theta.size(); }
  std::size_t absorptions() const {
    std::size_t n = 0;
    for (auto c : absorption_hist) n += c;
    return n;
  }

  std::vector<double> p0_hat() const {
    std::vector<double> p(grid.size(), 0.0);
    if (n_paths == 0) return p;
    for (std::size_t i = 0; i < grid.size(); ++i) p[i] = double(vacuum_count[i]) / n_paths;
    return p;
  }

  /// Binomial standard errors of p0_hat.
  std::vector<double> p0_sigma() const {
    std::vector<double> s(grid.size(), 0.0);
    if (n_paths == 0) return s;
    const auto p = p0_hat();
    for (std::size_t i = 0; i < grid.size(); ++i) s[i] = std::sqrt(p[i] * (1 - p[i]) / n_paths);
    return s;
  }

  /// Adds the counts of `o`, whose paths come after ours.
  void merge(const EnsembleStats& o) {
    if (o.grid != grid || o.angle_bins != angle_bins ||
        o.emission_hist.size() != emission_hist.size() || o.r_probe != r_probe) {
      throw DomainError("cannot merge ensembles with different layouts");
    }
    n_paths += o.n_paths;
    vacuum_starts += o.vacuum_starts;
    for (std::size_t i = 0; i < vacuum_count.size(); ++i) vacuum_count[i] += o.vacuum_count[i];
    for (std::size_t i = 0; i < emission_hist.size(); ++i) {
      emission_hist[i] += o.emission_hist[i];
      absorption_hist[i] += o.absorption_hist[i];
    }
    for (std::size_t i = 0; i < angle_hist.size(); ++i) angle_hist[i] += o.angle_hist[i];
    emission_cos_theta.insert(emission_cos_theta.end(), o.emission_cos_theta.begin(),
                              o.emission_cos_theta.end());
    emission_phi.insert(emission_phi.end(), o.emission_phi.begin(), o.emission_phi.end());
    outward += o.outward;
    inward += o.inward;
    net_sum += o.net_sum;
    net_sum2 += o.net_sum2;
    final_radii.insert(final_radii.end(), o.final_radii.begin(), o.final_radii.end());
  }
};

inline EnsembleStats empty_stats(const EnsembleOptions& opt) {
  if (!(opt.t_end > opt.t_begin)) throw DomainError("ensemble window must have t_end > t_begin");
  if (opt.n_grid < 2 || opt.time_bins < 1 || opt.angle_bins < 1) {
    throw DomainError("need n_grid >= 2 and positive bin counts");
  }
  EnsembleStats s;
  s.t_begin = opt.t_begin;
  s.t_end = opt.t_end;
  s.grid = uniform_grid(opt.t_begin, opt.t_end, opt.n_grid);
  s.vacuum_count.assign(opt.n_grid, 0);
  s.emission_hist.assign(opt.time_bins, 0);
  s.absorption_hist.assign(opt.time_bins, 0);
  s.angle_bins = opt.angle_bins;
  s.angle_hist.assign(std::size_t(opt.angle_bins) * opt.angle_bins, 0);
  s.r_probe = opt.r_probe;
  return s;
}

namespace detail {

inline std::size_t bin_of(double x, double lo, double hi, std::size_t n) {
  const double f = (x - lo) / (hi - lo) * static_cast<double>(n);
  return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(n - 1)));
}

inline void record_path(EnsembleStats& s, const ProcessPath& path, double r_cut) {
  ++s.n_paths;
  if (is_vacuum(path.initial)) ++s.vacuum_starts;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (path.sector(s.grid[i]) == 0) ++s.vacuum_count[i];
  }
  const std::size_t nb = s.emission_hist.size();
  for (const auto& e : path.events) {
    const double t = event_time(e);
    if (const auto* em = std::get_if<EmissionEvent>(&e)) {
      ++s.emission_hist[bin_of(t, s.t_begin, s.t_end, nb)];
      const double c = std::cos(em->theta0);
      const std::size_t nab = static_cast<std::size_t>(s.angle_bins);
      ++s.angle_hist[bin_of(c, -1, 1, nab) * nab + bin_of(em->phi0, 0, 2 * kPi, nab)];
      s.emission_cos_theta.push_back(c);
      s.emission_phi.push_back(em->phi0);
    } else {
      ++s.absorption_hist[bin_of(t, s.t_begin, s.t_end, nb)];
    }
  }
  if (s.r_probe > 0) {
    double net = 0;
    for (const auto& c : path.crossings()) {
      if (c.radius != s.r_probe || c.t < s.t_begin || c.t > s.t_end) continue;
      (c.direction > 0 ? s.outward : s.inward) += 1;
      net += c.direction;
    }
    s.net_sum += net;
    s.net_sum2 += net * net;
  }
  if (const auto* part = std::get_if<Particle>(&path.final_state)) {
    if (part->r < r_cut) s.final_radii.push_back(part->r);
  }
}

}  // namespace detail

/// Initial configuration drawn from |psi(t)|^2: the vacuum with probability
/// |psi0|^2, otherwise a particle at radius law.quantile(u) in a uniform
/// direction.
inline Configuration sample_initial(const RadialLaw& law, double psi0_norm2, PhiloxEngine& rng) {
  if (rng.uniform() < psi0_norm2) return Vacuum{};
  const double r = law.quantile(rng.uniform());
  const auto [theta, phi] = sample_emission_angles(rng);
  return Particle{r, theta, phi};
}

/// n_paths independent paths; path k draws from the sub-stream (seed, k), so
/// the result does not depend on the number of threads.
inline EnsembleStats run_ensemble(const ModelFamily& fam, const CoefficientTrack& track,
                                  const EnsembleOptions& opt) {
  EnsembleStats total = empty_stats(opt);
  if (opt.n_paths == 0) return total;
  if (opt.require_balance) validate_balance(fam.params, track, opt.balance_tol);
  const TrackPoint c0 = track.at(opt.t_begin);
  if (opt.check_normalization) check_normalization(fam.params, c0, fam.r_cut);
  if (fam.sub_minus != complex{} || fam.sub_plus != complex{}) {
    throw DomainError("initial positions are sampled for psi^(1) without subleading terms");
  }
  const RadialLaw law(fam.params, c0.c_minus, c0.c_plus, fam.r_cut);
  const double p_vac = std::norm(c0.psi0);
  const ThinningSampler sampler =
      waiting_time_sampler(fam.params, track, opt.sim.majorant_factor);
  SimulationOptions sim = opt.sim;
  sim.keep_samples = false;
  if (opt.r_probe > 0) sim.probes = {opt.r_probe};

  unsigned nt = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, opt.n_paths));
  std::vector<EnsembleStats> parts(nt, total);
  std::vector<std::exception_ptr> errors(nt);
  auto work = [&](unsigned w) {
    try {
      const std::size_t lo = opt.n_paths * w / nt, hi = opt.n_paths * (w + 1) / nt;
      for (std::size_t k = lo; k < hi; ++k) {
        PhiloxEngine rng(opt.seed, k);
        const Configuration q0 = sample_initial(law, p_vac, rng);
        const ProcessPath path =
            simulate_path(fam, track, sampler, q0, opt.t_begin, opt.t_end, sim, rng);
        detail::record_path(parts[w], path, fam.r_cut);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (nt == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& part : parts) total.merge(part);
  return total;
}

// ---------------------------------------------------------------------------
// Comparisons

struct Sector0Report {
  std::vector<double> z;
  std::size_t exceed = 0;
  double fraction = 0;
  double max_abs_z = 0;
  bool passed = false;
};

/// Pointwise binomial z-scores of p0_hat against `reference`; passes if at
/// most max_fraction of the grid times have |z| > z_crit.
inline Sector0Report sector0_comparison(const EnsembleStats& s,
                                        const std::vector<double>& reference,
                                        double z_crit = 3.0, double max_fraction = 0.01) {
  if (reference.size() != s.grid.size()) throw DomainError("reference does not match the grid");
  Sector0Report rep;
  const auto p = s.p0_hat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = binomial_z(p[i], reference[i], s.n_paths);
    rep.z.push_back(z);
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
    if (std::abs(z) > z_crit) ++rep.exceed;
  }
  rep.fraction = p.empty() ? 0.0 : double(rep.exceed) / p.size();
  rep.passed = s.n_paths > 0 && rep.fraction <= max_fraction;
  return rep;
}

/// Comparison against |psi0(t)|^2 on the grid.
inline Sector0Report sector0_comparison(const EnsembleStats& s, const CoefficientTrack& track,
                                        double z_crit = 3.0, double max_fraction = 0.01) {
  std::vector<double> ref;
  for (double t : s.grid) ref.push_back(std::norm(track.psi0(t)));
  return sector0_comparison(s, ref, z_crit, max_fraction);
}

/// Vacuum occupation from the one-dimensional balance equation
///   dp0/dt = -4 pi max{0, C_r} p0 / |psi0|^2 + 4 pi max{0, -C_r},
/// solved by classical RK4 with `substeps` steps per grid interval.
inline std::vector<double> master_equation_p0(const PhysParams& p, const CoefficientTrack& track,
                                              double p0_init, const std::vector<double>& grid,
                                              int substeps = 20) {
  auto rhs = [&](double t, double y) {
    const TrackPoint c = track.at(std::clamp(t, track.t_begin(), track.t_end()));
    const double flux = 4 * kPi * current_coeffs(p, c.c_minus, c.c_plus).C_r;
    const double gain = flux < 0 ? -flux : 0.0;
    if (flux <= 0) return gain;
    return -flux * y / std::norm(c.psi0);
  };
  std::vector<double> out{p0_init};
  double y = p0_init;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = (grid[i + 1] - grid[i]) / substeps;
    double t = grid[i];
    for (int k = 0; k < substeps; ++k) {
      const double k1 = rhs(t, y), k2 = rhs(t + h / 2, y + h / 2 * k1),
                   k3 = rhs(t + h / 2, y + h / 2 * k2), k4 = rhs(t + h, y + h * k3);
      y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      t += h;
    }
    out.push_back(y);
  }
  return out;
}

struct FluxEstimate {
  /// Net outward crossings of the probe sphere per unit time per path.
  double rate = 0;
  double sigma = 0;
  std::uint64_t outward = 0;
  std::uint64_t inward = 0;
};

inline FluxEstimate flux_estimate(const EnsembleStats& s) {
  FluxEstimate f;
  f.outward = s.outward;
  f.inward = s.inward;
  if (s.n_paths == 0) return f;
  const double n = static_cast<double>(s.n_paths), T = s.t_end - s.t_begin;
  const double mean = s.net_sum / n;
  const double var = std::max(0.0, s.net_sum2 / n - mean * mean);
  f.rate = mean / T;
  f.sigma = std::sqrt(var / std::max(1.0, n - 1)) / T;
  return f;
}

struct AngleReport {
  ChiSquareResult chi2;
  KsResult ks_cos_theta;
  std::size_t n = 0;
  bool passed = false;
};

inline AngleReport angle_uniformity_test(const std::vector<double>& cos_theta,
                                         const std::vector<double>& phi, int bins = 10,
                                         double alpha = 0.01) {
  if (cos_theta.size() != phi.size()) throw DomainError("angle samples differ in length");
  if (cos_theta.size() < 1000) {
    throw InsufficientEvents("angle test needs at least 1000 emissions, have " +
                             std::to_string(cos_theta.size()));
  }
  const std::size_t nb = static_cast<std::size_t>(bins);
  std::vector<double> counts(nb * nb, 0.0);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    counts[detail::bin_of(cos_theta[i], -1, 1, nb) * nb + detail::bin_of(phi[i], 0, 2 * kPi, nb)] += 1;
  }
  AngleReport rep;
  rep.n = phi.size();
  rep.chi2 = chi_square_uniform(counts);
  rep.ks_cos_theta = ks_test(cos_theta, [](double c) { return std::clamp(0.5 * (c + 1), 0.0, 1.0); });
  rep.passed = rep.chi2.passes(alpha) && rep.ks_cos_theta.passes(alpha);
  return rep;
}

inline AngleReport angle_uniformity_test(const EnsembleStats& s, double alpha = 0.01) {
  return angle_uniformity_test(s.emission_cos_theta, s.emission_phi, s.angle_bins, alpha);
}

/// KS test of the final particle radii below r_max against rho restricted to
/// r < r_max.  Meaningful for stationary coefficients only.
inline KsResult radial_ks_test(const EnsembleStats& s, const RadialLaw& law, double r_max) {
  std::vector<double> r;
  for (double x : s.final_radii) {
    if (x < r_max) r.push_back(x);
  }
  const double norm = law.mass(r_max);
  return ks_test(r, [&](double x) { return law.mass(x) / norm; });
}

}  // namespace ibcjump
