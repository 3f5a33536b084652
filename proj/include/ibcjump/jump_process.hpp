#pragma once

// The jump process on {vacuum} u (R^3 \ {0}): Bohmian flight in the
// one-particle sector, absorption at the source, and emission from the vacuum
// at the rate sigma dtheta0 dphi0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ibcjump/errors.hpp"
#include "ibcjump/params.hpp"
#include "ibcjump/rng.hpp"
#include "ibcjump/track.hpp"
#include "ibcjump/trajectory.hpp"
#include "ibcjump/wavefunction.hpp"

namespace ibcjump {

// ---------------------------------------------------------------------------
// Rates

/// Emission rate per dtheta0 dphi0:
///   sigma = (2(1+q)B/pi) max{0, Im[c_-^* c_+]} sin(theta0) / |psi0|^2.
inline double jump_rate_density(const PhysParams& p, complex cm, complex cp, complex psi0,
                                double theta0) {
  if (!(theta0 >= 0.0 && theta0 <= kPi)) throw DomainError("theta0 outside [0, pi]");
  const double im = (std::conj(cm) * cp).imag();
  if (!(im > 0)) return 0.0;
  const double n0 = std::norm(psi0);
  if (n0 == 0.0) throw VacuumEmpty("vacuum amplitude vanishes while emission is open");
  return 2.0 * (1.0 + p.q()) * p.B() / kPi * im * std::sin(theta0) / n0;
}

/// Rate of leaving the vacuum, 8(1+q)B max{0, Im[c_-^* c_+]} / |psi0|^2.
inline double total_jump_rate(const PhysParams& p, complex cm, complex cp, complex psi0) {
  const double im = (std::conj(cm) * cp).imag();
  if (!(im > 0)) return 0.0;
  const double n0 = std::norm(psi0);
  if (n0 == 0.0) throw VacuumEmpty("vacuum amplitude vanishes while emission is open");
  return 8.0 * (1.0 + p.q()) * p.B() * im / n0;
}

inline double jump_rate_density(const PhysParams& p, const CoefficientTrack& track, double t0,
                                double theta0) {
  const TrackPoint c = track.at(t0);
  return jump_rate_density(p, c.c_minus, c.c_plus, c.psi0, theta0);
}

inline double total_jump_rate(const PhysParams& p, const CoefficientTrack& track, double t0) {
  const TrackPoint c = track.at(t0);
  return total_jump_rate(p, c.c_minus, c.c_plus, c.psi0);
}

// ---------------------------------------------------------------------------
// Sampling

/// First event of an inhomogeneous Poisson process by thinning against a
/// per-interval constant majorant.
class ThinningSampler {
 public:
  ThinningSampler(std::vector<double> grid, std::function<double(double)> rate,
                  double factor = 1.1, int points_per_interval = 9)
      : grid_(std::move(grid)), rate_(std::move(rate)) {
    if (grid_.size() < 2) throw DomainError("thinning grid needs two points");
    if (!(factor >= 1.0)) throw DomainError("majorant factor must be >= 1");
    if (points_per_interval < 2) throw DomainError("need two rate samples per interval");
    majorant_.resize(grid_.size() - 1);
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
      if (!(grid_[i + 1] > grid_[i])) throw DomainError("thinning grid must increase");
      double m = 0;
      try {
        for (int k = 0; k < points_per_interval; ++k) {
          const double t = grid_[i] + (grid_[i + 1] - grid_[i]) * k / (points_per_interval - 1);
          const double v = rate_(t);
          if (!(v >= 0) || !std::isfinite(v)) {
            m = INFINITY;
            break;
          }
          m = std::max(m, v);
        }
      } catch (const VacuumEmpty&) {
        m = INFINITY;
      }
      majorant_[i] = factor * m;
    }
  }

  const std::vector<double>& grid() const { return grid_; }
  double majorant(std::size_t i) const { return majorant_.at(i); }
  double rate(double t) const { return rate_(t); }

  /// Event time in (t_start, t_stop), or nothing if none occurs.
  std::optional<double> sample(double t_start, PhiloxEngine& rng, double t_stop) const {
    if (!(t_start >= grid_.front() && t_start <= grid_.back())) {
      throw DomainError("waiting time requested outside the track span");
    }
    t_stop = std::min(t_stop, grid_.back());
    double t = t_start;
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(grid_.begin(), grid_.end(), t) - grid_.begin());
    i = i == 0 ? 0 : std::min(i - 1, majorant_.size() - 1);
    while (t < t_stop) {
      const double hi = std::min(grid_[i + 1], t_stop);
      const double m = majorant_[i];
      if (!std::isfinite(m)) {
        throw MajorantError("jump rate unbounded on [" + std::to_string(grid_[i]) + ", " +
                            std::to_string(grid_[i + 1]) + "]");
      }
      if (m > 0) {
        const double cand = t - std::log(rng.uniform()) / m;
        if (cand < hi) {
          const double lam = rate_(cand);
          if (lam > m) {
            throw MajorantError("jump rate exceeds its majorant at t = " + std::to_string(cand));
          }
          if (rng.uniform() * m < lam) return cand;
          t = cand;
          continue;
        }
      }
      t = hi;
      if (++i >= majorant_.size()) break;
    }
    return std::nullopt;
  }

 private:
  std::vector<double> grid_;
  std::function<double(double)> rate_;
  std::vector<double> majorant_;
};

inline ThinningSampler waiting_time_sampler(const PhysParams& p, const CoefficientTrack& track,
                                            double factor = 1.1) {
  return ThinningSampler(
      track.times(), [p, &track](double t) { return total_jump_rate(p, track, t); }, factor);
}

inline std::optional<double> sample_waiting_time(const PhysParams& p,
                                                 const CoefficientTrack& track, double t_start,
                                                 PhiloxEngine& rng) {
  return waiting_time_sampler(p, track).sample(t_start, rng, track.t_end());
}

/// Uniform direction on the sphere; theta0 never equals 0 or pi.
inline std::pair<double, double> sample_emission_angles(PhiloxEngine& rng) {
  const double u = rng.uniform(), v = rng.uniform();
  return {std::acos(1.0 - 2.0 * u), 2.0 * kPi * v};
}

// ---------------------------------------------------------------------------
// Balance between the sectors

struct BalanceReport {
  double tolerance = 0;
  /// Largest |d|psi0|^2/dt + 4 pi C_r| over the grid, relative to `scale`.
  double max_residual = 0;
  double scale = 0;
  bool passed = true;
  std::vector<double> residuals;
  /// Worst grid times with their relative residuals, largest first.
  std::vector<std::pair<double, double>> worst;
};

inline BalanceReport check_balance(const PhysParams& p, const CoefficientTrack& track,
                                   double tol = 1e-6, std::size_t n_worst = 5) {
  const auto& t = track.times();
  const std::size_t n = t.size();
  std::vector<double> n0(n), flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TrackPoint c = track.node(i);
    n0[i] = std::norm(c.psi0);
    flux[i] = 4.0 * kPi * current_coeffs(p, c.c_minus, c.c_plus).C_r;
  }
  const std::vector<double> dn0 = detail::grid_slopes(t, n0);
  BalanceReport rep;
  rep.tolerance = tol;
  for (std::size_t i = 0; i < n; ++i) {
    rep.scale = std::max({rep.scale, std::abs(flux[i]), std::abs(dn0[i])});
  }
  rep.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double res = std::abs(dn0[i] + flux[i]);
    rep.residuals[i] = rep.scale > 0 ? res / rep.scale : 0.0;
    rep.max_residual = std::max(rep.max_residual, rep.residuals[i]);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rep.residuals[a] > rep.residuals[b];
  });
  for (std::size_t k = 0; k < std::min(n_worst, n); ++k) {
    rep.worst.emplace_back(t[order[k]], rep.residuals[order[k]]);
  }
  rep.passed = rep.max_residual <= tol;
  return rep;
}

/// As check_balance, throwing BalanceViolation when the residual exceeds tol.
inline BalanceReport validate_balance(const PhysParams& p, const CoefficientTrack& track,
                                      double tol = 1e-6) {
  BalanceReport rep = check_balance(p, track, tol);
  if (!rep.passed) {
    std::ostringstream os;
    os.precision(6);
    os << "d|psi0|^2/dt + 4 pi C_r exceeds " << tol << " (relative); worst at";
    for (const auto& [t, r] : rep.worst) os << " t=" << t << " (" << r << ")";
    throw BalanceViolation(os.str());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Configurations and paths

struct Vacuum {
  bool operator==(const Vacuum&) const = default;
};

struct Particle {
  double r = 0;
  double theta = 0;
  double phi = 0;
  bool operator==(const Particle&) const = default;
};

using Configuration = std::variant<Vacuum, Particle>;

inline Configuration make_particle(double r, double theta, double phi) {
  if (!(r > 0) || !std::isfinite(r)) throw DomainError("particle position must be nonzero");
  return Particle{r, theta, phi};
}

inline bool is_vacuum(const Configuration& c) { return std::holds_alternative<Vacuum>(c); }

struct VacuumInterval {
  double t_start = 0;
  double t_end = 0;
};

/// Particle beyond the modelled region (it left through r_max).
struct OuterInterval {
  double t_start = 0;
  double t_end = 0;
};

struct EmissionEvent {
  double t0 = 0;
  double theta0 = 0;
  double phi0 = 0;
};

struct AbsorptionEvent {
  double t0 = 0;
};

using PathEvent = std::variant<EmissionEvent, AbsorptionEvent>;
using PathPiece = std::variant<VacuumInterval, TrajectorySegment, OuterInterval>;

inline double event_time(const PathEvent& e) {
  return std::visit([](const auto& ev) { return ev.t0; }, e);
}

struct ProcessPath {
  double t_begin = 0;
  double t_end = 0;
  Configuration initial;
  Configuration final_state;
  std::vector<PathPiece> pieces;
  std::vector<PathEvent> events;

  /// 0 in the vacuum, 1 with a particle present.
  int sector(double t) const {
    int s = is_vacuum(initial) ? 0 : 1;
    for (const auto& e : events) {
      if (event_time(e) > t) break;
      s = std::holds_alternative<EmissionEvent>(e) ? 1 : 0;
    }
    return s;
  }

  std::vector<ProbeCrossing> crossings() const {
    std::vector<ProbeCrossing> out;
    for (const auto& piece : pieces) {
      if (const auto* seg = std::get_if<TrajectorySegment>(&piece)) {
        out.insert(out.end(), seg->crossings.begin(), seg->crossings.end());
      }
    }
    return out;
  }

  std::size_t count_emissions() const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto& e) {
      return std::holds_alternative<EmissionEvent>(e);
    }));
  }
  std::size_t count_absorptions() const { return events.size() - count_emissions(); }
};

/// Events alternate absorption/emission consistently with the initial sector
/// and are time-ordered inside the window.
inline bool events_alternate(const ProcessPath& path) {
  bool vacuum = is_vacuum(path.initial);
  double last = path.t_begin;
  for (const auto& e : path.events) {
    const bool emission = std::holds_alternative<EmissionEvent>(e);
    if (emission != vacuum) return false;
    const double t = event_time(e);
    if (t < last || t > path.t_end) return false;
    last = t;
    vacuum = !vacuum;
  }
  return vacuum == is_vacuum(path.final_state);
}

// ---------------------------------------------------------------------------
// Simulation

/// Everything about psi^(1) that does not come from the track.
struct ModelFamily {
  PhysParams params;
  double r_cut = 1.0;
  complex sub_minus{};
  complex sub_plus{};

  ModelWavefunction at(complex cm, complex cp) const {
    return ModelWavefunction(params, cm, cp, r_cut, sub_minus, sub_plus);
  }
  ModelWavefunction at(const CoefficientTrack& track, double t) const {
    return at(track.c_minus(t), track.c_plus(t));
  }
};

/// Velocity field with c_-(t), c_+(t) re-read from the track at each
/// evaluation time (quasi-static).
struct TrackField {
  const ModelFamily* family;
  const CoefficientTrack* track;

  double B() const { return family->params.B(); }
  OdeState operator()(double t, const OdeState& x) const {
    const double tc = std::clamp(t, track->t_begin(), track->t_end());
    return field_rates(family->params, track->c_minus(tc), track->c_plus(tc),
                       family->sub_minus, family->sub_plus, x[0], x[1], x[2]);
  }
};

struct SimulationOptions {
  double tol = 1e-8;
  double r_min = 1e-8;
  /// Emission seed radius; 0 selects 10 r_min.
  double r_seed = 0;
  /// Freeze c_-, c_+ at the start of each flight instead of following the track.
  bool frozen = false;
  bool keep_samples = true;
  std::vector<double> probes;
  double majorant_factor = 1.1;
  std::size_t max_steps = 2'000'000;

  double seed_radius() const { return r_seed > 0 ? r_seed : 10.0 * r_min; }
};

namespace detail {

inline IntegrateOptions flight_options(const ModelFamily& fam, const SimulationOptions& opt) {
  IntegrateOptions io;
  io.tol = opt.tol;
  io.r_min = opt.r_min;
  io.r_max = fam.r_cut;
  io.max_steps = opt.max_steps;
  io.keep_samples = opt.keep_samples;
  io.probes = opt.probes;
  return io;
}

}  // namespace detail

/// One realisation of the process on [t_begin, t_end] starting from q_init.
/// The sampler must have been built from the same track.
inline ProcessPath simulate_path(const ModelFamily& fam, const CoefficientTrack& track,
                                 const ThinningSampler& sampler, const Configuration& q_init,
                                 double t_begin, double t_end, const SimulationOptions& opt,
                                 PhiloxEngine& rng) {
  if (!(t_end > t_begin) || !track.covers(t_begin) || !track.covers(t_end)) {
    throw DomainError("the track must cover the simulation window");
  }
  const double r_seed = opt.seed_radius();
  if (!(opt.r_min > 0) || !(r_seed > opt.r_min) || !(r_seed < fam.r_cut)) {
    throw DomainError("need 0 < r_min < r_seed < r_cut");
  }
  const PhysParams& p = fam.params;
  const IntegrateOptions io = detail::flight_options(fam, opt);
  const TrackField quasi{&fam, &track};

  ProcessPath path;
  path.t_begin = t_begin;
  path.t_end = t_end;
  path.initial = q_init;

  auto fly = [&](const SphericalState& start) {
    if (opt.frozen) return integrate(FrozenField{fam.at(track, start.t)}, start, t_end, io);
    return integrate(quasi, start, t_end, io);
  };

  Configuration q = q_init;
  double t = t_begin;
  std::optional<TrajectorySegment> flight;
  if (const auto* part = std::get_if<Particle>(&q)) {
    if (!(part->r > 0)) throw DomainError("particle position must be nonzero");
    if (part->r >= fam.r_cut) throw DomainError("initial particle outside the inner region");
    if (part->r > opt.r_min) {
      flight = fly({t, part->r, part->theta, part->phi});
    } else {
      // Inside r_min the leading-order frozen solution is used in closed form.
      const TrackPoint c = track.at(t);
      const double im = (std::conj(c.c_minus) * c.c_plus).imag();
      if (im < 0) {
        const double t0 = t + exact_elapsed(asymptotic_coeffs(p, c.c_minus, c.c_plus), part->r);
        if (t0 < t_end) {
          path.events.push_back(AbsorptionEvent{t0});
          t = t0;
          q = Vacuum{};
        } else {
          t = t_end;
        }
      } else if (im > 0) {
        const auto a = asymptotic_coeffs(p, c.c_minus, c.c_plus);
        SphericalState seed{t + exact_elapsed(a, r_seed) - exact_elapsed(a, part->r), r_seed,
                            part->theta,
                            part->phi + exact_phi_offset(a, r_seed) - exact_phi_offset(a, part->r)};
        if (seed.t < t_end) {
          flight = fly(seed);
        } else {
          t = t_end;
        }
      } else {
        t = t_end;
      }
    }
  }

  while (true) {
    if (flight) {
      TrajectorySegment seg = std::move(*flight);
      flight.reset();
      const SphericalState last = seg.back();
      const Terminal term = seg.terminal;
      const double t_abs = seg.t0;
      path.pieces.push_back(std::move(seg));
      q = Particle{last.r, last.theta, last.phi};
      if (term == Terminal::absorbed && t_abs < t_end) {
        path.events.push_back(AbsorptionEvent{t_abs});
        q = Vacuum{};
        t = t_abs;
      } else if (term == Terminal::left_inner_region) {
        path.pieces.push_back(OuterInterval{last.t, t_end});
        t = t_end;
      } else {
        t = t_end;
      }
    }
    if (!(t < t_end) || !is_vacuum(q)) break;

    const std::optional<double> tj = sampler.sample(t, rng, t_end);
    if (!tj) {
      path.pieces.push_back(VacuumInterval{t, t_end});
      t = t_end;
      break;
    }
    path.pieces.push_back(VacuumInterval{t, *tj});
    const auto [theta0, phi0] = sample_emission_angles(rng);
    path.events.push_back(EmissionEvent{*tj, theta0, phi0});
    const TrackPoint c = track.at(*tj);
    const SphericalState seed = emission_seed(p, c.c_minus, c.c_plus, *tj, theta0, phi0, r_seed);
    if (seed.t >= t_end) {
      // Still inside r_seed when the window closes.
      q = Particle{r_seed, theta0, seed.phi};
      t = t_end;
      break;
    }
    flight = fly(seed);
  }
  path.final_state = q;
  return path;
}

inline ProcessPath simulate_path(const ModelFamily& fam, const CoefficientTrack& track,
                                 const Configuration& q_init, double t_begin, double t_end,
                                 const SimulationOptions& opt, PhiloxEngine& rng) {
  const ThinningSampler sampler = waiting_time_sampler(fam.params, track, opt.majorant_factor);
  return simulate_path(fam, track, sampler, q_init, t_begin, t_end, opt, rng);
}

}  // namespace ibcjump
