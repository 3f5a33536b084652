#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ibcjump/jump_process.hpp"
#include "ibcjump/statistics.hpp"

using namespace ibcjump;

namespace {

const PhysParams kP = canonical_params(0.96);

double rate_oracle(double q, double B, double im, double n0) {
  return im > 0 ? 8 * (1 + q) * B * im / n0 : 0.0;
}

ModelFamily family(double r_cut = 1.0) { return ModelFamily{kP, r_cut, {}, {}}; }

}  // namespace

TEST(Philox, KnownAnswers) {
  // Reference vectors of the Random123 distribution.
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}),
            (PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}),
            (PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  PhiloxEngine a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differ_c |= x != c();
    differ_d |= x != d();
  }
  EXPECT_TRUE(differ_c);
  EXPECT_TRUE(differ_d);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(CoefficientTrack, InterpolatesAndValidates) {
  std::vector<double> t{0, 0.3, 0.5, 1.1, 2.0};
  std::vector<complex> cm, cp, z;
  for (double x : t) {
    cm.push_back({1 + x * x, -x});
    cp.push_back({0.5, 2 * x - x * x});
    z.push_back({1 - 0.1 * x, 0});
  }
  const CoefficientTrack tr(t, cm, cp, z);
  // Three-point slopes are exact for quadratics, so is the Hermite interpolant.
  for (double x : {0.0, 0.1, 0.42, 0.77, 1.9, 2.0}) {
    EXPECT_NEAR(std::abs(tr.c_minus(x) - complex(1 + x * x, -x)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(tr.c_plus(x) - complex(0.5, 2 * x - x * x)), 0.0, 1e-13);
    EXPECT_NEAR(tr.psi0_norm_rate(x), -0.2 * (1 - 0.1 * x), 1e-13);
  }
  EXPECT_EQ(tr.interval(0.0), 0u);
  EXPECT_EQ(tr.interval(0.5), 2u);
  EXPECT_EQ(tr.interval(2.0), 3u);
  EXPECT_THROW(tr.c_minus(2.0001), DomainError);
  EXPECT_THROW(CoefficientTrack({0, 0}, {1, 1}, {1, 1}, {1, 1}), DomainError);
  EXPECT_THROW(CoefficientTrack({0, 1}, {1}, {1, 1}, {1, 1}), DomainError);
  EXPECT_THROW(CoefficientTrack({0}, {1}, {1}, {1}), DomainError);
}

TEST(Rates, Examples) {
  const complex cm{1, 0}, cp{0, 1}, z{1, 0};
  // 2 * 1.96 * 0.28 / pi
  EXPECT_NEAR(jump_rate_density(kP, cm, cp, z, kPi / 2), 1.0976 / kPi, 1e-15);
  EXPECT_NEAR(total_jump_rate(kP, cm, cp, z), 4.3904, 1e-13);
  EXPECT_EQ(jump_rate_density(kP, cm, cp, z, 0.0), 0.0);
  EXPECT_NEAR(jump_rate_density(kP, cm, cp, z, kPi), 0.0, 1e-16);
  EXPECT_EQ(total_jump_rate(kP, cm, -cp, z), 0.0);
  EXPECT_EQ(jump_rate_density(kP, cm, {0.3, -0.2}, z, 1.0), 0.0);
  EXPECT_EQ(total_jump_rate(kP, cm, {0.7, 0}, {0, 0}), 0.0);
  EXPECT_NEAR(total_jump_rate(kP, cm, cp, 2.0 * z), 4.3904 / 4, 1e-13);
  EXPECT_THROW(total_jump_rate(kP, cm, cp, {0, 0}), VacuumEmpty);
  EXPECT_THROW(jump_rate_density(kP, cm, cp, z, -0.1), DomainError);
}

TEST(Rates, AngularIntegralMatchesTotal) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1), uq(0.87, 0.999);
  for (int i = 0; i < 20; ++i) {
    const auto p = canonical_params(uq(gen) * (i % 2 ? 1 : -1));
    const complex cm{u(gen), u(gen)}, cp{u(gen), u(gen)}, z{u(gen), u(gen)};
    // phi-independent, so the phi integral is a factor 2 pi.
    const double integral =
        2 * kPi * boost::math::quadrature::gauss<double, 30>::integrate(
                      [&](double th) { return jump_rate_density(p, cm, cp, z, th); }, 0.0, kPi);
    const double total = total_jump_rate(p, cm, cp, z);
    EXPECT_NEAR(integral, total, 1e-10 * std::max(1.0, total));
    EXPECT_NEAR(total, rate_oracle(p.q(), p.B(), (std::conj(cm) * cp).imag(), std::norm(z)),
                1e-12 * std::max(1.0, total));
    const double cr = current_coeffs(p, cm, cp).C_r;
    if (cr > 0) {
      EXPECT_NEAR(total * std::norm(z), 4 * kPi * cr, 1e-12 * std::max(1.0, total));
    }
  }
}

TEST(Rates, LimitOfOutwardFluxDensity) {
  const complex cm{0.8, 0.3}, cp{-0.2, 0.9}, z{0.6, 0.2};
  const ModelWavefunction m(kP, cm, cp, 1.0);
  const double target = 2 * (1 + kP.q()) * kP.B() / kPi * (std::conj(cm) * cp).imag() / std::norm(z);
  for (double r : {1e-3, 1e-5, 1e-7}) {
    const SpherePoint w{1.1, 0.4};
    const double jr = current_exact(m, r, w).r;
    EXPECT_NEAR(r * r * std::max(0.0, jr) / std::norm(z), target, 1e-9 * target);
  }
}

TEST(WaitingTime, ConstantRateMeanMatchesExponentialLaw) {
  const double gamma = 2.5;
  const ThinningSampler s(uniform_grid(0, 60 / gamma, 11), [=](double) { return gamma; });
  PhiloxEngine rng(11, 0);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const auto t = s.sample(0.0, rng, 60 / gamma);
    ASSERT_TRUE(t.has_value());
    sum += *t;
  }
  const double mean = sum / n, sigma = 1 / (gamma * std::sqrt(double(n)));
  EXPECT_LT(std::abs(mean - 1 / gamma), 3 * sigma);
}

TEST(WaitingTime, ZeroRateNeverFires) {
  const auto track = CoefficientTrack::constant(0, 10, {1, 0}, {0.5, 0}, {0.7, 0});
  PhiloxEngine rng(1, 0);
  for (int i = 0; i < 100; ++i) EXPECT_FALSE(sample_waiting_time(kP, track, 0.0, rng));
  const ThinningSampler s(uniform_grid(0, 1, 5), [](double) { return 0.0; });
  EXPECT_FALSE(s.sample(0.3, rng, 1.0));
}

TEST(WaitingTime, PiecewiseRateSurvivalByKs) {
  const double g1 = 0.7, g2 = 3.0;
  const ThinningSampler s({0, 1, 2, 5, 40}, [=](double t) { return t < 1 ? g1 : g2; });
  PhiloxEngine rng(5, 0);
  std::vector<double> draws;
  for (int i = 0; i < 20000; ++i) draws.push_back(*s.sample(0.0, rng, 40));
  const auto cdf = [=](double t) {
    return t < 1 ? 1 - std::exp(-g1 * t) : 1 - std::exp(-g1 - g2 * (t - 1));
  };
  EXPECT_TRUE(ks_test(draws, cdf).passes(0.01));
  // Negative control: the single-rate law is rejected.
  EXPECT_FALSE(ks_test(draws, [=](double t) { return 1 - std::exp(-g1 * t); }).passes(0.01));
}

TEST(WaitingTime, TrackRateSurvivalByKs) {
  // Time-dependent emission rate from a balanced track; oracle survival from
  // direct quadrature of the closed-form rate.
  auto cm = [](double) { return complex{1, 0}; };
  auto cp = [](double t) { return complex{0.02, 0.04 + 0.03 * std::sin(3 * t)}; };
  const auto track = balanced_track(kP, uniform_grid(0, 1.5, 301), cm, cp, 0.9);
  const double t_end = track.t_end();
  auto rate = [&](double t) {
    const double im = 0.04 + 0.03 * std::sin(3 * t);
    return rate_oracle(kP.q(), kP.B(), im, std::norm(track.psi0(t)));
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  // Cumulative integral on a table, finished by quadrature from the nearest node.
  const int nt = 300;
  std::vector<double> cum(nt + 1, 0.0);
  for (int k = 0; k < nt; ++k) {
    cum[k + 1] = cum[k] + GK::integrate(rate, t_end * k / nt, t_end * (k + 1) / nt, 5, 1e-13);
  }
  const double total = cum[nt];
  auto cdf = [&](double t) {
    const int k = std::min(nt - 1, int(t / t_end * nt));
    const double lam = cum[k] + GK::integrate(rate, t_end * k / nt, t, 5, 1e-13);
    return (1 - std::exp(-lam)) / (1 - std::exp(-total));
  };
  const ThinningSampler s = waiting_time_sampler(kP, track);
  PhiloxEngine rng(9, 0);
  std::vector<double> draws;
  int none = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto t = s.sample(0.0, rng, t_end);
    if (t) draws.push_back(*t); else ++none;
  }
  EXPECT_TRUE(ks_test(draws, cdf).passes(0.01));
  const double p_none = std::exp(-total), n = 20000;
  EXPECT_LT(std::abs(none / n - p_none), 3 * std::sqrt(p_none * (1 - p_none) / n));
}

TEST(WaitingTime, MajorantErrors) {
  // Vacuum amplitude reaching zero while emission is open.
  const CoefficientTrack drained({0, 1, 2}, {1, 1, 1}, {{0, 0.01}, {0, 0.01}, {0, 0.01}},
                                 {1, 0.5, 0});
  const ThinningSampler s = waiting_time_sampler(kP, drained);
  EXPECT_TRUE(std::isinf(s.majorant(1)));
  PhiloxEngine rng(2, 0);
  bool thrown = false;
  for (int i = 0; i < 200 && !thrown; ++i) {
    try {
      s.sample(0.0, rng, 2.0);
    } catch (const MajorantError&) {
      thrown = true;
    }
  }
  EXPECT_TRUE(thrown);
  // A spike between the majorant samples is caught when a candidate lands on it.
  const ThinningSampler spiky(
      {0, 1}, [](double t) { return (t > 0.52 && t < 0.6) ? 50.0 : 1.0; });
  thrown = false;
  for (int i = 0; i < 2000 && !thrown; ++i) {
    try {
      spiky.sample(0.0, rng, 1.0);
    } catch (const MajorantError&) {
      thrown = true;
    }
  }
  EXPECT_TRUE(thrown);
}

TEST(EmissionAngles, UniformOnSphere) {
  PhiloxEngine rng(17, 0);
  const int n = 100000;
  double sum_cos = 0;
  int upper = 0;
  std::vector<double> bins(100, 0.0), cosines;
  for (int i = 0; i < n; ++i) {
    const auto [th, ph] = sample_emission_angles(rng);
    ASSERT_GT(th, 0.0);
    ASSERT_LT(th, kPi);
    ASSERT_GE(ph, 0.0);
    ASSERT_LT(ph, 2 * kPi);
    const double c = std::cos(th);
    sum_cos += c;
    upper += th < kPi / 2;
    cosines.push_back(c);
    const int ic = std::min(9, int((c + 1) / 2 * 10)), ip = std::min(9, int(ph / (2 * kPi) * 10));
    bins[10 * ic + ip] += 1;
  }
  EXPECT_LT(std::abs(sum_cos / n), 3 * std::sqrt(1.0 / 3.0 / n));
  EXPECT_LT(std::abs(upper / double(n) - 0.5), 3 * 0.5 / std::sqrt(double(n)));
  EXPECT_TRUE(chi_square_uniform(bins).passes(0.01));
  EXPECT_TRUE(ks_test(cosines, [](double c) { return 0.5 * (c + 1); }).passes(0.01));
}

TEST(Balance, ConstructedTrackPassesAndConstantVacuumFails) {
  auto cm = [](double) { return complex{1, 0}; };
  auto cp = [](double t) { return complex{0.1, 0.3 * std::cos(2 * t)}; };
  const auto good = balanced_track(kP, uniform_grid(0, 2, 4001), cm, cp, 0.8);
  const auto rep = validate_balance(kP, good, 1e-6);
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.max_residual, 1e-6);

  const auto bad = CoefficientTrack::constant(0, 2, {1, 0}, {0, 0.5}, {0.7, 0});
  const auto rb = check_balance(kP, bad, 1e-6);
  EXPECT_FALSE(rb.passed);
  EXPECT_NEAR(rb.max_residual, 1.0, 1e-12);
  EXPECT_EQ(rb.worst.size(), 2u);
  try {
    validate_balance(kP, bad, 1e-6);
    FAIL() << "expected BalanceViolation";
  } catch (const BalanceViolation& e) {
    EXPECT_NE(std::string(e.what()).find("t=0"), std::string::npos);
  }
}

TEST(Balance, ResidualIsSecondOrderInGridSpacing) {
  // |psi0|^2 given exactly at the nodes; only the finite difference errs.
  auto cm = [](double) { return complex{1, 0}; };
  auto cp = [](double t) { return complex{0.1, 0.03 + 0.02 * std::sin(2 * t)}; };
  std::vector<double> res;
  for (std::size_t n : {41u, 81u, 161u}) {
    const auto tr = balanced_track(kP, uniform_grid(0, 2, n), cm, cp, 0.95);
    res.push_back(check_balance(kP, tr).max_residual);
  }
  EXPECT_NEAR(res[0] / res[1], 4.0, 0.6);
  EXPECT_NEAR(res[1] / res[2], 4.0, 0.6);
}

TEST(SimulatePath, ZeroRateVacuumStaysVacuum) {
  const auto track = CoefficientTrack::constant(0, 5, {1, 0}, {0.4, 0}, {0.8, 0});
  PhiloxEngine rng(1, 0);
  const auto path = simulate_path(family(), track, Vacuum{}, 0, 5, {}, rng);
  EXPECT_TRUE(path.events.empty());
  EXPECT_TRUE(is_vacuum(path.final_state));
  ASSERT_EQ(path.pieces.size(), 1u);
  EXPECT_EQ(path.sector(4.9), 0);
}

TEST(SimulatePath, IngoingParticleIsAbsorbedForGood) {
  const complex cm{1, 0}, cp{0.2, -0.5};
  const auto track = CoefficientTrack::constant(0, 50, cm, cp, {0.8, 0});
  SimulationOptions opt;
  opt.tol = 1e-9;
  PhiloxEngine rng(4, 0);
  const auto path = simulate_path(family(), track, make_particle(1e-3, 1.0, 0.5), 0, 50, opt, rng);
  ASSERT_EQ(path.events.size(), 1u);
  const auto* abs = std::get_if<AbsorptionEvent>(&path.events[0]);
  ASSERT_NE(abs, nullptr);
  const auto a = asymptotic_coeffs(kP, cm, cp);
  EXPECT_NEAR(abs->t0, exact_elapsed(a, 1e-3), 1e-7 * abs->t0);
  EXPECT_TRUE(is_vacuum(path.final_state));
  EXPECT_EQ(path.sector(abs->t0 * 0.99), 1);
  EXPECT_EQ(path.sector(abs->t0 * 1.01), 0);
  EXPECT_TRUE(events_alternate(path));
}

TEST(SimulatePath, ParticleInsideRminUsesClosedForm) {
  const complex cm{1, 0}, cp{0.2, 0.5};
  const auto track = CoefficientTrack::constant(0, 1, cm, -cp, {0.8, 0});
  PhiloxEngine rng(4, 0);
  const auto in = simulate_path(family(), track, make_particle(1e-9, 1.0, 0.0), 0, 1, {}, rng);
  ASSERT_EQ(in.events.size(), 1u);
  EXPECT_NEAR(event_time(in.events[0]),
              exact_elapsed(asymptotic_coeffs(kP, cm, -cp), 1e-9), 1e-15);

  const auto track_out = CoefficientTrack::constant(0, 1, cm, cp, {0.8, 0});
  SimulationOptions opt;
  opt.probes = {1e-6};
  const auto out = simulate_path(family(), track_out, make_particle(1e-9, 1.0, 0.0), 0, 1, opt, rng);
  ASSERT_FALSE(out.pieces.empty());
  const auto& seg = std::get<TrajectorySegment>(out.pieces[0]);
  EXPECT_NEAR(seg.front().r, opt.seed_radius(), 1e-20);
  const auto a = asymptotic_coeffs(kP, cm, cp);
  ASSERT_EQ(seg.crossings.size(), 1u);
  const double t_cross = exact_elapsed(a, 1e-6) - exact_elapsed(a, 1e-9);
  EXPECT_NEAR(seg.crossings[0].t, t_cross, 1e-7 * t_cross);
}

TEST(SimulatePath, EventsAlternateOnSignChangingTrack) {
  // Im[c_-^* c_+] changes sign every pi/2; particles are emitted while it is
  // positive and some are absorbed once it turns negative.
  auto cm = [](double) { return complex{1, 0}; };
  auto cp = [](double t) { return complex{0.1, 0.2 * std::sin(2 * t)}; };
  const auto track = balanced_track(kP, uniform_grid(0, 6, 601), cm, cp, 0.999);
  SimulationOptions opt;
  opt.r_min = 1e-6;
  const ModelFamily fam{kP, 1e-2, {}, {}};
  const ThinningSampler s = waiting_time_sampler(kP, track);
  std::size_t emissions = 0, absorptions = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    PhiloxEngine rng(77, k);
    const auto path = simulate_path(fam, track, s, Vacuum{}, 0, 6, opt, rng);
    EXPECT_TRUE(events_alternate(path));
    emissions += path.count_emissions();
    absorptions += path.count_absorptions();
    for (const auto& e : path.events) {
      if (const auto* em = std::get_if<EmissionEvent>(&e)) {
        EXPECT_GT(std::sin(2 * em->t0), 0.0);
      }
    }
  }
  EXPECT_GT(emissions, 0u);
  EXPECT_GT(absorptions, 0u);
}

TEST(SimulatePath, DeterministicForSeedAndStream) {
  auto cm = [](double) { return complex{1, 0}; };
  auto cp = [](double t) { return complex{0.1, 0.08 * std::cos(t)}; };
  const auto track = balanced_track(kP, uniform_grid(0, 3, 301), cm, cp, 0.99);
  const ModelFamily fam{kP, 1e-2, {}, {}};
  SimulationOptions opt;
  opt.r_min = 1e-6;
  auto events = [&](std::uint64_t stream) {
    PhiloxEngine rng(5, stream);
    const auto path = simulate_path(fam, track, Vacuum{}, 0, 3, opt, rng);
    std::vector<std::pair<int, double>> out;
    for (const auto& e : path.events) out.emplace_back(int(e.index()), event_time(e));
    return out;
  };
  for (std::uint64_t k = 0; k < 5; ++k) EXPECT_EQ(events(k), events(k));
  bool any_differ = false;
  for (std::uint64_t k = 0; k < 5; ++k) any_differ |= events(k) != events(k + 10);
  EXPECT_TRUE(any_differ);
}

TEST(SimulatePath, FrozenAndQuasiStaticAgreeOnConstantTrack) {
  const auto track = CoefficientTrack::constant(0, 4, {1, 0}, {0.1, 0.6}, {0.8, 0});
  SimulationOptions q, f;
  f.frozen = true;
  PhiloxEngine r1(8, 3), r2(8, 3);
  const auto a = simulate_path(family(0.1), track, Vacuum{}, 0, 4, q, r1);
  const auto b = simulate_path(family(0.1), track, Vacuum{}, 0, 4, f, r2);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(event_time(a.events[i]), event_time(b.events[i]));
  }
  // The interpolated constant track may differ from the frozen values by rounding.
  const auto pa = std::get<Particle>(a.final_state), pb = std::get<Particle>(b.final_state);
  EXPECT_NEAR(pa.r, pb.r, 1e-9 * pa.r);
  EXPECT_NEAR(pa.phi, pb.phi, 1e-6);
}

TEST(SimulatePath, EmittedPathLeavesAndStaysInSectorOne) {
  const auto track = CoefficientTrack::constant(0, 20, {1, 0}, {0.1, 0.6}, {0.3, 0});
  PhiloxEngine rng(21, 0);
  SimulationOptions opt;
  opt.probes = {1e-4};
  const auto path = simulate_path(family(0.1), track, Vacuum{}, 0, 20, opt, rng);
  ASSERT_EQ(path.events.size(), 1u);
  const auto em = std::get<EmissionEvent>(path.events[0]);
  ASSERT_GE(path.pieces.size(), 2u);
  const auto& seg = std::get<TrajectorySegment>(path.pieces[1]);
  EXPECT_EQ(seg.terminal, Terminal::left_inner_region);
  EXPECT_NEAR(seg.front().theta, em.theta0, 1e-15);
  EXPECT_TRUE(std::holds_alternative<OuterInterval>(path.pieces.back()));
  ASSERT_EQ(path.crossings().size(), 1u);
  EXPECT_EQ(path.crossings()[0].direction, +1);
  EXPECT_EQ(path.sector(19.9), 1);
  EXPECT_THROW(simulate_path(family(0.1), track, make_particle(0.2, 1, 0), 0, 20, opt, rng),
               DomainError);
}
