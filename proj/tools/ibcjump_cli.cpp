// ibcjump: command-line front end.
//
// Exit codes: 0 success, 1 validation failure, 2 runtime error, 64 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibcjump/acceptance.hpp"
#include "ibcjump/basis_checks.hpp"
#include "ibcjump/config.hpp"
#include "ibcjump/ensemble.hpp"
#include "ibcjump/jump_process.hpp"
#include "ibcjump/trajectory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ibcjump;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json cjson(complex z) { return json::array({z.real(), z.imag()}); }

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Common& opt) {
  RunConfig c = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (opt.seed) c.run.seed = opt.seed;
  return c;
}

// --out-dir, then IBCJUMP_OUT_DIR, then run.output_dir, then the working directory.
fs::path output_dir(const Common& opt, const RunConfig& c) {
  fs::path dir = ".";
  if (!opt.out_dir.empty()) {
    dir = opt.out_dir;
  } else if (const char* env = std::getenv("IBCJUMP_OUT_DIR"); env && *env) {
    dir = env;
  } else if (!c.run.output_dir.empty()) {
    dir = c.run.output_dir;
  }
  fs::create_directories(dir);
  return dir;
}

std::string seed_text(const RunConfig& c) { return c.run.seed ? std::to_string(*c.run.seed) : "none"; }

std::string comment_header(const std::string& command, const RunConfig& c) {
  std::ostringstream os;
  os << "# ibcjump " << kVersion << "\n# command: " << command << "\n# seed: " << seed_text(c)
     << "\n# config:\n";
  std::istringstream is(serialize(c));
  for (std::string line; std::getline(is, line);) os << "#   " << line << "\n";
  return os.str();
}

json json_header(const std::string& command, const RunConfig& c) {
  json h;
  h["version"] = kVersion;
  h["command"] = command;
  if (c.run.seed) h["seed"] = *c.run.seed;
  else h["seed"] = nullptr;
  h["config"] = serialize(c);
  return h;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

void write_samples(std::ostream& os, const TrajectorySegment& seg, const std::string& prefix = "") {
  for (const auto& s : seg.samples) {
    const Vec3 x = to_cartesian(s.r, SpherePoint{s.theta, 0.0});
    const double c = std::cos(s.phi), sn = std::sin(s.phi);
    // to_cartesian wraps phi; rotate explicitly so that unwrapped phi is kept
    os << prefix << g17(s.t) << "," << g17(s.r) << "," << g17(s.theta) << "," << g17(s.phi) << ","
       << g17(x.x() * c) << "," << g17(x.x() * sn) << "," << g17(x.z()) << "\n";
  }
}

// ---------------------------------------------------------------------------

int cmd_validate_basis(const Common& opt, int order, std::optional<double> q_opt, double tol,
                       const std::string& out) {
  const RunConfig c = load(opt);
  const double q = q_opt ? *q_opt : c.params.q;
  canonical_params(q);  // range check
  const auto rows = lemma_residual_table(q, order);
  std::ostringstream os;
  os << "# ibcjump " << kVersion << "\n# command: validate-basis\n# q: " << g17(q)
     << "\n# order: " << order << "\n";
  os << "m_tilde,kappa_tilde,identity,pointwise_residual,quadrature_re,quadrature_im,"
        "closed_re,closed_im,integral_residual\n";
  double worst = 0;
  for (const auto& r : rows) {
    worst = std::max({worst, r.pointwise, r.integral_residual()});
    os << g17(r.m_tilde.value()) << "," << r.kappa_tilde << "," << csv_quote(r.identity) << ","
       << g17(r.pointwise) << "," << g17(r.quadrature.real()) << "," << g17(r.quadrature.imag())
       << "," << g17(r.exact.real()) << "," << g17(r.exact.imag()) << ","
       << g17(r.integral_residual()) << "\n";
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    open_out(out) << os.str();
  }
  std::cerr << "max |residual| = " << g17(worst) << " (tolerance " << tol << ", " << rows.size()
            << " rows)\n";
  return worst <= tol ? kExitOk : kExitValidation;
}

int cmd_coeffs(const Common& opt) {
  const RunConfig c = load(opt);
  const PhysParams p = c.physical();
  const CoefficientTrack track = build_track(c);
  const TrackPoint tp = track.at(track.t_begin());
  const CurrentCoeffs cc = current_coeffs(p, tp.c_minus, tp.c_plus);
  json j;
  j["header"] = json_header("coeffs", c);
  j["q"] = p.q();
  j["B"] = p.B();
  j["sgn_mk"] = p.sgn_mk();
  j["circling_sign"] = circling_sign(p);
  j["radial_exponent"] = p.radial_exponent();
  j["phi_exponent"] = -2 * p.B() / (1 - 2 * p.B());
  j["t"] = tp.t;
  j["c_minus"] = cjson(tp.c_minus);
  j["c_plus"] = cjson(tp.c_plus);
  j["psi0"] = cjson(tp.psi0);
  j["C_r"] = cc.C_r;
  j["four_pi_C_r"] = 4 * kPi * cc.C_r;
  j["Cphi"] = {cc.Cphi_leading, cc.Cphi_mid, cc.Cphi_sub};
  j["rho"] = {cc.rho_leading, cc.rho_mid};
  const double n0 = std::norm(tp.psi0);
  if (n0 > 0) j["total_jump_rate"] = total_jump_rate(p, tp.c_minus, tp.c_plus, tp.psi0);
  else j["total_jump_rate"] = nullptr;
  j["norm_total"] = n0 + RadialLaw(p, tp.c_minus, tp.c_plus, c.model.r_cut).total();
  if ((std::conj(tp.c_minus) * tp.c_plus).imag() != 0) {
    const AsymptoticCoeffs a = asymptotic_coeffs(p, tp.c_minus, tp.c_plus);
    j["asymptotic"] = {{"K", a.K}, {"A", a.A},   {"C_H", a.C_H}, {"C_tilde", a.C_tilde},
                       {"P", a.P}, {"L", a.L},   {"Q", a.Q},     {"dr_coeff", a.dr_coeff}};
  } else {
    j["asymptotic"] = nullptr;
  }
  const BalanceReport bal = check_balance(p, track, c.run.ensemble.balance_tol);
  j["balance"] = {{"max_residual", bal.max_residual}, {"passed", bal.passed}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_trace(const Common& opt, const std::string& out) {
  const RunConfig c = load(opt);
  const CoefficientTrack track = build_track(c);
  const ModelFamily fam = model_family(c);
  const auto& tr = c.run.trace;
  const ModelWavefunction m = fam.at(track, track.t_begin());
  TrajectorySegment seg;
  if (tr.mode == TraceMode::absorb) {
    IntegrateOptions io;
    io.tol = c.run.tol;
    io.r_min = c.model.r_min;
    io.r_max = 0.5 * c.model.r_cut;
    seg = integrate(FrozenField{m}, SphericalState{track.t_begin(), tr.r0, tr.theta0, tr.phi0},
                    tr.t_max, io);
  } else {
    seg = emit_trajectory(m, tr.t0, tr.theta0, tr.phi0, 10 * c.model.r_min, c.run.tol, tr.t_max);
  }
  const fs::path path = out.empty() ? output_dir(opt, c) / "trace.csv" : fs::path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto f = open_out(path);
  f << comment_header("trace", c);
  f << "# terminal: " << to_string(seg.terminal) << "\n";
  if (seg.terminal == Terminal::absorbed) f << "# t0: " << g17(seg.t0) << "\n";
  f << "t,r,theta,phi,x,y,z\n";
  write_samples(f, seg);
  std::cout << "wrote " << path.string() << " (" << seg.samples.size() << " samples, "
            << to_string(seg.terminal);
  if (seg.terminal == Terminal::absorbed) std::cout << ", t0 = " << g17(seg.t0);
  std::cout << ")\n";
  return kExitOk;
}

json state_json(const Configuration& q) {
  if (const auto* p = std::get_if<Particle>(&q)) {
    return {{"sector", 1}, {"r", p->r}, {"theta", p->theta}, {"phi", p->phi}};
  }
  return {{"sector", 0}};
}

int cmd_simulate(const Common& opt, const std::string& csv) {
  const RunConfig c = load(opt);
  const std::uint64_t seed = c.require_seed("simulate");
  const CoefficientTrack track = build_track(c);
  const ModelFamily fam = model_family(c);
  const auto& sm = c.run.simulate;
  SimulationOptions so;
  so.tol = c.run.tol;
  so.r_min = c.model.r_min;
  so.r_seed = sm.r_seed;
  so.frozen = sm.frozen;
  so.keep_samples = !csv.empty();
  PhiloxEngine rng(seed, 0);
  Configuration q0 = Vacuum{};
  if (sm.initial == "particle") {
    q0 = make_particle(sm.r0, sm.theta0, sm.phi0);
  } else if (sm.initial == "sample") {
    const TrackPoint tp = track.at(track.t_begin());
    q0 = sample_initial(RadialLaw(fam.params, tp.c_minus, tp.c_plus, fam.r_cut), std::norm(tp.psi0),
                        rng);
  }
  const ProcessPath path =
      simulate_path(fam, track, q0, track.t_begin(), track.t_end(), so, rng);

  const fs::path dir = output_dir(opt, c);
  const fs::path events_path = dir / "events.jsonl";
  auto f = open_out(events_path);
  f << json{{"type", "header"}, {"header", json_header("simulate", c)}}.dump() << "\n";
  f << json{{"type", "initial"}, {"t", path.t_begin}, {"state", state_json(path.initial)}}.dump()
    << "\n";
  for (const auto& e : path.events) {
    if (const auto* em = std::get_if<EmissionEvent>(&e)) {
      f << json{{"type", "emission"}, {"t", em->t0}, {"theta0", em->theta0}, {"phi0", em->phi0}}.dump()
        << "\n";
    } else {
      f << json{{"type", "absorption"}, {"t", std::get<AbsorptionEvent>(e).t0}}.dump() << "\n";
    }
  }
  for (const auto& piece : path.pieces) {
    if (const auto* v = std::get_if<VacuumInterval>(&piece)) {
      f << json{{"type", "vacuum"}, {"t_start", v->t_start}, {"t_end", v->t_end}}.dump() << "\n";
    } else if (const auto* o = std::get_if<OuterInterval>(&piece)) {
      f << json{{"type", "outer"}, {"t_start", o->t_start}, {"t_end", o->t_end}}.dump() << "\n";
    } else {
      const auto& seg = std::get<TrajectorySegment>(piece);
      f << json{{"type", "flight"},
                {"t_start", seg.t_begin()},
                {"t_end", seg.t_end()},
                {"terminal", to_string(seg.terminal)},
                {"steps", seg.accepted_steps}}
               .dump()
        << "\n";
    }
  }
  f << json{{"type", "final"}, {"t", path.t_end}, {"state", state_json(path.final_state)}}.dump()
    << "\n";
  if (!csv.empty()) {
    const fs::path cp = fs::path(csv).is_relative() ? dir / csv : fs::path(csv);
    auto g = open_out(cp);
    g << comment_header("simulate", c) << "flight,t,r,theta,phi,x,y,z\n";
    int k = 0;
    for (const auto& piece : path.pieces) {
      if (const auto* seg = std::get_if<TrajectorySegment>(&piece)) {
        write_samples(g, *seg, std::to_string(k++) + ",");
      }
    }
  }
  std::cout << "wrote " << events_path.string() << " (" << path.count_emissions() << " emissions, "
            << path.count_absorptions() << " absorptions)\n";
  return kExitOk;
}

int cmd_ensemble(const Common& opt) {
  const RunConfig c = load(opt);
  const std::uint64_t seed = c.require_seed("ensemble");
  const CoefficientTrack track = build_track(c);
  const ModelFamily fam = model_family(c);
  const PhysParams& p = fam.params;
  const auto& en = c.run.ensemble;
  EnsembleOptions eo;
  eo.n_paths = en.n_paths;
  eo.t_begin = track.t_begin();
  eo.t_end = track.t_end();
  eo.seed = seed;
  eo.n_grid = en.n_grid;
  eo.time_bins = en.time_bins;
  eo.angle_bins = en.angle_bins;
  eo.r_probe = en.r_probe;
  eo.threads = en.threads;
  eo.require_balance = en.require_balance;
  eo.balance_tol = en.balance_tol;
  eo.sim.tol = std::max(c.run.tol, 1e-10);
  eo.sim.r_min = c.model.r_min;
  eo.sim.r_seed = c.run.simulate.r_seed;
  eo.sim.frozen = c.run.simulate.frozen;
  const auto start = std::chrono::steady_clock::now();
  const EnsembleStats st = run_ensemble(fam, track, eo);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const TrackPoint c0 = track.at(eo.t_begin);
  const auto oracle = master_equation_p0(p, track, std::norm(c0.psi0), st.grid);
  const Sector0Report vs_psi0 = sector0_comparison(st, track);
  const Sector0Report vs_oracle = sector0_comparison(st, oracle);
  const FluxEstimate flux = flux_estimate(st);
  // time-averaged 4 pi C_r over the grid, by the trapezoid rule
  double mean_flux = 0;
  for (std::size_t i = 0; i + 1 < st.grid.size(); ++i) {
    const auto fa = current_coeffs(p, track.c_minus(st.grid[i]), track.c_plus(st.grid[i])).C_r;
    const auto fb = current_coeffs(p, track.c_minus(st.grid[i + 1]), track.c_plus(st.grid[i + 1])).C_r;
    mean_flux += 0.5 * (fa + fb) * (st.grid[i + 1] - st.grid[i]);
  }
  mean_flux *= 4 * kPi / (eo.t_end - eo.t_begin);

  json j;
  j["header"] = json_header("ensemble", c);
  j["n_paths"] = st.n_paths;
  j["seconds"] = seconds;
  j["vacuum_starts"] = st.vacuum_starts;
  j["emissions"] = st.emissions();
  j["absorptions"] = st.absorptions();
  j["sector0"] = {{"vs_psi0", {{"fraction_outside_3sigma", vs_psi0.fraction},
                               {"max_abs_z", vs_psi0.max_abs_z},
                               {"passed", vs_psi0.passed}}},
                  {"vs_master_equation", {{"fraction_outside_3sigma", vs_oracle.fraction},
                                          {"max_abs_z", vs_oracle.max_abs_z},
                                          {"passed", vs_oracle.passed}}}};
  if (eo.r_probe > 0) {
    j["flux"] = {{"r_probe", eo.r_probe},     {"rate", flux.rate},
                 {"sigma", flux.sigma},       {"outward", flux.outward},
                 {"inward", flux.inward},     {"four_pi_C_r_mean", mean_flux},
                 {"z", flux.sigma > 0 ? (flux.rate - mean_flux) / flux.sigma : 0.0}};
  } else {
    j["flux"] = nullptr;
  }
  if (st.emissions() >= 1000) {
    const AngleReport ar = angle_uniformity_test(st);
    j["angles"] = {{"n", ar.n},
                   {"chi2", ar.chi2.statistic},
                   {"chi2_p", ar.chi2.p_value},
                   {"ks_cos_theta_p", ar.ks_cos_theta.p_value},
                   {"passed", ar.passed}};
  } else {
    j["angles"] = nullptr;
  }

  const fs::path dir = output_dir(opt, c);
  open_out(dir / "ensemble.json") << j.dump(2) << "\n";
  {
    auto f = open_out(dir / "p0.csv");
    f << comment_header("ensemble", c) << "t,p0_hat,sigma,psi0_norm2,master_equation\n";
    const auto ph = st.p0_hat(), sg = st.p0_sigma();
    for (std::size_t i = 0; i < st.grid.size(); ++i) {
      f << g17(st.grid[i]) << "," << g17(ph[i]) << "," << g17(sg[i]) << ","
        << g17(std::norm(track.psi0(st.grid[i]))) << "," << g17(oracle[i]) << "\n";
    }
  }
  {
    auto f = open_out(dir / "event_hist.csv");
    f << comment_header("ensemble", c) << "t_lo,t_hi,emissions,absorptions\n";
    const std::size_t nb = st.emission_hist.size();
    for (std::size_t i = 0; i < nb; ++i) {
      const double lo = eo.t_begin + (eo.t_end - eo.t_begin) * i / nb;
      const double hi = eo.t_begin + (eo.t_end - eo.t_begin) * (i + 1) / nb;
      f << g17(lo) << "," << g17(hi) << "," << st.emission_hist[i] << "," << st.absorption_hist[i]
        << "\n";
    }
  }
  {
    auto f = open_out(dir / "angle_hist.csv");
    f << comment_header("ensemble", c) << "cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,count\n";
    const int nb = st.angle_bins;
    for (int a = 0; a < nb; ++a) {
      for (int b = 0; b < nb; ++b) {
        f << g17(-1 + 2.0 * a / nb) << "," << g17(-1 + 2.0 * (a + 1) / nb) << ","
          << g17(2 * kPi * b / nb) << "," << g17(2 * kPi * (b + 1) / nb) << ","
          << st.angle_hist[std::size_t(a) * nb + b] << "\n";
      }
    }
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_selftest(const std::vector<int>& only) {
  bool all = true;
  int ran = 0;
  for (const auto& crit : acceptance::criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), crit.id) == only.end()) continue;
    const auto r = acceptance::run_criterion(crit);
    std::cout << r.line() << std::endl;
    all = all && r.passed();
    ++ran;
  }
  std::cout << (all ? "ALL PASSED" : "FAILURES") << ": " << ran << " criteria\n";
  return all ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ibcjump: trajectories and jump process for an interior-boundary Dirac model", "ibcjump"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* o = sub->add_option("-c,--config", common.config_path, "configuration file");
    if (config_required) o->required();
    o->check(CLI::ExistingFile);
    sub->add_option("-o,--out-dir", common.out_dir,
                    "output directory (default: $IBCJUMP_OUT_DIR, then run.output_dir, then .)");
    sub->add_option("--seed", common.seed, "override run.seed");
  };

  int order = 32;
  std::optional<double> q_opt;
  double tol = 1e-10;
  std::string out, csv;
  std::vector<int> only;

  auto* vb = app.add_subcommand("validate-basis", "CSV of spinor lemma residuals");
  add_common(vb, false);
  vb->add_option("--order", order, "sphere quadrature order")->check(CLI::Range(2, 512));
  vb->add_option("--q", q_opt, "Coulomb strength q (default: params.q)");
  vb->add_option("--tol", tol, "largest accepted residual");
  vb->add_option("--out", out, "write the CSV here instead of stdout");

  auto* co = app.add_subcommand("coeffs", "derived coefficients as JSON");
  add_common(co, true);

  auto* tr = app.add_subcommand("trace", "one trajectory as CSV");
  add_common(tr, true);
  tr->add_option("--out", out, "CSV path (default: <out-dir>/trace.csv)");

  auto* si = app.add_subcommand("simulate", "one path of the jump process");
  add_common(si, true);
  si->add_option("--csv", csv, "also write flight samples to this CSV");

  auto* en = app.add_subcommand("ensemble", "ensemble statistics");
  add_common(en, true);

  auto* st = app.add_subcommand("selftest", "run the acceptance suite");
  st->add_option("--only", only, "criterion numbers to run");

  if (argc < 2) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*vb) return cmd_validate_basis(common, order, q_opt, tol, out);
    if (*co) return cmd_coeffs(common);
    if (*tr) return cmd_trace(common, out);
    if (*si) return cmd_simulate(common, csv);
    if (*en) return cmd_ensemble(common);
    if (*st) return cmd_selftest(only);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const RangeError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const BalanceViolation& e) {
    std::cerr << "track fails the balance check: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NormalizationError& e) {
    std::cerr << "track is not normalized: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
