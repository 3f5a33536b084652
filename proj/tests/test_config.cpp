#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "ibcjump/config.hpp"

using namespace ibcjump;

namespace {

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "ibcjump_test_config";
  std::filesystem::create_directories(d);
  return d;
}

template <class F>
ParseError parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError";
  return ParseError("none", 0, 0);
}

}  // namespace

TEST(ParseConfig, MinimalConfigGetsDefaults) {
  const RunConfig c = parse_config("[params]\nq = 0.96\n");
  EXPECT_EQ(c.params.q, 0.96);
  EXPECT_EQ(c.params.g, complex(1, 0));
  EXPECT_FALSE(c.params.a.has_value());
  EXPECT_EQ(c.model.r_cut, 1.0);
  EXPECT_EQ(c.model.r_min, 1e-8);
  EXPECT_EQ(c.track.kind, TrackKind::balanced);
  EXPECT_FALSE(c.run.seed.has_value());
  EXPECT_EQ(c.run.ensemble.n_paths, 10000u);
  EXPECT_EQ(parse_config(""), RunConfig{});
  const PhysParams p = c.physical();
  EXPECT_NEAR(p.a4(), 4 * p.B() * 1.96, 1e-15);
}

TEST(ParseConfig, ValuesCommentsAndDottedSections) {
  const RunConfig c = parse_config(R"(
# comment line
[params]
q = -0.93          ; trailing comment
g = 0.5 -0.25
m_tilde = -0.5
kappa_tilde = -1

[run]
seed = 42
trace.r0 = 0.125

[run.ensemble]
n_paths = 300
require_balance = true
)");
  EXPECT_EQ(c.params.q, -0.93);
  EXPECT_EQ(c.params.g, complex(0.5, -0.25));
  EXPECT_EQ(c.params.m_tilde, HalfInt{-1});
  EXPECT_EQ(c.params.kappa_tilde, -1);
  EXPECT_EQ(c.run.seed, 42u);
  EXPECT_EQ(c.run.trace.r0, 0.125);
  EXPECT_EQ(c.run.ensemble.n_paths, 300u);
  EXPECT_TRUE(c.run.ensemble.require_balance);
  EXPECT_EQ(c.physical().sgn_mk(), 1.0);
}

TEST(ParseConfig, QOutOfRangeIsValidationError) {
  try {
    parse_config("[params]\nq = 0.5\n");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("sqrt(3)/2 < |q| < 1"), std::string::npos) << w;
  }
  EXPECT_THROW(parse_config("[params]\nq = 1\n"), ValidationError);
  EXPECT_THROW(parse_config("[params]\nq = 0.95\na = 1 0 0 1\n"), ValidationError);
  EXPECT_THROW(parse_config("[params]\nkappa_tilde = 2\n"), ValidationError);
  EXPECT_THROW(parse_config("[params]\ng = 0 0\n"), ValidationError);
}

TEST(ParseConfig, DuplicateKeyIsParseError) {
  auto e = parse_error([] { parse_config("[params]\nq = 0.9\nq = 0.95\n"); });
  EXPECT_EQ(e.line(), 3);
  EXPECT_EQ(e.column(), 1);
  // the same key through a dotted section and a dotted key
  e = parse_error([] { parse_config("[run.trace]\nr0 = 0.1\n[run]\n  trace.r0 = 0.2\n"); });
  EXPECT_EQ(e.line(), 4);
  EXPECT_EQ(e.column(), 3);
}

TEST(ParseConfig, UnknownKeyAndSyntaxErrors) {
  auto e = parse_error([] { parse_config("[params]\nq = 0.9\n[model]\nrcut = 1\n"); });
  EXPECT_EQ(e.line(), 4);
  EXPECT_NE(std::string(e.what()).find("model.rcut"), std::string::npos);
  e = parse_error([] { parse_config("[params]\nq =   zero\n"); });
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.column(), 7);
  e = parse_error([] { parse_config("q = 0.9\n"); });
  EXPECT_EQ(e.line(), 1);
  e = parse_error([] { parse_config("[params\n"); });
  EXPECT_EQ(e.line(), 1);
  e = parse_error([] { parse_config("[params]\njust words\n"); });
  EXPECT_EQ(e.line(), 2);
  e = parse_error([] { parse_config("[params]\ng = 1\n"); });
  EXPECT_NE(std::string(e.what()).find("re im"), std::string::npos);
  e = parse_error([] { parse_config("[model]\nsubleading = yes\n"); });
  EXPECT_EQ(e.line(), 2);
  e = parse_error([] { parse_config("[run.ensemble]\nn_paths = -3\n"); });
  EXPECT_EQ(e.line(), 2);
  e = parse_error([] { parse_config("[params]\nm_tilde = 1\n"); });
  EXPECT_EQ(e.line(), 2);
  e = parse_error([] { parse_config("[track]\nkind = spline\n"); });
  EXPECT_EQ(e.line(), 2);
  EXPECT_THROW(parse_config("[params]\nq =\n"), ParseError);
}

TEST(ParseConfig, SemanticChecks) {
  EXPECT_THROW(parse_config("[model]\nr_min = 0.6\n"), ValidationError);
  EXPECT_THROW(parse_config("[track]\nt_end = -1\n"), ValidationError);
  EXPECT_THROW(parse_config("[track]\nkind = grid\ntimes = 0 1\n"), ValidationError);
  EXPECT_THROW(parse_config("[track]\nkind = file\nfile = /nonexistent/track.csv\n"),
               ValidationError);
  EXPECT_THROW(parse_config("[run.trace]\ntheta0 = 4\n"), ValidationError);
  EXPECT_THROW(parse_config("").require_seed("simulate"), ValidationError);
  EXPECT_EQ(parse_config("[run]\nseed = 7\n").require_seed("simulate"), 7u);
}

TEST(Serialize, RoundTrip) {
  const RunConfig c = parse_config(R"(
[params]
q = 0.9682458365518543
g = 0.1 0.7
m_tilde = -0.5
kappa_tilde = 1
[model]
r_cut = 0.8
r_min = 3e-9
subleading = true
sub_minus = 0.1 0.2
[track]
kind = grid
times = 0 0.25 1
c_minus_list = 1 0, 0.9 0.1, 0.8 0.2
c_plus_list = 0.3 0.6, 0.3 0.5, 0.3 0.4
psi0_list = 0.7 0, 0.6 0, 0.5 0
[run]
seed = 18446744073709551615
tol = 1e-11
output_dir = out dir
[run.trace]
mode = emit
t_max = 2.5
[run.simulate]
initial = particle
frozen = true
[run.ensemble]
threads = 3
r_probe = 0
)");
  const std::string text = serialize(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.run.seed, 18446744073709551615ull);
  EXPECT_EQ(back.run.output_dir, "out dir");
  // defaults, including the infinite trace horizon, round trip as well
  EXPECT_EQ(parse_config(serialize(RunConfig{})), RunConfig{});
  // explicit a block
  const RunConfig withA = parse_config("[params]\nq = 0.95\na = 2 0.5 0.25 " +
                                       config_detail::num((4 * std::sqrt(1 - 0.95 * 0.95) * 1.95 +
                                                           0.125) /
                                                          2) +
                                       "\n");
  EXPECT_EQ(parse_config(serialize(withA)), withA);
}

TEST(Tracks, FileTrackResolvesRelativePaths) {
  const auto dir = temp_dir();
  {
    std::ofstream f(dir / "track.csv");
    f << "# coefficient track\n"
      << "t,cm_re,cm_im,cp_re,cp_im,psi0_re,psi0_im\n"
      << "0,1,0,0.3,0.6,0.7,0\n"
      << "1,1,0,0.3,0.5,0.6,0.1\n"
      << "2,1,0,0.3,0.4,0.5,0.2\n";
  }
  {
    std::ofstream f(dir / "run.ini");
    f << "[track]\nkind = file\nfile = track.csv\n";
  }
  const RunConfig c = load_config(dir / "run.ini");
  EXPECT_EQ(c.track.file, (dir / "track.csv").lexically_normal().string());
  const CoefficientTrack t = build_track(c);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.c_plus(1.0), complex(0.3, 0.5));
  EXPECT_EQ(t.psi0(2.0), complex(0.5, 0.2));
  {
    std::ofstream f(dir / "bad.csv");
    f << "0,1,0,0.3,0.6,0.7,0\n1,1,0,0.3\n";
  }
  EXPECT_THROW(read_track_csv((dir / "bad.csv").string()), ParseError);
  EXPECT_THROW(load_config(dir / "missing.ini"), ValidationError);
}

TEST(Tracks, BalancedAndConstantTracksAreNormalized) {
  const RunConfig c = parse_config("[params]\nq = 0.96\n[track]\np0 = 0.4\nt_end = 0.5\n");
  const CoefficientTrack t = build_track(c);
  EXPECT_NEAR(std::norm(t.psi0(0.0)), 0.4, 1e-12);
  EXPECT_NO_THROW(check_normalization(c.physical(), t.at(0.0), c.model.r_cut));
  EXPECT_TRUE(check_balance(c.physical(), t).passed);
  const RunConfig k = parse_config("[track]\nkind = constant\npsi0 = 0.6 0.3\n");
  const CoefficientTrack tk = build_track(k);
  EXPECT_NO_THROW(check_normalization(k.physical(), tk.at(0.5), k.model.r_cut));
  // unnormalized coefficients are used verbatim
  const RunConfig raw = parse_config("[track]\nkind = constant\nnormalize = false\nc_plus = 0 2\n");
  EXPECT_EQ(build_track(raw).c_plus(0.0), complex(0, 2));
  // a track that drains the vacuum below zero is rejected
  EXPECT_THROW(build_track(parse_config("[track]\np0 = 0.01\nt_end = 100\n")), ValidationError);
}
