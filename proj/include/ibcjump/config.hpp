#pragma once

// Run configuration: parsing, validation and canonical serialization.
//
// Grammar (UTF-8, one statement per line):
//
//   line    := blank | comment | section | entry
//   comment := ('#' | ';') text
//   section := '[' name ']'            name = ident ('.' ident)*
//   entry   := key '=' value [comment]  key = ident ('.' ident)*
//
// The full key of an entry is "<section>.<key>".  Sections nest by dots, so
// `[run.trace]` + `r0 = 0.2` and `[run]` + `trace.r0 = 0.2` name the same key.
// Values are numbers, booleans (true/false), bare words, or for complex
// quantities two numbers "re im".  Complex lists separate entries by commas.

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ibcjump/ensemble.hpp"
#include "ibcjump/errors.hpp"
#include "ibcjump/params.hpp"
#include "ibcjump/track.hpp"

namespace ibcjump {

inline constexpr const char* kVersion = "0.1.0";

enum class TrackKind { constant, balanced, grid, file };
enum class TraceMode { absorb, emit };

inline const char* to_string(TrackKind k) {
  switch (k) {
    case TrackKind::constant: return "constant";
    case TrackKind::balanced: return "balanced";
    case TrackKind::grid: return "grid";
    case TrackKind::file: return "file";
  }
  return "?";
}

struct ParamsBlock {
  double q = 0.96;
  complex g{1.0, 0.0};
  /// Absent: the canonical choice a = (1, 0, 0, 4B(1+q)).
  std::optional<std::array<double, 4>> a;
  HalfInt m_tilde{1};
  int kappa_tilde = 1;
  bool operator==(const ParamsBlock&) const = default;
};

struct ModelBlock {
  double r_cut = 1.0;
  double r_min = 1e-8;
  bool subleading = false;
  complex sub_minus{0.4, 0.1};
  complex sub_plus{0.2, -0.3};
  bool operator==(const ModelBlock&) const = default;
};

struct TrackBlock {
  TrackKind kind = TrackKind::balanced;
  double t_begin = 0.0;
  double t_end = 1.0;
  std::size_t n_grid = 201;
  complex c_minus{1.0, 0.0};
  complex c_plus{0.3, 0.6};
  /// constant tracks
  complex psi0{1.0, 0.0};
  /// balanced tracks: |psi0|^2 at t_begin
  double p0 = 0.5;
  /// Rescale c_-, c_+ so that |psi0|^2 + int rho = 1 at t_begin.
  bool normalize = true;
  /// grid tracks
  std::vector<double> times;
  std::vector<complex> c_minus_list, c_plus_list, psi0_list;
  /// file tracks, resolved against the config directory
  std::string file;
  bool operator==(const TrackBlock&) const = default;
};

struct TraceBlock {
  TraceMode mode = TraceMode::absorb;
  double r0 = 0.2;
  double theta0 = 1.0;
  double phi0 = 0.0;
  /// emission time for mode = emit
  double t0 = 0.0;
  double t_max = INFINITY;
  bool operator==(const TraceBlock&) const = default;
};

struct SimulateBlock {
  /// "vacuum", "particle" or "sample" (drawn from |psi0|^2 and rho)
  std::string initial = "vacuum";
  double r0 = 0.1;
  double theta0 = 1.0;
  double phi0 = 0.0;
  bool frozen = false;
  double r_seed = 0.0;
  bool operator==(const SimulateBlock&) const = default;
};

struct EnsembleBlock {
  std::size_t n_paths = 10000;
  std::size_t n_grid = 101;
  std::size_t time_bins = 50;
  int angle_bins = 10;
  double r_probe = 1e-4;
  unsigned threads = 0;
  bool require_balance = false;
  double balance_tol = 1e-6;
  bool operator==(const EnsembleBlock&) const = default;
};

struct RunBlock {
  std::optional<std::uint64_t> seed;
  double tol = 1e-10;
  std::string output_dir;
  TraceBlock trace;
  SimulateBlock simulate;
  EnsembleBlock ensemble;
  bool operator==(const RunBlock&) const = default;
};

struct RunConfig {
  ParamsBlock params;
  ModelBlock model;
  TrackBlock track;
  RunBlock run;
  bool operator==(const RunConfig&) const = default;

  PhysParams physical() const;
  std::uint64_t require_seed(const std::string& command) const {
    if (!run.seed) throw ValidationError(command + " is stochastic and needs run.seed");
    return *run.seed;
  }
};

namespace config_detail {

struct Entry {
  std::string value;
  int line = 0;
  int column = 0;
  bool used = false;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_name(const std::string& s) {
  if (s.empty() || s.front() == '.' || s.back() == '.') return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
                    (c == '.' && s[i - 1] != '.');
    if (!ok) return false;
  }
  return true;
}

// Strip a trailing comment that is preceded by whitespace.
inline std::string strip_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '#' || s[i] == ';') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
      return s.substr(0, i);
    }
  }
  return s;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  [[noreturn]] static void fail(const Entry& e, const std::string& what) {
    throw ParseError(what, e.line, e.column);
  }

  static std::vector<std::string> words(const std::string& v) {
    std::istringstream is(v);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
  }

  static double to_double(const Entry& e, const std::string& w) {
    if (w == "inf" || w == "+inf") return INFINITY;
    double x = 0;
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
    if (ec != std::errc() || ptr != w.data() + w.size()) fail(e, "not a number: '" + w + "'");
    return x;
  }

  void number(const std::string& key, double& out) {
    if (const Entry* e = find(key)) {
      const auto w = words(e->value);
      if (w.size() != 1) fail(*e, key + " takes one number");
      out = to_double(*e, w[0]);
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const Entry* e = find(key)) {
      const auto w = words(e->value);
      Int x{};
      if (w.size() != 1) fail(*e, key + " takes one integer");
      const auto [ptr, ec] = std::from_chars(w[0].data(), w[0].data() + w[0].size(), x);
      if (ec != std::errc() || ptr != w[0].data() + w[0].size()) {
        fail(*e, "not a valid integer for " + key + ": '" + w[0] + "'");
      }
      out = x;
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const Entry* e = find(key)) {
      if (e->value == "true") out = true;
      else if (e->value == "false") out = false;
      else fail(*e, key + " must be true or false");
    }
  }

  void word(const std::string& key, std::string& out) {
    if (const Entry* e = find(key)) out = e->value;
  }

  static complex parse_complex(const Entry& e, const std::string& text, const std::string& key) {
    const auto w = words(text);
    if (w.size() != 2) fail(e, key + " takes a complex value 're im'");
    return {to_double(e, w[0]), to_double(e, w[1])};
  }

  void complex_value(const std::string& key, complex& out) {
    if (const Entry* e = find(key)) out = parse_complex(*e, e->value, key);
  }

  void complex_list(const std::string& key, std::vector<complex>& out) {
    if (const Entry* e = find(key)) {
      out.clear();
      std::istringstream is(e->value);
      for (std::string part; std::getline(is, part, ',');) out.push_back(parse_complex(*e, part, key));
    }
  }

  void number_list(const std::string& key, std::vector<double>& out) {
    if (const Entry* e = find(key)) {
      out.clear();
      for (const auto& w : words(e->value)) out.push_back(to_double(*e, w));
    }
  }

  void check_all_used() const {
    for (const auto& [k, e] : entries_) {
      if (!e.used) fail(e, "unknown key '" + k + "'");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

inline std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string cnum(complex z) { return num(z.real()) + " " + num(z.imag()); }

}  // namespace config_detail

inline PhysParams RunConfig::physical() const {
  const double q = params.q;
  try {
    if (params.a) {
      const auto& a = *params.a;
      return make_params(q, params.g, a[0], a[1], a[2], a[3], params.m_tilde,
                         params.kappa_tilde);
    }
    const double B = std::sqrt(std::max(0.0, 1.0 - q * q));
    return make_params(q, params.g, 1.0, 0.0, 0.0, 4.0 * B * (1.0 + q), params.m_tilde,
                       params.kappa_tilde);
  } catch (const Error& e) {
    throw ValidationError(std::string("params: ") + e.what());
  }
}

/// Parses and validates a configuration.  Relative file paths are resolved
/// against base_dir.
inline RunConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  std::map<std::string, Entry> entries;
  std::istringstream is(text);
  std::string section;
  int line_no = 0;
  for (std::string raw; std::getline(is, raw);) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, indent);
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) throw ParseError("bad section name '" + section + "'", line_no, indent + 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no, indent);
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw ParseError("bad key '" + key + "'", line_no, indent);
    if (section.empty()) throw ParseError("entry outside any section", line_no, indent);
    const std::string full = section + "." + key;
    const std::string value = trim(line.substr(eq + 1));
    const auto raw_eq = raw.find('=');
    const auto value_pos = raw.find_first_not_of(" \t", raw_eq + 1);
    const int value_col = static_cast<int>(value_pos == std::string::npos ? raw_eq + 1 : value_pos) + 1;
    if (value.empty()) throw ParseError("missing value for '" + full + "'", line_no, value_col);
    if (auto it = entries.find(full); it != entries.end()) {
      throw ParseError("duplicate key '" + full + "' (first set on line " +
                           std::to_string(it->second.line) + ")",
                       line_no, indent);
    }
    entries[full] = Entry{value, line_no, value_col};
  }

  Reader rd(std::move(entries));
  RunConfig c;

  rd.number("params.q", c.params.q);
  rd.complex_value("params.g", c.params.g);
  {
    std::vector<double> a;
    rd.number_list("params.a", a);
    if (const Entry* e = rd.find("params.a")) {
      if (a.size() != 4) Reader::fail(*e, "params.a takes four numbers a1 a2 a3 a4");
      c.params.a = std::array<double, 4>{a[0], a[1], a[2], a[3]};
    }
  }
  {
    double m = c.params.m_tilde.value();
    rd.number("params.m_tilde", m);
    if (const Entry* e = rd.find("params.m_tilde")) {
      try {
        c.params.m_tilde = HalfInt::from_double(m);
      } catch (const DomainError& err) {
        Reader::fail(*e, err.what());
      }
    }
  }
  rd.integer("params.kappa_tilde", c.params.kappa_tilde);

  rd.number("model.r_cut", c.model.r_cut);
  rd.number("model.r_min", c.model.r_min);
  rd.boolean("model.subleading", c.model.subleading);
  rd.complex_value("model.sub_minus", c.model.sub_minus);
  rd.complex_value("model.sub_plus", c.model.sub_plus);

  if (const Entry* e = rd.find("track.kind")) {
    const std::string& k = e->value;
    if (k == "constant") c.track.kind = TrackKind::constant;
    else if (k == "balanced") c.track.kind = TrackKind::balanced;
    else if (k == "grid") c.track.kind = TrackKind::grid;
    else if (k == "file") c.track.kind = TrackKind::file;
    else Reader::fail(*e, "track.kind must be constant, balanced, grid or file");
  }
  rd.number("track.t_begin", c.track.t_begin);
  rd.number("track.t_end", c.track.t_end);
  rd.integer("track.n_grid", c.track.n_grid);
  rd.complex_value("track.c_minus", c.track.c_minus);
  rd.complex_value("track.c_plus", c.track.c_plus);
  rd.complex_value("track.psi0", c.track.psi0);
  rd.number("track.p0", c.track.p0);
  rd.boolean("track.normalize", c.track.normalize);
  rd.number_list("track.times", c.track.times);
  rd.complex_list("track.c_minus_list", c.track.c_minus_list);
  rd.complex_list("track.c_plus_list", c.track.c_plus_list);
  rd.complex_list("track.psi0_list", c.track.psi0_list);
  const Entry* file_entry = rd.find("track.file");
  if (file_entry) {
    std::filesystem::path f(file_entry->value);
    if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
    c.track.file = f.lexically_normal().string();
  }

  {
    std::uint64_t seed = 0;
    if (rd.find("run.seed")) {
      rd.integer("run.seed", seed);
      c.run.seed = seed;
    }
  }
  rd.number("run.tol", c.run.tol);
  rd.word("run.output_dir", c.run.output_dir);

  auto& tr = c.run.trace;
  if (const Entry* e = rd.find("run.trace.mode")) {
    if (e->value == "absorb") tr.mode = TraceMode::absorb;
    else if (e->value == "emit") tr.mode = TraceMode::emit;
    else Reader::fail(*e, "run.trace.mode must be absorb or emit");
  }
  rd.number("run.trace.r0", tr.r0);
  rd.number("run.trace.theta0", tr.theta0);
  rd.number("run.trace.phi0", tr.phi0);
  rd.number("run.trace.t0", tr.t0);
  rd.number("run.trace.t_max", tr.t_max);

  auto& sm = c.run.simulate;
  if (const Entry* e = rd.find("run.simulate.initial")) {
    if (e->value != "vacuum" && e->value != "particle" && e->value != "sample") {
      Reader::fail(*e, "run.simulate.initial must be vacuum, particle or sample");
    }
    sm.initial = e->value;
  }
  rd.number("run.simulate.r0", sm.r0);
  rd.number("run.simulate.theta0", sm.theta0);
  rd.number("run.simulate.phi0", sm.phi0);
  rd.boolean("run.simulate.frozen", sm.frozen);
  rd.number("run.simulate.r_seed", sm.r_seed);

  auto& en = c.run.ensemble;
  rd.integer("run.ensemble.n_paths", en.n_paths);
  rd.integer("run.ensemble.n_grid", en.n_grid);
  rd.integer("run.ensemble.time_bins", en.time_bins);
  rd.integer("run.ensemble.angle_bins", en.angle_bins);
  rd.number("run.ensemble.r_probe", en.r_probe);
  rd.integer("run.ensemble.threads", en.threads);
  rd.boolean("run.ensemble.require_balance", en.require_balance);
  rd.number("run.ensemble.balance_tol", en.balance_tol);

  rd.check_all_used();

  // Semantic validation.
  c.physical();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  require(c.model.r_cut > 0 && std::isfinite(c.model.r_cut), "model.r_cut must be positive");
  require(c.model.r_min > 0 && c.model.r_min < 0.5 * c.model.r_cut,
          "model.r_min must lie in (0, r_cut/2)");
  require(c.track.t_end > c.track.t_begin, "track.t_end must exceed track.t_begin");
  require(c.track.n_grid >= 2, "track.n_grid must be at least 2");
  require(c.track.p0 >= 0 && c.track.p0 <= 1, "track.p0 must lie in [0, 1]");
  if (c.track.kind == TrackKind::grid) {
    const std::size_t n = c.track.times.size();
    require(n >= 2, "grid tracks need at least two track.times");
    require(c.track.c_minus_list.size() == n && c.track.c_plus_list.size() == n &&
                c.track.psi0_list.size() == n,
            "track.c_minus_list, c_plus_list and psi0_list must match track.times in length");
  }
  if (c.track.kind == TrackKind::file) {
    require(!c.track.file.empty(), "file tracks need track.file");
    require(std::filesystem::is_regular_file(c.track.file),
            "track file not found: " + c.track.file);
  }
  require(c.run.tol > 0 && c.run.tol < 1, "run.tol must lie in (0, 1)");
  require(tr.r0 > 0 && tr.r0 < 0.5 * c.model.r_cut, "run.trace.r0 must lie in (0, r_cut/2)");
  require(tr.theta0 >= 0 && tr.theta0 <= kPi, "run.trace.theta0 must lie in [0, pi]");
  require(sm.r0 > 0, "run.simulate.r0 must be positive");
  require(sm.theta0 >= 0 && sm.theta0 <= kPi, "run.simulate.theta0 must lie in [0, pi]");
  require(sm.r_seed >= 0, "run.simulate.r_seed must be nonnegative");
  require(en.n_grid >= 2 && en.time_bins >= 1 && en.angle_bins >= 1,
          "run.ensemble grid and bin counts must be positive");
  require(en.r_probe >= 0 && en.r_probe < 0.5 * c.model.r_cut,
          "run.ensemble.r_probe must lie in [0, r_cut/2)");
  require(en.balance_tol > 0, "run.ensemble.balance_tol must be positive");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

/// Canonical text form; every resolved field is written, so that
/// parse_config(serialize(c)) == c.
inline std::string serialize(const RunConfig& c) {
  using namespace config_detail;
  std::ostringstream os;
  os << "[params]\n";
  os << "q = " << num(c.params.q) << "\n";
  os << "g = " << cnum(c.params.g) << "\n";
  if (c.params.a) {
    const auto& a = *c.params.a;
    os << "a = " << num(a[0]) << " " << num(a[1]) << " " << num(a[2]) << " " << num(a[3]) << "\n";
  }
  os << "m_tilde = " << num(c.params.m_tilde.value()) << "\n";
  os << "kappa_tilde = " << c.params.kappa_tilde << "\n";

  os << "\n[model]\n";
  os << "r_cut = " << num(c.model.r_cut) << "\n";
  os << "r_min = " << num(c.model.r_min) << "\n";
  os << "subleading = " << (c.model.subleading ? "true" : "false") << "\n";
  os << "sub_minus = " << cnum(c.model.sub_minus) << "\n";
  os << "sub_plus = " << cnum(c.model.sub_plus) << "\n";

  const auto& t = c.track;
  os << "\n[track]\n";
  os << "kind = " << to_string(t.kind) << "\n";
  os << "t_begin = " << num(t.t_begin) << "\n";
  os << "t_end = " << num(t.t_end) << "\n";
  os << "n_grid = " << t.n_grid << "\n";
  os << "c_minus = " << cnum(t.c_minus) << "\n";
  os << "c_plus = " << cnum(t.c_plus) << "\n";
  os << "psi0 = " << cnum(t.psi0) << "\n";
  os << "p0 = " << num(t.p0) << "\n";
  os << "normalize = " << (t.normalize ? "true" : "false") << "\n";
  auto list = [&](const char* key, const std::vector<complex>& v) {
    if (v.empty()) return;
    os << key << " = ";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << cnum(v[i]);
    os << "\n";
  };
  if (!t.times.empty()) {
    os << "times =";
    for (double x : t.times) os << " " << num(x);
    os << "\n";
  }
  list("c_minus_list", t.c_minus_list);
  list("c_plus_list", t.c_plus_list);
  list("psi0_list", t.psi0_list);
  if (!t.file.empty()) os << "file = " << t.file << "\n";

  os << "\n[run]\n";
  if (c.run.seed) os << "seed = " << *c.run.seed << "\n";
  os << "tol = " << num(c.run.tol) << "\n";
  if (!c.run.output_dir.empty()) os << "output_dir = " << c.run.output_dir << "\n";

  const auto& tr = c.run.trace;
  os << "\n[run.trace]\n";
  os << "mode = " << (tr.mode == TraceMode::absorb ? "absorb" : "emit") << "\n";
  os << "r0 = " << num(tr.r0) << "\n";
  os << "theta0 = " << num(tr.theta0) << "\n";
  os << "phi0 = " << num(tr.phi0) << "\n";
  os << "t0 = " << num(tr.t0) << "\n";
  os << "t_max = " << num(tr.t_max) << "\n";

  const auto& sm = c.run.simulate;
  os << "\n[run.simulate]\n";
  os << "initial = " << sm.initial << "\n";
  os << "r0 = " << num(sm.r0) << "\n";
  os << "theta0 = " << num(sm.theta0) << "\n";
  os << "phi0 = " << num(sm.phi0) << "\n";
  os << "frozen = " << (sm.frozen ? "true" : "false") << "\n";
  os << "r_seed = " << num(sm.r_seed) << "\n";

  const auto& en = c.run.ensemble;
  os << "\n[run.ensemble]\n";
  os << "n_paths = " << en.n_paths << "\n";
  os << "n_grid = " << en.n_grid << "\n";
  os << "time_bins = " << en.time_bins << "\n";
  os << "angle_bins = " << en.angle_bins << "\n";
  os << "r_probe = " << num(en.r_probe) << "\n";
  os << "threads = " << en.threads << "\n";
  os << "require_balance = " << (en.require_balance ? "true" : "false") << "\n";
  os << "balance_tol = " << num(en.balance_tol) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Tracks

/// Reads a track CSV with columns t, cm_re, cm_im, cp_re, cp_im, psi0_re,
/// psi0_im.  Lines starting with '#' and a non-numeric header are skipped.
inline CoefficientTrack read_track_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read track file " + path);
  std::vector<double> t;
  std::vector<complex> cm, cp, psi0;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string s = config_detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::vector<double> v;
    std::istringstream is(s);
    bool numeric = true;
    for (std::string cell; std::getline(is, cell, ',');) {
      cell = config_detail::trim(cell);
      double x = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        numeric = false;
        break;
      }
      v.push_back(x);
    }
    if (!numeric) {
      if (t.empty()) continue;  // header
      throw ParseError("non-numeric cell in track file " + path, line_no, 1);
    }
    if (v.size() != 7) throw ParseError("track rows need 7 columns", line_no, 1);
    t.push_back(v[0]);
    cm.emplace_back(v[1], v[2]);
    cp.emplace_back(v[3], v[4]);
    psi0.emplace_back(v[5], v[6]);
  }
  try {
    return CoefficientTrack(t, cm, cp, psi0);
  } catch (const DomainError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline ModelFamily model_family(const RunConfig& c) {
  const PhysParams p = c.physical();
  if (c.model.subleading) return ModelFamily{p, c.model.r_cut, c.model.sub_minus, c.model.sub_plus};
  return ModelFamily{p, c.model.r_cut, {}, {}};
}

/// Constant coefficients as configured, rescaled to the normalization when
/// requested.  `p0` is |psi0|^2 at t_begin.
inline std::pair<complex, complex> configured_coefficients(const RunConfig& c, double p0) {
  complex cm = c.track.c_minus, cp = c.track.c_plus;
  if (c.track.normalize) {
    const double lam = normalization_scale(c.physical(), cm, cp, c.model.r_cut, p0);
    cm *= lam;
    cp *= lam;
  }
  return {cm, cp};
}

inline CoefficientTrack build_track(const RunConfig& c) {
  const auto& t = c.track;
  try {
    switch (t.kind) {
      case TrackKind::constant: {
        const auto [cm, cp] = configured_coefficients(c, std::norm(t.psi0));
        return CoefficientTrack::constant(t.t_begin, t.t_end, cm, cp, t.psi0);
      }
      case TrackKind::balanced: {
        const auto [cm, cp] = configured_coefficients(c, t.p0);
        return balanced_track(c.physical(), uniform_grid(t.t_begin, t.t_end, t.n_grid),
                              [cm](double) { return cm; }, [cp](double) { return cp; }, t.p0);
      }
      case TrackKind::grid:
        return CoefficientTrack(t.times, t.c_minus_list, t.c_plus_list, t.psi0_list);
      case TrackKind::file:
        return read_track_csv(t.file);
    }
  } catch (const DomainError& e) {
    throw ValidationError(std::string("track: ") + e.what());
  }
  throw ValidationError("unknown track kind");
}

}  // namespace ibcjump
