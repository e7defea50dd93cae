#include "chafee/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace chafee {

namespace pt = boost::property_tree;

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::Spectrum, "spectrum"},     {Command::Simulate, "simulate"},
    {Command::SteadyStates, "steady-states"}, {Command::FtleSweep, "ftle-sweep"},
    {Command::EwsSweep, "ews-sweep"},    {Command::ExitSweep, "exit-sweep"},
    {Command::SyncCheck, "sync-check"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_u64(std::string_view s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(s)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + f(xs[i]);
  return s;
}

/// Reads typed values out of the tree and records what went wrong.
// inline comment: ';' or '#' after whitespace
std::string strip_comment(const std::string& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if ((v[i] == ';' || v[i] == '#') && (v[i - 1] == ' ' || v[i - 1] == '\t')) return v.substr(0, i);
  return v;
}

class Reader {
public:
  Reader(const pt::ptree& root, std::vector<std::string>& errors) : root_(root), errors_(errors) {}

  std::optional<std::string> raw(const std::string& path) {
    seen_.insert(path);
    const auto v = root_.get_optional<std::string>(pt::ptree::path_type(path, '/'));
    if (!v) return std::nullopt;
    return trim(strip_comment(*v));
  }
  bool has(const std::string& path) const {
    return root_.get_child_optional(pt::ptree::path_type(path, '/')).has_value();
  }

  void real(const std::string& path, double& out) {
    if (auto s = raw(path)) {
      if (*s == "pi" || *s == "2pi") {
        out = (*s == "pi" ? 1.0 : 2.0) * std::numbers::pi;
      } else if (auto v = to_double(*s)) {
        out = *v;
      } else {
        bad(path, *s, "a number");
      }
    }
  }
  template <class I>
  void integer(const std::string& path, I& out) {
    if (auto s = raw(path)) {
      if (auto v = to_u64(*s)) out = static_cast<I>(*v);
      else bad(path, *s, "a non-negative integer");
    }
  }
  void string(const std::string& path, std::string& out) {
    if (auto s = raw(path)) out = *s;
  }
  void reals(const std::string& path, std::vector<double>& out) {
    if (auto s = raw(path)) {
      out.clear();
      for (const auto& item : split_list(*s)) {
        if (auto v = to_double(item)) out.push_back(*v);
        else bad(path, item, "a number");
      }
    }
  }
  void indices(const std::string& path, std::vector<std::size_t>& out) {
    if (auto s = raw(path)) {
      out.clear();
      for (const auto& item : split_list(*s)) {
        if (auto v = to_u64(item)) out.push_back(static_cast<std::size_t>(*v));
        else bad(path, item, "a non-negative integer");
      }
    }
  }
  void bad(const std::string& path, const std::string& value, const char* expected) {
    errors_.push_back(dotted(path) + ": expected " + expected + ", got '" + value + "'");
  }

  void report_unknown() {
    for (const auto& [key, child] : root_) {
      if (child.empty()) {
        if (!seen_.count(key)) errors_.push_back("unknown key '" + key + "'");
        continue;
      }
      for (const auto& [sub, leaf] : child) {
        (void)leaf;
        const std::string path = key + "/" + sub;
        if (!seen_.count(path)) errors_.push_back("unknown key '" + dotted(path) + "'");
      }
    }
  }

  static std::string dotted(std::string p) {
    for (auto& c : p)
      if (c == '/') c = '.';
    return p;
  }

private:
  const pt::ptree& root_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_noise(Reader& r, NoiseBlock& n) {
  std::string spec;
  if (r.has("noise/spec")) {
    r.string("noise/spec", spec);
    if (spec == "identity") {
      n.kind = NoiseBlock::Kind::Identity;
    } else if (spec == "explicit") {
      n.kind = NoiseBlock::Kind::Explicit;
    } else if (spec.rfind("random:", 0) == 0) {
      n.kind = NoiseBlock::Kind::Random;
      if (auto v = to_u64(spec.substr(7))) n.random_seed = *v;
      else r.bad("noise/spec", spec, "identity, explicit or random:<seed>");
    } else if (spec == "random") {
      n.kind = NoiseBlock::Kind::Random;
    } else {
      r.bad("noise/spec", spec, "identity, explicit or random:<seed>");
    }
  } else {
    r.raw("noise/spec");
  }
  r.integer("noise/M", n.M);
  r.integer("noise/D", n.D);
  r.real("noise/q_all", n.q_all);
  r.reals("noise/q", n.q);
  r.reals("noise/mix", n.mix);
}

void read_sim(Reader& r, SimConfig& sim, std::vector<std::string>& errors) {
  const bool has_dt = r.has("sim/dt"), has_nt = r.has("sim/nt"), has_T = r.has("sim/T");
  double T = 0.0;
  r.real("sim/dt", sim.dt);
  r.integer("sim/nt", sim.nt);
  r.real("sim/T", T);
  r.real("sim/sigma", sim.sigma);
  r.integer("sim/stride", sim.snapshot_stride);
  r.integer("sim/burn_in", sim.burn_in);
  if (!has_T) return;
  if (!(T > 0.0)) {
    errors.push_back("sim.T: must be positive, got " + fmt(T));
    return;
  }
  if (has_nt && !has_dt) {
    if (sim.nt > 0) sim.dt = T / static_cast<double>(sim.nt);
    return;
  }
  if (!(sim.dt > 0.0)) return;
  const double steps = T / sim.dt;
  if (has_nt) {
    if (std::fabs(steps - static_cast<double>(sim.nt)) > 0.5)
      errors.push_back("sim: nt = " + std::to_string(sim.nt) + " is inconsistent with T = " + fmt(T) +
                       " and dt = " + fmt(sim.dt) + " (T/dt = " + fmt(steps) + ")");
    return;
  }
  sim.nt = static_cast<std::int64_t>(std::llround(steps));
}

void read_alpha(Reader& r, const std::string& path, AlphaToken& out) {
  if (auto s = r.raw(path)) {
    if (auto t = AlphaToken::parse(*s)) out = *t;
    else r.bad(path, *s, "a number or lambda1[+-offset]");
  }
}

void read_sweep(Reader& r, SweepBlock& w) {
  if (auto s = r.raw("sweep/alpha")) {
    w.alpha.clear();
    for (const auto& item : split_list(*s)) {
      if (auto t = AlphaToken::parse(item)) w.alpha.push_back(*t);
      else r.bad("sweep/alpha", item, "a number or lambda1[+-offset]");
    }
  }
  if (auto s = r.raw("sweep/drift")) {
    if (*s == "ramp") w.ramp = true;
    else if (*s == "constant") w.ramp = false;
    else r.bad("sweep/drift", *s, "constant or ramp");
  }
  read_alpha(r, "sweep/alpha0", w.ramp_alpha0);
  r.real("sweep/eps", w.ramp_eps);
  if (auto s = r.raw("sweep/alpha_max")) {
    if (s->empty() || *s == "none") {
      w.ramp_alpha_max.reset();
    } else if (auto t = AlphaToken::parse(*s)) {
      w.ramp_alpha_max = *t;
    } else {
      r.bad("sweep/alpha_max", *s, "none, a number or lambda1[+-offset]");
    }
  }
  r.reals("sweep/h", w.h);
  r.integer("sweep/k", w.k);
  r.integer("sweep/ensemble", w.ensemble);
  r.integer("sweep/modes", w.modes);
  r.indices("sweep/mode_index", w.mode_index);
  r.indices("sweep/points", w.points);
  r.integer("sweep/m_trunc", w.m_trunc);
  if (auto s = r.raw("sweep/model")) {
    if (*s == "linear") w.model = Model::Linear;
    else if (*s == "nonlinear") w.model = Model::Nonlinear;
    else r.bad("sweep/model", *s, "linear or nonlinear");
  }
  r.real("sweep/s", w.s);
  r.integer("sweep/sobolev_modes", w.sobolev_modes);
  r.integer("sweep/k_max", w.k_max);
  r.real("sweep/gap", w.gap);
  r.real("sweep/tol", w.tol);
}

bool uses_alpha_ladder(Command c) {
  return c == Command::Simulate || c == Command::SteadyStates || c == Command::FtleSweep ||
         c == Command::EwsSweep || c == Command::SyncCheck;
}

bool integrates(Command c) { return c != Command::Spectrum && c != Command::SteadyStates; }

void validate(const ExperimentConfig& c, std::vector<std::string>& errors) {
  if (!(c.L > 0.0) || !std::isfinite(c.L)) errors.push_back("grid.L: must be positive");
  if (c.N < 2) errors.push_back("grid.N: must be at least 2");
  const auto& n = c.noise;
  if (n.D > n.M) errors.push_back("noise: D must not exceed M");
  if (n.M == 0) errors.push_back("noise.M: must be positive");
  if (integrates(c.command) && c.N >= 2 && n.M > c.N) errors.push_back("noise.M: must not exceed grid.N");
  if (n.kind == NoiseBlock::Kind::Explicit) {
    if (n.q.size() != n.M) errors.push_back("noise.q: expected M = " + std::to_string(n.M) + " values");
    if (n.mix.size() != n.D * n.D) errors.push_back("noise.mix: expected D*D values");
  }
  if (integrates(c.command)) {
    if (!(c.sim.dt > 0.0)) errors.push_back("sim.dt: must be positive");
    if (c.sim.nt < 1) errors.push_back("sim.nt: must be at least 1");
    if (!(c.sim.sigma >= 0.0)) errors.push_back("sim.sigma: must be non-negative");
    if (c.sim.snapshot_stride < 1) errors.push_back("sim.stride: must be at least 1");
    if (c.sim.burn_in >= c.sim.nt && c.sim.burn_in > 0) errors.push_back("sim.burn_in: must be below nt");
  }
  const auto& w = c.sweep;
  if (uses_alpha_ladder(c.command) && w.alpha.empty()) errors.push_back("sweep.alpha: ladder is empty");
  if (c.command == Command::Spectrum && (w.modes == 0 || (c.N >= 2 && w.modes > c.N)))
    errors.push_back("sweep.modes: must lie in [1, N]");
  if (c.command == Command::FtleSweep) {
    if (w.k == 0 || (c.N >= 2 && w.k > c.N)) errors.push_back("sweep.k: must lie in [1, N]");
    if (w.ensemble == 0) errors.push_back("sweep.ensemble: must be positive");
  }
  if (c.command == Command::EwsSweep) {
    if (w.mode_index.empty() && w.points.empty())
      errors.push_back("sweep: ews-sweep needs mode_index or points");
    for (auto k : w.mode_index)
      if (k == 0 || (c.N >= 2 && k > c.N)) errors.push_back("sweep.mode_index: " + std::to_string(k) + " out of range");
    for (auto p : w.points)
      if (p == 0 || p > c.N) errors.push_back("sweep.points: " + std::to_string(p) + " out of range");
    if (w.m_trunc == 0 || (c.N >= 2 && w.m_trunc > c.N)) errors.push_back("sweep.m_trunc: must lie in [1, N]");
    if (w.ensemble == 0) errors.push_back("sweep.ensemble: must be positive");
  }
  if (c.command == Command::ExitSweep) {
    if (w.h.empty()) errors.push_back("sweep.h: ladder is empty");
    for (std::size_t i = 0; i < w.h.size(); ++i)
      if (!(w.h[i] > 0.0) || (i > 0 && !(w.h[i] > w.h[i - 1])))
        errors.push_back("sweep.h: values must be positive and increasing");
    if (!w.ramp && w.alpha.empty()) errors.push_back("sweep.alpha: ladder is empty");
    if (!(w.s > 0.0 && w.s <= 1.0)) errors.push_back("sweep.s: must lie in (0, 1]");
    if (w.k_max < 1) errors.push_back("sweep.k_max: must be at least 1");
    if (w.ensemble == 0) errors.push_back("sweep.ensemble: must be positive");
  }
  if (c.command == Command::SyncCheck && !(w.gap > 0.0)) errors.push_back("sweep.gap: must be positive");
}

std::string join_violations(const std::vector<std::string>& v) {
  std::string s = "invalid configuration:";
  for (const auto& e : v) s += "\n  " + e;
  return s;
}

}  // namespace

std::string_view to_string(Command c) noexcept {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "?";
}

std::optional<Command> parse_command(std::string_view name) noexcept {
  for (const auto& [cmd, n] : kCommands)
    if (n == name) return cmd;
  return std::nullopt;
}

std::optional<AlphaToken> AlphaToken::parse(std::string_view text) {
  AlphaToken t;
  t.text = trim(text);
  std::string_view s = t.text;
  if (s.rfind("lambda1", 0) == 0) {
    t.relative = true;
    s.remove_prefix(7);
    if (s.empty()) return t;
    if (s.front() != '+' && s.front() != '-') return std::nullopt;
    const bool neg = s.front() == '-';
    const auto v = to_double(s.substr(1));
    if (!v || *v < 0.0) return std::nullopt;
    t.offset = neg ? -*v : *v;
    return t;
  }
  const auto v = to_double(s);
  if (!v || !std::isfinite(*v)) return std::nullopt;
  t.offset = *v;
  return t;
}

CovarianceSpec NoiseBlock::resolve() const {
  switch (kind) {
    case Kind::Identity:
      return CovarianceSpec::identity(M, D, q_all);
    case Kind::Random:
      return random_spec(M, D, random_seed);
    case Kind::Explicit:
      break;
  }
  CovarianceSpec spec;
  spec.M = M;
  spec.D = D;
  spec.q = q;
  spec.mix = mix;
  return spec;
}

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(ErrorKind::Config, join_violations(violations)), violations_(std::move(violations)) {}

namespace {

ExperimentConfig parse_impl(std::string_view text, const ExperimentConfig& base, bool require_command) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.what()});
  }
  std::vector<std::string> errors;
  static const std::set<std::string> kSections{"grid", "potential", "noise", "sim", "sweep", "output"};
  for (const auto& [key, child] : root)
    if (!child.empty() && !kSections.count(key)) errors.push_back("unknown section '[" + key + "]'");

  ExperimentConfig c = base;
  Reader r(root, errors);
  if (auto s = r.raw("command")) {
    if (auto cmd = parse_command(*s)) c.command = *cmd;
    else r.bad("command", *s, "one of spectrum, simulate, steady-states, ftle-sweep, ews-sweep, exit-sweep, sync-check");
  } else if (require_command) {
    errors.push_back("missing required key 'command'");
  }
  r.integer("seed", c.seed);
  if (!r.has("grid/L") && base.L == 0.0) errors.push_back("missing required key 'grid.L'");
  if (!r.has("grid/N") && base.N == 0) errors.push_back("missing required key 'grid.N'");
  r.real("grid/L", c.L);
  r.integer("grid/N", c.N);
  r.string("potential/g", c.potential);
  read_noise(r, c.noise);
  read_sim(r, c.sim, errors);
  read_sweep(r, c.sweep);
  r.string("output/dir", c.output_dir);
  r.report_unknown();
  validate(c, errors);
  if (c.L > 0.0 && std::isfinite(c.L) && c.N >= 2) {
    try {
      (void)c.make_potential();
    } catch (const Error& e) {
      errors.push_back(std::string("potential.g: ") + e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  return parse_impl(text, base, false);
}

ExperimentConfig parse_config(std::string_view text) { return parse_impl(text, ExperimentConfig{}, true); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& n = c.noise;
  const auto& w = c.sweep;
  o << "command = " << to_string(c.command) << "\n";
  o << "seed = " << c.seed << "\n\n";
  o << "[grid]\nL = " << fmt(c.L) << "\nN = " << c.N << "\n\n";
  o << "[potential]\ng = " << c.potential << "\n\n";
  o << "[noise]\nspec = ";
  switch (n.kind) {
    case NoiseBlock::Kind::Identity: o << "identity"; break;
    case NoiseBlock::Kind::Random: o << "random:" << n.random_seed; break;
    case NoiseBlock::Kind::Explicit: o << "explicit"; break;
  }
  o << "\nM = " << n.M << "\nD = " << n.D << "\nq_all = " << fmt(n.q_all)
    << "\nq = " << join(n.q, fmt) << "\nmix = " << join(n.mix, fmt) << "\n\n";
  o << "[sim]\ndt = " << fmt(c.sim.dt) << "\nnt = " << c.sim.nt << "\nsigma = " << fmt(c.sim.sigma)
    << "\nstride = " << c.sim.snapshot_stride << "\nburn_in = " << c.sim.burn_in << "\n\n";
  const auto tok = [](const AlphaToken& t) { return t.text; };
  const auto idx = [](std::size_t i) { return std::to_string(i); };
  o << "[sweep]\nalpha = " << join(w.alpha, tok) << "\ndrift = " << (w.ramp ? "ramp" : "constant")
    << "\nalpha0 = " << (w.ramp_alpha0.text.empty() ? "0" : w.ramp_alpha0.text) << "\neps = " << fmt(w.ramp_eps)
    << "\nalpha_max = " << (w.ramp_alpha_max ? w.ramp_alpha_max->text : "none") << "\nh = " << join(w.h, fmt)
    << "\nk = " << w.k << "\nensemble = " << w.ensemble << "\nmodes = " << w.modes
    << "\nmode_index = " << join(w.mode_index, idx) << "\npoints = " << join(w.points, idx)
    << "\nm_trunc = " << w.m_trunc << "\nmodel = " << to_string(w.model) << "\ns = " << fmt(w.s)
    << "\nsobolev_modes = " << w.sobolev_modes << "\nk_max = " << w.k_max << "\ngap = " << fmt(w.gap)
    << "\ntol = " << fmt(w.tol) << "\n\n";
  o << "[output]\ndir = " << c.output_dir << "\n";
  return o.str();
}

namespace {

std::vector<AlphaToken> tokens(std::initializer_list<const char*> xs) {
  std::vector<AlphaToken> out;
  for (const char* x : xs) out.push_back(*AlphaToken::parse(x));
  return out;
}

ExperimentConfig paper_base(std::size_t N, const char* g) {
  ExperimentConfig c;
  c.L = 2.0 * std::numbers::pi;
  c.N = N;
  c.potential = g;
  c.noise.kind = NoiseBlock::Kind::Random;
  c.noise.M = c.noise.D = 10;
  return c;
}

ExperimentConfig simulate_profile(const char* g, std::initializer_list<const char*> alphas) {
  ExperimentConfig c = paper_base(200, g);
  c.command = Command::Simulate;
  c.sim.nt = 100000;
  c.sim.dt = 10000.0 / 100000.0;
  c.sim.sigma = 0.05;
  c.sim.snapshot_stride = 100;
  c.sweep.alpha = tokens(alphas);
  c.output_dir = "out";
  return c;
}

ExperimentConfig ews_profile(const char* g) {
  ExperimentConfig c = paper_base(100, g);
  c.command = Command::EwsSweep;
  c.sim.nt = 100000;
  c.sim.dt = 5000.0 / 100000.0;
  c.sim.sigma = 0.01;
  c.sim.burn_in = 10000;
  c.sweep.alpha = tokens({"lambda1-0.4", "lambda1-0.2", "lambda1-0.1", "lambda1-0.05", "lambda1-0.02"});
  c.sweep.ensemble = 10;
  return c;
}

}  // namespace

std::optional<ExperimentConfig> profile(std::string_view name) {
  if (name == "fig1") return simulate_profile("cos3plus1", {"1.15", "1.25"});
  if (name == "fig2") return simulate_profile("linear", {"0.65", "0.75"});
  if (name == "fig3") {
    ExperimentConfig c = ews_profile("cos3plus1");
    c.sweep.mode_index = {1, 2, 3, 4, 5};
    c.sweep.points.clear();
    return c;
  }
  if (name == "fig4" || name == "fig5") {
    ExperimentConfig c = ews_profile(name == "fig4" ? "cos3plus1" : "linear");
    c.sweep.mode_index.clear();
    c.sweep.points = {20, 50, 70};
    return c;
  }
  return std::nullopt;
}

std::vector<std::string> profile_names() { return {"fig1", "fig2", "fig3", "fig4", "fig5"}; }

}  // namespace chafee
