#pragma once

// Run configuration: a flat, sectioned key = value document.
//
//   # comment
//   [grid]
//   nx = 64
//   ...
//
// Every key is validated against the schema below; unknown sections and keys
// are rejected with the offending line number.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "activefv/errors.hpp"
#include "activefv/expression.hpp"
#include "activefv/grid.hpp"
#include "activefv/initial.hpp"
#include "activefv/stepper.hpp"

namespace activefv {

enum class InitialPreset { uniform, two_bump, custom };

struct InitialSpec {
  InitialPreset preset = InitialPreset::two_bump;
  double center_offset = 0.125;
  double half_width = 0.125;
  std::string expression;
  int quadrature_order = 4;
  bool normalize = true;
};

struct OutputSpec {
  std::string directory = "output";
  std::vector<double> snapshot_times;
  bool write_snapshots = true;
  bool write_csv = true;
};

struct RunConfig {
  int nx = 0, ny = 1, ntheta = 0;
  double dt = 0.0, T = 0.0;
  ModelParams params;
  InitialSpec initial;
  StepOptions solver;
  OutputSpec output;

  GridSpec grid() const { return build_grid(nx, ny, ntheta, dt, T); }
};

inline std::function<DensityField(const GridSpec&)> make_initial(const InitialSpec& spec) {
  switch (spec.preset) {
    case InitialPreset::uniform:
      return [](const GridSpec& g) { return uniform_state(g); };
    case InitialPreset::two_bump:
      return [spec](const GridSpec& g) {
        return two_bump(g, spec.center_offset, spec.half_width);
      };
    case InitialPreset::custom: {
      const Expression expr = Expression::parse(spec.expression);
      return [spec, expr](const GridSpec& g) {
        return cell_average_init(expr, g, spec.quadrature_order, spec.normalize);
      };
    }
  }
  throw ConfigError("unknown initial preset");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  int line;
};

class Document {
 public:
  explicit Document(const std::string& text) {
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = raw;
      // '#' starts a comment
      const auto hash = s.find('#');
      if (hash != std::string::npos) s = s.substr(0, hash);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ParseError("malformed section header", line);
        section = trim(s.substr(1, s.size() - 2));
        if (!known_.count(section)) throw ParseError("unknown section [" + section + "]", line);
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ParseError("expected key = value", line);
      if (section.empty()) throw ParseError("key outside of a section", line);
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (!known_.at(section).count(key))
        throw ParseError("unknown key '" + key + "' in [" + section + "]", line);
      const std::string full = section + "." + key;
      if (entries_.count(full)) throw ParseError("duplicate key '" + full + "'", line);
      if (value.empty()) throw ParseError("empty value for '" + full + "'", line);
      entries_[full] = {value, line};
    }
  }

  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const Entry& require(const std::string& key) const {
    if (const Entry* e = find(key)) return *e;
    throw ParseError("missing required key '" + key + "'", 0);
  }

 private:
  std::map<std::string, Entry> entries_;
  const std::map<std::string, std::set<std::string>> known_{
      {"grid", {"nx", "ny", "ntheta", "dt", "T"}},
      {"params", {"D_T", "Pe", "gamma", "alpha", "kernel", "lambda", "tau"}},
      {"initial",
       {"preset", "center_offset", "half_width", "expression", "quadrature_order",
        "normalize"}},
      {"solver",
       {"picard_tol", "picard_max_iters", "linear_tol", "linear_method", "elliptic_tol",
        "elliptic_method", "stability_warnings"}},
      {"output", {"directory", "snapshot_times", "formats"}},
  };
};

inline double to_double(const Entry& e, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("'" + key + "' expects a number, got '" + e.value + "'", e.line);
  }
}

inline int to_int(const Entry& e, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ParseError("'" + key + "' expects an integer, got '" + e.value + "'", e.line);
  }
}

inline bool to_bool(const Entry& e, const std::string& key) {
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ParseError("'" + key + "' expects true/false, got '" + e.value + "'", e.line);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  using namespace detail;
  const Document doc(text);
  RunConfig cfg;

  auto num = [&](const std::string& k) { return to_double(doc.require(k), k); };
  auto integer = [&](const std::string& k) { return to_int(doc.require(k), k); };
  auto opt_num = [&](const std::string& k, double& out) {
    if (const Entry* e = doc.find(k)) out = to_double(*e, k);
  };
  auto opt_int = [&](const std::string& k, int& out) {
    if (const Entry* e = doc.find(k)) out = to_int(*e, k);
  };
  auto opt_bool = [&](const std::string& k, bool& out) {
    if (const Entry* e = doc.find(k)) out = to_bool(*e, k);
  };
  auto line_of = [&](const std::string& k) {
    const Entry* e = doc.find(k);
    return e ? e->line : 0;
  };
  auto check = [&](bool ok, const std::string& k, const std::string& msg) {
    if (!ok) throw ParseError("invalid '" + k + "': " + msg, line_of(k));
  };

  // [grid]
  cfg.nx = integer("grid.nx");
  opt_int("grid.ny", cfg.ny);
  cfg.ntheta = integer("grid.ntheta");
  cfg.dt = num("grid.dt");
  cfg.T = num("grid.T");
  check(cfg.nx >= 1, "grid.nx", "must be >= 1");
  check(cfg.ny >= 1, "grid.ny", "must be >= 1");
  check(cfg.ntheta >= 1, "grid.ntheta", "must be >= 1");
  check(cfg.dt > 0.0, "grid.dt", "must be > 0");
  check(cfg.T >= 0.0, "grid.T", "must be >= 0");
  try {
    (void)cfg.grid();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), line_of("grid.T"));
  }

  // [params]
  ModelParams& p = cfg.params;
  p.D_T = num("params.D_T");
  p.Pe = num("params.Pe");
  p.gamma = num("params.gamma");
  p.alpha = num("params.alpha");
  check(p.D_T > 0.0, "params.D_T", "must be > 0");
  check(p.Pe >= 0.0, "params.Pe", "must be >= 0");
  check(p.gamma >= 0.0, "params.gamma", "must be >= 0");
  check(p.alpha > 0.0, "params.alpha", "must be > 0");
  const Entry& kernel = doc.require("params.kernel");
  const Entry* lambda = doc.find("params.lambda");
  const Entry* tau = doc.find("params.tau");
  if (kernel.value == "B0") {
    if (lambda || tau)
      throw ParseError("lambda/tau given but kernel is B0", (lambda ? lambda : tau)->line);
    p.kernel = KernelKind::b0();
  } else if (kernel.value == "Blambda") {
    if (!lambda) throw ParseError("lambda required for kernel Blambda", kernel.line);
    if (tau) throw ParseError("tau given but kernel is Blambda", tau->line);
    const double v = to_double(*lambda, "params.lambda");
    check(v >= 0.0, "params.lambda", "must be >= 0");
    p.kernel = KernelKind::blambda(v);
  } else if (kernel.value == "Btau") {
    if (!tau) throw ParseError("tau required for kernel Btau", kernel.line);
    if (lambda) throw ParseError("lambda given but kernel is Btau", lambda->line);
    const double v = to_double(*tau, "params.tau");
    check(v >= 0.0, "params.tau", "must be >= 0");
    p.kernel = KernelKind::btau(v);
  } else {
    throw ParseError("unknown kernel '" + kernel.value + "' (expected B0, Blambda or Btau)",
                     kernel.line);
  }

  // [initial]
  InitialSpec& ic = cfg.initial;
  const Entry& preset = doc.require("initial.preset");
  if (preset.value == "uniform") {
    ic.preset = InitialPreset::uniform;
  } else if (preset.value == "two_bump") {
    ic.preset = InitialPreset::two_bump;
    opt_num("initial.center_offset", ic.center_offset);
    opt_num("initial.half_width", ic.half_width);
    check(ic.half_width > 0.0, "initial.half_width", "must be > 0");
  } else if (preset.value == "custom") {
    ic.preset = InitialPreset::custom;
    const Entry& ex = doc.require("initial.expression");
    ic.expression = ex.value;
    try {
      (void)Expression::parse(ic.expression);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), ex.line);
    }
  } else {
    throw ParseError("unknown preset '" + preset.value + "'", preset.line);
  }
  opt_int("initial.quadrature_order", ic.quadrature_order);
  opt_bool("initial.normalize", ic.normalize);
  check(ic.quadrature_order >= 1, "initial.quadrature_order", "must be >= 1");

  // [solver]
  StepOptions& s = cfg.solver;
  opt_num("solver.picard_tol", s.picard_tol);
  opt_int("solver.picard_max_iters", s.picard_max_iters);
  opt_num("solver.linear_tol", s.linear.rel_residual_tol);
  opt_num("solver.elliptic_tol", s.elliptic.rel_residual_tol);
  opt_bool("solver.stability_warnings", s.stability_warnings);
  check(s.picard_tol > 0.0, "solver.picard_tol", "must be > 0");
  check(s.picard_max_iters >= 1, "solver.picard_max_iters", "must be >= 1");
  check(s.linear.rel_residual_tol > 0.0, "solver.linear_tol", "must be > 0");
  check(s.elliptic.rel_residual_tol > 0.0, "solver.elliptic_tol", "must be > 0");
  if (const Entry* e = doc.find("solver.linear_method")) {
    if (e->value == "direct") s.linear.method = LinearMethod::direct;
    else if (e->value == "iterative") s.linear.method = LinearMethod::iterative;
    else throw ParseError("unknown linear_method '" + e->value + "'", e->line);
  }
  if (const Entry* e = doc.find("solver.elliptic_method")) {
    if (e->value == "direct") s.elliptic.method = EllipticMethod::direct;
    else if (e->value == "iterative") s.elliptic.method = EllipticMethod::iterative;
    else if (e->value == "spectral") s.elliptic.method = EllipticMethod::spectral;
    else throw ParseError("unknown elliptic_method '" + e->value + "'", e->line);
  }

  // [output]
  OutputSpec& out = cfg.output;
  if (const Entry* e = doc.find("output.directory")) out.directory = e->value;
  if (const Entry* e = doc.find("output.snapshot_times")) {
    for (const std::string& item : split_list(e->value)) {
      const double t = to_double(Entry{item, e->line}, "output.snapshot_times");
      if (!(t >= 0.0)) throw ParseError("snapshot times must be >= 0", e->line);
      out.snapshot_times.push_back(t);
    }
  }
  if (const Entry* e = doc.find("output.formats")) {
    out.write_snapshots = out.write_csv = false;
    for (const std::string& item : split_list(e->value)) {
      if (item == "snapshot") out.write_snapshots = true;
      else if (item == "csv") out.write_csv = true;
      else throw ParseError("unknown output format '" + item + "'", e->line);
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace activefv
