#include "defreg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace defreg {

Mode parse_mode(const std::string& s) {
  if (s == "pbnrr") return Mode::pbnrr;
  if (s == "nemnrr") return Mode::nemnrr;
  if (s == "anrr") return Mode::anrr;
  throw ConfigError("unknown mode '" + s + "' (pbnrr, nemnrr, anrr)");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::pbnrr: return "pbnrr";
    case Mode::nemnrr: return "nemnrr";
    case Mode::anrr: return "anrr";
  }
  return "?";
}

SizingMode parse_sizing(const std::string& s) {
  if (s == "none") return SizingMode::none;
  if (s == "isotropic") return SizingMode::isotropic;
  if (s == "anisotropic") return SizingMode::anisotropic;
  throw ConfigError("unknown sizing '" + s + "' (none, isotropic, anisotropic)");
}

std::string to_string(SizingMode m) {
  switch (m) {
    case SizingMode::none: return "none";
    case SizingMode::isotropic: return "isotropic";
    case SizingMode::anisotropic: return "anisotropic";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument("not a finite number");
  return d;
}

long long to_int(const std::string& v) {
  std::size_t used = 0;
  const long long i = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer");
  return i;
}

Index3 to_index3(std::string v) {
  for (char& c : v)
    if (c == 'x' || c == 'X' || c == ',') c = ' ';
  std::istringstream in(v);
  Index3 r{};
  for (int& x : r)
    if (!(in >> x)) throw std::invalid_argument("expected three integers");
  std::string rest;
  if (in >> rest) throw std::invalid_argument("expected three integers");
  return r;
}

std::string fmt(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string fmt(const Index3& v) {
  return std::to_string(v[0]) + "x" + std::to_string(v[1]) + "x" + std::to_string(v[2]);
}

using Setter = std::function<void(RegistrationConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"mode", [](auto& c, const auto& v) { c.mode = parse_mode(v); c.mode_given = true; }},
      {"feature_fraction", [](auto& c, const auto& v) { c.match.selection_fraction = to_double(v); }},
      {"block", [](auto& c, const auto& v) { c.match.block = to_index3(v); }},
      {"window", [](auto& c, const auto& v) { c.match.window = to_index3(v); }},
      {"anrr_window", [](auto& c, const auto& v) {
         if (v == "none") c.anrr_window.reset(); else c.anrr_window = to_index3(v); }},
      {"connectivity", [](auto& c, const auto& v) {
         if (v == "face") c.match.connectivity = Connectivity::face;
         else if (v == "vertex") c.match.connectivity = Connectivity::vertex;
         else throw std::invalid_argument("expected face or vertex"); }},
      {"mesh_size", [](auto& c, const auto& v) { c.mesh_size = to_double(v); }},
      {"materials", [](auto& c, const auto& v) { c.materials = MaterialTable::parse(v); }},
      {"data_tradeoff", [](auto& c, const auto& v) { c.assemble.data_tradeoff = to_double(v); }},
      {"rejection_fraction", [](auto& c, const auto& v) { c.solve.rejection_fraction = to_double(v); }},
      {"rejection_steps", [](auto& c, const auto& v) { c.solve.rejection_steps = static_cast<int>(to_int(v)); }},
      {"cg_tol", [](auto& c, const auto& v) { c.solve.cg_tol = to_double(v); }},
      {"cg_max_iter", [](auto& c, const auto& v) { c.solve.cg_max_iter = static_cast<int>(to_int(v)); }},
      {"convergence_tol", [](auto& c, const auto& v) { c.solve.convergence_tol = to_double(v); }},
      {"max_final_iters", [](auto& c, const auto& v) { c.solve.max_final_iters = static_cast<int>(to_int(v)); }},
      {"max_iterations", [](auto& c, const auto& v) { c.max_iterations = static_cast<int>(to_int(v)); }},
      {"anrr_stop", [](auto& c, const auto& v) { c.anrr_stop = to_double(v); }},
      {"sizing", [](auto& c, const auto& v) { c.sizing = parse_sizing(v); }},
      {"sizing_k", [](auto& c, const auto& v) { c.sizing_k = static_cast<int>(to_int(v)); }},
      {"inflation", [](auto& c, const auto& v) { c.inflation = to_double(v); }},
      {"ellipsoid_eps", [](auto& c, const auto& v) { c.ellipsoid_eps = to_double(v); }},
      {"refine_passes", [](auto& c, const auto& v) { c.refine_passes = static_cast<int>(to_int(v)); }},
      {"lambda1", [](auto& c, const auto& v) { c.nem.lambda1 = to_double(v); }},
      {"lambda2", [](auto& c, const auto& v) { c.nem.lambda2 = to_double(v); }},
      {"bgi_threshold", [](auto& c, const auto& v) { c.nem.bgi_threshold = to_double(v); }},
      {"sigma", [](auto& c, const auto& v) { c.nem.sigma = to_double(v); }},
      {"sigma_anneal", [](auto& c, const auto& v) { c.nem.sigma_anneal = to_double(v); }},
      {"inner_max_iters", [](auto& c, const auto& v) { c.nem.inner_max_iters = static_cast<int>(to_int(v)); }},
      {"outer_max_iters", [](auto& c, const auto& v) { c.nem.outer_max_iters = static_cast<int>(to_int(v)); }},
      {"correspondence_k", [](auto& c, const auto& v) { c.nem.kt = static_cast<int>(to_int(v)); }},
      {"canny_sigma", [](auto& c, const auto& v) { c.canny.sigma = to_double(v); }},
      {"canny_low", [](auto& c, const auto& v) { c.canny.low = to_double(v); }},
      {"canny_high", [](auto& c, const auto& v) { c.canny.high = to_double(v); }},
      {"hd_percentile", [](auto& c, const auto& v) { c.hd_percentile = to_double(v); }},
      {"seed", [](auto& c, const auto& v) {
         const long long s = to_int(v);
         if (s < 0) throw std::invalid_argument("seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s); }},
  };
  return s;
}

}  // namespace

void RegistrationConfig::validate() const {
  try {
    match.validate();
    if (anrr_window) {
      MatchConfig m = match;
      m.window = *anrr_window;
      m.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(mesh_size > 0.0)) throw ConfigError("mesh_size must be positive");
  for (const auto& [label, m] : materials.by_label) m.validate();
  if (!(assemble.data_tradeoff > 0.0)) throw ConfigError("data_tradeoff must be positive");
  solve.validate();
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(anrr_stop >= 0.0)) throw ConfigError("anrr_stop must be nonnegative");
  if (sizing_k < 1) throw ConfigError("sizing_k must be >= 1");
  if (!(inflation > 0.0)) throw ConfigError("inflation must be positive");
  if (!(ellipsoid_eps > 0.0 && ellipsoid_eps < 0.5)) throw ConfigError("ellipsoid_eps must lie in (0, 0.5)");
  if (refine_passes < 0) throw ConfigError("refine_passes must be >= 0");
  nem.validate();
  try {
    canny.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(hd_percentile > 0.0 && hd_percentile <= 100.0)) throw ConfigError("hd_percentile must lie in (0, 100]");
}

std::string RegistrationConfig::canonical() const {
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
  kv("mode", to_string(mode));
  kv("feature_fraction", fmt(match.selection_fraction));
  kv("block", fmt(match.block));
  kv("window", fmt(match.window));
  kv("anrr_window", anrr_window ? fmt(*anrr_window) : "none");
  kv("connectivity", match.connectivity == Connectivity::face ? "face" : "vertex");
  kv("mesh_size", fmt(mesh_size));
  kv("materials", materials.to_string());
  kv("data_tradeoff", fmt(assemble.data_tradeoff));
  kv("rejection_fraction", fmt(solve.rejection_fraction));
  kv("rejection_steps", std::to_string(solve.rejection_steps));
  kv("cg_tol", fmt(solve.cg_tol));
  kv("cg_max_iter", std::to_string(solve.cg_max_iter));
  kv("convergence_tol", fmt(solve.convergence_tol));
  kv("max_final_iters", std::to_string(solve.max_final_iters));
  kv("max_iterations", std::to_string(max_iterations));
  kv("anrr_stop", fmt(anrr_stop));
  kv("sizing", to_string(sizing));
  kv("sizing_k", std::to_string(sizing_k));
  kv("inflation", fmt(inflation));
  kv("ellipsoid_eps", fmt(ellipsoid_eps));
  kv("refine_passes", std::to_string(refine_passes));
  kv("lambda1", fmt(nem.lambda1));
  kv("lambda2", fmt(nem.lambda2));
  kv("bgi_threshold", fmt(nem.bgi_threshold));
  kv("sigma", fmt(nem.sigma));
  kv("sigma_anneal", fmt(nem.sigma_anneal));
  kv("inner_max_iters", std::to_string(nem.inner_max_iters));
  kv("outer_max_iters", std::to_string(nem.outer_max_iters));
  kv("correspondence_k", std::to_string(nem.kt));
  kv("canny_sigma", fmt(canny.sigma));
  kv("canny_low", fmt(canny.low));
  kv("canny_high", fmt(canny.high));
  kv("hd_percentile", fmt(hd_percentile));
  kv("seed", std::to_string(seed));
  return o.str();
}

std::uint64_t RegistrationConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RegistrationConfig parse_config(const std::string& text) {
  RegistrationConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown key '" + key + "'", lineno);
    if (!seen.insert(key).second) throw ConfigError("key '" + key + "' given twice", lineno);
    if (value.empty()) throw ConfigError("key '" + key + "' has no value", lineno);
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (key '" + key + "')", lineno);
    } catch (const std::exception& e) {
      throw ConfigError("bad value '" + value + "' for key '" + key + "': " + e.what(), lineno);
    }
  }
  cfg.validate();
  return cfg;
}

RegistrationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace defreg
