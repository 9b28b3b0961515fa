#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "defreg/eval.hpp"
#include "defreg/featmatch.hpp"
#include "defreg/fem.hpp"
#include "defreg/resect.hpp"
#include "defreg/sizing.hpp"

namespace defreg {

enum class Mode { pbnrr, nemnrr, anrr };
enum class SizingMode { none, isotropic, anisotropic };

Mode parse_mode(const std::string& s);
std::string to_string(Mode m);
SizingMode parse_sizing(const std::string& s);
std::string to_string(SizingMode m);

// Every tunable of the three registration modes. Defaults follow the
// published parameter table where it gives one.
struct RegistrationConfig {
  Mode mode = Mode::pbnrr;
  bool mode_given = false;  // set when the file names a mode

  MatchConfig match;
  std::optional<Index3> anrr_window;  // window from the second ANRR iteration on
  double mesh_size = 5.0;             // BCC pitch, mm
  MaterialTable materials = MaterialTable::defaults();
  AssembleOptions assemble;
  SolveConfig solve;
  int max_iterations = 10;            // ANRR iteration cap
  double anrr_stop = 0.1;             // voxels, on the increment infinity norm

  SizingMode sizing = SizingMode::none;
  int sizing_k = 5;
  double inflation = 1.0;
  double ellipsoid_eps = 1e-3;
  int refine_passes = 5;

  NemConfig nem;
  CannyParams canny;
  double hd_percentile = 100.0;
  std::uint64_t seed = 0;

  // Throws ConfigError for out-of-range values.
  void validate() const;
  // One "key = value" line per key, fixed order, full precision.
  std::string canonical() const;
  // FNV-1a 64 of canonical().
  std::uint64_t hash() const;
};

// Flat "key = value" text; '#' starts a comment. Unknown or repeated keys
// and malformed values throw ConfigError carrying the line number.
RegistrationConfig parse_config(const std::string& text);
RegistrationConfig load_config(const std::filesystem::path& path);

}  // namespace defreg
