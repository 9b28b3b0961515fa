#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "defreg/config.hpp"
#include "defreg/eval.hpp"
#include "defreg/volume.hpp"

namespace defreg {

struct RegistrationInputs {
  const ScalarVolume* pre = nullptr;
  const ScalarVolume* intra = nullptr;
  const LabelVolume* labels = nullptr;
  std::vector<LandmarkPair> landmarks;  // optional
};

struct IterationMetrics {
  int iteration = 0;
  HausdorffResult hd;
  std::optional<LandmarkStats> landmarks;
  std::size_t tets = 0;
  std::size_t vertices = 0;
  std::size_t features = 0;
  std::size_t outside_matches = 0;
  std::size_t rejected = 0;
  std::size_t active = 0;
  std::size_t removed_tets = 0;
  double increment_inf = 0.0;  // mm
  double min_dihedral = 0.0;
  double max_dihedral = 0.0;
  bool remeshed = false;
  std::size_t refine_splits = 0;
};

struct RegistrationResult {
  Mode mode = Mode::pbnrr;
  DenseDeformation field;
  ScalarVolume warped;
  TetMesh mesh;                  // mesh of the last solve
  std::vector<double> U;         // its vertex displacements
  std::vector<TetMesh> meshes;   // one per iteration
  std::vector<IterationMetrics> iterations;
  HausdorffResult initial_hd;
  std::optional<LandmarkStats> initial_landmarks;
  nlohmann::json trace = nlohmann::json::array();
  std::map<std::string, double> timings;  // seconds per stage
  std::string config_echo;
  std::uint64_t config_hash = 0;
  bool partial = false;
  std::string partial_reason;

  double final_hd() const { return iterations.empty() ? initial_hd.H : iterations.back().hd.H; }
  // Everything except timings; byte-stable for fixed inputs and config.
  nlohmann::json metrics_json() const;
  nlohmann::json provenance_json() const;
};

// Each stage failure is rethrown as StageError naming the stage
// ("features", "mesh", "match", "solve", "warp", "evaluate", "remesh").
RegistrationResult run_pbnrr(const RegistrationInputs& in, const RegistrationConfig& cfg);
RegistrationResult run_anrr(const RegistrationInputs& in, const RegistrationConfig& cfg);
RegistrationResult run_nemnrr(const RegistrationInputs& in, const RegistrationConfig& cfg);
// Dispatches on cfg.mode.
RegistrationResult run_registration(const RegistrationInputs& in, const RegistrationConfig& cfg);

// result.json, warped.dvol, field.dvec, mesh_iter_<i>.tmesh, trace.json.
void write_results(const std::filesystem::path& dir, const RegistrationResult& r);

struct SyntheticTruth {
  DenseDeformation field;
  std::vector<double> U;
  std::vector<int> pinned;  // vertices held at zero
};

// Smooth random vertex forces (a few seeded low-frequency Fourier modes),
// K U = F with the eight extreme vertices pinned, then scaled so that the
// dense field's largest vector norm equals `magnitude`.
SyntheticTruth generate_synthetic_truth(const TetMesh& mesh, const MaterialTable& materials, double magnitude,
                                        std::uint64_t seed, const Geometry& geom);

}  // namespace defreg
