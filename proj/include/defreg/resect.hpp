#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "defreg/fem.hpp"
#include "defreg/volume.hpp"

namespace defreg {

struct BgiResult {
  LabelVolume mask;          // 1 = background inside the brain extent
  std::size_t flagged = 0;
  bool warning = false;      // nothing or everything flagged
  std::string message;
};

// Voxels darker than `threshold` that lie inside the brain extent. A voxel is
// inside when at least five of its six axis rays reach a voxel at or above
// the threshold. Without any such voxel the whole volume counts as inside.
BgiResult segment_bgi(const ScalarVolume& intra, double threshold);

struct GrowResult {
  std::vector<std::uint8_t> removed;
  std::size_t added = 0;
  std::size_t candidates = 0;
};

// Candidate tets have their centroid, moved by U (3 per vertex, may be
// empty), in the BGI. With nothing removed yet the largest face-connected
// candidate component is taken (ties: lowest tet index); otherwise every
// candidate face-connected to the removed set joins it. Never un-removes.
GrowResult grow_removed(const TetMesh& mesh, std::span<const double> U, const LabelVolume& bgi);

// Row i: (target index, weight) pairs; empty when orphaned.
struct Correspondence {
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::size_t orphans() const;
};

// Gaussian soft assignment over the kt nearest targets, row-normalised.
// Rows whose nearest target is farther than 3 sigma are orphaned.
Correspondence estimate_correspondence(std::span<const Vec3> sources, std::span<const Vec3> targets, double sigma,
                                       int kt = 8);

struct NemConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  double bgi_threshold = 200.0;
  double sigma = 2.0;  // mm
  double sigma_anneal = 0.8;
  int inner_max_iters = 10;
  int outer_max_iters = 10;
  int kt = 8;

  void validate() const;
};

struct NemEnergy {
  int outer = 0;
  int inner = 0;
  double strain = 0.0;
  double match = 0.0;     // sum of (w_i / lambda1) |(HU)_i - D_i|^2 over active matches
  double removed_volume = 0.0;
  double J = 0.0;         // strain + lambda1 * match + lambda2 * removed_volume
  std::size_t removed = 0;
  std::size_t orphans = 0;
  std::size_t active = 0;
  double sigma = 0.0;
};

struct NemResult {
  std::vector<double> U;
  TetMesh mesh;                       // input mesh with the final removed flags
  Correspondence correspondence;      // rows follow the input matches
  std::vector<Vec3> targets;          // candidate set the rows index into
  std::vector<NemEnergy> energy;
  std::vector<std::size_t> removed_per_outer;
  std::size_t initial_rejected = 0;
  bool inner_converged = true;
  BgiResult bgi;
  nlohmann::json trace() const;
};

// Matches are block matches of the floating image against `intra` (positions
// in the floating frame, displacements toward intra). The candidate target
// set is their end points p + D that fall outside the BGI.
NemResult nem_register(const ScalarVolume& intra, const TetMesh& mesh, std::span<const FemMatch> matches,
                       const MaterialTable& materials, const NemConfig& cfg, const SolveConfig& solve,
                       const AssembleOptions& assemble_opt = {});

// Energy terms for a given state. The system's match weights are taken to
// include lambda1 already.
NemEnergy nem_energy(const FemSystem& sys, std::span<const double> U, const TetMesh& mesh, double lambda1,
                     double lambda2);

}  // namespace defreg
