#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "defreg/sparse.hpp"
#include "defreg/tetmesh.hpp"

namespace defreg {

using Mat12 = Eigen::Matrix<double, 12, 12>;

struct Material {
  double young_modulus = 2100.0;  // Pa
  double poisson = 0.45;

  // Throws ConfigError unless E > 0 and 0 < nu <= 0.49.
  void validate() const;
};

// Material per tissue label.
struct MaterialTable {
  std::map<std::uint16_t, Material> by_label;

  // Parenchyma (label 1) and tumor (label 2) defaults.
  static MaterialTable defaults();
  // "label:E:nu" entries separated by spaces.
  static MaterialTable parse(const std::string& text);
  std::string to_string() const;
  const Material& at(std::uint16_t label) const;  // ConfigError when missing
};

// Linear tetrahedron stiffness V * B^T C B (Voigt order xx yy zz xy yz zx,
// engineering shear). DOF order: vertex-major, xyz within a vertex.
// Throws DegenerateError for a (near) zero-volume tet.
Mat12 element_stiffness(const std::array<Vec3, 4>& x, const Material& m);

// One registration point handed to the solver: position (mm) in the mesh,
// measured displacement D_k (mm) and confidence in [0, 1].
struct FemMatch {
  Vec3 position = Vec3::Zero();
  Vec3 displacement = Vec3::Zero();
  double confidence = 1.0;
};

struct SystemMatch {
  FemMatch data;
  int tet = -1;
  std::array<int, 4> vertices{};
  std::array<double, 4> bary{};
  double weight = 0.0;   // scalar S block
  bool active = false;
  bool outside = false;  // not inside any non-removed tet
};

struct AssembleOptions {
  // S_k = data_tradeoff * mean(diag K) * confidence_k, so the data term is
  // measured against the stiffness of the mesh it acts on.
  double data_tradeoff = 1.0;
};

// Assembled pieces of [K + H^T S H] U = H^T S D + F. H, S and D are kept per
// match; inactive matches contribute nothing.
struct FemSystem {
  std::size_t vertex_count = 0;
  CsrMatrix K;
  std::vector<std::uint8_t> vertex_used;  // touched by a non-removed tet
  std::vector<std::vector<int>> adjacency; // vertex links over all tets; only set when some vertex is unused
  std::vector<SystemMatch> matches;
  double weight_scale = 0.0;

  std::size_t dofs() const { return 3 * vertex_count; }
  std::size_t active_count() const;
  std::size_t outside_count() const;
  void set_active(std::size_t k, bool on);
};

// K over non-removed tets plus match interpolation data. Element matrices
// are computed in parallel and accumulated in element order.
FemSystem assemble(const TetMesh& mesh, const MaterialTable& materials, std::span<const FemMatch> matches,
                   const AssembleOptions& opt = {});

// Global stiffness alone (same accumulation as assemble).
CsrMatrix assemble_stiffness(const TetMesh& mesh, const MaterialTable& materials);

// H as a 3m x 3n matrix over all matches (inactive rows are zero) and the
// diagonal of S, one entry per row of H.
CsrMatrix interpolation_matrix(const FemSystem& sys);
std::vector<double> weight_diagonal(const FemSystem& sys);
std::vector<double> displacement_vector(const FemSystem& sys);

// H^T S H and H^T S D.
CsrMatrix data_matrix(const FemSystem& sys);
std::vector<double> data_rhs(const FemSystem& sys);

struct SolveConfig {
  double rejection_fraction = 0.25;
  int rejection_steps = 10;
  double cg_tol = 1e-8;
  int cg_max_iter = 20000;
  double convergence_tol = 1e-4;  // mm, on ||U_{i+1} - U_i||_inf
  int max_final_iters = 50;

  void validate() const;
};

// Throws SolverError when the active matches cannot pin the rigid modes
// (fewer than three, or all collinear) or K is empty.
void check_solvable(const FemSystem& sys);

// Solves [K + H^T S H] U = H^T S D + F. Vertices outside every non-removed
// tet take the average of their already solved neighbours.
std::vector<double> solve_linear(const FemSystem& sys, std::span<const double> F, const SolveConfig& cfg,
                                 std::span<const double> warm_start = {}, int* cg_iterations = nullptr);

// xi_k = ||(H U)_k - D_k||.
double match_error(const FemSystem& sys, std::span<const double> U, std::size_t k);

struct RobustResult {
  std::vector<double> U;
  std::vector<int> rejected;          // in rejection order
  std::vector<std::uint8_t> active;   // final per-match state
  int final_iterations = 0;
  bool converged = true;              // final loop met convergence_tol
  nlohmann::json trace() const;

  struct Round {
    std::string phase;  // "reject" or "converge"
    int index = 0;
    std::size_t active = 0;
    double xi_min = 0, xi_median = 0, xi_p90 = 0, xi_max = 0, xi_mean = 0;
    int cg_iterations = 0;
    double delta_inf = 0;
    std::size_t rejected_now = 0;
  };
  std::vector<Round> rounds;
};

// Rejection rounds (F = K U, solve, drop the worst floor(f_R / n_R * m0)
// matches, at least one), then the force-relaxation loop until the update
// is below convergence_tol. With no rounds and no relaxation it is a single
// Eq.-1-style solve.
RobustResult robust_solve(const FemSystem& sys, const SolveConfig& cfg);

// K U = F with the listed vertices held at zero.
std::vector<double> solve_pinned(const CsrMatrix& K, std::span<const double> F, std::span<const int> pinned,
                                 const CgOptions& opt);

// U^T K U.
double strain_energy(const CsrMatrix& K, std::span<const double> U);

}  // namespace defreg
