#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "defreg/tetmesh.hpp"
#include "defreg/volume.hpp"

namespace defreg {

// Body-centered-cubic lattice of pitch `delta` (mm) over the bounding box of
// the nonzero labels, cut into the standard BCC tetrahedra (two adjacent cube
// centers plus one edge of their shared face). A tet is kept when the label
// at its centroid is nonzero and takes that label. Only the largest
// face-connected component survives, so every kept tet is rigidly attached.
// Throws std::invalid_argument for an empty label volume or delta below the
// largest voxel spacing.
TetMesh i2m_bcc(const LabelVolume& labels, double delta);

struct MeshQualityReport {
  std::size_t tet_count = 0;
  std::size_t vertex_count = 0;
  double min_dihedral_deg = 0.0;
  double max_dihedral_deg = 0.0;
  double min_volume = 0.0;
  std::size_t degenerate_count = 0;     // |volume| below 1e-12 * edge^3
  std::vector<int> degenerate_tets;
  std::size_t inverted_count = 0;       // strictly negative volume
  std::map<std::uint16_t, double> dice; // per label, filled by mesh_fidelity
  double dice_overall = -1.0;
};

// All six dihedral angles of one tet, in degrees.
std::array<double, 6> tet_dihedrals(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

// Extrema over non-removed tets. Degenerate tets are counted and listed and
// do not contribute angles.
MeshQualityReport dihedral_angles(const TetMesh& mesh);

// Dice overlap between the rasterized mesh and the label volume, per label
// and for the union of nonzero labels.
void mesh_fidelity(const TetMesh& mesh, const LabelVolume& labels, MeshQualityReport& report);

// Drops tets outside the largest face-connected component and unused vertices.
TetMesh largest_component(const TetMesh& mesh);

// Copy of `mesh` with vertices moved by U (3 per vertex).
TetMesh displaced(const TetMesh& mesh, std::span<const double> U);

// TMESH1 text format: magic, vertex count, "x y z" lines, tet count,
// "v0 v1 v2 v3 label removed" lines.
void write_mesh(std::ostream& out, const TetMesh& mesh);
TetMesh read_mesh(std::istream& in);

}  // namespace defreg
