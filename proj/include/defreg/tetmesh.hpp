#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "defreg/common.hpp"

namespace defreg {

// Tetrahedral mesh with per-element tissue labels. `removed` marks elements
// belonging to the resected submesh; they stay in the connectivity so that
// indices remain stable while the resection region grows.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::uint16_t> tet_label;
  std::vector<std::uint8_t> removed;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t tet_count() const { return tets.size(); }
  std::size_t removed_count() const;

  // Throws std::invalid_argument when array sizes or vertex indices disagree.
  void validate_layout() const;
};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double tet_volume(const TetMesh& mesh, std::size_t t);
Vec3 tet_centroid(const TetMesh& mesh, std::size_t t);

// Barycentric coordinates of p in tet t (sum to one).
std::array<double, 4> barycentric(const TetMesh& mesh, std::size_t t, const Vec3& p);

struct TetHit {
  int tet = -1;
  std::array<double, 4> bary{};
};

// Uniform-bin point location. For a point on a shared face the lowest tet
// index wins, so lookups are deterministic.
class TetLocator {
 public:
  TetLocator(const TetMesh& mesh, bool skip_removed = false);

  std::optional<TetHit> locate(const Vec3& p) const;

 private:
  const TetMesh* mesh_;
  Vec3 lo_;
  Vec3 cell_;
  Index3 bins_{1, 1, 1};
  std::vector<std::uint32_t> offsets_;
  std::vector<int> items_;
};

// Face-adjacent neighbours per tet (-1 where the face is on the boundary).
std::vector<std::array<int, 4>> face_neighbours(const TetMesh& mesh);

// Displacement of the point described by `hit` under vertex displacements U
// (3 entries per vertex).
Vec3 interpolate(const TetMesh& mesh, const TetHit& hit, std::span<const double> U);

}  // namespace defreg
