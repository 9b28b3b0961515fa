#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "defreg/mesh.hpp"

namespace defreg {

void write_mesh(std::ostream& out, const TetMesh& mesh) {
  mesh.validate_layout();
  char buf[128];
  out << "TMESH1\n" << mesh.vertices.size() << '\n';
  for (const auto& p : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  out << mesh.tets.size() << '\n';
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& v = mesh.tets[t];
    out << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << v[3] << ' ' << mesh.tet_label[t] << ' '
        << static_cast<int>(mesh.removed[t]) << '\n';
  }
}

TetMesh read_mesh(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "TMESH1") throw FormatError("mesh: expected TMESH1 magic");
  long long nv = 0;
  if (!(in >> nv) || nv < 0) throw FormatError("mesh: bad vertex count");
  TetMesh mesh;
  mesh.vertices.resize(static_cast<std::size_t>(nv));
  for (auto& p : mesh.vertices)
    if (!(in >> p.x() >> p.y() >> p.z())) throw FormatError("mesh: truncated vertex list");
  long long nt = 0;
  if (!(in >> nt) || nt < 0) throw FormatError("mesh: bad tet count");
  mesh.tets.resize(static_cast<std::size_t>(nt));
  mesh.tet_label.resize(mesh.tets.size());
  mesh.removed.resize(mesh.tets.size());
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    int label = 0, removed = 0;
    auto& v = mesh.tets[t];
    if (!(in >> v[0] >> v[1] >> v[2] >> v[3] >> label >> removed)) throw FormatError("mesh: truncated tet list");
    if (label < 0 || label > 65535 || (removed != 0 && removed != 1)) throw FormatError("mesh: bad tet attributes");
    mesh.tet_label[t] = static_cast<std::uint16_t>(label);
    mesh.removed[t] = static_cast<std::uint8_t>(removed);
  }
  try {
    mesh.validate_layout();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return mesh;
}

}  // namespace defreg
