#include "defreg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace defreg {

double metric_edge_length(const Vec3& a, const Vec3& b, const Mat3& ma, const Mat3& mb) {
  const Vec3 e = b - a;
  return 0.5 * (std::sqrt(std::max(0.0, e.dot(ma * e))) + std::sqrt(std::max(0.0, e.dot(mb * e))));
}

namespace {

using EdgeKey = std::uint64_t;

EdgeKey edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<EdgeKey>(a) << 32) | static_cast<std::uint32_t>(b);
}
int key_lo(EdgeKey k) { return static_cast<int>(k >> 32); }
int key_hi(EdgeKey k) { return static_cast<int>(k & 0xffffffffu); }

constexpr int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

class Refiner {
 public:
  Refiner(const TetMesh& mesh, const SizingField& field) : m_(mesh), f_(field) {
    for (std::size_t t = 0; t < m_.tets.size(); ++t) attach(static_cast<int>(t));
  }

  double length2(EdgeKey k) const { return (m_.vertices[key_hi(k)] - m_.vertices[key_lo(k)]).squaredNorm(); }

  // Strict total order: Euclidean length, then key.
  bool longer(EdgeKey a, EdgeKey b) const {
    const double la = length2(a), lb = length2(b);
    return la > lb || (la == lb && a > b);
  }

  EdgeKey longest_edge(int t) const {
    const auto& T = m_.tets[t];
    EdgeKey best = edge_key(T[0], T[1]);
    for (const auto& e : kEdges) {
      const EdgeKey k = edge_key(T[e[0]], T[e[1]]);
      if (longer(k, best)) best = k;
    }
    return best;
  }

  double metric_length(EdgeKey k) const {
    const int a = key_lo(k), b = key_hi(k);
    return metric_edge_length(m_.vertices[a], m_.vertices[b], f_.metric_at(a), f_.metric_at(b));
  }

  std::vector<EdgeKey> long_edges(double threshold) const {
    std::vector<std::pair<double, EdgeKey>> found;
    for (const auto& [k, tets] : edges_) {
      const double l = metric_length(k);
      if (l > threshold) found.emplace_back(l, k);
    }
    std::sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
      return x.first > y.first || (x.first == y.first && x.second < y.second);
    });
    std::vector<EdgeKey> out;
    out.reserve(found.size());
    for (const auto& p : found) out.push_back(p.second);
    return out;
  }

  bool exists(EdgeKey k) const { return edges_.count(k) != 0; }

  void lepp_split(EdgeKey target) {
    std::vector<EdgeKey> stack{target};
    while (!stack.empty()) {
      const EdgeKey e = stack.back();
      auto it = edges_.find(e);
      if (it == edges_.end()) {
        stack.pop_back();
        continue;
      }
      EdgeKey next = e;
      // Smallest tet index first so the propagation path is reproducible.
      std::vector<int> around = it->second;
      std::sort(around.begin(), around.end());
      for (int t : around) {
        const EdgeKey l = longest_edge(t);
        if (l != e) {
          next = l;
          break;
        }
      }
      if (next != e) {
        stack.push_back(next);
      } else {
        split(e);
        stack.pop_back();
      }
    }
  }

  void split(EdgeKey k) {
    const int a = key_lo(k), b = key_hi(k);
    const int mid = static_cast<int>(m_.vertices.size());
    m_.vertices.push_back(0.5 * (m_.vertices[a] + m_.vertices[b]));
    if (f_.is_tensor())
      f_.metric.push_back(0.5 * (f_.metric[a] + f_.metric[b]));
    else
      f_.spacing.push_back(0.5 * (f_.spacing[a] + f_.spacing[b]));

    std::vector<int> around = edges_.at(k);
    std::sort(around.begin(), around.end());
    for (int t : around) {
      detach(t);
      auto first = m_.tets[t];
      auto second = first;
      for (int i = 0; i < 4; ++i) {
        if (first[i] == b) first[i] = mid;
        if (second[i] == a) second[i] = mid;
      }
      m_.tets[t] = first;
      m_.tets.push_back(second);
      m_.tet_label.push_back(m_.tet_label[t]);
      m_.removed.push_back(m_.removed[t]);
      attach(t);
      attach(static_cast<int>(m_.tets.size()) - 1);
    }
    ++splits_;
  }

  std::size_t splits() const { return splits_; }
  TetMesh& mesh() { return m_; }
  SizingField& field() { return f_; }

 private:
  void attach(int t) {
    const auto& T = m_.tets[t];
    for (const auto& e : kEdges) edges_[edge_key(T[e[0]], T[e[1]])].push_back(t);
  }
  void detach(int t) {
    const auto& T = m_.tets[t];
    for (const auto& e : kEdges) {
      auto it = edges_.find(edge_key(T[e[0]], T[e[1]]));
      auto& v = it->second;
      v.erase(std::find(v.begin(), v.end(), t));
      if (v.empty()) edges_.erase(it);
    }
  }

  TetMesh m_;
  SizingField f_;
  std::unordered_map<EdgeKey, std::vector<int>> edges_;
  std::size_t splits_ = 0;
};

}  // namespace

RefineResult refine_to_metric(const TetMesh& mesh, const SizingField& field, const RefineOptions& opt) {
  mesh.validate_layout();
  if (field.size() != mesh.vertex_count())
    throw std::invalid_argument("refine_to_metric: sizing field does not match the mesh vertices");
  if (opt.max_passes < 0 || !(opt.threshold > 0.0)) throw std::invalid_argument("refine_to_metric: bad options");

  Refiner r(mesh, field);
  RefineResult out;
  for (;;) {
    const auto todo = r.long_edges(opt.threshold);
    if (todo.empty()) break;
    if (out.passes >= opt.max_passes) {
      out.residual_long_edges = todo.size();
      out.exhausted = true;
      break;
    }
    for (EdgeKey k : todo)
      if (r.exists(k)) r.lepp_split(k);
    ++out.passes;
  }
  out.splits = r.splits();
  out.mesh = std::move(r.mesh());
  out.field = std::move(r.field());
  return out;
}

}  // namespace defreg
