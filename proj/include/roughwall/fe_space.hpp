#pragma once

// Quadratic velocity / linear pressure spaces on a periodic mesh.
// Periodic twins share degrees of freedom: x = 1 vertices map to their x = 0 partner.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "roughwall/error.hpp"
#include "roughwall/mesh.hpp"
#include "roughwall/quadrature.hpp"
#include "roughwall/tensor.hpp"

namespace roughwall {

/// Affine triangle geometry: barycentric gradients and area.
struct ElementGeometry {
  std::array<Vec2, 3> x;
  std::array<Vec2, 3> grad_l;
  double area = 0.0;

  explicit ElementGeometry(const std::array<Vec2, 3>& pts) : x(pts) {
    const Vec2 &a = x[0], &b = x[1], &c = x[2];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    area = 0.5 * det;
    grad_l[1] = {(c.y - a.y) / det, -(c.x - a.x) / det};
    grad_l[2] = {-(b.y - a.y) / det, (b.x - a.x) / det};
    grad_l[0] = -1.0 * (grad_l[1] + grad_l[2]);
  }

  Vec2 point(const std::array<double, 3>& l) const { return l[0] * x[0] + l[1] * x[1] + l[2] * x[2]; }
};

/// Quadratic Lagrange basis: vertex functions 0..2, then edges (0,1), (1,2), (2,0).
struct P2Basis {
  static constexpr int n = 6;
  static constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};

  static std::array<double, 6> values(const std::array<double, 3>& l) {
    std::array<double, 6> v{};
    for (int i = 0; i < 3; ++i) v[i] = l[i] * (2.0 * l[i] - 1.0);
    for (int e = 0; e < 3; ++e) v[3 + e] = 4.0 * l[edges[e][0]] * l[edges[e][1]];
    return v;
  }

  static std::array<Vec2, 6> gradients(const std::array<double, 3>& l, const ElementGeometry& g) {
    std::array<Vec2, 6> d{};
    for (int i = 0; i < 3; ++i) d[i] = (4.0 * l[i] - 1.0) * g.grad_l[i];
    for (int e = 0; e < 3; ++e) {
      const int a = edges[e][0], b = edges[e][1];
      d[3 + e] = 4.0 * (l[a] * g.grad_l[b] + l[b] * g.grad_l[a]);
    }
    return d;
  }
};

/// Full 2x2 velocity gradient, row i = gradient of component i.
struct Grad2 {
  double g11 = 0, g12 = 0, g21 = 0, g22 = 0;

  Sym2 sym() const { return Sym2::sym(g11, g12, g21, g22); }
  double div() const { return g11 + g22; }
  double norm_sq() const { return g11 * g11 + g12 * g12 + g21 * g21 + g22 * g22; }
};

enum class NodeFlag : unsigned { none = 0, bottom = 1, interface = 2, lid = 4 };

class FESpace {
 public:
  explicit FESpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) { build(); }

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }

  /// Number of quadratic nodes (vertex nodes first, then edge nodes).
  std::size_t num_nodes() const { return node_pos_.size(); }
  std::size_t num_vertex_nodes() const { return num_vertex_nodes_; }
  std::size_t num_velocity_dofs() const { return 2 * num_nodes(); }
  std::size_t num_pressure_dofs() const { return num_vertex_nodes_; }

  /// Node indices of triangle t in P2Basis order.
  const std::array<int, 6>& element_nodes(std::size_t t) const { return elem_nodes_[t]; }
  /// Representative position of a node (the x = 0 twin for periodic nodes).
  const Vec2& node_position(std::size_t i) const { return node_pos_[i]; }
  unsigned node_flags(std::size_t i) const { return node_flags_[i]; }
  bool has_flag(std::size_t i, NodeFlag f) const { return (node_flags_[i] & static_cast<unsigned>(f)) != 0; }

  ElementGeometry geometry(std::size_t t) const {
    const auto& tri = mesh_->triangles[t];
    return ElementGeometry({mesh_->vertices[tri[0]], mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]});
  }

  /// Pressure node (vertex node) of local vertex k of triangle t.
  int pressure_node(std::size_t t, int k) const { return elem_nodes_[t][static_cast<std::size_t>(k)]; }

  /// Interpolates a vector function at the nodes.
  template <class F>
  std::vector<double> interpolate(F&& f) const {
    std::vector<double> u(num_velocity_dofs());
    for (std::size_t i = 0; i < num_nodes(); ++i) {
      const Vec2 v = f(node_pos_[i]);
      u[2 * i] = v.x;
      u[2 * i + 1] = v.y;
    }
    return u;
  }

  /// Velocity value and gradient in triangle t at barycentric point l.
  std::pair<Vec2, Grad2> evaluate(std::span<const double> u, std::size_t t, const std::array<double, 3>& l) const {
    const auto g = geometry(t);
    const auto phi = P2Basis::values(l);
    const auto dphi = P2Basis::gradients(l, g);
    Vec2 v;
    Grad2 d;
    const auto& nodes = elem_nodes_[t];
    for (int k = 0; k < 6; ++k) {
      const double u1 = u[2 * static_cast<std::size_t>(nodes[k])], u2 = u[2 * static_cast<std::size_t>(nodes[k]) + 1];
      v.x += u1 * phi[k];
      v.y += u2 * phi[k];
      d.g11 += u1 * dphi[k].x;
      d.g12 += u1 * dphi[k].y;
      d.g21 += u2 * dphi[k].x;
      d.g22 += u2 * dphi[k].y;
    }
    return {v, d};
  }

  double evaluate_pressure(std::span<const double> p, std::size_t t, const std::array<double, 3>& l) const {
    const auto& nodes = elem_nodes_[t];
    return l[0] * p[static_cast<std::size_t>(nodes[0])] + l[1] * p[static_cast<std::size_t>(nodes[1])] +
           l[2] * p[static_cast<std::size_t>(nodes[2])];
  }

  /// Boundary edges with the given tag as (triangle, local edge index).
  std::vector<std::pair<std::size_t, int>> tagged_element_edges(BoundaryTag tag) const {
    std::vector<std::pair<std::size_t, int>> out;
    for (const auto& [key, te] : tagged_) {
      if (te.first == tag) out.push_back(te.second);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void build() {
    const Mesh& m = *mesh_;
    const std::size_t nv = m.vertices.size();
    std::vector<int> master(nv);
    for (std::size_t v = 0; v < nv; ++v) master[v] = static_cast<int>(v);
    for (const auto& [l, r] : m.periodic_pairs) master[static_cast<std::size_t>(r)] = l;
    std::vector<int> vnode(nv, -1);
    for (std::size_t v = 0; v < nv; ++v) {
      if (master[v] != static_cast<int>(v)) continue;
      vnode[v] = static_cast<int>(node_pos_.size());
      node_pos_.push_back(m.vertices[v]);
    }
    for (std::size_t v = 0; v < nv; ++v) vnode[v] = vnode[static_cast<std::size_t>(master[v])];
    num_vertex_nodes_ = node_pos_.size();

    std::map<std::pair<int, int>, int> edge_node;
    elem_nodes_.resize(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const auto& tri = m.triangles[t];
      auto& en = elem_nodes_[t];
      for (int k = 0; k < 3; ++k) en[static_cast<std::size_t>(k)] = vnode[static_cast<std::size_t>(tri[k])];
      for (int e = 0; e < 3; ++e) {
        const int a = tri[P2Basis::edges[e][0]], b = tri[P2Basis::edges[e][1]];
        const int na = vnode[static_cast<std::size_t>(a)], nb = vnode[static_cast<std::size_t>(b)];
        const auto key = std::minmax(na, nb);
        auto it = edge_node.find(key);
        if (it == edge_node.end()) {
          it = edge_node.emplace(key, static_cast<int>(node_pos_.size())).first;
          Vec2 mid = 0.5 * (m.vertices[static_cast<std::size_t>(a)] + m.vertices[static_cast<std::size_t>(b)]);
          // Edges on x = 1 are represented by their x = 0 twin.
          if (std::abs(m.vertices[static_cast<std::size_t>(a)].x - 1.0) < 1e-14 &&
              std::abs(m.vertices[static_cast<std::size_t>(b)].x - 1.0) < 1e-14)
            mid.x = 0.0;
          node_pos_.push_back(mid);
        }
        en[static_cast<std::size_t>(3 + e)] = it->second;
      }
    }
    node_flags_.assign(node_pos_.size(), 0u);

    // Map tagged mesh edges to element edges.
    std::map<std::pair<int, int>, std::pair<std::size_t, int>> by_vertices;
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
      for (int e = 0; e < 3; ++e) {
        const int a = m.triangles[t][P2Basis::edges[e][0]], b = m.triangles[t][P2Basis::edges[e][1]];
        by_vertices[std::minmax(a, b)] = {t, e};
      }
    for (const auto& be : m.boundary_edges) {
      auto it = by_vertices.find(std::minmax(be.a, be.b));
      if (it == by_vertices.end()) fail(ErrorKind::meshing, "tagged edge is not an element edge");
      tagged_.push_back({std::minmax(be.a, be.b), {be.tag, it->second}});
      const unsigned flag = be.tag == BoundaryTag::bottom      ? static_cast<unsigned>(NodeFlag::bottom)
                            : be.tag == BoundaryTag::interface ? static_cast<unsigned>(NodeFlag::interface)
                            : be.tag == BoundaryTag::lid       ? static_cast<unsigned>(NodeFlag::lid)
                                                               : 0u;
      const auto [t, e] = it->second;
      const auto& en = elem_nodes_[t];
      node_flags_[static_cast<std::size_t>(en[static_cast<std::size_t>(P2Basis::edges[e][0])])] |= flag;
      node_flags_[static_cast<std::size_t>(en[static_cast<std::size_t>(P2Basis::edges[e][1])])] |= flag;
      node_flags_[static_cast<std::size_t>(en[static_cast<std::size_t>(3 + e)])] |= flag;
    }
  }

  std::shared_ptr<const Mesh> mesh_;
  std::vector<Vec2> node_pos_;
  std::size_t num_vertex_nodes_ = 0;
  std::vector<std::array<int, 6>> elem_nodes_;
  std::vector<unsigned> node_flags_;
  std::vector<std::pair<std::pair<int, int>, std::pair<BoundaryTag, std::pair<std::size_t, int>>>> tagged_;
};

/// Barycentric coordinates of a point on local edge e at parameter s from its first vertex.
inline std::array<double, 3> edge_barycentric(int e, double s) {
  std::array<double, 3> l{0, 0, 0};
  l[static_cast<std::size_t>(P2Basis::edges[e][0])] = 1.0 - s;
  l[static_cast<std::size_t>(P2Basis::edges[e][1])] = s;
  return l;
}

inline std::array<double, 3> to_barycentric(const quad::TriPoint& q) { return {1.0 - q.xi - q.eta, q.xi, q.eta}; }

}  // namespace roughwall
