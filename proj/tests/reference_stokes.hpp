#pragma once

// Test-side oracle: a standalone Taylor-Hood assembly of the linear (p = 2)
// boundary-layer and channel problems, written without the library's FE space
// or assembler. Only the mesh is shared.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "roughwall/mesh.hpp"

namespace reference {

using roughwall::BoundaryTag;
using roughwall::Mesh;
using roughwall::Region;

struct Solution {
  const Mesh* mesh = nullptr;
  std::vector<std::array<int, 6>> elem;  // 3 vertex nodes, then midpoints of (0,1), (1,2), (2,0)
  std::vector<double> u1, u2;            // per node
  std::vector<double> p;                 // per vertex node

  // Velocity at barycentric point l of triangle t.
  std::array<double, 2> velocity(std::size_t t, const std::array<double, 3>& l) const {
    const double phi[6] = {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
                           4 * l[0] * l[1], 4 * l[1] * l[2], 4 * l[2] * l[0]};
    std::array<double, 2> v{0, 0};
    for (int k = 0; k < 6; ++k) {
      v[0] += phi[k] * u1[elem[t][k]];
      v[1] += phi[k] * u2[elem[t][k]];
    }
    return v;
  }
  double pressure(std::size_t t, const std::array<double, 3>& l) const {
    return l[0] * p[elem[t][0]] + l[1] * p[elem[t][1]] + l[2] * p[elem[t][2]];
  }
};

// Linear Stokes with stress D(u): the boundary-layer problem with shear load
// `shear` (traction (shear, 0) on the interface, stress-free lid with u2 = 0),
// or the channel problem (body force e1, no slip top and bottom).
inline Solution solve_linear(const Mesh& m, bool channel, double shear) {
  Solution s;
  s.mesh = &m;
  const std::size_t nv = m.vertices.size();
  std::vector<int> rep(nv);
  for (std::size_t v = 0; v < nv; ++v) rep[v] = static_cast<int>(v);
  for (const auto& [l, r] : m.periodic_pairs) rep[r] = l;
  std::vector<int> vnode(nv, -1);
  int n = 0;
  for (std::size_t v = 0; v < nv; ++v)
    if (rep[v] == static_cast<int>(v)) vnode[v] = n++;
  for (std::size_t v = 0; v < nv; ++v) vnode[v] = vnode[rep[v]];
  const int npv = n;
  std::map<std::pair<int, int>, int> mid;
  auto mid_node = [&](int a, int b) {
    std::pair<int, int> k{std::min(rep[a], rep[b]), std::max(rep[a], rep[b])};
    auto [it, fresh] = mid.emplace(k, n);
    if (fresh) ++n;
    return it->second;
  };
  const int loc_edges[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (const auto& tr : m.triangles) {
    std::array<int, 6> e{};
    for (int k = 0; k < 3; ++k) e[k] = vnode[tr[k]];
    for (int k = 0; k < 3; ++k) e[3 + k] = mid_node(tr[loc_edges[k][0]], tr[loc_edges[k][1]]);
    s.elem.push_back(e);
  }
  const int nn = n;
  const int nu = 2 * nn, lam = nu + npv, size = lam + 1;

  std::vector<char> fix(nu, 0);
  auto fix_edge = [&](int a, int b, bool both) {
    for (int node : {vnode[a], vnode[b], mid_node(a, b)}) {
      fix[2 * node + 1] = 1;
      if (both) fix[2 * node] = 1;
    }
  };
  for (const auto& e : m.boundary_edges) {
    if (e.tag == BoundaryTag::bottom) fix_edge(e.a, e.b, true);
    if (e.tag == BoundaryTag::lid) fix_edge(e.a, e.b, channel);
  }

  // Symmetric 6-point rule of degree 4 on the reference triangle (weights sum to 1).
  const double a1 = 0.445948490915965, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, w2 = 0.109951743655322;
  const std::array<std::array<double, 4>, 6> qp{{{a1, a1, 1 - 2 * a1, w1}, {a1, 1 - 2 * a1, a1, w1}, {1 - 2 * a1, a1, a1, w1},
                                                  {a2, a2, 1 - 2 * a2, w2}, {a2, 1 - 2 * a2, a2, w2}, {1 - 2 * a2, a2, a2, w2}}};

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
  std::vector<double> pmass(npv, 0.0);
  auto add = [&](int i, int j, double v) {
    if ((i < nu && fix[i]) || (j < nu && fix[j])) return;
    trip.emplace_back(i, j, v);
  };

  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tr = m.triangles[t];
    const auto &P0 = m.vertices[tr[0]], &P1 = m.vertices[tr[1]], &P2 = m.vertices[tr[2]];
    const double J11 = P1.x - P0.x, J12 = P2.x - P0.x, J21 = P1.y - P0.y, J22 = P2.y - P0.y;
    const double det = J11 * J22 - J12 * J21;
    const double area = 0.5 * det;
    // Gradients of the barycentric coordinates.
    double gl[3][2];
    gl[1][0] = J22 / det;
    gl[1][1] = -J12 / det;
    gl[2][0] = -J21 / det;
    gl[2][1] = J11 / det;
    gl[0][0] = -gl[1][0] - gl[2][0];
    gl[0][1] = -gl[1][1] - gl[2][1];
    const auto& e = s.elem[t];
    for (int k = 0; k < 3; ++k) pmass[e[k]] += area / 3.0;
    for (const auto& q : qp) {
      const double l[3] = {q[0], q[1], q[2]};
      const double w = area * q[3];
      double phi[6], dphi[6][2];
      for (int k = 0; k < 3; ++k) {
        phi[k] = l[k] * (2 * l[k] - 1);
        for (int d = 0; d < 2; ++d) dphi[k][d] = (4 * l[k] - 1) * gl[k][d];
      }
      for (int k = 0; k < 3; ++k) {
        const int a = loc_edges[k][0], b = loc_edges[k][1];
        phi[3 + k] = 4 * l[a] * l[b];
        for (int d = 0; d < 2; ++d) dphi[3 + k][d] = 4 * (l[a] * gl[b][d] + l[b] * gl[a][d]);
      }
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          // D(phi_i e_c) : D(phi_j e_d) written out component-wise.
          const double gx = dphi[i][0] * dphi[j][0], gy = dphi[i][1] * dphi[j][1];
          const double k11 = gx + 0.5 * gy;
          const double k22 = gy + 0.5 * gx;
          const double k12 = 0.5 * dphi[i][1] * dphi[j][0];
          const double k21 = 0.5 * dphi[i][0] * dphi[j][1];
          add(2 * e[i], 2 * e[j], w * k11);
          add(2 * e[i] + 1, 2 * e[j] + 1, w * k22);
          add(2 * e[i], 2 * e[j] + 1, w * k12);
          add(2 * e[i] + 1, 2 * e[j], w * k21);
        }
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 6; ++j)
          for (int c = 0; c < 2; ++c) {
            const double b = -w * l[a] * dphi[j][c];
            add(nu + e[a], 2 * e[j] + c, b);
            add(2 * e[j] + c, nu + e[a], b);
          }
      if (channel)
        for (int i = 0; i < 6; ++i)
          if (!fix[2 * e[i]]) rhs[2 * e[i]] += w * phi[i];
    }
  }
  if (!channel) {
    // Exact edge integrals of P2 functions: len/6 at the ends, 2 len/3 at the midpoint.
    for (const auto& ed : m.boundary_edges) {
      if (ed.tag != BoundaryTag::interface) continue;
      const double len = std::hypot(m.vertices[ed.b].x - m.vertices[ed.a].x, m.vertices[ed.b].y - m.vertices[ed.a].y);
      const int nodes[3] = {vnode[ed.a], vnode[ed.b], mid_node(ed.a, ed.b)};
      const double wts[3] = {len / 6, len / 6, 2 * len / 3};
      for (int k = 0; k < 3; ++k)
        if (!fix[2 * nodes[k]]) rhs[2 * nodes[k]] += shear * wts[k];
    }
  }
  for (int q = 0; q < npv; ++q) {
    trip.emplace_back(nu + q, lam, pmass[q]);
    trip.emplace_back(lam, nu + q, pmass[q]);
  }
  for (int i = 0; i < nu; ++i)
    if (fix[i]) trip.emplace_back(i, i, 1.0);
  Eigen::SparseMatrix<double> K(size, size);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(K);
  const Eigen::VectorXd x = lu.solve(rhs);
  s.u1.resize(nn);
  s.u2.resize(nn);
  for (int i = 0; i < nn; ++i) {
    s.u1[i] = x[2 * i];
    s.u2[i] = x[2 * i + 1];
  }
  s.p.assign(x.data() + nu, x.data() + nu + npv);
  return s;
}

}  // namespace reference
