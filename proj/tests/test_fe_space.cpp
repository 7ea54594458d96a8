#include <gtest/gtest.h>

#include "roughwall/fe_space.hpp"

using namespace roughwall;

TEST(P2Basis, PartitionOfUnityAndNodalProperty) {
  const std::array<std::array<double, 3>, 6> nodes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {.5, .5, 0}, {0, .5, .5}, {.5, 0, .5}}};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto v = P2Basis::values(nodes[i]);
    double s = 0;
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_NEAR(v[j], i == j ? 1.0 : 0.0, 1e-15);
      s += v[j];
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}

TEST(P2Basis, GradientsMatchFiniteDifferences) {
  const ElementGeometry g({Vec2{0.1, 0.2}, Vec2{0.9, 0.3}, Vec2{0.4, 1.1}});
  const std::array<double, 3> l{0.2, 0.3, 0.5};
  const auto d = P2Basis::gradients(l, g);
  // Perturb the physical point and convert to barycentrics.
  const Vec2 x = g.point(l);
  const double h = 1e-6;
  auto bary = [&](const Vec2& y) {
    std::array<double, 3> b{};
    const Vec2 r = y - g.x[0];
    b[1] = dot(g.grad_l[1], r);
    b[2] = dot(g.grad_l[2], r);
    b[0] = 1.0 - b[1] - b[2];
    return b;
  };
  for (int j = 0; j < 6; ++j) {
    const double dx = (P2Basis::values(bary(x + Vec2{h, 0}))[j] - P2Basis::values(bary(x - Vec2{h, 0}))[j]) / (2 * h);
    const double dy = (P2Basis::values(bary(x + Vec2{0, h}))[j] - P2Basis::values(bary(x - Vec2{0, h}))[j]) / (2 * h);
    EXPECT_NEAR(d[j].x, dx, 1e-8);
    EXPECT_NEAR(d[j].y, dy, 1e-8);
  }
}

TEST(FESpace, InterpolationReproducesPeriodicQuadraticsExactly) {
  auto mesh = std::make_shared<const Mesh>(build_bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 3.0, 0.2));
  const FESpace V(mesh);
  // Quadratic in y, constant in x (periodic): u = (y^2 - y, 2y + 1).
  const auto u = V.interpolate([](const Vec2& x) { return Vec2{x.y * x.y - x.y, 2 * x.y + 1}; });
  for (std::size_t t = 0; t < mesh->num_triangles(); t += 7) {
    const std::array<double, 3> l{0.2, 0.5, 0.3};
    const auto [v, g] = V.evaluate(u, t, l);
    const Vec2 x = V.geometry(t).point(l);
    EXPECT_NEAR(v.x, x.y * x.y - x.y, 1e-12);
    EXPECT_NEAR(v.y, 2 * x.y + 1, 1e-12);
    EXPECT_NEAR(g.g12, 2 * x.y - 1, 1e-11);
    EXPECT_NEAR(g.g22, 2.0, 1e-11);
    EXPECT_NEAR(g.g11, 0.0, 1e-11);
  }
}

TEST(FESpace, PeriodicTwinsShareDegreesOfFreedom) {
  auto mesh = std::make_shared<const Mesh>(build_strip_mesh(1.0, 0.25));
  const FESpace V(mesh);
  // Vertex nodes: one per vertex minus the x = 1 duplicates.
  EXPECT_EQ(V.num_vertex_nodes(), mesh->num_vertices() - mesh->periodic_pairs.size());
  for (std::size_t i = 0; i < V.num_nodes(); ++i) EXPECT_LT(V.node_position(i).x, 1.0 - 1e-12);
}

TEST(FESpace, NodeFlagsMarkTaggedBoundaries) {
  auto mesh = std::make_shared<const Mesh>(build_bl_mesh(RoughnessPattern::flat(0.5), 2.0, 0.25));
  const FESpace V(mesh);
  for (std::size_t i = 0; i < V.num_nodes(); ++i) {
    const double y = V.node_position(i).y;
    EXPECT_EQ(V.has_flag(i, NodeFlag::bottom), std::abs(y + 0.5) < 1e-12);
    EXPECT_EQ(V.has_flag(i, NodeFlag::interface), std::abs(y) < 1e-12);
    EXPECT_EQ(V.has_flag(i, NodeFlag::lid), std::abs(y - 2.0) < 1e-12);
  }
}
