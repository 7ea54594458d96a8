#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "roughwall/mesh.hpp"
#include "roughwall/quadrature.hpp"

using namespace roughwall;

namespace {

std::vector<RoughnessPattern> patterns() {
  return {RoughnessPattern::flat(0.5), RoughnessPattern::sinusoid(-0.5, 0.25),
          RoughnessPattern::fourier(-0.45, {0.1, 0.05}, {0.08, 0.0}),
          RoughnessPattern::polyline_smoothed({-0.4, -0.5, -0.45, -0.6, -0.5})};
}

}  // namespace

TEST(BoundaryLayerMesh, QualityAcrossPatternsAndSizes) {
  for (const auto& g : patterns())
    for (double h : {0.25, 0.1, 0.05}) {
      const Mesh m = build_bl_mesh(g, 4.0, h);
      const auto q = mesh_quality(m);
      EXPECT_GE(q.min_angle, 20.0) << g.describe() << " h = " << h;
      EXPECT_TRUE(q.inverted.empty());
      EXPECT_TRUE(q.pairs_consistent());
      EXPECT_TRUE(q.interface_aligned());
      EXPECT_TRUE(q.below_wall.empty());
      EXPECT_GT(q.above, 0u);
      EXPECT_GT(q.below, 0u);
    }
}

TEST(BoundaryLayerMesh, AreaEqualsThePolygonUnderTheWallAndTheCurvedAreaForTrigPatterns) {
  for (const auto& g : patterns()) {
    const Mesh m = build_bl_mesh(g, 4.0, 0.1);
    const auto q = mesh_quality(m);
    EXPECT_NEAR(q.area, q.polygon_area, 1e-10 * q.polygon_area);
    // Independent oracle: top minus the integral of the wall.
    const double exact = 4.0 - quad::integrate([&](double y) { return g.value(y); }, 0.0, 1.0, 1e-13);
    if (g.kind() != PatternKind::polyline_smoothed) EXPECT_NEAR(q.area, exact, 1e-10) << g.describe();
    else EXPECT_NEAR(q.area, exact, 1e-3);
  }
}

TEST(BoundaryLayerMesh, VerticesOnTheWallFollowThePattern) {
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  const Mesh m = build_bl_mesh(g, 3.0, 0.1);
  std::set<int> bottom;
  for (const auto& e : m.boundary_edges)
    if (e.tag == BoundaryTag::bottom) bottom.insert({e.a, e.b});
  ASSERT_FALSE(bottom.empty());
  for (int v : bottom) EXPECT_NEAR(m.vertices[v].y, g.value(m.vertices[v].x), 1e-14);
}

TEST(BoundaryLayerMesh, TagsCoverBottomInterfaceAndLid) {
  const Mesh m = build_bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 3.0, 0.1);
  double len[4] = {0, 0, 0, 0};
  for (const auto& e : m.boundary_edges) len[static_cast<int>(e.tag)] += std::abs(m.vertices[e.b].x - m.vertices[e.a].x);
  EXPECT_NEAR(len[static_cast<int>(BoundaryTag::bottom)], 1.0, 1e-12);
  EXPECT_NEAR(len[static_cast<int>(BoundaryTag::interface)], 1.0, 1e-12);
  EXPECT_NEAR(len[static_cast<int>(BoundaryTag::lid)], 1.0, 1e-12);
}

TEST(BoundaryLayerMesh, PeriodicPairingIsABijectionBetweenTheSides) {
  const Mesh m = build_bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 4.0, 0.1);
  std::set<int> left, right;
  std::size_t on_left = 0, on_right = 0;
  for (const auto& v : m.vertices) {
    on_left += v.x == 0.0;
    on_right += v.x == 1.0;
  }
  for (const auto& [l, r] : m.periodic_pairs) {
    EXPECT_TRUE(left.insert(l).second);
    EXPECT_TRUE(right.insert(r).second);
    EXPECT_EQ(m.vertices[l].y, m.vertices[r].y);
  }
  EXPECT_EQ(left.size(), on_left);
  EXPECT_EQ(right.size(), on_right);
  for (int v : left) EXPECT_EQ(right.count(v), 0u);
}

TEST(BoundaryLayerMesh, RejectsBadSizes) {
  const auto g = RoughnessPattern::flat(0.5);
  EXPECT_THROW(build_bl_mesh(g, 1.0, 0.1), Error);
  EXPECT_THROW(build_bl_mesh(g, 4.0, 0.0), Error);
  EXPECT_THROW(build_bl_mesh(g, 4.0, 0.3), Error);
}

TEST(ChannelMesh, QualityAndRefinementNearTheWall) {
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  for (double eps : {0.25, 0.125, 0.0625}) {
    const Mesh m = build_channel_mesh(g, eps, 0.05);
    const auto q = mesh_quality(m);
    EXPECT_GE(q.min_angle, 20.0) << eps;
    EXPECT_TRUE(q.inverted.empty());
    EXPECT_TRUE(q.pairs_consistent());
    EXPECT_TRUE(q.interface_aligned());
    EXPECT_NEAR(m.top, 1.0, 1e-14);
    EXPECT_NEAR(q.area, 1.0 + eps * 0.5, 1e-10);
    // Elements in the rough layer have size at most eps * h_bl (diameter up to a diagonal).
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      if (m.regions[t] == Region::below) {
        const auto& tr = m.triangles[t];
        for (int k = 0; k < 3; ++k)
          EXPECT_LE(std::abs(m.vertices[tr[k]].x - m.vertices[tr[(k + 1) % 3]].x), eps * 0.2 + 1e-12);
      }
  }
}

TEST(ChannelMesh, EpsMustBeAReciprocalInteger) {
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  try {
    build_channel_mesh(g, 0.3, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
    EXPECT_NE(std::string(e.what()).find("0.3"), std::string::npos);
  }
  EXPECT_EQ(reciprocal_integer(0.125), 8);
}

TEST(StripAndRoughLayerMeshes, AreValid) {
  const auto s = mesh_quality(build_strip_mesh(1.0, 0.1));
  EXPECT_GE(s.min_angle, 20.0);
  EXPECT_NEAR(s.area, 1.0, 1e-12);
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  const Mesh r = build_rough_layer_mesh(g, 0.125, 0.2);
  const auto q = mesh_quality(r);
  EXPECT_GE(q.min_angle, 20.0);
  EXPECT_NEAR(q.area, 0.125 * 0.5, 1e-12);
}

TEST(PointLocator, FindsContainingTriangleAndWrapsPeriodically) {
  const Mesh m = build_bl_mesh(RoughnessPattern::sinusoid(-0.5, 0.25), 3.0, 0.1);
  const PointLocator loc(m);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 1.0), uy(-0.2, 2.9);
  for (int k = 0; k < 200; ++k) {
    const Vec2 x{ux(rng), uy(rng)};
    const auto hit = loc.locate(x);
    ASSERT_GE(hit.triangle, 0);
    EXPECT_TRUE(hit.inside);
    const auto& tr = m.triangles[hit.triangle];
    Vec2 back;
    for (int i = 0; i < 3; ++i) back += hit.bary[i] * m.vertices[tr[i]];
    EXPECT_NEAR(back.x, x.x, 1e-12);
    EXPECT_NEAR(back.y, x.y, 1e-12);
    const auto shifted = loc.locate({x.x + 3.0, x.y});
    EXPECT_EQ(shifted.triangle, hit.triangle);
  }
}

TEST(MeshWriter, EmitsAllSections) {
  std::ostringstream os;
  write_mesh(os, build_strip_mesh(1.0, 0.25));
  const auto s = os.str();
  for (const char* k : {"VERTICES", "TRIANGLES", "PAIRS", "TAGS"}) EXPECT_NE(s.find(k), std::string::npos) << k;
}

TEST(MeshBuild, IsDeterministic) {
  const auto g = RoughnessPattern::sinusoid(-0.5, 0.25);
  std::ostringstream a, b;
  write_mesh(a, build_channel_mesh(g, 0.125, 0.05));
  write_mesh(b, build_channel_mesh(g, 0.125, 0.05));
  EXPECT_EQ(a.str(), b.str());
}
