#pragma once

// Periodic, interface-aligned triangulations built row by row.
//
// Every mesh is a stack of node rows spanning x in [0, 1]; the vertex at x = 1
// duplicates the one at x = 0 and the two are recorded as a periodic pair.
// Consecutive rows with equal column counts are joined by quads split along the
// better diagonal; a row with half the columns is joined by a transition strip.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "roughwall/error.hpp"
#include "roughwall/pattern.hpp"
#include "roughwall/tensor.hpp"

namespace roughwall {

enum class Region : std::uint8_t { above, below, bulk };
enum class BoundaryTag : std::uint8_t { none, bottom, interface, lid };
enum class MeshKind : std::uint8_t { bl_strip, channel, strip, rough_layer };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::above: return "above";
    case Region::below: return "below";
    case Region::bulk: return "bulk";
  }
  return "?";
}

inline const char* to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::none: return "none";
    case BoundaryTag::bottom: return "bottom";
    case BoundaryTag::interface: return "interface";
    case BoundaryTag::lid: return "lid";
  }
  return "?";
}

inline const char* to_string(MeshKind k) {
  switch (k) {
    case MeshKind::bl_strip: return "bl-strip";
    case MeshKind::channel: return "channel";
    case MeshKind::strip: return "strip";
    case MeshKind::rough_layer: return "rough-layer";
  }
  return "?";
}

struct TaggedEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::none;
};

struct Mesh {
  MeshKind kind = MeshKind::bl_strip;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> regions;
  /// (vertex at x = 0, vertex at x = 1).
  std::vector<std::pair<int, int>> periodic_pairs;
  std::vector<TaggedEdge> boundary_edges;
  /// Target element size (column spacing of the finest rows).
  double h = 0.0;
  /// Height of the top boundary.
  double top = 0.0;
  /// Height of the bottom of a flat strip (unused when a pattern is present).
  double bottom = 0.0;
  /// Length scale of the roughness: 1 in the strip, eps in the channel.
  double scale = 1.0;
  std::optional<RoughnessPattern> pattern;
  /// Heights of the flat node rows above the interface, ascending.
  std::vector<double> flat_levels;
  int lower_rows = 0;
  int columns_per_cell = 0;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec2 &a = vertices[tri[0]], &b = vertices[tri[1]], &c = vertices[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }

  /// Wall height at abscissa x (the roughness profile, scaled).
  double wall(double x) const {
    if (!pattern) return bottom;
    return scale * pattern->value(x / scale);
  }

  /// Area of the region bounded by the true (curved) wall and the top.
  double curved_area() const {
    if (!pattern) return top - bottom;
    const double mean = pattern->mean_value();
    return top - scale * mean;
  }
};

namespace detail {

inline double angle_at(const Vec2& p, const Vec2& q, const Vec2& r) {
  const Vec2 u = q - p, v = r - p;
  const double c = dot(u, v) / (norm(u) * norm(v));
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

inline double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  return std::min({angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
}

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

/// One node row: x-ordered vertex ids, first and last periodic twins.
using Row = std::vector<int>;

class RowBuilder {
 public:
  explicit RowBuilder(Mesh& m) : m_(m) {}

  Row add_row(const std::vector<Vec2>& pts) {
    Row r(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      r[i] = static_cast<int>(m_.vertices.size());
      m_.vertices.push_back(pts[i]);
    }
    m_.periodic_pairs.emplace_back(r.front(), r.back());
    return r;
  }

  void tag_row(const Row& r, BoundaryTag tag) {
    for (std::size_t i = 0; i + 1 < r.size(); ++i) m_.boundary_edges.push_back({r[i], r[i + 1], tag});
  }

  void connect(const Row& lo, const Row& hi, Region region) {
    const std::size_t nl = lo.size() - 1, nh = hi.size() - 1;
    if (nl == nh) {
      for (std::size_t i = 0; i < nl; ++i) quad(lo[i], lo[i + 1], hi[i + 1], hi[i], region);
    } else if (nl == 2 * nh) {
      for (std::size_t k = 0; k < nh; ++k) {
        const int b0 = lo[2 * k], b1 = lo[2 * k + 1], b2 = lo[2 * k + 2], t0 = hi[k], t1 = hi[k + 1];
        tri(b0, b1, t0, region);
        tri(b1, b2, t1, region);
        tri(b1, t1, t0, region);
      }
    } else {
      fail(ErrorKind::meshing, "rows with incompatible column counts");
    }
  }

 private:
  void tri(int a, int b, int c, Region region) {
    if (!(signed_area(m_.vertices[a], m_.vertices[b], m_.vertices[c]) > 0.0))
      fail(ErrorKind::meshing, "inverted or degenerate triangle in row construction");
    m_.triangles.push_back({a, b, c});
    m_.regions.push_back(region);
  }

  // Counter-clockwise quad b0 b1 t1 t0.
  void quad(int b0, int b1, int t1, int t0, Region region) {
    const auto& v = m_.vertices;
    const double q1 = std::min(min_angle(v[b0], v[b1], v[t1]), min_angle(v[b0], v[t1], v[t0]));
    const double q2 = std::min(min_angle(v[b0], v[b1], v[t0]), min_angle(v[b1], v[t1], v[t0]));
    const bool ok1 = signed_area(v[b0], v[b1], v[t1]) > 0 && signed_area(v[b0], v[t1], v[t0]) > 0;
    const bool ok2 = signed_area(v[b0], v[b1], v[t0]) > 0 && signed_area(v[b1], v[t1], v[t0]) > 0;
    if (ok1 && (!ok2 || q1 >= q2)) {
      tri(b0, b1, t1, region);
      tri(b0, t1, t0, region);
    } else {
      tri(b0, b1, t0, region);
      tri(b1, t1, t0, region);
    }
  }

  Mesh& m_;
};

/// Terrain-following rows from the wall (j = 0) up to y = 0 (j = rows).
inline std::vector<Vec2> lower_row(const RoughnessPattern& g, double scale, int columns, int j, int rows) {
  std::vector<Vec2> pts(static_cast<std::size_t>(columns) + 1);
  const double eta = static_cast<double>(j) / rows;
  for (int i = 0; i <= columns; ++i) {
    const double x = static_cast<double>(i) / columns;
    const double y = j == rows ? 0.0 : scale * g.value(x / scale) * (1.0 - eta);
    pts[static_cast<std::size_t>(i)] = {x, y};
  }
  // Periodic twins must coincide exactly, whatever the rounding of the pattern at x = 1.
  pts.back().y = pts.front().y;
  return pts;
}

/// Smallest angle of the quad split that the row builder would pick, over the lower block.
inline double lower_block_quality(const RoughnessPattern& g, int cols_per_cell, int rows, double first_upper) {
  // One cell of unit scale is representative: the channel uses a scaled copy.
  const int n = cols_per_cell;
  std::vector<std::vector<Vec2>> r;
  for (int j = 0; j <= rows; ++j) r.push_back(lower_row(g, 1.0, n, j, rows));
  std::vector<Vec2> up(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) up[static_cast<std::size_t>(i)] = {static_cast<double>(i) / n, first_upper};
  r.push_back(up);
  double worst = 180.0;
  for (std::size_t j = 0; j + 1 < r.size(); ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 &b0 = r[j][i], &b1 = r[j][i + 1], &t0 = r[j + 1][i], &t1 = r[j + 1][i + 1];
      double q1 = -1, q2 = -1;
      if (signed_area(b0, b1, t1) > 0 && signed_area(b0, t1, t0) > 0)
        q1 = std::min(min_angle(b0, b1, t1), min_angle(b0, t1, t0));
      if (signed_area(b0, b1, t0) > 0 && signed_area(b1, t1, t0) > 0)
        q2 = std::min(min_angle(b0, b1, t0), min_angle(b1, t1, t0));
      worst = std::min(worst, std::max(q1, q2));
    }
  }
  return worst;
}

/// Picks the number of terrain-following rows that maximizes the smallest angle.
inline int choose_lower_rows(const RoughnessPattern& g, int cols_per_cell, double h_cell, double min_angle_deg) {
  const double dmax = -g.min_value(), dmin = -g.max_value();
  const int lo = std::max(1, static_cast<int>(std::floor(0.5 * dmin / h_cell)));
  const int hi = std::max(lo + 1, static_cast<int>(std::ceil(2.0 * dmax / h_cell)) + 1);
  int best = lo;
  double best_q = -1.0;
  for (int rows = lo; rows <= hi; ++rows) {
    const double q = lower_block_quality(g, cols_per_cell, rows, h_cell);
    if (q > best_q + 1e-9) {
      best_q = q;
      best = rows;
    }
  }
  if (best_q < min_angle_deg) {
    std::ostringstream os;
    os << "pattern " << g.describe() << " is too steep for the quality bound at h = " << h_cell
       << ": best minimum angle " << best_q << " deg < " << min_angle_deg << " deg";
    fail(ErrorKind::meshing, os.str());
  }
  return best;
}

struct UpperGrading {
  int columns = 0;         // columns at y = start
  double start = 0.0;      // height of the first flat row
  double top = 1.0;        // height of the last flat row
  double first = 0.1;      // thickness of the first layer
  double growth = 1.15;    // layer thickness ratio
  double aspect = 1.0;     // max thickness / column spacing
  double coarsen_from = 0; // no column halving below this height
  int max_halvings = 0;
  int min_columns = 4;
};

struct FlatRows {
  std::vector<double> levels;
  std::vector<int> columns;
};

inline FlatRows grade_rows(const UpperGrading& g) {
  FlatRows out;
  double y = g.start, t = g.first;
  int n = g.columns, halvings = 0;
  out.levels.push_back(y);
  out.columns.push_back(n);
  while (y < g.top - 1e-12) {
    const double s = 1.0 / n;
    int next = n;
    double dt = std::min(t, g.aspect * s);
    const bool can_halve = halvings < g.max_halvings && n % 2 == 0 && n / 2 >= g.min_columns &&
                           y >= g.coarsen_from - 1e-12 && t >= 0.95 * g.aspect * s;
    if (can_halve) {
      next = n / 2;
      dt = g.aspect * s;
      ++halvings;
    }
    y += dt;
    out.levels.push_back(y);
    out.columns.push_back(next);
    n = next;
    t = dt * g.growth;
  }
  // Shrink the stack so the last row lands on the top.
  const double f = (g.top - g.start) / (y - g.start);
  for (auto& l : out.levels) l = g.start + (l - g.start) * f;
  out.levels.back() = g.top;
  return out;
}

inline std::vector<Vec2> flat_row(double y, int columns) {
  std::vector<Vec2> pts(static_cast<std::size_t>(columns) + 1);
  for (int i = 0; i <= columns; ++i) pts[static_cast<std::size_t>(i)] = {static_cast<double>(i) / columns, y};
  return pts;
}

inline constexpr double kMinAngle = 20.0;

}  // namespace detail

/// Mesh of the boundary-layer strip {gamma(y1) < y2 < L}, periodic in y1.
inline Mesh build_bl_mesh(const RoughnessPattern& pattern, double L, double h) {
  if (!(L >= 2.0)) fail(ErrorKind::precondition, "build_bl_mesh: L must be >= 2");
  if (!(h > 0.0 && h <= 0.25)) fail(ErrorKind::precondition, "build_bl_mesh: h must lie in (0, 0.25]");
  Mesh m;
  m.kind = MeshKind::bl_strip;
  m.h = h;
  m.top = L;
  m.scale = 1.0;
  m.pattern = pattern;
  const int n = static_cast<int>(std::ceil(1.0 / h - 1e-9));
  const int rows = detail::choose_lower_rows(pattern, n, 1.0 / n, detail::kMinAngle);
  m.lower_rows = rows;
  m.columns_per_cell = n;

  detail::RowBuilder b(m);
  detail::Row prev = b.add_row(detail::lower_row(pattern, 1.0, n, 0, rows));
  b.tag_row(prev, BoundaryTag::bottom);
  for (int j = 1; j <= rows; ++j) {
    detail::Row r = b.add_row(detail::lower_row(pattern, 1.0, n, j, rows));
    b.connect(prev, r, Region::below);
    prev = std::move(r);
  }
  b.tag_row(prev, BoundaryTag::interface);

  detail::UpperGrading g;
  g.columns = n;
  g.start = 0.0;
  g.top = L;
  g.first = 1.0 / n;
  g.growth = 1.1;
  g.aspect = 1.0;
  g.coarsen_from = 1.5;
  g.max_halvings = 2;
  const auto fr = detail::grade_rows(g);
  m.flat_levels = fr.levels;
  for (std::size_t k = 1; k < fr.levels.size(); ++k) {
    detail::Row r = b.add_row(detail::flat_row(fr.levels[k], fr.columns[k]));
    b.connect(prev, r, Region::above);
    prev = std::move(r);
  }
  b.tag_row(prev, BoundaryTag::lid);
  return m;
}

/// Returns k when eps = 1/k for an integer k >= 2.
inline int reciprocal_integer(double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::precondition, "eps must be positive");
  const double k = 1.0 / eps;
  const double kr = std::round(k);
  if (kr < 2.0 || std::abs(k - kr) > 1e-9 * kr) {
    std::ostringstream os;
    os << "eps = " << eps << " is not 1/k for an integer k >= 2";
    fail(ErrorKind::precondition, os.str());
  }
  return static_cast<int>(kr);
}

/// Mesh of the rough channel {eps gamma(x1/eps) < x2 < 1}, periodic in x1.
/// The rough layer is an eps-scaled copy of the boundary-layer mesh's lower block.
inline Mesh build_channel_mesh(const RoughnessPattern& pattern, double eps, double h_bulk, double h_bl = 0.2) {
  const int k = reciprocal_integer(eps);
  if (!(h_bulk > 0.0 && h_bulk <= 0.1)) fail(ErrorKind::precondition, "build_channel_mesh: h_bulk must lie in (0, 0.1]");
  if (!(h_bl > 0.0 && h_bl <= 0.25)) fail(ErrorKind::precondition, "build_channel_mesh: h_bl must lie in (0, 0.25]");
  Mesh m;
  m.kind = MeshKind::channel;
  m.h = h_bulk;
  m.top = 1.0;
  m.scale = 1.0 / k;
  m.pattern = pattern;
  const int nc = static_cast<int>(std::ceil(1.0 / h_bl - 1e-9));
  const int rows = detail::choose_lower_rows(pattern, nc, 1.0 / nc, detail::kMinAngle);
  m.lower_rows = rows;
  m.columns_per_cell = nc;
  const int n = nc * k;

  detail::RowBuilder b(m);
  detail::Row prev = b.add_row(detail::lower_row(pattern, m.scale, n, 0, rows));
  b.tag_row(prev, BoundaryTag::bottom);
  for (int j = 1; j <= rows; ++j) {
    detail::Row r = b.add_row(detail::lower_row(pattern, m.scale, n, j, rows));
    b.connect(prev, r, Region::below);
    prev = std::move(r);
  }
  b.tag_row(prev, BoundaryTag::interface);

  detail::UpperGrading g;
  g.columns = n;
  g.start = 0.0;
  g.top = 1.0;
  g.first = 1.0 / n;
  g.growth = 1.15;
  g.aspect = 1.0;
  g.coarsen_from = 0.0;
  g.max_halvings = 64;
  g.min_columns = std::max(4, static_cast<int>(std::ceil(1.0 / h_bulk - 1e-9)));
  const auto fr = detail::grade_rows(g);
  m.flat_levels = fr.levels;
  for (std::size_t i = 1; i < fr.levels.size(); ++i) {
    detail::Row r = b.add_row(detail::flat_row(fr.levels[i], fr.columns[i]));
    b.connect(prev, r, Region::bulk);
    prev = std::move(r);
  }
  b.tag_row(prev, BoundaryTag::lid);
  return m;
}

/// Uniform mesh of the flat strip T x (a, a + 1).
inline Mesh build_strip_mesh(double a, double h) {
  if (!(h > 0.0 && h <= 0.5)) fail(ErrorKind::precondition, "build_strip_mesh: h must lie in (0, 0.5]");
  Mesh m;
  m.kind = MeshKind::strip;
  m.h = h;
  m.bottom = a;
  m.top = a + 1.0;
  const int n = std::max(4, static_cast<int>(std::ceil(1.0 / h - 1e-9)));
  detail::RowBuilder b(m);
  detail::Row prev = b.add_row(detail::flat_row(a, n));
  b.tag_row(prev, BoundaryTag::bottom);
  m.flat_levels.push_back(a);
  for (int j = 1; j <= n; ++j) {
    const double y = j == n ? a + 1.0 : a + static_cast<double>(j) / n;
    detail::Row r = b.add_row(detail::flat_row(y, n));
    b.connect(prev, r, Region::bulk);
    m.flat_levels.push_back(y);
    prev = std::move(r);
  }
  b.tag_row(prev, BoundaryTag::lid);
  return m;
}

/// Mesh of the rough layer {scale gamma(x/scale) < y < 0}; scale = 1 gives the
/// lower part of the boundary-layer strip, scale = eps the layer of the channel.
inline Mesh build_rough_layer_mesh(const RoughnessPattern& pattern, double scale, double h_cell) {
  const int k = scale == 1.0 ? 1 : reciprocal_integer(scale);
  if (!(h_cell > 0.0 && h_cell <= 0.25)) fail(ErrorKind::precondition, "build_rough_layer_mesh: h must lie in (0, 0.25]");
  Mesh m;
  m.kind = MeshKind::rough_layer;
  m.h = h_cell / k;
  m.top = 0.0;
  m.scale = 1.0 / k;
  m.pattern = pattern;
  const int nc = static_cast<int>(std::ceil(1.0 / h_cell - 1e-9));
  const int rows = detail::choose_lower_rows(pattern, nc, 1.0 / nc, detail::kMinAngle);
  m.lower_rows = rows;
  m.columns_per_cell = nc;
  const int n = nc * k;
  detail::RowBuilder b(m);
  detail::Row prev = b.add_row(detail::lower_row(pattern, m.scale, n, 0, rows));
  b.tag_row(prev, BoundaryTag::bottom);
  for (int j = 1; j <= rows; ++j) {
    detail::Row r = b.add_row(detail::lower_row(pattern, m.scale, n, j, rows));
    b.connect(prev, r, Region::below);
    prev = std::move(r);
  }
  b.tag_row(prev, BoundaryTag::interface);
  m.flat_levels = {0.0};
  return m;
}

struct MeshQuality {
  double min_angle = 180.0;
  double max_angle = 0.0;
  double max_diameter = 0.0;
  std::size_t above = 0, below = 0, bulk = 0;
  /// Indices into periodic_pairs whose vertices are not twins at x = 0 / x = 1.
  std::vector<std::size_t> bad_pairs;
  /// Triangles that straddle y = 0 or carry the wrong region tag.
  std::vector<std::size_t> misaligned;
  /// Vertices strictly below the wall.
  std::vector<std::size_t> below_wall;
  std::vector<std::size_t> inverted;
  double area = 0.0;
  /// Area of the polygon whose bottom interpolates the wall at the mesh vertices.
  double polygon_area = 0.0;
  double curved_area = 0.0;

  bool pairs_consistent() const { return bad_pairs.empty(); }
  bool interface_aligned() const { return misaligned.empty(); }
  bool passes(double min_angle_deg = detail::kMinAngle) const {
    return min_angle >= min_angle_deg && bad_pairs.empty() && misaligned.empty() && below_wall.empty() &&
           inverted.empty() && std::abs(area - polygon_area) <= 1e-10 * std::abs(polygon_area);
  }
};

inline MeshQuality mesh_quality(const Mesh& m) {
  MeshQuality q;
  const double tol = 1e-12;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const Vec2 &a = m.vertices[tri[0]], &b = m.vertices[tri[1]], &c = m.vertices[tri[2]];
    const double ar = detail::signed_area(a, b, c);
    if (!(ar > 0.0)) q.inverted.push_back(t);
    q.area += ar;
    const double angs[3] = {detail::angle_at(a, b, c), detail::angle_at(b, c, a), detail::angle_at(c, a, b)};
    for (double g : angs) {
      q.min_angle = std::min(q.min_angle, g);
      q.max_angle = std::max(q.max_angle, g);
    }
    q.max_diameter = std::max({q.max_diameter, norm(b - a), norm(c - b), norm(a - c)});
    const Region r = t < m.regions.size() ? m.regions[t] : Region::bulk;
    switch (r) {
      case Region::above: ++q.above; break;
      case Region::below: ++q.below; break;
      case Region::bulk: ++q.bulk; break;
    }
    const double ymax = std::max({a.y, b.y, c.y}), ymin = std::min({a.y, b.y, c.y});
    bool ok = !(ymax > tol && ymin < -tol);
    if (m.kind == MeshKind::bl_strip) ok = ok && ((r == Region::above) == (ymin >= -tol));
    if (m.kind == MeshKind::channel) ok = ok && ((r == Region::bulk) == (ymin >= -tol));
    if (!ok) q.misaligned.push_back(t);
  }
  for (std::size_t i = 0; i < m.periodic_pairs.size(); ++i) {
    const auto [l, r] = m.periodic_pairs[i];
    const bool valid = l >= 0 && r >= 0 && static_cast<std::size_t>(l) < m.vertices.size() &&
                       static_cast<std::size_t>(r) < m.vertices.size();
    if (!valid || std::abs(m.vertices[l].x) > tol || std::abs(m.vertices[r].x - 1.0) > tol ||
        m.vertices[l].y != m.vertices[r].y)
      q.bad_pairs.push_back(i);
  }
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const auto& p = m.vertices[v];
    if (p.y < m.wall(p.x) - 1e-12) q.below_wall.push_back(v);
  }
  // Polygon area from the boundary: top row minus the interpolated wall.
  double wall_integral = 0.0;
  for (const auto& e : m.boundary_edges) {
    if (e.tag != BoundaryTag::bottom) continue;
    const Vec2 &a = m.vertices[e.a], &b = m.vertices[e.b];
    wall_integral += 0.5 * (a.y + b.y) * (b.x - a.x);
  }
  q.polygon_area = m.top - wall_integral;
  q.curved_area = m.curved_area();
  return q;
}

/// Plain-text export: VERTICES, TRIANGLES, PAIRS and TAGS sections.
inline void write_mesh(std::ostream& os, const Mesh& m) {
  os.precision(17);
  os << "# kind " << to_string(m.kind) << " h " << m.h << " top " << m.top << "\n";
  os << "VERTICES " << m.vertices.size() << "\n";
  for (std::size_t i = 0; i < m.vertices.size(); ++i) os << i << " " << m.vertices[i].x << " " << m.vertices[i].y << "\n";
  os << "TRIANGLES " << m.triangles.size() << "\n";
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    const auto& t = m.triangles[i];
    os << i << " " << t[0] << " " << t[1] << " " << t[2] << " " << to_string(m.regions[i]) << "\n";
  }
  os << "PAIRS " << m.periodic_pairs.size() << "\n";
  for (const auto& [l, r] : m.periodic_pairs) os << l << " " << r << "\n";
  os << "TAGS " << m.boundary_edges.size() << "\n";
  for (const auto& e : m.boundary_edges) os << e.a << " " << e.b << " " << to_string(e.tag) << "\n";
}

/// Bucket-grid point location in a periodic mesh.
class PointLocator {
 public:
  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{};
    bool inside = false;
  };

  explicit PointLocator(const Mesh& m) : m_(m) {
    ymin_ = std::numeric_limits<double>::max();
    ymax_ = std::numeric_limits<double>::lowest();
    for (const auto& v : m.vertices) {
      ymin_ = std::min(ymin_, v.y);
      ymax_ = std::max(ymax_, v.y);
    }
    const double n = std::sqrt(static_cast<double>(m.triangles.size()));
    nx_ = std::max(1, static_cast<int>(n));
    ny_ = std::max(1, static_cast<int>(n * std::min(8.0, std::max(1.0, ymax_ - ymin_))));
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (int k = 0; k < 3; ++k) {
        const auto& p = m.vertices[m.triangles[t][k]];
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
      }
      for (int j = by(y0); j <= by(y1); ++j)
        for (int i = bx(x0); i <= bx(x1); ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
  }

  /// Locates (x mod 1, y). Points outside the mesh return the nearest triangle
  /// with barycentrics of the closest point, and inside = false.
  Hit locate(Vec2 p) const {
    p.x -= std::floor(p.x);
    Hit best;
    double best_d = std::numeric_limits<double>::max();
    auto consider = [&](int t) {
      const auto b = bary(t, p);
      const double out = std::max({-b[0], -b[1], -b[2], 0.0});
      if (out <= 1e-12) {
        best = {t, b, true};
        return true;
      }
      const auto c = clamp_bary(t, p);
      const double d = norm(point(t, c) - p);
      if (d < best_d) {
        best_d = d;
        best = {t, c, false};
      }
      return false;
    };
    const int i = bx(p.x), j = by(p.y);
    for (int t : buckets_[static_cast<std::size_t>(j) * nx_ + i])
      if (consider(t)) return best;
    for (int r = 1; r <= std::max(nx_, ny_); ++r) {
      for (int jj = j - r; jj <= j + r; ++jj)
        for (int ii = i - r; ii <= i + r; ++ii) {
          if (std::max(std::abs(ii - i), std::abs(jj - j)) != r) continue;
          if (jj < 0 || jj >= ny_) continue;
          const int iw = ((ii % nx_) + nx_) % nx_;
          for (int t : buckets_[static_cast<std::size_t>(jj) * nx_ + iw])
            if (consider(t)) return best;
        }
      // A ring beyond the current distance cannot hold a closer triangle.
      const double ring = (r - 1) * std::min(1.0 / nx_, (ymax_ - ymin_) / ny_);
      if (best.triangle >= 0 && ring > best_d) break;
    }
    return best;
  }

 private:
  int bx(double x) const { return std::clamp(static_cast<int>(x * nx_), 0, nx_ - 1); }
  int by(double y) const {
    return std::clamp(static_cast<int>((y - ymin_) / (ymax_ - ymin_ + 1e-300) * ny_), 0, ny_ - 1);
  }

  std::array<double, 3> bary(int t, const Vec2& p) const {
    const auto& tri = m_.triangles[static_cast<std::size_t>(t)];
    const Vec2 &a = m_.vertices[tri[0]], &b = m_.vertices[tri[1]], &c = m_.vertices[tri[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  Vec2 point(int t, const std::array<double, 3>& l) const {
    const auto& tri = m_.triangles[static_cast<std::size_t>(t)];
    return l[0] * m_.vertices[tri[0]] + l[1] * m_.vertices[tri[1]] + l[2] * m_.vertices[tri[2]];
  }

  // Barycentrics of the closest point of triangle t to p.
  std::array<double, 3> clamp_bary(int t, const Vec2& p) const {
    const auto& tri = m_.triangles[static_cast<std::size_t>(t)];
    std::array<double, 3> best{};
    double bd = std::numeric_limits<double>::max();
    for (int e = 0; e < 3; ++e) {
      const Vec2 &a = m_.vertices[tri[e]], &b = m_.vertices[tri[(e + 1) % 3]];
      const Vec2 ab = b - a;
      const double s = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
      const double d = norm(a + s * ab - p);
      if (d < bd) {
        bd = d;
        best = {0, 0, 0};
        best[static_cast<std::size_t>(e)] = 1.0 - s;
        best[static_cast<std::size_t>((e + 1) % 3)] = s;
      }
    }
    return best;
  }

  const Mesh& m_;
  int nx_ = 1, ny_ = 1;
  double ymin_ = 0, ymax_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace roughwall
