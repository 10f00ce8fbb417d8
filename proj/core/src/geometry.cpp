#include "polydd/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <unordered_map>

#include "polydd/errors.hpp"
#include "polydd/quadrature.hpp"

namespace polydd {

namespace {

double loop_area(const std::vector<Point2>& v, const std::vector<int>& loop) {
  double a = 0.0;
  int m = static_cast<int>(loop.size());
  for (int i = 0; i < m; ++i) {
    Point2 p = v[loop[i]], q = v[loop[(i + 1) % m]];
    a += cross(p, q);
  }
  return 0.5 * a;
}

Point2 loop_centroid(const std::vector<Point2>& v, const std::vector<int>& loop,
                     double area) {
  double cx = 0.0, cy = 0.0;
  int m = static_cast<int>(loop.size());
  for (int i = 0; i < m; ++i) {
    Point2 p = v[loop[i]], q = v[loop[(i + 1) % m]];
    double w = cross(p, q);
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  return {cx / (6.0 * area), cy / (6.0 * area)};
}

}  // namespace

PolyMesh::PolyMesh(std::vector<Point2> vertices,
                   std::vector<std::vector<int>> cells,
                   std::vector<int> cell_subdomain)
    : vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      cell_subdomain_(std::move(cell_subdomain)) {
  if (cell_subdomain_.size() != cells_.size())
    throw structural_error("PolyMesh: cell_subdomain size mismatch");

  int nc = n_cells();
  area_.resize(nc);
  centroid_.resize(nc);
  diameter_.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const auto& loop = cells_[c];
    if (loop.size() < 3) throw structural_error("PolyMesh: cell with < 3 vertices");
    for (int id : loop)
      if (id < 0 || id >= n_vertices())
        throw structural_error("PolyMesh: vertex index out of range");
    double a = loop_area(vertices_, loop);
    if (!(a > 0.0)) throw structural_error("PolyMesh: non-positive cell area");
    area_[c] = a;
    centroid_[c] = loop_centroid(vertices_, loop, a);
    double d = 0.0;
    for (size_t i = 0; i < loop.size(); ++i)
      for (size_t j = i + 1; j < loop.size(); ++j)
        d = std::max(d, dist(vertices_[loop[i]], vertices_[loop[j]]));
    diameter_[c] = d;
  }

  // edge table from the loops; key is the sorted vertex pair
  std::map<std::pair<int, int>, int> edge_of;
  cell_edges_.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const auto& loop = cells_[c];
    int m = static_cast<int>(loop.size());
    cell_edges_[c].resize(m);
    for (int i = 0; i < m; ++i) {
      int a = loop[i], b = loop[(i + 1) % m];
      if (a == b) throw structural_error("PolyMesh: zero-length edge in loop");
      auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        int id = static_cast<int>(edges_.size());
        edges_.push_back({key.first, key.second, c, -1});
        edge_of.emplace(key, id);
        cell_edges_[c][i] = id;
      } else {
        MeshEdge& e = edges_[it->second];
        if (e.cell1 != -1)
          throw structural_error("PolyMesh: edge shared by more than two cells");
        e.cell1 = c;
        cell_edges_[c][i] = it->second;
      }
    }
  }
}

double PolyMesh::h_max() const {
  double h = 0.0;
  for (double d : diameter_) h = std::max(h, d);
  return h;
}

BoxPartition BoxPartition::regular(int n) {
  if (n < 1) throw parameter_error("BoxPartition: need n >= 1");
  BoxPartition part;
  part.n = n;
  part.boxes.reserve(static_cast<size_t>(n) * n);
  double s = 1.0 / n;
  for (int sy = 0; sy < n; ++sy)
    for (int sx = 0; sx < n; ++sx)
      part.boxes.push_back({sx * s, sy * s, (sx + 1) * s, (sy + 1) * s});
  for (int sy = 0; sy < n; ++sy)
    for (int sx = 0; sx + 1 < n; ++sx) {
      double x = (sx + 1) * s;
      part.macro_edges.push_back({part.index(sx, sy), part.index(sx + 1, sy),
                                  {x, sy * s}, {x, (sy + 1) * s}});
    }
  for (int sy = 0; sy + 1 < n; ++sy)
    for (int sx = 0; sx < n; ++sx) {
      double y = (sy + 1) * s;
      part.macro_edges.push_back({part.index(sx, sy), part.index(sx, sy + 1),
                                  {sx * s, y}, {(sx + 1) * s, y}});
    }
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) part.cross_points.push_back({i * s, j * s});
  return part;
}

namespace {

using IPt = std::array<int, 2>;

// Axis-aligned Sutherland-Hodgman step in integer index space. Hexagon edges
// have slope 0, +-1 or infinity there, so every crossing is a lattice point.
std::vector<IPt> clip_halfplane_int(const std::vector<IPt>& poly, int axis,
                                    int bound, int keep_sign) {
  std::vector<IPt> out;
  int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    IPt a = poly[i], b = poly[(i + 1) % m];
    int da = keep_sign * (a[axis] - bound);
    int db = keep_sign * (b[axis] - bound);
    if (da >= 0) out.push_back(a);
    if ((da < 0) != (db < 0)) {
      int other = 1 - axis;
      IPt p;
      p[axis] = bound;
      if (a[other] == b[other]) {
        p[other] = a[other];
      } else {
        int step = (b[other] > a[other]) ? 1 : -1;
        p[other] = a[other] + step * std::abs(bound - a[axis]);
      }
      out.push_back(p);
    }
  }
  std::vector<IPt> dedup;
  for (const IPt& p : out)
    if (dedup.empty() || dedup.back() != p) dedup.push_back(p);
  while (dedup.size() > 1 && dedup.front() == dedup.back()) dedup.pop_back();
  return dedup;
}

long long int_loop_area2(const std::vector<IPt>& poly) {
  long long a = 0;
  int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    const IPt& p = poly[i];
    const IPt& q = poly[(i + 1) % m];
    a += static_cast<long long>(p[0]) * q[1] - static_cast<long long>(p[1]) * q[0];
  }
  return a;
}

}  // namespace

std::pair<PolyMesh, BoxPartition> build_hex_mesh(int n_per_side, int nx, int ny) {
  if (n_per_side < 1) throw parameter_error("build_hex_mesh: N >= 1 required");
  if (nx < 1 || ny < 1) throw parameter_error("build_hex_mesh: nx, ny >= 1 required");

  BoxPartition part = BoxPartition::regular(n_per_side);

  // Reference tile in index units (dx/3, dy/2): hexagon centers at
  // (3i, 2j [+1 for odd columns]), vertex offsets E(2,0) NE(1,1) NW(-1,1)
  // W(-2,0) SW(-1,-1) SE(1,-1). Clip window [0,3nx] x [0,2ny].
  std::vector<std::vector<IPt>> ref;
  const std::array<IPt, 6> offs = {{{2, 0}, {1, 1}, {-1, 1}, {-2, 0}, {-1, -1}, {1, -1}}};
  for (int i = 0; i <= nx; ++i) {
    bool odd = (i % 2) != 0;
    int jmax = odd ? ny - 1 : ny;
    for (int j = 0; j <= jmax; ++j) {
      int cx = 3 * i;
      int cy = 2 * j + (odd ? 1 : 0);
      std::vector<IPt> hex;
      hex.reserve(6);
      for (const IPt& o : offs) hex.push_back({cx + o[0], cy + o[1]});
      hex = clip_halfplane_int(hex, 0, 0, +1);
      hex = clip_halfplane_int(hex, 0, 3 * nx, -1);
      hex = clip_halfplane_int(hex, 1, 0, +1);
      hex = clip_halfplane_int(hex, 1, 2 * ny, -1);
      if (hex.size() >= 3 && int_loop_area2(hex) > 0) ref.push_back(std::move(hex));
    }
  }

  // Tile into subdomains; vertices are welded through the global integer
  // lattice (sx*3nx + mx, sy*2ny + my), so interface nodes coincide exactly.
  std::vector<Point2> verts;
  std::vector<std::vector<int>> cells;
  std::vector<int> cell_sub;
  std::unordered_map<std::uint64_t, int> vid;
  const double ux = 1.0 / (3.0 * nx * n_per_side);
  const double uy = 1.0 / (2.0 * ny * n_per_side);
  for (int sy = 0; sy < n_per_side; ++sy)
    for (int sx = 0; sx < n_per_side; ++sx) {
      int sub = part.index(sx, sy);
      for (const auto& loop : ref) {
        std::vector<int> cell;
        cell.reserve(loop.size());
        for (const IPt& p : loop) {
          std::uint64_t gx = static_cast<std::uint64_t>(sx) * (3 * nx) + p[0];
          std::uint64_t gy = static_cast<std::uint64_t>(sy) * (2 * ny) + p[1];
          std::uint64_t key = (gx << 32) | gy;
          auto [it, inserted] = vid.try_emplace(key, static_cast<int>(verts.size()));
          if (inserted) verts.push_back({static_cast<double>(gx) * ux,
                                         static_cast<double>(gy) * uy});
          cell.push_back(it->second);
        }
        cells.push_back(std::move(cell));
        cell_sub.push_back(sub);
      }
    }

  return {PolyMesh(std::move(verts), std::move(cells), std::move(cell_sub)),
          std::move(part)};
}

std::vector<double> monomial_moments_upto(const PolyMesh& mesh, int cell,
                                          int max_degree) {
  if (max_degree < 0) throw parameter_error("monomial_moments_upto: negative degree");
  const auto& loop = mesh.cells()[cell];
  const Point2 xc = mesh.cell_centroid(cell);
  const double h = mesh.cell_diameter(cell);
  const int nmom = poly_space_dim(max_degree);
  std::vector<double> mom(nmom, 0.0);

  // divergence theorem in scaled coordinates u = (x - x_K)/h_K:
  //   ∫ u^a v^b = 1/(a+1) Σ_edges Δv ∫_0^1 u(t)^{a+1} v(t)^b dt,
  // with the 1-D integrals done by a Gauss rule exact for degree max+1.
  Rule1D gl = gauss_legendre(max_degree / 2 + 2);
  int m = static_cast<int>(loop.size());
  std::vector<double> up(max_degree + 2), vp(max_degree + 1);
  for (int e = 0; e < m; ++e) {
    Point2 p = (1.0 / h) * (mesh.vertices()[loop[e]] - xc);
    Point2 q = (1.0 / h) * (mesh.vertices()[loop[(e + 1) % m]] - xc);
    double dv = q.y - p.y;
    if (dv == 0.0) continue;
    for (size_t g = 0; g < gl.nodes.size(); ++g) {
      double t = 0.5 * (gl.nodes[g] + 1.0);
      double w = 0.5 * gl.weights[g] * dv;
      double u = p.x + t * (q.x - p.x);
      double v = p.y + t * (q.y - p.y);
      up[0] = 1.0;
      for (int a = 1; a <= max_degree + 1; ++a) up[a] = up[a - 1] * u;
      vp[0] = 1.0;
      for (int b = 1; b <= max_degree; ++b) vp[b] = vp[b - 1] * v;
      for (int a = 0; a <= max_degree; ++a)
        for (int b = 0; a + b <= max_degree; ++b)
          mom[monomial_index(a, b)] += w * up[a + 1] * vp[b] / (a + 1);
    }
  }
  // scale back to physical measure
  for (double& v : mom) v *= h * h;
  return mom;
}

double monomial_moment(const PolyMesh& mesh, int cell, int ax, int ay) {
  if (ax < 0 || ay < 0) throw parameter_error("monomial_moment: negative exponent");
  return monomial_moments_upto(mesh, cell, ax + ay)[monomial_index(ax, ay)];
}

namespace {

bool on_unit_boundary(Point2 p, double tol) {
  return std::abs(p.x) <= tol || std::abs(p.x - 1.0) <= tol ||
         std::abs(p.y) <= tol || std::abs(p.y - 1.0) <= tol;
}

}  // namespace

MeshQualityReport validate_mesh(const PolyMesh& mesh, const BoxPartition& part) {
  MeshQualityReport rep;
  const double tol = 1e-12;
  rep.subdomain_diameter = part.diameter();
  rep.h_max = 0.0;
  rep.h_min = 1e300;
  rep.min_vertex_gap_ratio = 1e300;
  rep.min_area = 1e300;

  if (static_cast<int>(part.boxes.size()) != part.n * part.n)
    throw structural_error("validate_mesh: malformed partition");

  std::vector<double> sub_area(part.boxes.size(), 0.0);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& loop = mesh.cells()[c];
    int sub = mesh.cell_subdomain()[c];
    if (sub < 0 || sub >= static_cast<int>(part.boxes.size()))
      throw structural_error("validate_mesh: cell subdomain out of range");
    double a = mesh.cell_area(c);
    double h = mesh.cell_diameter(c);
    sub_area[sub] += a;
    rep.h_max = std::max(rep.h_max, h);
    rep.h_min = std::min(rep.h_min, h);
    rep.min_area = std::min(rep.min_area, a);

    const Box& box = part.boxes[sub];
    int m = static_cast<int>(loop.size());
    double gap = 1e300;
    bool star = true;
    Point2 cen = mesh.cell_centroid(c);
    for (int i = 0; i < m; ++i) {
      Point2 p = mesh.vertices()[loop[i]];
      Point2 q = mesh.vertices()[loop[(i + 1) % m]];
      if (p.x < box.x0 - tol || p.x > box.x1 + tol || p.y < box.y0 - tol ||
          p.y > box.y1 + tol)
        throw structural_error("validate_mesh: cell leaves its subdomain box");
      gap = std::min(gap, dist(p, q));
      // centroid inside the half-plane of every (possibly collinear) side
      if (cross(q - p, cen - p) < -tol * h) star = false;
    }
    rep.min_vertex_gap_ratio = std::min(rep.min_vertex_gap_ratio, gap / h);
    if (!star) {
      ++rep.non_star_cells;
      rep.issues.push_back("cell " + std::to_string(c) +
                           ": centroid kernel visibility failed");
    }
  }

  double box_area = part.side() * part.side();
  for (size_t s = 0; s < sub_area.size(); ++s)
    if (std::abs(sub_area[s] - box_area) > 1e-12 * box_area)
      throw structural_error("validate_mesh: subdomain " + std::to_string(s) +
                             " not tiled (area defect)");

  // edge incidences: boundary edges on the unit-square boundary, interface
  // edges on a partition line
  for (const MeshEdge& e : mesh.edges()) {
    Point2 p = mesh.vertices()[e.v0], q = mesh.vertices()[e.v1];
    if (e.cell1 == -1) {
      if (!on_unit_boundary(p, tol) || !on_unit_boundary(q, tol))
        throw structural_error("validate_mesh: boundary edge off the boundary");
    } else {
      int s0 = mesh.cell_subdomain()[e.cell0];
      int s1 = mesh.cell_subdomain()[e.cell1];
      if (s0 != s1) {
        bool vertical = std::abs(p.x - q.x) <= tol;
        bool horizontal = std::abs(p.y - q.y) <= tol;
        if (!vertical && !horizontal)
          throw structural_error("validate_mesh: interface edge not on a partition line");
      }
    }
  }

  // matching traces: vertex sets contributed to each macro-edge by both sides
  const double s = part.side();
  for (const MacroEdge& me : part.macro_edges) {
    bool vertical = std::abs(me.a.x - me.b.x) <= tol;
    std::vector<std::vector<int>> sides(2);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      int sub = mesh.cell_subdomain()[c];
      int which = (sub == me.sub0) ? 0 : (sub == me.sub1 ? 1 : -1);
      if (which < 0) continue;
      for (int v : mesh.cells()[c]) {
        Point2 p = mesh.vertices()[v];
        if (vertical) {
          if (std::abs(p.x - me.a.x) <= tol && p.y >= me.a.y - tol &&
              p.y <= me.b.y + tol)
            sides[which].push_back(v);
        } else {
          if (std::abs(p.y - me.a.y) <= tol && p.x >= me.a.x - tol &&
              p.x <= me.b.x + tol)
            sides[which].push_back(v);
        }
      }
    }
    for (auto& list : sides) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    if (sides[0] != sides[1])
      throw structural_error("validate_mesh: interface traces differ on a macro-edge");
    (void)s;
  }

  rep.euler_characteristic = mesh.n_vertices() - mesh.n_edges() + mesh.n_cells();
  if (rep.euler_characteristic != 1)
    throw structural_error("validate_mesh: Euler characteristic != 1");

  rep.conforming = true;
  return rep;
}

}  // namespace polydd
