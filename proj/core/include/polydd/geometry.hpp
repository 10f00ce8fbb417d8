#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace polydd {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }

/// Mesh edge with v0 < v1; cell1 == -1 on the domain boundary.
struct MeshEdge {
  int v0 = -1;
  int v1 = -1;
  int cell0 = -1;
  int cell1 = -1;
};

/// Conforming polygonal tessellation of the unit square. Cells are CCW
/// vertex loops; every vertex shared by two cells appears in both loops,
/// so loops may contain collinear vertices. The edge table is derived from
/// the loops on construction; edges with more than two adjacent cells or
/// non-positive cell areas are rejected.
class PolyMesh {
 public:
  PolyMesh(std::vector<Point2> vertices, std::vector<std::vector<int>> cells,
           std::vector<int> cell_subdomain);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_cells() const { return static_cast<int>(cells_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const std::vector<int>& cell_subdomain() const { return cell_subdomain_; }
  int cell_subdomain(int c) const { return cell_subdomain_[c]; }
  const std::vector<MeshEdge>& edges() const { return edges_; }

  /// Edge ids per cell, aligned with the loop: entry i is the edge from
  /// loop vertex i to loop vertex i+1.
  const std::vector<std::vector<int>>& cell_edges() const { return cell_edges_; }

  double cell_area(int c) const { return area_[c]; }
  Point2 cell_centroid(int c) const { return centroid_[c]; }
  double cell_diameter(int c) const { return diameter_[c]; }

  /// Largest cell diameter over the mesh.
  double h_max() const;

 private:
  std::vector<Point2> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<int> cell_subdomain_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<double> area_;
  std::vector<Point2> centroid_;
  std::vector<double> diameter_;
};

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Interface segment between two adjacent subdomain boxes.
struct MacroEdge {
  int sub0 = -1;
  int sub1 = -1;
  Point2 a;
  Point2 b;
};

/// N x N decomposition of the unit square into congruent boxes.
/// Subdomain index = sx + N*sy, counted from the lower-left corner.
struct BoxPartition {
  int n = 0;
  std::vector<Box> boxes;
  std::vector<MacroEdge> macro_edges;   // 2N(N-1): vertical first, then horizontal
  std::vector<Point2> cross_points;     // (N-1)^2 interior box corners

  static BoxPartition regular(int n);

  int index(int sx, int sy) const { return sx + n * sy; }
  double side() const { return 1.0 / n; }
  /// Subdomain diameter (box diagonal).
  double diameter() const { return std::sqrt(2.0) / n; }
};

/// Hexagonal-lattice mesh: each subdomain carries the same flat-top hexagon
/// pattern (nx columns, ny rows), anchored at its lower-left corner and
/// clipped by the subdomain box. Every subdomain is a translate of one
/// reference tile, so traces on subdomain interfaces match node for node.
std::pair<PolyMesh, BoxPartition> build_hex_mesh(int n_per_side, int nx, int ny);

struct VoronoiReport {
  bool reseeded = false;        // duplicate seeds forced a perturbed redraw
  int wrap_fragments = 0;       // boundary-crossing pieces merged back
  int lloyd_iters = 0;
};

/// Centroidal Voronoi mesh: one reference tessellation of the unit cell is
/// built from `cells_per_subdomain` seeded uniform points with periodic
/// ghost replication (so opposite traces match), smoothed by `lloyd_iters`
/// Lloyd sweeps on the torus, clipped to the cell, and tiled by translation
/// and scaling into every subdomain. Deterministic for fixed arguments.
std::pair<PolyMesh, BoxPartition> build_voronoi_mesh(int n_per_side,
                                                     int cells_per_subdomain,
                                                     std::uint64_t seed,
                                                     int lloyd_iters,
                                                     VoronoiReport* report = nullptr);

/// dim P_k in two variables; 0 for k < 0.
constexpr int poly_space_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

/// Degree-lexicographic index of the monomial x^ax y^ay:
/// (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
constexpr int monomial_index(int ax, int ay) {
  int d = ax + ay;
  return d * (d + 1) / 2 + ay;
}

/// ∫_K ((x-x_K)/h_K)^ax ((y-y_K)/h_K)^ay over cell `cell`, with x_K the
/// centroid and h_K the diameter. Exact (divergence theorem, edgewise
/// Gauss rule of matching degree).
double monomial_moment(const PolyMesh& mesh, int cell, int ax, int ay);

/// All scaled-monomial moments of the cell up to total degree max_degree,
/// in monomial_index order, from a single boundary sweep.
std::vector<double> monomial_moments_upto(const PolyMesh& mesh, int cell,
                                          int max_degree);

struct MeshQualityReport {
  double h_max = 0.0;
  double h_min = 0.0;
  double subdomain_diameter = 0.0;
  double min_vertex_gap_ratio = 0.0;   // min over cells of (min vertex gap)/h_K
  double min_area = 0.0;
  int non_star_cells = 0;              // centroid-kernel visibility failures
  int euler_characteristic = 0;        // V - E + C, 1 for a disk
  bool conforming = false;
  std::vector<std::string> issues;     // per-cell quality notes (not fatal)
};

/// Structural validation: positive CCW cells, 1-or-2 edge incidence with
/// boundary edges on the square boundary, cells tiling their subdomain box
/// (areas to 1e-12 relative), identical interface traces from both sides of
/// every macro-edge. Hard violations throw structural_error; star-shapedness
/// (centroid kernel visibility) and gap ratios are reported, not enforced.
MeshQualityReport validate_mesh(const PolyMesh& mesh, const BoxPartition& part);

}  // namespace polydd
