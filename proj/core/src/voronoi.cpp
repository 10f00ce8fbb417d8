#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polydd/errors.hpp"
#include "polydd/geometry.hpp"

namespace polydd {

namespace {

double unit_uniform(std::mt19937_64& g) {
  // 53-bit mantissa draw in [0,1)
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

double shoelace(const std::vector<Point2>& p) {
  double a = 0.0;
  int m = static_cast<int>(p.size());
  for (int i = 0; i < m; ++i) a += cross(p[i], p[(i + 1) % m]);
  return 0.5 * a;
}

Point2 polygon_centroid(const std::vector<Point2>& p, double area) {
  double cx = 0.0, cy = 0.0;
  int m = static_cast<int>(p.size());
  for (int i = 0; i < m; ++i) {
    double w = cross(p[i], p[(i + 1) % m]);
    cx += (p[i].x + p[(i + 1) % m].x) * w;
    cy += (p[i].y + p[(i + 1) % m].y) * w;
  }
  return {cx / (6.0 * area), cy / (6.0 * area)};
}

// keep the side of the p/q bisector containing p
void clip_bisector(std::vector<Point2>& poly, Point2 p, Point2 q) {
  Point2 mid = 0.5 * (p + q);
  Point2 d = q - p;
  std::vector<Point2> out;
  out.reserve(poly.size() + 2);
  int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    Point2 a = poly[i], b = poly[(i + 1) % m];
    double fa = dot(a - mid, d);
    double fb = dot(b - mid, d);
    if (fa <= 0.0) out.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      double t = fa / (fa - fb);
      out.push_back(a + t * (b - a));
    }
  }
  poly = std::move(out);
}

// axis-aligned clip with the cut coordinate assigned exactly, so boundary
// vertices carry bit-exact 0/1 coordinates
void clip_axis(std::vector<Point2>& poly, int axis, double bound, int keep_sign) {
  std::vector<Point2> out;
  out.reserve(poly.size() + 2);
  int m = static_cast<int>(poly.size());
  auto coord = [axis](Point2 p) { return axis == 0 ? p.x : p.y; };
  for (int i = 0; i < m; ++i) {
    Point2 a = poly[i], b = poly[(i + 1) % m];
    double fa = keep_sign * (coord(a) - bound);
    double fb = keep_sign * (coord(b) - bound);
    if (fa >= 0.0) out.push_back(a);
    if ((fa < 0.0) != (fb < 0.0)) {
      double t = fa / (fa - fb);
      Point2 c = a + t * (b - a);
      if (axis == 0)
        c.x = bound;
      else
        c.y = bound;
      out.push_back(c);
    }
  }
  poly = std::move(out);
}

struct SeedGrid {
  int g = 1;
  double cs = 1.0;
  std::vector<std::vector<int>> bins;

  void build(const std::vector<Point2>& seeds) {
    g = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(seeds.size()))));
    cs = 1.0 / g;
    bins.assign(static_cast<size_t>(g) * g, {});
    for (int i = 0; i < static_cast<int>(seeds.size()); ++i) {
      int bx = std::min(g - 1, static_cast<int>(seeds[i].x * g));
      int by = std::min(g - 1, static_cast<int>(seeds[i].y * g));
      bins[static_cast<size_t>(by) * g + bx].push_back(i);
    }
  }
};

// Voronoi cell of seed i in the periodically replicated configuration,
// grown by bisector clipping with a security-radius stop: once every
// unprocessed seed copy is farther than twice the farthest cell vertex,
// the cell is final.
std::vector<Point2> periodic_cell(const std::vector<Point2>& seeds,
                                  const SeedGrid& grid, int i) {
  const Point2 p = seeds[i];
  // own periodic copies bound the cell by the centered unit box
  std::vector<Point2> poly = {{p.x - 0.5, p.y - 0.5},
                              {p.x + 0.5, p.y - 0.5},
                              {p.x + 0.5, p.y + 0.5},
                              {p.x - 0.5, p.y + 0.5}};
  double dfar = std::sqrt(0.5);
  const int g = grid.g;
  const int cxi = std::min(g - 1, static_cast<int>(p.x * g));
  const int cyi = std::min(g - 1, static_cast<int>(p.y * g));
  auto wrap = [g](int t, int& bin, int& off) {
    off = (t >= 0) ? t / g : -((-t + g - 1) / g);
    bin = t - off * g;
  };
  const int ring_max = 2 * g + 2;
  for (int ring = 0; ring <= ring_max; ++ring) {
    if ((ring - 1) * grid.cs > 2.0 * dfar) break;
    bool clipped = false;
    for (int ax = cxi - ring; ax <= cxi + ring; ++ax)
      for (int ay = cyi - ring; ay <= cyi + ring; ++ay) {
        if (std::max(std::abs(ax - cxi), std::abs(ay - cyi)) != ring) continue;
        int bx, by, ox, oy;
        wrap(ax, bx, ox);
        wrap(ay, by, oy);
        for (int j : grid.bins[static_cast<size_t>(by) * g + bx]) {
          if (j == i && ox == 0 && oy == 0) continue;
          Point2 q = {seeds[j].x + ox, seeds[j].y + oy};
          double d2 = dot(q - p, q - p);
          if (d2 > 4.0 * dfar * dfar + 1e-14) continue;
          if (d2 < 1e-24)
            throw structural_error("voronoi: coincident seeds survived regeneration");
          clip_bisector(poly, p, q);
          clipped = true;
        }
      }
    if (clipped) {
      dfar = 0.0;
      for (const Point2& v : poly) dfar = std::max(dfar, dist(v, p));
    }
  }
  if (poly.size() < 3) throw numerical_error("voronoi: empty cell");
  return poly;
}

struct Welder {
  double tol = 1e-9;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  std::vector<Point2> pts;

  static std::uint64_t key(long long kx, long long ky) {
    return (static_cast<std::uint64_t>(kx) << 32) ^ static_cast<std::uint64_t>(ky) * 0x9e3779b97f4a7c15ull;
  }
  int add(Point2 p) {
    long long kx = std::llround(p.x / tol);
    long long ky = std::llround(p.y / tol);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find(key(kx + dx, ky + dy));
        if (it == buckets.end()) continue;
        for (int id : it->second)
          if (std::abs(pts[id].x - p.x) <= tol && std::abs(pts[id].y - p.y) <= tol)
            return id;
      }
    int id = static_cast<int>(pts.size());
    pts.push_back(p);
    buckets[key(kx, ky)].push_back(id);
    return id;
  }
};

struct Fragment {
  std::vector<int> loop;  // welded vertex ids, CCW
  int origin;
  bool ghost;
};

std::uint64_t edge_key(int a, int b) {
  auto [lo, hi] = std::minmax(a, b);
  return (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint64_t>(hi);
}

// Merge loop G into loop F along their (single, contiguous) shared edge run.
std::optional<std::vector<int>> splice_loops(const std::vector<int>& F,
                                             const std::vector<int>& G) {
  std::unordered_set<std::uint64_t> g_edges;
  int ng = static_cast<int>(G.size());
  for (int i = 0; i < ng; ++i) g_edges.insert(edge_key(G[i], G[(i + 1) % ng]));

  int nf = static_cast<int>(F.size());
  std::vector<char> shared(nf, 0);
  int n_shared = 0;
  for (int i = 0; i < nf; ++i) {
    shared[i] = g_edges.count(edge_key(F[i], F[(i + 1) % nf])) ? 1 : 0;
    n_shared += shared[i];
  }
  if (n_shared == 0 || n_shared == nf) return std::nullopt;
  int runs = 0;
  for (int i = 0; i < nf; ++i)
    if (shared[i] && !shared[(i + nf - 1) % nf]) ++runs;
  if (runs != 1) return std::nullopt;

  int s = 0;
  while (!(shared[s] && !shared[(s + nf - 1) % nf])) ++s;
  int e = s;
  while (shared[(e + 1) % nf]) e = (e + 1) % nf;
  // shared arc runs F[s] .. F[(e+1)%nf]; G traverses it in reverse
  int arc_begin = F[s];
  int arc_end = F[(e + 1) % nf];

  std::vector<int> merged;
  for (int i = (e + 1) % nf; i != s; i = (i + 1) % nf) merged.push_back(F[i]);
  merged.push_back(F[s]);

  int pb = -1;
  for (int i = 0; i < ng; ++i)
    if (G[i] == arc_end) pb = i;
  if (pb < 0) return std::nullopt;
  // walk G forward from arc_end through the shared arc to arc_begin
  int pa = pb;
  int steps = 0;
  while (G[pa] != arc_begin) {
    pa = (pa + 1) % ng;
    if (++steps > ng) return std::nullopt;
  }
  for (int i = (pa + 1) % ng; i != pb; i = (i + 1) % ng) merged.push_back(G[i]);
  return merged;
}

}  // namespace

std::pair<PolyMesh, BoxPartition> build_voronoi_mesh(int n_per_side,
                                                     int cells_per_subdomain,
                                                     std::uint64_t seed,
                                                     int lloyd_iters,
                                                     VoronoiReport* report) {
  if (n_per_side < 1) throw parameter_error("build_voronoi_mesh: N >= 1 required");
  if (cells_per_subdomain < 1)
    throw parameter_error("build_voronoi_mesh: need at least one cell per subdomain");
  if (lloyd_iters < 0) throw parameter_error("build_voronoi_mesh: negative lloyd_iters");

  const int n = cells_per_subdomain;
  VoronoiReport rep;
  rep.lloyd_iters = lloyd_iters;

  // seed points in [0,1)^2; a duplicate pair forces a perturbed redraw
  std::vector<Point2> seeds(n);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 16) throw numerical_error("build_voronoi_mesh: seeding failed");
    std::mt19937_64 gen(seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(attempt));
    for (auto& s : seeds) {
      s.x = unit_uniform(gen);
      s.y = unit_uniform(gen);
    }
    bool dup = false;
    std::vector<Point2> sorted = seeds;
    std::sort(sorted.begin(), sorted.end(), [](Point2 a, Point2 b) {
      return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    for (int i = 0; i + 1 < n && !dup; ++i)
      dup = dist(sorted[i], sorted[i + 1]) < 1e-12;
    if (!dup) break;
    rep.reseeded = true;
  }

  SeedGrid grid;
  grid.build(seeds);

  // Lloyd smoothing on the torus
  for (int it = 0; it < lloyd_iters; ++it) {
    std::vector<Point2> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<Point2> cell = periodic_cell(seeds, grid, i);
      double a = shoelace(cell);
      Point2 c = polygon_centroid(cell, a);
      next[i] = {c.x - std::floor(c.x), c.y - std::floor(c.y)};
    }
    seeds = std::move(next);
    grid.build(seeds);
  }

  // clip every periodic cell (and its wrapped copies) to the unit cell
  Welder weld;
  std::vector<Fragment> frags;
  std::vector<Fragment> ghosts;
  for (int i = 0; i < n; ++i) {
    std::vector<Point2> cell = periodic_cell(seeds, grid, i);
    for (int zx = -1; zx <= 1; ++zx)
      for (int zy = -1; zy <= 1; ++zy) {
        std::vector<Point2> piece = cell;
        for (Point2& p : piece) p = {p.x + zx, p.y + zy};
        clip_axis(piece, 0, 0.0, +1);
        clip_axis(piece, 0, 1.0, -1);
        clip_axis(piece, 1, 0.0, +1);
        clip_axis(piece, 1, 1.0, -1);
        if (piece.size() < 3 || shoelace(piece) < 1e-15) continue;
        Fragment f;
        f.origin = i;
        f.ghost = (zx != 0 || zy != 0);
        for (const Point2& p : piece) {
          int id = weld.add(p);
          if (f.loop.empty() || f.loop.back() != id) f.loop.push_back(id);
        }
        while (f.loop.size() > 1 && f.loop.front() == f.loop.back()) f.loop.pop_back();
        if (f.loop.size() < 3) continue;
        (f.ghost ? ghosts : frags).push_back(std::move(f));
      }
  }
  if (static_cast<int>(frags.size()) != n)
    throw structural_error("build_voronoi_mesh: lost a primary fragment");
  rep.wrap_fragments = static_cast<int>(ghosts.size());

  // fold boundary-crossing pieces back into an edge-adjacent fragment; a
  // piece is retried next pass if no neighbor shares one contiguous run
  std::vector<Fragment> all = std::move(frags);
  for (Fragment& f : ghosts) all.push_back(std::move(f));
  while (true) {
    bool any_ghost = false;
    for (const Fragment& f : all) any_ghost |= f.ghost;
    if (!any_ghost) break;

    std::unordered_map<std::uint64_t, std::vector<int>> edge_frags;
    for (int fi = 0; fi < static_cast<int>(all.size()); ++fi) {
      const auto& loop = all[fi].loop;
      int m = static_cast<int>(loop.size());
      for (int i = 0; i < m; ++i)
        edge_frags[edge_key(loop[i], loop[(i + 1) % m])].push_back(fi);
    }

    bool progress = false;
    for (int gi = 0; gi < static_cast<int>(all.size()); ++gi) {
      if (!all[gi].ghost) continue;
      // rank neighbors: primaries first, then by shared boundary length
      std::unordered_map<int, double> shared_len;
      const auto& loop = all[gi].loop;
      int m = static_cast<int>(loop.size());
      for (int i = 0; i < m; ++i) {
        auto it = edge_frags.find(edge_key(loop[i], loop[(i + 1) % m]));
        for (int fj : it->second)
          if (fj != gi)
            shared_len[fj] += dist(weld.pts[loop[i]], weld.pts[loop[(i + 1) % m]]);
      }
      std::vector<std::pair<int, double>> cands(shared_len.begin(), shared_len.end());
      std::sort(cands.begin(), cands.end(), [&](auto a, auto b) {
        if (all[a.first].ghost != all[b.first].ghost) return !all[a.first].ghost;
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      for (auto [fj, len] : cands) {
        auto merged = splice_loops(all[fj].loop, all[gi].loop);
        if (!merged) continue;
        all[fj].loop = std::move(*merged);
        all[gi].loop.clear();
        all[gi].ghost = false;
        progress = true;
        break;
      }
      if (progress) break;  // incidence map is stale after a merge
    }
    if (!progress)
      throw structural_error("build_voronoi_mesh: could not fold a wrap fragment");
    std::vector<Fragment> kept;
    for (Fragment& f : all)
      if (!f.loop.empty()) kept.push_back(std::move(f));
    all = std::move(kept);
  }
  if (static_cast<int>(all.size()) != n)
    throw structural_error("build_voronoi_mesh: fragment count drifted");

  // canonicalize periodic boundary traces so translated tiles weld exactly:
  // right/top boundary vertices take the bit pattern of their periodic partner
  std::vector<Point2>& pts = weld.pts;
  auto snap_pairs = [&pts](int axis) {
    std::vector<int> lo, hi;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      double c = axis == 0 ? pts[i].x : pts[i].y;
      if (c == 0.0) lo.push_back(i);
      if (c == 1.0) hi.push_back(i);
    }
    auto other = [&pts, axis](int id) { return axis == 0 ? pts[id].y : pts[id].x; };
    auto cmp = [&](int a, int b) { return other(a) < other(b); };
    std::sort(lo.begin(), lo.end(), cmp);
    std::sort(hi.begin(), hi.end(), cmp);
    if (lo.size() != hi.size())
      throw structural_error("build_voronoi_mesh: periodic trace count mismatch");
    for (size_t i = 0; i < lo.size(); ++i) {
      if (std::abs(other(lo[i]) - other(hi[i])) > 1e-9)
        throw structural_error("build_voronoi_mesh: periodic traces diverge");
      if (axis == 0)
        pts[hi[i]].y = pts[lo[i]].y;
      else
        pts[hi[i]].x = pts[lo[i]].x;
    }
  };
  snap_pairs(0);
  snap_pairs(1);

  // tile the reference cell into every subdomain, welding by exact bits
  BoxPartition part = BoxPartition::regular(n_per_side);
  std::vector<Point2> verts;
  std::vector<std::vector<int>> cells;
  std::vector<int> cell_sub;
  struct BitsHash {
    size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
      return k.first * 0x9e3779b97f4a7c15ull ^ (k.second + (k.first << 6));
    }
  };
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, int, BitsHash> vid;
  auto bits_key = [](Point2 p) {
    return std::pair{std::bit_cast<std::uint64_t>(p.x),
                     std::bit_cast<std::uint64_t>(p.y)};
  };
  const double nn = static_cast<double>(n_per_side);
  for (int sy = 0; sy < n_per_side; ++sy)
    for (int sx = 0; sx < n_per_side; ++sx) {
      int sub = part.index(sx, sy);
      for (const Fragment& f : all) {
        std::vector<int> cell;
        cell.reserve(f.loop.size());
        for (int rid : f.loop) {
          Point2 p = {(pts[rid].x + sx) / nn, (pts[rid].y + sy) / nn};
          auto [it, inserted] = vid.try_emplace(bits_key(p), static_cast<int>(verts.size()));
          if (inserted) verts.push_back(p);
          cell.push_back(it->second);
        }
        cells.push_back(std::move(cell));
        cell_sub.push_back(sub);
      }
    }

  if (report) *report = rep;
  return {PolyMesh(std::move(verts), std::move(cells), std::move(cell_sub)),
          std::move(part)};
}

}  // namespace polydd
