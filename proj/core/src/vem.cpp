#include <algorithm>
#include <cmath>
#include <fstream>

#include "polydd/errors.hpp"
#include "polydd/quadrature.hpp"
#include "polydd/vem.hpp"

namespace polydd {

namespace {

// value of the scaled monomial m_α at x, given centroid and diameter
double mono(Point2 x, Point2 xc, double h, int ax, int ay) {
  return std::pow((x.x - xc.x) / h, ax) * std::pow((x.y - xc.y) / h, ay);
}

struct MonomialIter {
  int k;
  // visits (ax, ay) in monomial_index order up to total degree k
  template <class F>
  void each(F&& f) const {
    for (int d = 0; d <= k; ++d)
      for (int ay = 0; ay <= d; ++ay) f(d - ay, ay);
  }
};

struct ProjectorParts {
  Eigen::MatrixXd proj;    // nk x ndof
  Eigen::MatrixXd ggrad;   // nk x nk energy Gram of the monomials
  Eigen::MatrixXd dmat;    // ndof x nk dofs of the monomials
};

ProjectorParts projector_parts(const PolyMesh& mesh, int cell, int k) {
  const auto& loop = mesh.cells()[cell];
  const auto& verts = mesh.vertices();
  const int nv = static_cast<int>(loop.size());
  const int nk = poly_space_dim(k);
  const int nm = poly_space_dim(k - 2);
  const int ndof = nv * k + nm;
  const Point2 xc = mesh.cell_centroid(cell);
  const double h = mesh.cell_diameter(cell);
  const double area = mesh.cell_area(cell);
  const std::vector<double> mom = monomial_moments_upto(mesh, cell, std::max(2 * k - 2, 0));
  auto M = [&mom](int ax, int ay) { return mom[monomial_index(ax, ay)]; };

  // energy Gram: ∂x m_α = (ax/h) m_{α-ex}, products of scaled monomials
  // are again scaled monomials
  Eigen::MatrixXd ggrad = Eigen::MatrixXd::Zero(nk, nk);
  MonomialIter it{k};
  it.each([&](int ax, int ay) {
    it.each([&](int bx, int by) {
      double v = 0.0;
      if (ax > 0 && bx > 0) v += ax * bx * M(ax + bx - 2, ay + by);
      if (ay > 0 && by > 0) v += ay * by * M(ax + bx, ay + by - 2);
      ggrad(monomial_index(ax, ay), monomial_index(bx, by)) = v / (h * h);
    });
  });

  // gradient energy plus the constant-mode functional P0 in row 0:
  // vertex average for k=1, cell mean for k >= 2
  Eigen::MatrixXd G = ggrad;
  it.each([&](int bx, int by) {
    double p0 = 0.0;
    if (k == 1) {
      for (int i = 0; i < nv; ++i) p0 += mono(verts[loop[i]], xc, h, bx, by);
      p0 /= nv;
    } else {
      p0 = M(bx, by) / area;
    }
    G(0, monomial_index(bx, by)) = p0;
  });

  // right-hand sides a(m_α, φ_j) = -∫ Δm_α φ_j + ∮ ∂n m_α φ_j, with the
  // volume term read off the moment dofs and the boundary term evaluated
  // at the Gauss-Lobatto nodes, which are exactly the nodal dofs
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nk, ndof);
  if (k == 1) {
    for (int i = 0; i < nv; ++i) B(0, i) = 1.0 / nv;
  } else {
    B(0, nv * k) = 1.0;
  }
  it.each([&](int ax, int ay) {
    if (ax + ay == 0) return;
    const int row = monomial_index(ax, ay);
    if (ax >= 2) B(row, nv * k + monomial_index(ax - 2, ay)) -= ax * (ax - 1) * area / (h * h);
    if (ay >= 2) B(row, nv * k + monomial_index(ax, ay - 2)) -= ay * (ay - 1) * area / (h * h);
  });
  const Rule1D gl = gauss_lobatto(k + 1);
  for (int s = 0; s < nv; ++s) {
    const Point2 pa = verts[loop[s]];
    const Point2 pb = verts[loop[(s + 1) % nv]];
    const Point2 d = pb - pa;
    for (int q = 0; q <= k; ++q) {
      int j;
      if (q == 0)
        j = s;
      else if (q == k)
        j = (s + 1) % nv;
      else
        j = nv + s * (k - 1) + (q - 1);
      const Point2 x = pa + 0.5 * (gl.nodes[q] + 1.0) * d;
      it.each([&](int ax, int ay) {
        if (ax + ay == 0) return;
        double gx = ax > 0 ? ax / h * mono(x, xc, h, ax - 1, ay) : 0.0;
        double gy = ay > 0 ? ay / h * mono(x, xc, h, ax, ay - 1) : 0.0;
        B(monomial_index(ax, ay), j) += 0.5 * gl.weights[q] * (gx * d.y - gy * d.x);
      });
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(G);
  const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
  if (diag.minCoeff() < 1e-14 * std::max(diag.maxCoeff(), 1.0))
    throw structural_error("local_projector: singular Gram system on cell " +
                           std::to_string(cell));

  // dofs of the monomials: nodal evaluations and scaled moments
  Eigen::MatrixXd D(ndof, nk);
  it.each([&](int bx, int by) {
    const int col = monomial_index(bx, by);
    for (int i = 0; i < nv; ++i) D(i, col) = mono(verts[loop[i]], xc, h, bx, by);
    for (int s = 0; s < nv; ++s) {
      const Point2 pa = verts[loop[s]];
      const Point2 pb = verts[loop[(s + 1) % nv]];
      for (int q = 1; q < k; ++q) {
        const Point2 x = pa + 0.5 * (gl.nodes[q] + 1.0) * (pb - pa);
        D(nv + s * (k - 1) + (q - 1), col) = mono(x, xc, h, bx, by);
      }
    }
    MonomialIter im{k - 2};
    if (k >= 2)
      im.each([&](int gx, int gy) {
        D(nv * k + monomial_index(gx, gy), col) = M(gx + bx, gy + by) / area;
      });
  });

  return {lu.solve(B), std::move(ggrad), std::move(D)};
}

}  // namespace

int local_dof_count(const PolyMesh& mesh, int cell, int k) {
  const int nv = static_cast<int>(mesh.cells()[cell].size());
  return nv * k + poly_space_dim(k - 2);
}

Eigen::MatrixXd local_projector(const PolyMesh& mesh, int cell, int k) {
  if (k < 1 || k > 8) throw parameter_error("local_projector: order out of range");
  return projector_parts(mesh, cell, k).proj;
}

LocalElement local_stiffness(const PolyMesh& mesh, int cell, int k, double rho) {
  if (k < 1 || k > 8) throw parameter_error("local_stiffness: order out of range");
  if (rho <= 0.0) throw parameter_error("local_stiffness: rho must be positive");
  ProjectorParts parts = projector_parts(mesh, cell, k);
  LocalElement el;
  el.cell = cell;
  el.rho = rho;
  el.consistency = rho * parts.proj.transpose() * parts.ggrad * parts.proj;
  const int ndof = static_cast<int>(parts.dmat.rows());
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(ndof, ndof) - parts.dmat * parts.proj;
  el.stabilization = rho * r.transpose() * r;
  el.kloc = el.consistency + el.stabilization;
  el.kloc = 0.5 * (el.kloc + el.kloc.transpose()).eval();
  el.projector = std::move(parts.proj);
  el.dof_of_poly = std::move(parts.dmat);
  return el;
}

std::vector<QuadPoint> cell_quadrature(const PolyMesh& mesh, int cell, int degree) {
  const auto& loop = mesh.cells()[cell];
  const auto& verts = mesh.vertices();
  const int nv = static_cast<int>(loop.size());
  const Point2 xc = mesh.cell_centroid(cell);
  const TriangleRule tri = triangle_rule(std::max(degree, 1));
  std::vector<QuadPoint> out;
  out.reserve(nv * tri.x.size());
  for (int s = 0; s < nv; ++s) {
    const Point2 a = verts[loop[s]] - xc;
    const Point2 b = verts[loop[(s + 1) % nv]] - xc;
    const double jac = cross(a, b);  // signed: fan works on non-star cells
    for (size_t q = 0; q < tri.x.size(); ++q)
      out.push_back({xc + tri.x[q] * a + tri.y[q] * b, tri.w[q] * jac});
  }
  return out;
}

Eigen::VectorXd local_load(const PolyMesh& mesh, int cell, int k, const ScalarField& f) {
  const int ndof = local_dof_count(mesh, cell, k);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(ndof);
  const double area = mesh.cell_area(cell);
  const auto& loop = mesh.cells()[cell];
  const int nv = static_cast<int>(loop.size());
  if (k == 1) {
    const double v = f(mesh.cell_centroid(cell)) * area / nv;
    for (int i = 0; i < nv; ++i) load[i] = v;
    return load;
  }
  // L2 fit of f onto P_{k-2}, then pairing against the moment dofs
  const int nm = poly_space_dim(k - 2);
  const std::vector<double> mom = monomial_moments_upto(mesh, cell, std::max(2 * k - 4, 0));
  const Point2 xc = mesh.cell_centroid(cell);
  const double h = mesh.cell_diameter(cell);
  Eigen::MatrixXd mass(nm, nm);
  MonomialIter im{k - 2};
  im.each([&](int ax, int ay) {
    im.each([&](int bx, int by) {
      mass(monomial_index(ax, ay), monomial_index(bx, by)) =
          mom[monomial_index(ax + bx, ay + by)];
    });
  });
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nm);
  for (const QuadPoint& qp : cell_quadrature(mesh, cell, 2 * k)) {
    const double fv = f(qp.p);
    im.each([&](int ax, int ay) {
      b[monomial_index(ax, ay)] += qp.w * fv * mono(qp.p, xc, h, ax, ay);
    });
  }
  Eigen::VectorXd c = mass.ldlt().solve(b);
  for (int m = 0; m < nm; ++m) load[nv * k + m] = area * c[m];

  // The low-order moment fit alone caps the L2 rate at h^2 for k=2; pairing
  // the projection residual against the gradient projection of the test
  // function restores full order and costs one quadrature sweep. Vanishes
  // whenever f is already in P_{k-2}.
  const int nk = poly_space_dim(k);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(nk);
  MonomialIter ik{k};
  for (const QuadPoint& qp : cell_quadrature(mesh, cell, 2 * k)) {
    double res = f(qp.p);
    im.each([&](int ax, int ay) {
      res -= c[monomial_index(ax, ay)] * mono(qp.p, xc, h, ax, ay);
    });
    ik.each([&](int ax, int ay) {
      r[monomial_index(ax, ay)] += qp.w * res * mono(qp.p, xc, h, ax, ay);
    });
  }
  load += local_projector(mesh, cell, k).transpose() * r;
  return load;
}

Eigen::VectorXd local_dof_vector(const PolyMesh& mesh, int cell, int k,
                                 const ScalarField& u, int quad_degree) {
  const auto& loop = mesh.cells()[cell];
  const auto& verts = mesh.vertices();
  const int nv = static_cast<int>(loop.size());
  const int nm = poly_space_dim(k - 2);
  Eigen::VectorXd dofs(nv * k + nm);
  for (int i = 0; i < nv; ++i) dofs[i] = u(verts[loop[i]]);
  const Rule1D gl = gauss_lobatto(k + 1);
  for (int s = 0; s < nv; ++s) {
    const Point2 pa = verts[loop[s]];
    const Point2 pb = verts[loop[(s + 1) % nv]];
    for (int q = 1; q < k; ++q)
      dofs[nv + s * (k - 1) + (q - 1)] = u(pa + 0.5 * (gl.nodes[q] + 1.0) * (pb - pa));
  }
  if (nm > 0) {
    const Point2 xc = mesh.cell_centroid(cell);
    const double h = mesh.cell_diameter(cell);
    const double area = mesh.cell_area(cell);
    const int deg = quad_degree > 0 ? quad_degree : 2 * k + 2;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nm);
    MonomialIter im{k - 2};
    for (const QuadPoint& qp : cell_quadrature(mesh, cell, deg)) {
      const double uv = u(qp.p);
      im.each([&](int ax, int ay) {
        m[monomial_index(ax, ay)] += qp.w * uv * mono(qp.p, xc, h, ax, ay);
      });
    }
    dofs.tail(nm) = m / area;
  }
  return dofs;
}

DofMap build_dof_map(const PolyMesh& mesh, const BoxPartition& part, int k) {
  if (k < 1 || k > 8) throw parameter_error("build_dof_map: 1 <= k <= 8 required");
  DofMap dm;
  dm.k = k;
  dm.n_sub = part.n * part.n;
  const int nv = mesh.n_vertices();
  const int ne = mesh.n_edges();
  const int nc = mesh.n_cells();
  const int nep = k - 1;
  const int nm = poly_space_dim(k - 2);
  dm.n_total = nv + ne * nep + nc * nm;
  dm.position.resize(dm.n_total);
  dm.dirichlet.assign(dm.n_total, 0);
  dm.dof_subs.assign(dm.n_total, {});

  for (int v = 0; v < nv; ++v) dm.position[v] = mesh.vertices()[v];
  const Rule1D gl = gauss_lobatto(k + 1);
  for (int e = 0; e < ne; ++e) {
    const MeshEdge& ed = mesh.edges()[e];
    const Point2 a = mesh.vertices()[ed.v0];
    const Point2 b = mesh.vertices()[ed.v1];
    for (int q = 1; q < k; ++q)
      dm.position[nv + e * nep + (q - 1)] = a + 0.5 * (gl.nodes[q] + 1.0) * (b - a);
  }
  for (int c = 0; c < nc; ++c)
    for (int m = 0; m < nm; ++m)
      dm.position[nv + ne * nep + c * nm + m] = mesh.cell_centroid(c);

  // subdomain membership from incident cells
  for (int c = 0; c < nc; ++c) {
    const int s = mesh.cell_subdomain(c);
    for (int v : mesh.cells()[c]) dm.dof_subs[v].push_back(s);
    for (int e : mesh.cell_edges()[c])
      for (int q = 0; q < nep; ++q) dm.dof_subs[nv + e * nep + q].push_back(s);
    for (int m = 0; m < nm; ++m) dm.dof_subs[nv + ne * nep + c * nm + m].push_back(s);
  }
  for (auto& subs : dm.dof_subs) {
    std::sort(subs.begin(), subs.end());
    subs.erase(std::unique(subs.begin(), subs.end()), subs.end());
  }

  for (const MeshEdge& ed : mesh.edges()) {
    if (ed.cell1 != -1) continue;
    dm.dirichlet[ed.v0] = 1;
    dm.dirichlet[ed.v1] = 1;
    const int e = static_cast<int>(&ed - mesh.edges().data());
    for (int q = 0; q < nep; ++q) dm.dirichlet[nv + e * nep + q] = 1;
  }

  // global order: per-subdomain interiors, interface, Dirichlet
  dm.sub_interior.assign(dm.n_sub, {});
  dm.sub_boundary.assign(dm.n_sub, {});
  std::vector<int> interface_nat, dirichlet_nat;
  for (int d = 0; d < dm.n_total; ++d) {
    if (dm.dirichlet[d]) {
      dirichlet_nat.push_back(d);
    } else if (dm.dof_subs[d].size() == 1) {
      dm.sub_interior[dm.dof_subs[d][0]].push_back(d);
    } else {
      interface_nat.push_back(d);
      for (int s : dm.dof_subs[d]) dm.sub_boundary[s].push_back(d);
    }
  }
  dm.n_interface = static_cast<int>(interface_nat.size());
  dm.global_of_nat.assign(dm.n_total, -1);
  dm.nat_of_global.assign(dm.n_total, -1);
  int g = 0;
  for (int s = 0; s < dm.n_sub; ++s)
    for (int d : dm.sub_interior[s]) dm.global_of_nat[d] = g++;
  for (int d : interface_nat) dm.global_of_nat[d] = g++;
  dm.n_free = g;
  for (int d : dirichlet_nat) dm.global_of_nat[d] = g++;
  for (int d = 0; d < dm.n_total; ++d) dm.nat_of_global[dm.global_of_nat[d]] = d;

  // local dof order per cell: vertices, side nodes along traversal, moments
  dm.cell_dofs.assign(nc, {});
  for (int c = 0; c < nc; ++c) {
    const auto& loop = mesh.cells()[c];
    const int nvc = static_cast<int>(loop.size());
    auto& dofs = dm.cell_dofs[c];
    dofs.reserve(nvc * k + nm);
    for (int v : loop) dofs.push_back(v);
    for (int s = 0; s < nvc; ++s) {
      const int e = mesh.cell_edges()[c][s];
      const bool fwd = mesh.edges()[e].v0 == loop[s];
      for (int q = 0; q < nep; ++q)
        dofs.push_back(nv + e * nep + (fwd ? q : nep - 1 - q));
    }
    for (int m = 0; m < nm; ++m) dofs.push_back(nv + ne * nep + c * nm + m);
  }
  return dm;
}

GlobalSystem assemble(const PolyMesh& mesh, const BoxPartition& part,
                      const DofMap& dm, const std::vector<double>& rho_sub,
                      const ScalarField& f, const ScalarField* dirichlet) {
  if (static_cast<int>(rho_sub.size()) != dm.n_sub)
    throw parameter_error("assemble: one rho per subdomain required");
  for (double r : rho_sub)
    if (r <= 0.0) throw parameter_error("assemble: rho must be positive");

  GlobalSystem sys;
  sys.dirichlet_values = Eigen::VectorXd::Zero(dm.n_total);
  if (dirichlet)
    for (int d = 0; d < dm.n_total; ++d)
      if (dm.dirichlet[d]) sys.dirichlet_values[d] = (*dirichlet)(dm.position[d]);

  sys.F = Eigen::VectorXd::Zero(dm.n_free);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<std::vector<int>> cells_of(dm.n_sub);
  for (int c = 0; c < mesh.n_cells(); ++c) cells_of[mesh.cell_subdomain(c)].push_back(c);

  sys.A_sub.resize(dm.n_sub);
  sys.f_sub.resize(dm.n_sub);
  std::vector<int> loc(dm.n_total, -1);
  for (int s = 0; s < dm.n_sub; ++s) {
    const int ni = static_cast<int>(dm.sub_interior[s].size());
    const int nb = static_cast<int>(dm.sub_boundary[s].size());
    for (int i = 0; i < ni; ++i) loc[dm.sub_interior[s][i]] = i;
    for (int i = 0; i < nb; ++i) loc[dm.sub_boundary[s][i]] = ni + i;
    std::vector<Eigen::Triplet<double>> sub_trips;
    Eigen::VectorXd fs = Eigen::VectorXd::Zero(ni + nb);

    for (int c : cells_of[s]) {
      const LocalElement el = local_stiffness(mesh, c, dm.k, rho_sub[s]);
      const Eigen::VectorXd load = local_load(mesh, c, dm.k, f);
      const auto& dofs = dm.cell_dofs[c];
      const int nd = static_cast<int>(dofs.size());
      for (int i = 0; i < nd; ++i) {
        const int di = dofs[i];
        const int gi = dm.global_of_nat[di];
        const int li = loc[di];
        if (!dm.dirichlet[di]) sys.F[gi] += load[i];
        if (li >= 0) fs[li] += load[i];
        for (int j = 0; j < nd; ++j) {
          const int dj = dofs[j];
          if (dm.dirichlet[di]) continue;
          if (dm.dirichlet[dj]) {
            const double gval = sys.dirichlet_values[dj];
            if (gval != 0.0) {
              sys.F[gi] -= el.kloc(i, j) * gval;
              if (li >= 0) fs[li] -= el.kloc(i, j) * gval;
            }
            continue;
          }
          trips.emplace_back(gi, dm.global_of_nat[dj], el.kloc(i, j));
          if (li >= 0 && loc[dj] >= 0)
            sub_trips.emplace_back(li, loc[dj], el.kloc(i, j));
        }
      }
    }
    sys.A_sub[s].resize(ni + nb, ni + nb);
    sys.A_sub[s].setFromTriplets(sub_trips.begin(), sub_trips.end());
    sys.f_sub[s] = std::move(fs);
    for (int d : dm.sub_interior[s]) loc[d] = -1;
    for (int d : dm.sub_boundary[s]) loc[d] = -1;
  }
  sys.A.resize(dm.n_free, dm.n_free);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

Eigen::VectorXd solve_reference(const GlobalSystem& sys, const DofMap& dm) {
  Eigen::SimplicialLDLT<SpMat> chol(sys.A);
  if (chol.info() != Eigen::Success)
    throw numerical_error("solve_reference: factorization breakdown");
  const Eigen::VectorXd x = chol.solve(sys.F);
  Eigen::VectorXd u(dm.n_total);
  for (int d = 0; d < dm.n_total; ++d)
    u[d] = dm.dirichlet[d] ? sys.dirichlet_values[d] : x[dm.global_of_nat[d]];
  return u;
}

ErrorNorms error_norms(const PolyMesh& mesh, const DofMap& dm,
                       const Eigen::VectorXd& u_nat, const ScalarField& u_exact,
                       const VectorField& grad_exact) {
  ErrorNorms err;
  const int k = dm.k;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Eigen::MatrixXd proj = local_projector(mesh, c, k);
    const auto& dofs = dm.cell_dofs[c];
    Eigen::VectorXd local(dofs.size());
    for (size_t i = 0; i < dofs.size(); ++i) local[i] = u_nat[dofs[i]];
    const Eigen::VectorXd coef = proj * local;
    const Point2 xc = mesh.cell_centroid(c);
    const double h = mesh.cell_diameter(c);
    MonomialIter it{k};
    for (const QuadPoint& qp : cell_quadrature(mesh, c, 2 * k + 2)) {
      double uh = 0.0, gx = 0.0, gy = 0.0;
      it.each([&](int ax, int ay) {
        const double cb = coef[monomial_index(ax, ay)];
        uh += cb * mono(qp.p, xc, h, ax, ay);
        if (ax > 0) gx += cb * ax / h * mono(qp.p, xc, h, ax - 1, ay);
        if (ay > 0) gy += cb * ay / h * mono(qp.p, xc, h, ax, ay - 1);
      });
      const double du = u_exact(qp.p) - uh;
      const Point2 dg = grad_exact(qp.p) - Point2{gx, gy};
      err.l2 += qp.w * du * du;
      err.h1_semi += qp.w * dot(dg, dg);
    }
  }
  err.l2 = std::sqrt(std::max(err.l2, 0.0));
  err.h1_semi = std::sqrt(std::max(err.h1_semi, 0.0));
  return err;
}

void write_matrix_market(const SpMat& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parameter_error("write_matrix_market: cannot open " + path);
  int nnz = 0;
  for (int j = 0; j < a.outerSize(); ++j)
    for (SpMat::InnerIterator it(a, j); it; ++it)
      if (it.row() >= it.col()) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.rows() << " " << a.cols() << " " << nnz << "\n";
  out.precision(17);
  for (int j = 0; j < a.outerSize(); ++j)
    for (SpMat::InnerIterator it(a, j); it; ++it)
      if (it.row() >= it.col())
        out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

}  // namespace polydd
