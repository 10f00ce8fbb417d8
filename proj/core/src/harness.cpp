#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <random>
#include <sstream>

#include "polydd/errors.hpp"
#include "polydd/harness.hpp"
#include "polydd/solvers.hpp"
#include "polydd/vem.hpp"

namespace polydd {

namespace {

constexpr const char* kRngId = "mt19937_64-u53";

double unit_uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 1.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  if (syy > 1e-300) {
    double ssres = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ssres += r * r;
    }
    f.r2 = 1.0 - ssres / syy;
  }
  return f;
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

long long estimate_dofs(const ExperimentConfig& cfg) {
  long long cells;
  if (cfg.mesh == ExperimentConfig::MeshKind::Hex)
    cells = static_cast<long long>((cfg.nx + 2) / 2) * (cfg.ny + 1) +
            static_cast<long long>((cfg.nx + 1) / 2) * cfg.ny;
  else
    cells = cfg.cells;
  const int k = cfg.degree;
  const long long per_cell = 2 + 3 * (k - 1) + poly_space_dim(k - 2);
  return cells * per_cell * cfg.N * cfg.N;
}

}  // namespace

std::vector<double> CoefficientField::values(const BoxPartition& part) const {
  const int n = part.n;
  std::vector<double> rho_sub(static_cast<size_t>(n) * n, 1.0);
  switch (kind) {
    case Kind::Constant:
      for (double& r : rho_sub) r = rho;
      break;
    case Kind::CentralJump: {
      if (n % 2 != 0)
        throw parameter_error("CoefficientField: central jump needs an even N");
      const int side = n / 2;
      const int start = (n - side) / 2;
      for (int sy = start; sy < start + side; ++sy)
        for (int sx = start; sx < start + side; ++sx)
          rho_sub[part.index(sx, sy)] = rho;
      break;
    }
    case Kind::RandomExponent: {
      std::mt19937_64 gen(seed);
      for (double& r : rho_sub) {
        const int a = static_cast<int>(std::floor(9.0 * unit_uniform(gen))) - 4;
        r = std::pow(10.0, a);
      }
      break;
    }
  }
  for (double r : rho_sub)
    if (r <= 0.0) throw parameter_error("CoefficientField: rho must be positive");
  return rho_sub;
}

std::string CoefficientField::label() const {
  switch (kind) {
    case Kind::Constant:
      return rho == 1.0 ? "const" : "const(" + fmt("%g", rho) + ")";
    case Kind::CentralJump:
      return "central(" + fmt("%g", rho) + ")";
    case Kind::RandomExponent:
      return "randexp(" + std::to_string(seed) + ")";
  }
  return "?";
}

std::string ExperimentConfig::mesh_label() const {
  return mesh == MeshKind::Hex ? "hex" : "voronoi";
}

std::string ExperimentConfig::size_label() const {
  return mesh == MeshKind::Hex ? std::to_string(nx) + "x" + std::to_string(ny)
                               : std::to_string(cells);
}

std::string ExperimentConfig::method_label() const {
  switch (method) {
    case Method::FetiDp:
      return "fetidp";
    case Method::Bddc:
      return "bddc";
    case Method::Cg:
      return "cg";
  }
  return "?";
}

ResultRow run_experiment(const ExperimentConfig& cfg) {
  ResultRow row;
  row.config = cfg;
  auto [mesh, part] = cfg.mesh == ExperimentConfig::MeshKind::Hex
                          ? build_hex_mesh(cfg.N, cfg.nx, cfg.ny)
                          : build_voronoi_mesh(cfg.N, cfg.cells, cfg.seed, cfg.lloyd);
  const DofMap dm = build_dof_map(mesh, part, cfg.degree);
  const std::vector<double> rho_sub = cfg.coeff.values(part);

  const double pi = std::acos(-1.0);
  ScalarField f;
  if (cfg.rhs == ExperimentConfig::Rhs::SinSin)
    f = [pi](Point2 p) { return 2.0 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y); };
  else
    f = [](Point2) { return 0.0; };
  const GlobalSystem sys = assemble(mesh, part, dm, rho_sub, f);

  DdProblem pb(part, dm, sys, rho_sub, cfg.gamma);
  if (cfg.rhs == ExperimentConfig::Rhs::Random) {
    std::mt19937_64 gen(cfg.seed + 2);
    Eigen::VectorXd fhat(pb.idx.n_hat);
    for (int i = 0; i < pb.idx.n_hat; ++i) fhat[i] = unit_uniform(gen);
    pb.set_interface_rhs(fhat);
  }

  const auto t0 = std::chrono::steady_clock::now();
  DdSolution sol = [&] {
    switch (cfg.method) {
      case ExperimentConfig::Method::Bddc:
        return solve_bddc(pb, cfg.tol, cfg.maxit);
      case ExperimentConfig::Method::Cg:
        return solve_schur_unpreconditioned(pb, cfg.tol, cfg.maxit);
      default:
        return solve_fetidp(pb, cfg.tol, cfg.maxit);
    }
  }();
  const auto t1 = std::chrono::steady_clock::now();

  row.iterations = sol.report.iterations;
  row.converged = sol.report.converged;
  row.lambda_min = sol.report.lambda_min;
  row.lambda_max = sol.report.lambda_max;
  row.cond = sol.report.cond;
  row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  row.dofs_total = dm.n_total;
  row.dofs_interface = pb.idx.n_hat;
  row.dofs_tilde = pb.idx.n_tilde;
  row.dofs_primal = pb.idx.n_primal;
  row.dofs_dual_nodes = pb.idx.n_dual;
  row.h_max = mesh.h_max();
  row.subdomain_diameter = part.diameter();
  if (!row.converged) row.note = "maxit";
  return row;
}

std::string csv_header() {
  return "mesh,N,n,k,coeff,method,iters,lambda_min,lambda_max,cond,"
         "dofs_interface,dofs_primal,wall_ms,seed,meta\n";
}

std::string csv_row(const ResultRow& row, const std::string& meta) {
  const ExperimentConfig& c = row.config;
  std::ostringstream ss;
  ss << c.mesh_label() << ',' << c.N << ',' << c.size_label() << ',' << c.degree
     << ',' << c.coeff.label() << ',' << c.method_label() << ',';
  if (row.note.empty() || row.note == "maxit") {
    ss << row.iterations << (row.note == "maxit" ? "+" : "") << ','
       << fmt("%.6g", row.lambda_min) << ',' << fmt("%.6g", row.lambda_max) << ','
       << fmt("%.6g", row.cond) << ',' << row.dofs_interface << ','
       << row.dofs_primal << ',' << fmt("%.3f", row.wall_ms) << ',';
  } else {
    ss << "-,-,-,-,-,-,-,";  // skipped or failed cell
  }
  ss << c.seed << ',' << meta << '\n';
  return ss.str();
}

std::string csv_deterministic_view(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!first) {
      // mask the wall-clock (13th) and meta (15th) fields
      std::vector<std::string> fields;
      std::string cur;
      for (char ch : line) {
        if (ch == ',') {
          fields.push_back(cur);
          cur.clear();
        } else {
          cur += ch;
        }
      }
      fields.push_back(cur);
      if (fields.size() == 15) {
        fields[12] = "*";
        fields[14] = "*";
        line.clear();
        for (size_t i = 0; i < fields.size(); ++i)
          line += (i ? "," : "") + fields[i];
      }
    }
    out << line << '\n';
    first = false;
  }
  return out.str();
}

TableArtifact run_table(const std::vector<ExperimentConfig>& grid, long long dof_budget) {
  if (grid.empty()) throw parameter_error("run_table: empty grid");
  TableArtifact art;
  art.csv = csv_header();
  const std::string meta = utc_timestamp() + ";" + kRngId;

  std::vector<int> n_order;
  std::vector<std::string> size_order;
  std::vector<std::pair<std::pair<int, std::string>, std::string>> cells;
  for (const ExperimentConfig& cfg : grid) {
    ResultRow row;
    std::string cell;
    if (estimate_dofs(cfg) > dof_budget) {
      row.config = cfg;
      row.note = "over memory budget";
      cell = "—";
    } else {
      try {
        row = run_experiment(cfg);
        cell = std::to_string(row.iterations) + (row.converged ? "" : "+") + " (" +
               fmt("%.2f", row.cond) + ")";
        if (!row.converged) art.any_flagged = true;
      } catch (const std::exception& e) {
        row.config = cfg;
        row.note = e.what();
        cell = "err";
        art.any_flagged = true;
      }
    }
    art.csv += csv_row(row, row.note.empty() || row.note == "maxit"
                                ? meta
                                : meta + ";" + row.note);
    if (std::find(n_order.begin(), n_order.end(), cfg.N) == n_order.end())
      n_order.push_back(cfg.N);
    if (std::find(size_order.begin(), size_order.end(), cfg.size_label()) ==
        size_order.end())
      size_order.push_back(cfg.size_label());
    cells.push_back({{cfg.N, cfg.size_label()}, cell});
  }

  std::ostringstream md;
  md << "| N \\ n |";
  for (const auto& s : size_order) md << ' ' << s << " |";
  md << "\n|---|";
  for (size_t i = 0; i < size_order.size(); ++i) md << "---|";
  md << '\n';
  for (int n : n_order) {
    md << "| " << n << " |";
    for (const auto& s : size_order) {
      std::string cell;
      for (const auto& [key, val] : cells)
        if (key.first == n && key.second == s) {
          cell = val;
          break;
        }
      md << ' ' << cell << " |";
    }
    md << '\n';
  }
  art.markdown = md.str();
  return art;
}

ScalingFit emit_scaling_data(const std::vector<ResultRow>& rows) {
  if (rows.size() < 3)
    throw parameter_error("emit_scaling_data: at least three points required");
  std::vector<double> x, y;
  std::ostringstream csv;
  csv << "log_k2H_over_h,sqrt_lambda_max\n";
  for (const ResultRow& r : rows) {
    const double k = r.config.degree;
    const double xi = std::log(k * k * r.subdomain_diameter / r.h_max);
    const double yi = std::sqrt(r.lambda_max);
    x.push_back(xi);
    y.push_back(yi);
    csv << fmt("%.10g", xi) << ',' << fmt("%.10g", yi) << '\n';
  }
  const LineFit f = fit_line(x, y);
  ScalingFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  out.csv = csv.str();
  return out;
}

ConvergenceStudy convergence_study(int degree, int levels) {
  if (degree < 1 || degree > 8)
    throw parameter_error("convergence_study: 1 <= degree <= 8 required");
  if (levels < 3) throw parameter_error("convergence_study: at least three levels");
  const double pi = std::acos(-1.0);
  auto u = [pi](Point2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
  auto grad = [pi](Point2 p) {
    return Point2{pi * std::cos(pi * p.x) * std::sin(pi * p.y),
                  pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
  };
  auto f = [pi, u](Point2 p) { return 2.0 * pi * pi * u(p); };

  ConvergenceStudy st;
  std::ostringstream csv;
  csv << "h,l2,h1\n";
  for (int lev = 0; lev < levels; ++lev) {
    const int n = 4 << lev;
    auto [mesh, part] = build_hex_mesh(2, n, n);
    const DofMap dm = build_dof_map(mesh, part, degree);
    const std::vector<double> rho_sub(dm.n_sub, 1.0);
    const GlobalSystem sys = assemble(mesh, part, dm, rho_sub, f);
    const Eigen::VectorXd sol = solve_reference(sys, dm);
    const ErrorNorms err = error_norms(mesh, dm, sol, u, grad);
    st.h.push_back(mesh.h_max());
    st.l2.push_back(err.l2);
    st.h1.push_back(err.h1_semi);
    csv << fmt("%.10g", mesh.h_max()) << ',' << fmt("%.10g", err.l2) << ','
        << fmt("%.10g", err.h1_semi) << '\n';
  }
  std::vector<double> lh, ll2, lh1;
  for (size_t i = 0; i < st.h.size(); ++i) {
    lh.push_back(std::log(st.h[i]));
    ll2.push_back(std::log(std::max(st.l2[i], 1e-300)));
    lh1.push_back(std::log(std::max(st.h1[i], 1e-300)));
  }
  st.l2_slope = fit_line(lh, ll2).slope;
  st.h1_slope = fit_line(lh, lh1).slope;
  st.csv = csv.str();
  return st;
}

}  // namespace polydd
