#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fourfield/newton.hpp"
#include "fourfield/stability.hpp"

namespace fourfield {

/// Configuration shared by the study commands; parseable from flags and from
/// a flat key=value config file (the CLI layer does the parsing).
struct StudyConfig {
  int dim = 2;
  std::vector<std::string> quartets{"L1N11R2D0"};
  std::vector<int> levels;
  double mu = 1.0;
  double tol = 1e-9;
  int maxit = 25;
  std::string boundary_split = "y0"; // "y0" (Gamma1 = {y=0}) or "dirichlet"
  std::string out;
  bool force = false;
};

struct ConvergenceRow {
  std::string quartet;
  int dim = 2;
  int level = 0;
  double h = 0.0;
  long dof = 0;
  int newton_iterations = 0;
  bool newton_converged = false;
  std::string newton_note; // nonempty when the solve failed
  double E_U = 0, E_K = 0, E_P = 0, E_p = 0;
  double r_U = NAN, r_K = NAN, r_P = NAN, r_p = NAN;
  bool poor = false;
};

namespace detail {

inline double rate(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

} // namespace detail

/// Structured study mesh at one level with the requested boundary split.
template <int Dim>
SimplicialMesh<Dim> study_mesh(int level, const std::string& boundary_split) {
  SimplicialMesh<Dim> mesh;
  if constexpr (Dim == 2)
    mesh = build_structured_square(level);
  else
    mesh = build_structured_cube(level);
  if (boundary_split != "dirichlet") mesh = tag_y0_gamma1(std::move(mesh));
  return mesh;
}

/// Manufactured-solution convergence study for one quartet over a sequence of
/// structured meshes. Dirichlet data comes from the exact displacement on
/// Gamma1; with the default "y0" split, Gamma1 = {y = 0} (the clamped side of
/// the shear solutions) and the rest of the boundary carries the exact
/// traction. (A Dirichlet boundary covering three sides would make every
/// L/D0 pairing dimensionally singular, so the essential boundary is one
/// side; other splits pollute the stress and pressure rates from the
/// Dirichlet-Neumann corners.)
template <int Dim>
std::vector<ConvergenceRow> run_convergence(const ElementQuartet& q, const std::vector<int>& levels,
                                            double mu, double tol, int maxit,
                                            const std::string& boundary_split) {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  NeoHookean mat(mu);
  ExactSolution<Dim> exact;
  if constexpr (Dim == 2)
    exact = exact_square();
  else
    exact = exact_cube();

  std::vector<ConvergenceRow> rows;
  for (int n : levels) {
    const bool pure_dirichlet = (boundary_split == "dirichlet");
    SimplicialMesh<Dim> mesh = study_mesh<Dim>(n, boundary_split);

    QuartetSpaces<Dim> s = make_spaces(mesh, q);
    Loads<Dim> loads;
    loads.body = body_force(mat, exact);
    if (!pure_dirichlet) loads.traction = exact_traction(mat, exact);
    DirichletBC bc = make_dirichlet(mesh, s, exact.displacement);

    ConvergenceRow row;
    row.quartet = q.name();
    row.dim = Dim;
    row.level = n;
    row.h = mesh_diameter(mesh);
    row.dof = s.total();
    try {
      std::optional<PressurePin> pin;
      if (pure_dirichlet) {
        MixedState ex = interpolate_exact(mesh, s, mat, exact);
        pin = PressurePin{0, ex.uD[0]};
      }
      NewtonReport rep = newton_solve(mesh, s, mat, loads, bc, stress_free_state(mesh, s, mu), tol,
                                      maxit, pin ? &*pin : nullptr);
      row.newton_iterations = rep.iterations;
      row.newton_converged = rep.converged;
      FieldErrors<Dim> err = l2_errors(mesh, s, rep.state, mat, exact);
      row.E_U = err.E_U;
      row.E_K = err.E_K;
      row.E_P = err.E_P;
      row.E_p = err.E_p;
    } catch (const Error& e) {
      row.newton_note = e.what();
    }
    if (!rows.empty() && rows.back().newton_note.empty() && row.newton_note.empty()) {
      const ConvergenceRow& prev = rows.back();
      row.r_U = detail::rate(prev.E_U, row.E_U, prev.h, row.h);
      row.r_K = detail::rate(prev.E_K, row.E_K, prev.h, row.h);
      row.r_P = detail::rate(prev.E_P, row.E_P, prev.h, row.h);
      row.r_p = detail::rate(prev.E_p, row.E_p, prev.h, row.h);
      row.poor = (row.r_P < 0.5) || (row.E_P >= prev.E_P);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "quartet,dim,level,h,dof,newton_iterations,newton_converged,E_U,E_K,E_P,E_p,r_U,r_K,r_P,r_p,poor\n";
  for (const auto& r : rows) {
    os << r.quartet << ',' << r.dim << ',' << r.level << ',' << format_double(r.h) << ',' << r.dof
       << ',' << r.newton_iterations << ',' << (r.newton_converged ? 1 : 0) << ','
       << format_double(r.E_U) << ',' << format_double(r.E_K) << ',' << format_double(r.E_P) << ','
       << format_double(r.E_p) << ',' << format_double(r.r_U) << ',' << format_double(r.r_K) << ','
       << format_double(r.r_P) << ',' << format_double(r.r_p) << ',' << (r.poor ? 1 : 0) << '\n';
  }
}

struct InfsupRow {
  std::string quartet;
  int dim = 2;
  int level = 0;
  double h = 0.0;
  std::string kind;
  double fr = 0.0;
  double fr_rows = 0.0;
  double alpha = NAN;
};

/// FR of the six condition matrices plus the whitened-alpha estimate, per
/// quartet and mesh level (the data behind an FR-versus-h plot).
template <int Dim>
std::vector<InfsupRow> run_infsup_report(const std::vector<ElementQuartet>& quartets,
                                         const std::vector<int>& levels, const ScanOptions& opt) {
  std::vector<InfsupRow> rows;
  for (const auto& q : quartets) {
    for (int n : levels) {
      SimplicialMesh<Dim> mesh = scan_mesh<Dim>(n, opt.gamma);
      QuartetSpaces<Dim> s = make_spaces(mesh, q);
      DirichletBC bc;
      BlockSystem sys = reference_scan_system(mesh, s, opt, &bc);
      auto conds = condition_ranks(sys, opt.rank_tol);
      double alpha = NAN;
      if (opt.constrain_trial) {
        NormGram<Dim> g = gram_matrices(mesh, s, &bc);
        alpha = infsup_alpha(sys, g);
      }
      const double h = mesh_diameter(mesh);
      for (const auto& [kind, c] : conds) {
        InfsupRow r;
        r.quartet = q.name();
        r.dim = Dim;
        r.level = n;
        r.h = h;
        r.kind = submatrix_name(kind);
        r.fr = c.fr;
        r.fr_rows = c.fr_rows;
        r.alpha = alpha;
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

inline void write_infsup_csv(std::ostream& os, const std::vector<InfsupRow>& rows) {
  os << "quartet,dim,level,h,kind,FR,FR_rows,alpha\n";
  for (const auto& r : rows)
    os << r.quartet << ',' << r.dim << ',' << r.level << ',' << format_double(r.h) << ',' << r.kind
       << ',' << format_double(r.fr) << ',' << format_double(r.fr_rows) << ','
       << format_double(r.alpha) << '\n';
}

/// Full 96-combination scan with summary.
template <int Dim>
nlohmann::ordered_json run_scan(const std::vector<int>& levels, const ScanOptions& opt) {
  auto verdicts = scan_combinations<Dim>(levels, ElementQuartet::all(), opt);
  nlohmann::ordered_json j;
  j["dim"] = Dim;
  j["levels"] = levels;
  auto& arr = j["verdicts"] = nlohmann::ordered_json::array();
  int stable = 0;
  std::vector<std::string> stable_names;
  for (const auto& v : verdicts) {
    arr.push_back(verdict_to_json(v));
    if (v.stable) {
      ++stable;
      stable_names.push_back(v.quartet);
    }
  }
  j["summary"]["stable_count"] = stable;
  j["summary"]["stable"] = stable_names;
  return j;
}

} // namespace fourfield
