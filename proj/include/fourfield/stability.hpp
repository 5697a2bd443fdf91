#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <json.hpp>
#include <lapacke.h>

#include "fourfield/assembly.hpp"
#include "fourfield/newton.hpp"

namespace fourfield {

/// Singular values of a dense matrix (descending), via LAPACK dgesdd.
inline Eigen::VectorXd singular_values(Eigen::MatrixXd A) {
  const lapack_int m = static_cast<lapack_int>(A.rows());
  const lapack_int n = static_cast<lapack_int>(A.cols());
  if (m == 0 || n == 0) throw ContractError("singular_values: empty matrix");
  Eigen::VectorXd s(std::min(m, n));
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, A.data(), m, s.data(), nullptr,
                                   m, nullptr, n);
  if (info != 0) throw Error("singular_values: LAPACK dgesdd failed");
  return s;
}

/// Numerical rank: count of singular values above tol * max(m,n) * sigma_max.
inline int numerical_rank(const Eigen::VectorXd& sv, long rows, long cols,
                          double tol = std::numeric_limits<double>::epsilon()) {
  if (sv.size() == 0) return 0;
  const double cut = tol * static_cast<double>(std::max(rows, cols)) * sv[0];
  int r = 0;
  for (long i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++r;
  return r;
}

/// Full-rankness FR = rank / min(rows, cols) of a dense matrix.
inline double full_rankness(const Eigen::MatrixXd& A,
                            double tol = std::numeric_limits<double>::epsilon()) {
  if (A.rows() == 0 || A.cols() == 0) throw ContractError("full_rankness: empty matrix");
  Eigen::VectorXd sv = singular_values(A);
  return static_cast<double>(numerical_rank(sv, A.rows(), A.cols(), tol)) /
         static_cast<double>(std::min(A.rows(), A.cols()));
}

enum class SubmatrixKind { S1d, SDc, B, C, D, E };

inline std::string submatrix_name(SubmatrixKind k) {
  switch (k) {
    case SubmatrixKind::S1d: return "S1d";
    case SubmatrixKind::SDc: return "SDc";
    case SubmatrixKind::B: return "B";
    case SubmatrixKind::C: return "C";
    case SubmatrixKind::D: return "D";
    default: return "E";
  }
}

namespace detail {

inline void place(Eigen::MatrixXd& M, const SpMat& b, long r0, long c0) {
  for (int k = 0; k < b.outerSize(); ++k)
    for (SpMat::InnerIterator it(b, k); it; ++it) M(r0 + it.row(), c0 + it.col()) += it.value();
}

} // namespace detail

/// The submatrices of the Newton stiffness whose full rank is necessary for
/// the inf-sup conditions, concatenated in the order of their display in the
/// stability analysis. Row/column dimensions of the displacement space are
/// taken from the stored blocks (S1d rows = test side, Sc1 columns = trial
/// side), so the extraction works on full and reduced systems alike.
inline Eigen::MatrixXd extract_submatrix(const BlockSystem& sys, SubmatrixKind kind) {
  const long n1r = sys.S1d.rows(); // displacement test dofs
  const long n1c = sys.Sc1.cols(); // displacement trial dofs
  const long nc = sys.nc, nd = sys.nd, nD = sys.nD;
  Eigen::MatrixXd M;
  switch (kind) {
    case SubmatrixKind::S1d:
      M = Eigen::MatrixXd(sys.S1d);
      break;
    case SubmatrixKind::SDc:
      M = Eigen::MatrixXd(sys.SDc);
      break;
    case SubmatrixKind::B:
      M = Eigen::MatrixXd::Zero(n1r + nc, n1c + nc + nd);
      detail::place(M, sys.S1d, 0, n1c + nc);
      detail::place(M, sys.Sc1, n1r, 0);
      detail::place(M, sys.Scc, n1r, n1c);
      break;
    case SubmatrixKind::C:
      M = Eigen::MatrixXd::Zero(n1r + nd, nc + nd + nD);
      detail::place(M, sys.S1d, 0, nc);
      detail::place(M, sys.Sdc, n1r, 0);
      detail::place(M, sys.Sdd, n1r, nc);
      detail::place(M, sys.SdD, n1r, nc + nd);
      break;
    case SubmatrixKind::D:
      M = Eigen::MatrixXd::Zero(nc + nD, n1c + nc);
      detail::place(M, sys.Sc1, 0, 0);
      detail::place(M, sys.Scc, 0, n1c);
      detail::place(M, sys.SDc, nc, n1c);
      break;
    case SubmatrixKind::E:
      M = Eigen::MatrixXd::Zero(nd + nD, nc + nd + nD);
      detail::place(M, sys.Sdc, 0, 0);
      detail::place(M, sys.Sdd, 0, nc);
      detail::place(M, sys.SdD, 0, nc + nd);
      detail::place(M, sys.SDc, nd, 0);
      break;
  }
  return M;
}

/// Necessary dimension checks for solvability. Flags, in order:
/// (i) n1 > nd, (ii) nD > nc, (iii) n1 > nc + nD, (iv) nD > n1.
inline std::array<bool, 4> dimension_inequalities(long n1, long nc, long nd, long nD) {
  if (n1 < 0 || nc < 0 || nd < 0 || nD < 0) throw ContractError("dimension_inequalities: negative count");
  return {n1 > nd, nD > nc, n1 > nc + nD, nD > n1};
}

/// Rank result for one condition matrix.
struct ConditionResult {
  long rows = 0, cols = 0;
  int rank = 0;
  double fr = 0.0;       // rank / min(rows, cols)
  double fr_rows = 0.0;  // rank / rows: 1 exactly when the inf-sup can hold
  bool row_full() const { return rank == rows; }
};

inline ConditionResult condition_from_rank(long rows, long cols, int rank) {
  ConditionResult c;
  c.rows = rows;
  c.cols = cols;
  c.rank = rank;
  c.fr = static_cast<double>(rank) / static_cast<double>(std::min(rows, cols));
  c.fr_rows = static_cast<double>(rank) / static_cast<double>(rows);
  return c;
}

namespace detail {

inline Eigen::MatrixXd sparse_solve_dense(const SpMat& A, const Eigen::MatrixXd& B) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SingularMatrixError("sparse_solve_dense: factorization failed");
  return lu.solve(B);
}

} // namespace detail

/// Ranks of all six condition matrices. The concatenated matrices B, C, D, E
/// contain an invertible mass block, so their ranks reduce exactly to the
/// rank of a Schur complement:
///   rank(B) = nc + rank(S1d),
///   rank(C) = nd + rank(S1d Sdd^{-1} [Sdc SdD]),
///   rank(D) = nc + rank(SDc Scc^{-1} Sc1),
///   rank(E) = nd + rank(SDc).
/// This keeps the dense SVDs at the size of the small factors.
inline std::map<SubmatrixKind, ConditionResult> condition_ranks(const BlockSystem& sys,
                                                                double tol = std::numeric_limits<double>::epsilon()) {
  const long n1r = sys.S1d.rows(), n1c = sys.Sc1.cols();
  const long nc = sys.nc, nd = sys.nd, nD = sys.nD;
  std::map<SubmatrixKind, ConditionResult> out;

  Eigen::MatrixXd S1d(sys.S1d);
  Eigen::VectorXd sv_S1d = singular_values(S1d);
  int r_S1d = numerical_rank(sv_S1d, n1r, nd, tol);
  out[SubmatrixKind::S1d] = condition_from_rank(n1r, nd, r_S1d);

  Eigen::MatrixXd SDc(sys.SDc);
  Eigen::VectorXd sv_SDc = singular_values(SDc);
  int r_SDc = numerical_rank(sv_SDc, nD, nc, tol);
  out[SubmatrixKind::SDc] = condition_from_rank(nD, nc, r_SDc);

  out[SubmatrixKind::B] = condition_from_rank(n1r + nc, n1c + nc + nd, static_cast<int>(nc) + r_S1d);
  out[SubmatrixKind::E] = condition_from_rank(nd + nD, nc + nd + nD, static_cast<int>(nd) + r_SDc);

  {
    Eigen::MatrixXd rhs(nd, nc + nD);
    rhs.leftCols(nc) = Eigen::MatrixXd(sys.Sdc);
    rhs.rightCols(nD) = Eigen::MatrixXd(sys.SdD);
    Eigen::MatrixXd schur = S1d * detail::sparse_solve_dense(sys.Sdd, rhs);
    Eigen::VectorXd sv = singular_values(schur);
    int r = numerical_rank(sv, n1r, nc + nD, tol);
    out[SubmatrixKind::C] = condition_from_rank(n1r + nd, nc + nd + nD, static_cast<int>(nd) + r);
  }
  {
    Eigen::MatrixXd schur = SDc * detail::sparse_solve_dense(sys.Scc, Eigen::MatrixXd(sys.Sc1));
    Eigen::VectorXd sv = singular_values(schur);
    int r = numerical_rank(sv, nD, n1c, tol);
    out[SubmatrixKind::D] = condition_from_rank(nc + nD, n1c + nc, static_cast<int>(nc) + r);
  }
  return out;
}

/// Smallest singular value of the norm-whitened matrix L^{-1} S L^{-T} with
/// G = L L^T; this has the same singular values as G^{-1/2} S G^{-1/2}.
inline double infsup_alpha_dense(const Eigen::MatrixXd& S, const Eigen::MatrixXd& G) {
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw Error("infsup_alpha: Gram matrix is not SPD");
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd W = L.triangularView<Eigen::Lower>().solve(S);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).transpose(); // L^{-1} S L^{-T}
  Eigen::VectorXd sv = singular_values(W);
  return sv[sv.size() - 1];
}

/// alpha estimate for a (reduced) Newton system in the block Gram of the
/// Z-norm.
template <int Dim>
double infsup_alpha(const BlockSystem& sys, const NormGram<Dim>& g) {
  const long nt = sys.total();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nt, nt);
  detail::place(S, sys.S1d, 0, sys.n1 + sys.nc);
  detail::place(S, sys.Sc1, sys.n1, 0);
  detail::place(S, sys.Scc, sys.n1, sys.n1);
  detail::place(S, sys.Sdc, sys.n1 + sys.nc, sys.n1);
  detail::place(S, sys.Sdd, sys.n1 + sys.nc, sys.n1 + sys.nc);
  detail::place(S, sys.SdD, sys.n1 + sys.nc, sys.n1 + sys.nc + sys.nd);
  detail::place(S, sys.SDc, sys.n1 + sys.nc + sys.nd, sys.n1);

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nt, nt);
  detail::place(G, g.G1, 0, 0);
  detail::place(G, g.Gc, sys.n1, sys.n1);
  detail::place(G, g.Gd, sys.n1 + sys.nc, sys.n1 + sys.nc);
  detail::place(G, g.GD, sys.n1 + sys.nc + sys.nd, sys.n1 + sys.nc + sys.nd);
  return infsup_alpha_dense(S, G);
}

/// How the reference-state scan sets up boundary conditions.
enum class ScanGamma {
  Y0Side,      // Gamma1 = {y = 0}, Gamma2 = rest (the convention of the studies)
  SingleFacet, // Gamma1 = one boundary facet (lexicographically smallest centroid)
  X1Split,     // Gamma2 = {x = 1}, Gamma1 = rest
  AllDirichlet
};

struct ScanOptions {
  ScanGamma gamma = ScanGamma::SingleFacet;
  bool pressure_at_mu = true;  // reference pressure p = mu (stress-free) instead of 0
  bool constrain_trial = true; // reduce the displacement trial columns as well
  double mu = 1.0;
  double rank_tol = std::numeric_limits<double>::epsilon();
};

/// Gamma1 = {y = 0}, Gamma2 = rest: the clamped side of the shear solutions,
/// where the exact displacement vanishes. A one-side essential boundary also
/// keeps the constrained displacement space large enough that no stable
/// quartet's pressure block outruns it; Dirichlet data on three sides would
/// make every L1/D0 combination dimensionally singular.
template <int Dim>
SimplicialMesh<Dim> tag_y0_gamma1(SimplicialMesh<Dim> mesh) {
  return tag_boundary<Dim>(std::move(mesh), [](const Eigen::Matrix<double, Dim, 1>& x) {
    return x[1] < 1e-12 ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2;
  });
}

template <int Dim>
SimplicialMesh<Dim> scan_mesh(int level, ScanGamma gamma) {
  SimplicialMesh<Dim> mesh;
  if constexpr (Dim == 2)
    mesh = build_structured_square(level);
  else
    mesh = build_structured_cube(level);
  switch (gamma) {
    case ScanGamma::Y0Side: return tag_y0_gamma1(std::move(mesh));
    case ScanGamma::X1Split: return tag_x1_gamma2(std::move(mesh));
    case ScanGamma::AllDirichlet: return mesh; // builder default: all Gamma1
    case ScanGamma::SingleFacet: break;
  }
  // pick the boundary facet with lexicographically smallest centroid
  int best = -1;
  Eigen::Matrix<double, Dim, 1> bestc;
  for (int f : mesh.boundary_facets()) {
    auto c = mesh.facet_centroid(f);
    bool smaller = best < 0;
    if (!smaller) {
      for (int d = 0; d < Dim; ++d) {
        if (c[d] < bestc[d] - 1e-14) { smaller = true; break; }
        if (c[d] > bestc[d] + 1e-14) break;
      }
    }
    if (smaller) { best = f; bestc = c; }
  }
  for (int f : mesh.boundary_facets())
    mesh.boundary_tags[f] = (f == best) ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2;
  return mesh;
}

/// Reference-state Newton system for the stability analysis: the test side
/// of the displacement space is always reduced to [V^1_{h,1}]^n; the trial
/// side is reduced as well when `constrain_trial` is set.
template <int Dim>
BlockSystem reference_scan_system(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                                  const ScanOptions& opt, DirichletBC* bc_out = nullptr) {
  NeoHookean mat(opt.mu);
  MixedState state = opt.pressure_at_mu ? stress_free_state(mesh, s, opt.mu) : zero_state(s);
  Loads<Dim> loads; // unloaded
  BlockSystem sys = assemble_newton_system(mesh, s, state, mat, loads);
  DirichletBC bc = make_dirichlet(mesh, s);
  BlockSystem red = sys;
  red.reduced = true;
  red.n1 = bc.n_free();
  red.S1d = detail::select_rows(sys.S1d, bc.free_global);
  red.r1.resize(bc.n_free());
  for (long i = 0; i < bc.n_free(); ++i) red.r1[i] = sys.r1[bc.free_global[i]];
  if (opt.constrain_trial) red.Sc1 = detail::select_cols(sys.Sc1, bc.free_global);
  if (bc_out) *bc_out = bc;
  return red;
}

/// Per-mesh part of a stability verdict.
struct MeshVerdict {
  int level = 0;
  long n1_unconstrained = 0, n1_constrained = 0, nc = 0, nd = 0, nD = 0;
  std::array<bool, 4> flags{};              // with the n1 count used by the scan
  std::array<bool, 4> flags_unconstrained{};
  std::array<bool, 4> flags_constrained{};
  std::map<SubmatrixKind, ConditionResult> conditions;
  bool stable_here = false;
};

struct StabilityVerdict {
  std::string quartet;
  std::vector<MeshVerdict> per_mesh;
  bool stable = false;
  std::string failure; // nonempty when assembly/analysis failed
};

/// Scan a set of quartets over a sequence of structured meshes at the
/// reference state. A quartet is stable only if on every mesh all six
/// condition matrices have full row rank (the rank each inf-sup condition
/// requires) and no dimension inequality fires.
template <int Dim>
std::vector<StabilityVerdict> scan_combinations(const std::vector<int>& levels,
                                                const std::vector<ElementQuartet>& quartets,
                                                const ScanOptions& opt = {}) {
  std::vector<StabilityVerdict> out;
  struct LevelData {
    SimplicialMesh<Dim> mesh;
    int level;
  };
  std::vector<LevelData> meshes;
  for (int l : levels) meshes.push_back({scan_mesh<Dim>(l, opt.gamma), l});

  // cache of condition results shared between quartets with common subspaces
  std::map<std::string, std::map<SubmatrixKind, ConditionResult>> cache;

  for (const auto& q : quartets) {
    StabilityVerdict v;
    v.quartet = q.name();
    v.stable = true;
    try {
      for (const auto& ld : meshes) {
        QuartetSpaces<Dim> s = make_spaces(ld.mesh, q);
        DirichletBC bc;
        BlockSystem sys = reference_scan_system(ld.mesh, s, opt, &bc);

        MeshVerdict mv;
        mv.level = ld.level;
        mv.n1_unconstrained = s.n1();
        mv.n1_constrained = bc.n_free();
        mv.nc = s.nc();
        mv.nd = s.nd();
        mv.nD = s.nD();
        mv.flags_unconstrained = dimension_inequalities(mv.n1_unconstrained, mv.nc, mv.nd, mv.nD);
        mv.flags_constrained = dimension_inequalities(mv.n1_constrained, mv.nc, mv.nd, mv.nD);
        mv.flags = opt.constrain_trial ? mv.flags_constrained : mv.flags_unconstrained;

        // reuse ranks computed for another quartet sharing the same subspaces
        auto key = [&](const std::string& kind, const std::string& fams) {
          return kind + "|" + fams + "|L" + std::to_string(ld.level);
        };
        const std::string L = std::to_string(q.disp_degree);
        const std::string N = std::to_string(q.grad_kind) + std::to_string(q.grad_degree);
        const std::string S = (q.stress_bdm ? "B" : "R") + std::to_string(q.stress_degree);
        const std::string D = std::to_string(q.pressure_degree);
        std::string full_key = key("all", L + N + S + D);
        std::map<SubmatrixKind, ConditionResult> conds;
        if (auto it = cache.find(full_key); it != cache.end()) {
          conds = it->second;
        } else {
          conds = condition_ranks(sys, opt.rank_tol);
          cache[full_key] = conds;
        }
        mv.conditions = conds;

        mv.stable_here = true;
        for (const auto& [kind, c] : conds)
          if (!c.row_full()) mv.stable_here = false;
        for (bool f : mv.flags)
          if (f) mv.stable_here = false;
        if (!mv.stable_here) v.stable = false;
        v.per_mesh.push_back(std::move(mv));
      }
    } catch (const Error& e) {
      v.failure = e.what();
      v.stable = false;
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline nlohmann::ordered_json verdict_to_json(const StabilityVerdict& v) {
  nlohmann::ordered_json j;
  j["quartet"] = v.quartet;
  j["stable"] = v.stable;
  if (!v.failure.empty()) j["failure"] = v.failure;
  auto& arr = j["meshes"] = nlohmann::ordered_json::array();
  for (const auto& mv : v.per_mesh) {
    nlohmann::ordered_json m;
    m["level"] = mv.level;
    m["n1"] = mv.n1_unconstrained;
    m["n1_constrained"] = mv.n1_constrained;
    m["nc"] = mv.nc;
    m["nd"] = mv.nd;
    m["nD"] = mv.nD;
    nlohmann::ordered_json fr, frr;
    for (const auto& [kind, c] : mv.conditions) {
      fr[submatrix_name(kind)] = c.fr;
      frr[submatrix_name(kind)] = c.fr_rows;
    }
    m["FR"] = fr;
    m["FR_rows"] = frr;
    m["flags"] = {{"i", mv.flags[0]}, {"ii", mv.flags[1]}, {"iii", mv.flags[2]}, {"iv", mv.flags[3]}};
    m["stable"] = mv.stable_here;
    arr.push_back(m);
  }
  return j;
}

} // namespace fourfield
