#pragma once

#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "fourfield/assembly.hpp"

namespace fourfield {

/// Pin one pressure dof to a fixed value. A pure-Dirichlet problem keeps the
/// constant pressure mode; pinning removes it. The pinned increment is zero
/// (the state is initialized with the pinned value), so the elimination needs
/// no lifting.
struct PressurePin {
  long dof = 0;
  double value = 0.0;
};

/// Monolithic sparse LU solve of the (reduced) block system for the Newton
/// update. Raises SingularMatrixError when the factorization fails or the
/// algebraic residual is not small; unstable quartets are expected to land
/// here, so the condition is surfaced rather than masked.
inline Eigen::VectorXd solve_linear(const BlockSystem& sys, double rel_tol = 1e-10,
                                    const PressurePin* pin = nullptr) {
  SpMat A = full_matrix(sys);
  Eigen::VectorXd rhs = -full_residual(sys);
  if (pin) {
    const long g = sys.n1 + sys.nc + sys.nd + pin->dof;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it)
        if (it.row() == g || it.col() == g) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    A.prune(0.0);
    if (A.coeff(g, g) == 0.0) A.coeffRef(g, g) = 1.0;
    A.makeCompressed();
    rhs[g] = 0.0;
  }
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SingularMatrixError("solve_linear: factorization failed");
  Eigen::VectorXd z = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw SingularMatrixError("solve_linear: solve failed");
  const double rnorm = (A * z - rhs).norm();
  const double scale = rhs.norm() + A.coeffs().cwiseAbs().maxCoeff() * z.norm();
  if (!(rnorm <= rel_tol * std::max(scale, 1e-30)))
    throw SingularMatrixError("solve_linear: algebraic residual too large (singular system?)");
  return z;
}

struct NewtonReport {
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::vector<double> residual_history; // initial residual plus one entry per iteration
  MixedState state;
};

/// Newton's method: at each step solve the reduced linear system and update
/// u <- u + z. The state's Gamma1 displacement entries are set from the
/// boundary data up front, so increments vanish there. Stops when
/// ||r|| <= tol (1 + ||r0||); divergence (residual growth over three
/// consecutive iterations) is reported, not raised.
template <int Dim>
NewtonReport newton_solve(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& spaces,
                          const NeoHookean& mat, const Loads<Dim>& loads, const DirichletBC& bc,
                          MixedState initial, double tol = 1e-9, int maxit = 25,
                          const PressurePin* pin = nullptr) {
  NewtonReport rep;
  impose_dirichlet_values(initial, bc);
  if (pin) initial.uD[pin->dof] = pin->value;
  rep.state = std::move(initial);

  BlockSystem res = assemble_residual(mesh, spaces, rep.state, mat, loads, &bc);
  double rnorm = full_residual(res).norm();
  const double r0 = rnorm;
  rep.residual_history.push_back(rnorm);

  int growth_streak = 0;
  for (int it = 1; it <= maxit; ++it) {
    BlockSystem sys = assemble_newton_system(mesh, spaces, rep.state, mat, loads);
    BlockSystem red = apply_dirichlet<Dim>(sys, bc);
    Eigen::VectorXd z = solve_linear(red, 1e-10, pin);

    // prolong the update (zero on Gamma1) and apply
    long off = 0;
    for (long i = 0; i < red.n1; ++i) rep.state.u1[bc.free_global[i]] += z[off + i];
    off += red.n1;
    rep.state.uc += z.segment(off, red.nc);
    off += red.nc;
    rep.state.ud += z.segment(off, red.nd);
    off += red.nd;
    rep.state.uD += z.segment(off, red.nD);

    res = assemble_residual(mesh, spaces, rep.state, mat, loads, &bc);
    double rnew = full_residual(res).norm();
    rep.residual_history.push_back(rnew);
    rep.iterations = it;
    growth_streak = (rnew > rnorm) ? growth_streak + 1 : 0;
    rnorm = rnew;
    if (rnorm <= tol * (1.0 + r0)) {
      rep.converged = true;
      break;
    }
    if (growth_streak >= 3) {
      rep.diverged = true;
      break;
    }
  }
  return rep;
}

} // namespace fourfield
