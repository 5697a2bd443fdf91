#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fourfield/dofmap.hpp"
#include "fourfield/element.hpp"
#include "fourfield/geometry.hpp"
#include "fourfield/material.hpp"
#include "fourfield/mesh.hpp"
#include "fourfield/quartet.hpp"

namespace fourfield {

using SpMat = Eigen::SparseMatrix<double>;

/// The four discrete spaces of a quartet on one mesh, with the reference
/// tabulations at the volume quadrature rule precomputed. Displacement and
/// the two tensor unknowns are Dim copies (rows) of their base elements.
template <int Dim>
struct QuartetSpaces {
  ElementQuartet quartet;
  ReferenceElement e1, ec, ed, eD;
  DofMap m1, mc, md, mD;
  int quad_degree = 0;
  QuadratureRule rule;
  Tabulation t1_val, t1_grad, tc_val, td_val, tD_val;

  long n1() const { return m1.global_dim(); }
  long nc() const { return mc.global_dim(); }
  long nd() const { return md.global_dim(); }
  long nD() const { return mD.global_dim(); }
  long total() const { return n1() + nc() + nd() + nD(); }
};

template <int Dim>
QuartetSpaces<Dim> make_spaces(const SimplicialMesh<Dim>& mesh, const ElementQuartet& q) {
  QuartetSpaces<Dim> s;
  s.quartet = q;
  s.e1 = ReferenceElement::make(q.disp(), Dim);
  s.ec = ReferenceElement::make(q.grad(), Dim);
  s.ed = ReferenceElement::make(q.stress(), Dim);
  s.eD = ReferenceElement::make(q.pressure(), Dim);
  s.m1 = build_dofmap(mesh, s.e1, Dim);
  s.mc = build_dofmap(mesh, s.ec, Dim);
  s.md = build_dofmap(mesh, s.ed, Dim);
  s.mD = build_dofmap(mesh, s.eD, 1);
  int maxdeg = std::max({s.e1.embedded_degree, s.ec.embedded_degree, s.ed.embedded_degree,
                         s.eD.embedded_degree});
  s.quad_degree = 2 * maxdeg + 2;
  s.rule = simplex_rule(Dim, s.quad_degree);
  s.t1_val = s.e1.tabulate(s.rule.points, Op::Value);
  s.t1_grad = s.e1.tabulate(s.rule.points, Op::Grad);
  s.tc_val = s.ec.tabulate(s.rule.points, Op::Value);
  s.td_val = s.ed.tabulate(s.rule.points, Op::Value);
  s.tD_val = s.eD.tabulate(s.rule.points, Op::Value);
  return s;
}

/// Coefficient vectors of the four unknowns.
struct MixedState {
  Eigen::VectorXd u1, uc, ud, uD;
};

template <int Dim>
MixedState zero_state(const QuartetSpaces<Dim>& s) {
  MixedState st;
  st.u1 = Eigen::VectorXd::Zero(s.n1());
  st.uc = Eigen::VectorXd::Zero(s.nc());
  st.ud = Eigen::VectorXd::Zero(s.nd());
  st.uD = Eigen::VectorXd::Zero(s.nD());
  return st;
}

/// U = 0, K = 0, P = 0, p = mu: the exact root of the unloaded problem.
template <int Dim>
MixedState stress_free_state(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s, double mu) {
  MixedState st = zero_state(s);
  st.uD = interpolate<Dim>(mesh, s.eD, s.mD, [mu](const Eigen::Matrix<double, Dim, 1>&) {
    return Eigen::MatrixXd::Constant(1, 1, mu);
  });
  return st;
}

/// Body force and Gamma2 traction; either may be empty (zero).
template <int Dim>
struct Loads {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  std::function<Vec(const Vec&)> body;
  std::function<Vec(const Vec&, const Vec&)> traction; // (X, unit outward normal)
};

/// Dirichlet data on Gamma1 for the displacement space: constrained base
/// dofs, their component values, and the free-dof numbering used by the
/// reduced systems.
struct DirichletBC {
  int rows = 0;
  long base_dim = 0;
  std::vector<int> base_dofs;   // constrained base dofs, ascending
  Eigen::MatrixXd values;       // base_dofs.size() x rows
  std::vector<long> free_global;   // reduced index -> full global index
  std::vector<long> full_to_red;   // full global index -> reduced index or -1

  long n_free() const { return static_cast<long>(free_global.size()); }
  bool constrains(long full) const { return full_to_red[full] < 0; }
};

template <int Dim>
DirichletBC make_dirichlet(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                           const std::function<Eigen::Matrix<double, Dim, 1>(
                               const Eigen::Matrix<double, Dim, 1>&)>& Ubar = nullptr) {
  DirichletBC bc;
  bc.rows = Dim;
  bc.base_dim = s.m1.base_dim;
  bc.base_dofs = gamma1_base_dofs(mesh, s.e1, s.m1);
  bc.values = Eigen::MatrixXd::Zero(bc.base_dofs.size(), Dim);
  if (Ubar) {
    Eigen::VectorXd full = interpolate<Dim>(mesh, s.e1, s.m1,
        [&Ubar](const Eigen::Matrix<double, Dim, 1>& x) {
          Eigen::MatrixXd v(Dim, 1);
          v.col(0) = Ubar(x);
          return v;
        });
    for (size_t i = 0; i < bc.base_dofs.size(); ++i)
      for (int r = 0; r < Dim; ++r)
        bc.values(i, r) = full[static_cast<long>(r) * bc.base_dim + bc.base_dofs[i]];
  }
  std::vector<bool> fixed(bc.base_dim, false);
  for (int d : bc.base_dofs) fixed[d] = true;
  bc.full_to_red.assign(static_cast<long>(Dim) * bc.base_dim, -1);
  for (int r = 0; r < Dim; ++r)
    for (long i = 0; i < bc.base_dim; ++i)
      if (!fixed[i]) {
        bc.full_to_red[r * bc.base_dim + i] = static_cast<long>(bc.free_global.size());
        bc.free_global.push_back(r * bc.base_dim + i);
      }
  return bc;
}

/// Overwrite the Gamma1 entries of the displacement coefficients with the
/// interpolated boundary data.
inline void impose_dirichlet_values(MixedState& state, const DirichletBC& bc) {
  for (size_t i = 0; i < bc.base_dofs.size(); ++i)
    for (int r = 0; r < bc.rows; ++r)
      state.u1[static_cast<long>(r) * bc.base_dim + bc.base_dofs[i]] = bc.values(i, r);
}

/// Newton-step stiffness blocks and residual segments. Only the seven
/// nonzero blocks of the four-by-four block stiffness are stored; the
/// remaining nine blocks are structurally zero. S1d rows and Sc1 columns
/// refer to the displacement space, which may be the full space or the
/// Gamma1-reduced one (see apply_dirichlet).
struct BlockSystem {
  long n1 = 0, nc = 0, nd = 0, nD = 0;
  SpMat S1d, Sc1, Scc, Sdc, Sdd, SdD, SDc;
  Eigen::VectorXd r1, rc, rd, rD;
  bool reduced = false;

  long total() const { return n1 + nc + nd + nD; }
};

namespace detail {

template <int Dim>
struct CellWork {
  CellGeometry<Dim> geom;
  Tabulation v1, g1, vc, vd, vD; // physical tables at volume points
  const int* d1;
  const int* dc;
  const int* dd;
  const int* dD;
};

template <int Dim>
CellWork<Dim> cell_work(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s, int cell) {
  CellWork<Dim> w;
  w.geom = cell_geometry(mesh, cell);
  w.v1 = s.t1_val; // affine scalar values are unchanged
  w.g1 = push_forward(s.e1, w.geom, s.t1_grad, Op::Grad);
  w.vc = push_forward(s.ec, w.geom, s.tc_val, Op::Value);
  w.vd = push_forward(s.ed, w.geom, s.td_val, Op::Value);
  w.vD = s.tD_val;
  w.d1 = &s.m1.cell_dofs[static_cast<size_t>(cell) * s.e1.num_dofs];
  w.dc = &s.mc.cell_dofs[static_cast<size_t>(cell) * s.ec.num_dofs];
  w.dd = &s.md.cell_dofs[static_cast<size_t>(cell) * s.ed.num_dofs];
  w.dD = &s.mD.cell_dofs[static_cast<size_t>(cell) * s.eD.num_dofs];
  return w;
}

template <int Dim>
Eigen::Matrix<double, Dim, Dim> eval_tensor(const Eigen::VectorXd& coeffs, long base_dim,
                                            const int* dofs, const Tabulation& tab, int q) {
  Eigen::Matrix<double, Dim, Dim> T = Eigen::Matrix<double, Dim, Dim>::Zero();
  for (int b = 0; b < tab.ndofs; ++b)
    for (int r = 0; r < Dim; ++r) {
      const double u = coeffs[static_cast<long>(r) * base_dim + dofs[b]];
      if (u == 0.0) continue;
      for (int c = 0; c < Dim; ++c) T(r, c) += u * tab.at(b, q, c);
    }
  return T;
}

template <int Dim>
Eigen::Matrix<double, Dim, Dim> eval_grad(const Eigen::VectorXd& coeffs, long base_dim,
                                          const int* dofs, const Tabulation& grad, int q) {
  // rows are gradients of the displacement components
  return eval_tensor<Dim>(coeffs, base_dim, dofs, grad, q);
}

inline double eval_scalar(const Eigen::VectorXd& coeffs, const int* dofs, const Tabulation& tab, int q) {
  double v = 0.0;
  for (int b = 0; b < tab.ndofs; ++b) v += coeffs[dofs[b]] * tab.at(b, q, 0);
  return v;
}

} // namespace detail

/// Assemble the four residual segments of the nonlinear problem at `state`.
/// If `bc` is given, the displacement segment keeps only the free (Gamma1-
/// complement) test rows.
template <int Dim>
BlockSystem assemble_residual(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                              const MixedState& state, const NeoHookean& mat,
                              const Loads<Dim>& loads, const DirichletBC* bc = nullptr) {
  using Mat = Eigen::Matrix<double, Dim, Dim>;
  using Vec = Eigen::Matrix<double, Dim, 1>;
  BlockSystem out;
  out.n1 = s.n1();
  out.nc = s.nc();
  out.nd = s.nd();
  out.nD = s.nD();
  Eigen::VectorXd r1 = Eigen::VectorXd::Zero(s.n1());
  out.rc = Eigen::VectorXd::Zero(s.nc());
  out.rd = Eigen::VectorXd::Zero(s.nd());
  out.rD = Eigen::VectorXd::Zero(s.nD());

  const int nq = s.rule.size();
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    auto w = detail::cell_work(mesh, s, cell);
    const double vol = std::abs(w.geom.det);
    for (int q = 0; q < nq; ++q) {
      const double wq = s.rule.weights[q] * vol;
      Mat gradU = detail::eval_grad<Dim>(state.u1, s.m1.base_dim, w.d1, w.g1, q);
      Mat K = detail::eval_tensor<Dim>(state.uc, s.mc.base_dim, w.dc, w.vc, q);
      Mat P = detail::eval_tensor<Dim>(state.ud, s.md.base_dim, w.dd, w.vd, q);
      const double p = detail::eval_scalar(state.uD, w.dD, w.vD, q);
      Mat F = Mat::Identity() + K;
      const double detF = F.determinant();
      if (detF <= 0.0) throw StateDomainError("assemble_residual: det(I+K) <= 0 at quadrature point");
      Mat FinvT = F.inverse().transpose();
      Mat constitutive = mat.mu * F - P - p * FinvT;
      Mat gk = gradU - K;

      Vec B = Vec::Zero();
      if (loads.body) {
        Eigen::Matrix<double, Dim, 1> X = w.geom.map(s.rule.points.row(q).transpose());
        B = loads.body(X);
      }
      for (int a = 0; a < s.e1.num_dofs; ++a) {
        Vec g;
        for (int d = 0; d < Dim; ++d) g[d] = w.g1.at(a, q, d);
        const double phi = w.v1.at(a, q, 0);
        for (int r = 0; r < Dim; ++r)
          r1[static_cast<long>(r) * s.m1.base_dim + w.d1[a]] += wq * (P.row(r).dot(g) - B[r] * phi);
      }
      for (int b = 0; b < s.ec.num_dofs; ++b) {
        Vec m;
        for (int d = 0; d < Dim; ++d) m[d] = w.vc.at(b, q, d);
        for (int r = 0; r < Dim; ++r)
          out.rc[static_cast<long>(r) * s.mc.base_dim + w.dc[b]] += wq * gk.row(r).dot(m);
      }
      for (int c = 0; c < s.ed.num_dofs; ++c) {
        Vec v;
        for (int d = 0; d < Dim; ++d) v[d] = w.vd.at(c, q, d);
        for (int r = 0; r < Dim; ++r)
          out.rd[static_cast<long>(r) * s.md.base_dim + w.dd[c]] += wq * constitutive.row(r).dot(v);
      }
      for (int e = 0; e < s.eD.num_dofs; ++e)
        out.rD[w.dD[e]] += wq * (detF - 1.0) * w.vD.at(e, q, 0);
    }
  }

  // Gamma2 traction
  if (loads.traction) {
    QuadratureRule frule = simplex_rule(Dim - 1, s.quad_degree);
    for (const auto& [f, tag] : mesh.boundary_tags) {
      if (tag != BoundaryTag::Gamma2) continue;
      FacetGeometry<Dim> fg = facet_geometry(mesh, f);
      const int cell = mesh.facet_cells[f][0];
      CellGeometry<Dim> geom = cell_geometry(mesh, cell);
      Eigen::MatrixXd refpts(frule.size(), Dim);
      for (int q = 0; q < frule.size(); ++q)
        refpts.row(q) = geom.pull_back(fg.map(frule.points.row(q))).transpose();
      Tabulation phi = s.e1.tabulate(refpts, Op::Value);
      const int* d1 = &s.m1.cell_dofs[static_cast<size_t>(cell) * s.e1.num_dofs];
      for (int q = 0; q < frule.size(); ++q) {
        const double wq = frule.weights[q] * fg.scale;
        Vec T = loads.traction(fg.map(frule.points.row(q)), fg.normal);
        for (int a = 0; a < s.e1.num_dofs; ++a)
          for (int r = 0; r < Dim; ++r)
            r1[static_cast<long>(r) * s.m1.base_dim + d1[a]] -= wq * T[r] * phi.at(a, q, 0);
      }
    }
  }

  if (bc) {
    out.n1 = bc->n_free();
    out.r1.resize(out.n1);
    for (long i = 0; i < out.n1; ++i) out.r1[i] = r1[bc->free_global[i]];
    out.reduced = true;
  } else {
    out.r1 = std::move(r1);
  }
  return out;
}

/// Assemble the Newton-step block stiffness at `state` (unreduced: the
/// displacement index runs over the full space) together with the residual.
template <int Dim>
BlockSystem assemble_newton_system(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                                   const MixedState& state, const NeoHookean& mat,
                                   const Loads<Dim>& loads) {
  using Mat = Eigen::Matrix<double, Dim, Dim>;
  using Vec = Eigen::Matrix<double, Dim, 1>;
  BlockSystem sys = assemble_residual(mesh, s, state, mat, loads, nullptr);

  const long n1 = s.n1(), nc = s.nc(), nd = s.nd(), nD = s.nD();
  std::vector<Eigen::Triplet<double>> T1d, Tc1, Tcc, Tdc, Tdd, TdD, TDc;
  const int nq = s.rule.size();
  const int n1b = s.e1.num_dofs, ncb = s.ec.num_dofs, ndb = s.ed.num_dofs, nDb = s.eD.num_dofs;

  Eigen::MatrixXd B1d(n1b, ndb), Bc1(ncb, n1b), Bcc(ncb, ncb), Bdd(ndb, ndb), Bdc_mass(ndb, ncb);
  std::vector<double> Am(static_cast<size_t>(ncb) * Dim), Av(static_cast<size_t>(ndb) * Dim);

  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    auto w = detail::cell_work(mesh, s, cell);
    const double vol = std::abs(w.geom.det);
    B1d.setZero();
    Bc1.setZero();
    Bcc.setZero();
    Bdd.setZero();
    Bdc_mass.setZero();
    Eigen::MatrixXd Pdc = Eigen::MatrixXd::Zero(static_cast<long>(Dim) * ndb, static_cast<long>(Dim) * ncb);
    Eigen::MatrixXd BdD = Eigen::MatrixXd::Zero(static_cast<long>(Dim) * ndb, nDb);
    Eigen::MatrixXd BDc = Eigen::MatrixXd::Zero(nDb, static_cast<long>(Dim) * ncb);

    for (int q = 0; q < nq; ++q) {
      const double wq = s.rule.weights[q] * vol;
      Mat K = detail::eval_tensor<Dim>(state.uc, s.mc.base_dim, w.dc, w.vc, q);
      const double p = detail::eval_scalar(state.uD, w.dD, w.vD, q);
      Mat F = Mat::Identity() + K;
      const double detF = F.determinant();
      if (detF <= 0.0) throw StateDomainError("assemble_newton_system: det(I+K) <= 0");
      Mat A = F.inverse().transpose(); // F^{-T}

      for (int b = 0; b < ncb; ++b) {
        Vec m;
        for (int d = 0; d < Dim; ++d) m[d] = w.vc.at(b, q, d);
        Vec am = A * m;
        for (int d = 0; d < Dim; ++d) Am[b * Dim + d] = am[d];
      }
      for (int c = 0; c < ndb; ++c) {
        Vec v;
        for (int d = 0; d < Dim; ++d) v[d] = w.vd.at(c, q, d);
        Vec av = A * v;
        for (int d = 0; d < Dim; ++d) Av[c * Dim + d] = av[d];
      }

      for (int a = 0; a < n1b; ++a) {
        Vec g;
        for (int d = 0; d < Dim; ++d) g[d] = w.g1.at(a, q, d);
        for (int c = 0; c < ndb; ++c) {
          Vec v;
          for (int d = 0; d < Dim; ++d) v[d] = w.vd.at(c, q, d);
          B1d(a, c) += wq * g.dot(v);
        }
        for (int b = 0; b < ncb; ++b) {
          Vec m;
          for (int d = 0; d < Dim; ++d) m[d] = w.vc.at(b, q, d);
          Bc1(b, a) += wq * m.dot(g);
        }
      }
      for (int b = 0; b < ncb; ++b) {
        Vec mb;
        for (int d = 0; d < Dim; ++d) mb[d] = w.vc.at(b, q, d);
        for (int b2 = 0; b2 < ncb; ++b2) {
          Vec m2;
          for (int d = 0; d < Dim; ++d) m2[d] = w.vc.at(b2, q, d);
          Bcc(b, b2) -= wq * mb.dot(m2);
        }
        for (int c = 0; c < ndb; ++c) {
          Vec v;
          for (int d = 0; d < Dim; ++d) v[d] = w.vd.at(c, q, d);
          Bdc_mass(c, b) += wq * mat.mu * v.dot(mb);
        }
      }
      for (int c = 0; c < ndb; ++c) {
        Vec vc;
        for (int d = 0; d < Dim; ++d) vc[d] = w.vd.at(c, q, d);
        for (int c2 = 0; c2 < ndb; ++c2) {
          Vec v2;
          for (int d = 0; d < Dim; ++d) v2[d] = w.vd.at(c2, q, d);
          Bdd(c, c2) -= wq * vc.dot(v2);
        }
      }
      // pressure coupling p (A m_b)_{r'} (A v_c)_r between tensor rows
      if (p != 0.0) {
        for (int c = 0; c < ndb; ++c)
          for (int rp = 0; rp < Dim; ++rp) {
            for (int b = 0; b < ncb; ++b)
              for (int r = 0; r < Dim; ++r)
                Pdc(static_cast<long>(rp) * ndb + c, static_cast<long>(r) * ncb + b) +=
                    wq * p * Am[b * Dim + rp] * Av[c * Dim + r];
          }
      }
      for (int e = 0; e < nDb; ++e) {
        const double psi = w.vD.at(e, q, 0);
        for (int c = 0; c < ndb; ++c)
          for (int r = 0; r < Dim; ++r)
            BdD(static_cast<long>(r) * ndb + c, e) -= wq * psi * Av[c * Dim + r];
        for (int b = 0; b < ncb; ++b)
          for (int r = 0; r < Dim; ++r)
            BDc(e, static_cast<long>(r) * ncb + b) += wq * psi * detF * Am[b * Dim + r];
      }
    }

    // scatter
    for (int r = 0; r < Dim; ++r) {
      for (int a = 0; a < n1b; ++a) {
        const long ga = static_cast<long>(r) * s.m1.base_dim + w.d1[a];
        for (int c = 0; c < ndb; ++c)
          T1d.emplace_back(ga, static_cast<long>(r) * s.md.base_dim + w.dd[c], B1d(a, c));
        for (int b = 0; b < ncb; ++b)
          Tc1.emplace_back(static_cast<long>(r) * s.mc.base_dim + w.dc[b], ga, Bc1(b, a));
      }
      for (int b = 0; b < ncb; ++b)
        for (int b2 = 0; b2 < ncb; ++b2)
          Tcc.emplace_back(static_cast<long>(r) * s.mc.base_dim + w.dc[b],
                           static_cast<long>(r) * s.mc.base_dim + w.dc[b2], Bcc(b, b2));
      for (int c = 0; c < ndb; ++c) {
        for (int c2 = 0; c2 < ndb; ++c2)
          Tdd.emplace_back(static_cast<long>(r) * s.md.base_dim + w.dd[c],
                           static_cast<long>(r) * s.md.base_dim + w.dd[c2], Bdd(c, c2));
        for (int b = 0; b < ncb; ++b)
          Tdc.emplace_back(static_cast<long>(r) * s.md.base_dim + w.dd[c],
                           static_cast<long>(r) * s.mc.base_dim + w.dc[b], Bdc_mass(c, b));
      }
    }
    for (int rp = 0; rp < Dim; ++rp)
      for (int c = 0; c < ndb; ++c) {
        const long gr = static_cast<long>(rp) * s.md.base_dim + w.dd[c];
        for (int r = 0; r < Dim; ++r)
          for (int b = 0; b < ncb; ++b) {
            const double v = Pdc(static_cast<long>(rp) * ndb + c, static_cast<long>(r) * ncb + b);
            if (v != 0.0) Tdc.emplace_back(gr, static_cast<long>(r) * s.mc.base_dim + w.dc[b], v);
          }
      }
    for (int r = 0; r < Dim; ++r)
      for (int c = 0; c < ndb; ++c)
        for (int e = 0; e < nDb; ++e)
          TdD.emplace_back(static_cast<long>(r) * s.md.base_dim + w.dd[c], w.dD[e],
                           BdD(static_cast<long>(r) * ndb + c, e));
    for (int e = 0; e < nDb; ++e)
      for (int r = 0; r < Dim; ++r)
        for (int b = 0; b < ncb; ++b)
          TDc.emplace_back(w.dD[e], static_cast<long>(r) * s.mc.base_dim + w.dc[b],
                           BDc(e, static_cast<long>(r) * ncb + b));
  }

  auto build = [](long rows, long cols, std::vector<Eigen::Triplet<double>>& trip) {
    SpMat m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
  };
  sys.S1d = build(n1, nd, T1d);
  sys.Sc1 = build(nc, n1, Tc1);
  sys.Scc = build(nc, nc, Tcc);
  sys.Sdc = build(nd, nc, Tdc);
  sys.Sdd = build(nd, nd, Tdd);
  sys.SdD = build(nd, nD, TdD);
  sys.SDc = build(nD, nc, TDc);
  return sys;
}

namespace detail {

inline SpMat select_rows(const SpMat& m, const std::vector<long>& rows) {
  std::vector<long> map(m.rows(), -1);
  for (size_t i = 0; i < rows.size(); ++i) map[rows[i]] = static_cast<long>(i);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (map[it.row()] >= 0) trip.emplace_back(map[it.row()], it.col(), it.value());
  SpMat out(static_cast<long>(rows.size()), m.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

inline SpMat select_cols(const SpMat& m, const std::vector<long>& cols) {
  std::vector<long> map(m.cols(), -1);
  for (size_t i = 0; i < cols.size(); ++i) map[cols[i]] = static_cast<long>(i);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (map[it.col()] >= 0) trip.emplace_back(it.row(), map[it.col()], it.value());
  SpMat out(m.rows(), static_cast<long>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

} // namespace detail

/// Eliminate the Gamma1 displacement rows and columns symmetrically. The
/// prescribed increment values (usually zero once the state interpolates the
/// boundary data) are lifted into the right-hand side: only the c-segment is
/// affected because the (c,1) block is the only one with displacement columns.
template <int Dim>
BlockSystem apply_dirichlet(const BlockSystem& sys, const DirichletBC& bc,
                            const Eigen::VectorXd* increment_values = nullptr) {
  if (sys.reduced) throw ContractError("apply_dirichlet: system already reduced");
  BlockSystem out = sys;
  out.reduced = true;
  out.n1 = bc.n_free();
  out.S1d = detail::select_rows(sys.S1d, bc.free_global);
  out.Sc1 = detail::select_cols(sys.Sc1, bc.free_global);
  out.r1.resize(out.n1);
  for (long i = 0; i < out.n1; ++i) out.r1[i] = sys.r1[bc.free_global[i]];
  if (increment_values) {
    // rc lift: move Sc1 columns of the fixed dofs times their values
    Eigen::VectorXd zfix = Eigen::VectorXd::Zero(sys.n1);
    for (size_t i = 0; i < bc.base_dofs.size(); ++i)
      for (int r = 0; r < bc.rows; ++r) {
        long g = static_cast<long>(r) * bc.base_dim + bc.base_dofs[i];
        zfix[g] = (*increment_values)[g];
      }
    out.rc += sys.Sc1 * zfix;
  }
  return out;
}

/// Assemble the full square matrix with the block zero pattern: rows and
/// columns ordered (1, c, d, D); only the seven nonzero blocks contribute.
inline SpMat full_matrix(const BlockSystem& sys) {
  const long n1 = sys.n1, nc = sys.nc, nd = sys.nd, nD = sys.nD;
  const long o1 = 0, oc = n1, od = n1 + nc, oD = n1 + nc + nd;
  std::vector<Eigen::Triplet<double>> trip;
  auto add = [&trip](const SpMat& m, long ro, long co) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it)
        trip.emplace_back(ro + it.row(), co + it.col(), it.value());
  };
  add(sys.S1d, o1, od);
  add(sys.Sc1, oc, o1);
  add(sys.Scc, oc, oc);
  add(sys.Sdc, od, oc);
  add(sys.Sdd, od, od);
  add(sys.SdD, od, oD);
  add(sys.SDc, oD, oc);
  SpMat m(sys.total(), sys.total());
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

inline Eigen::VectorXd full_residual(const BlockSystem& sys) {
  Eigen::VectorXd r(sys.total());
  r << sys.r1, sys.rc, sys.rd, sys.rD;
  return r;
}

/// Gram matrices of the natural norms of the four spaces: H1 (value + grad),
/// H(curl) (value + row-wise curl), H(div) (value + row-wise div), L2.
/// The displacement Gram is reduced to the free dofs when `bc` is given.
template <int Dim>
struct NormGram {
  SpMat G1, Gc, Gd, GD;
};

template <int Dim>
NormGram<Dim> gram_matrices(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                            const DirichletBC* bc = nullptr) {
  struct Builder {
    std::vector<Eigen::Triplet<double>> trip;
    void add(long r, long c, double v) { trip.emplace_back(r, c, v); }
  };
  Builder b1, bcm, bd, bD;
  QuadratureRule rule = s.rule;
  Tabulation tc_curl = s.ec.tabulate(rule.points, Op::Curl);
  Tabulation td_div = s.ed.tabulate(rule.points, Op::Div);

  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    auto w = detail::cell_work(mesh, s, cell);
    Tabulation curlc = push_forward(s.ec, w.geom, tc_curl, Op::Curl);
    Tabulation divd = push_forward(s.ed, w.geom, td_div, Op::Div);
    const double vol = std::abs(w.geom.det);
    const int ncurl = s.ec.op_components(Op::Curl);
    for (int q = 0; q < rule.size(); ++q) {
      const double wq = rule.weights[q] * vol;
      for (int a = 0; a < s.e1.num_dofs; ++a)
        for (int a2 = 0; a2 < s.e1.num_dofs; ++a2) {
          double v = w.v1.at(a, q, 0) * w.v1.at(a2, q, 0);
          for (int d = 0; d < Dim; ++d) v += w.g1.at(a, q, d) * w.g1.at(a2, q, d);
          for (int r = 0; r < Dim; ++r)
            b1.add(static_cast<long>(r) * s.m1.base_dim + w.d1[a],
                   static_cast<long>(r) * s.m1.base_dim + w.d1[a2], wq * v);
        }
      for (int b = 0; b < s.ec.num_dofs; ++b)
        for (int b2 = 0; b2 < s.ec.num_dofs; ++b2) {
          double v = 0.0;
          for (int d = 0; d < Dim; ++d) v += w.vc.at(b, q, d) * w.vc.at(b2, q, d);
          for (int d = 0; d < ncurl; ++d) v += curlc.at(b, q, d) * curlc.at(b2, q, d);
          for (int r = 0; r < Dim; ++r)
            bcm.add(static_cast<long>(r) * s.mc.base_dim + w.dc[b],
                    static_cast<long>(r) * s.mc.base_dim + w.dc[b2], wq * v);
        }
      for (int c = 0; c < s.ed.num_dofs; ++c)
        for (int c2 = 0; c2 < s.ed.num_dofs; ++c2) {
          double v = divd.at(c, q, 0) * divd.at(c2, q, 0);
          for (int d = 0; d < Dim; ++d) v += w.vd.at(c, q, d) * w.vd.at(c2, q, d);
          for (int r = 0; r < Dim; ++r)
            bd.add(static_cast<long>(r) * s.md.base_dim + w.dd[c],
                   static_cast<long>(r) * s.md.base_dim + w.dd[c2], wq * v);
        }
      for (int e = 0; e < s.eD.num_dofs; ++e)
        for (int e2 = 0; e2 < s.eD.num_dofs; ++e2)
          bD.add(w.dD[e], w.dD[e2], wq * w.vD.at(e, q, 0) * w.vD.at(e2, q, 0));
    }
  }
  auto build = [](long n, Builder& b) {
    SpMat m(n, n);
    m.setFromTriplets(b.trip.begin(), b.trip.end());
    m.makeCompressed();
    return m;
  };
  NormGram<Dim> g;
  g.G1 = build(s.n1(), b1);
  g.Gc = build(s.nc(), bcm);
  g.Gd = build(s.nd(), bd);
  g.GD = build(s.nD(), bD);
  if (bc) g.G1 = detail::select_cols(detail::select_rows(g.G1, bc->free_global), bc->free_global);
  return g;
}

/// L2 errors of the four fields against exact closures, by quadrature two
/// degrees above the assembly rule.
template <int Dim>
struct FieldErrors {
  double E_U = 0, E_K = 0, E_P = 0, E_p = 0;
};

template <int Dim>
FieldErrors<Dim> l2_errors(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                           const MixedState& state, const NeoHookean& mat, const ExactSolution<Dim>& exact) {
  using Mat = Eigen::Matrix<double, Dim, Dim>;
  using Vec = Eigen::Matrix<double, Dim, 1>;
  QuadratureRule rule = simplex_rule(Dim, s.quad_degree + 2);
  Tabulation t1 = s.e1.tabulate(rule.points, Op::Value);
  Tabulation tc = s.ec.tabulate(rule.points, Op::Value);
  Tabulation td = s.ed.tabulate(rule.points, Op::Value);
  Tabulation tD = s.eD.tabulate(rule.points, Op::Value);
  auto Pexact = exact_stress(mat, exact);

  FieldErrors<Dim> err;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    CellGeometry<Dim> geom = cell_geometry(mesh, cell);
    Tabulation vc = push_forward(s.ec, geom, tc, Op::Value);
    Tabulation vd = push_forward(s.ed, geom, td, Op::Value);
    const int* d1 = &s.m1.cell_dofs[static_cast<size_t>(cell) * s.e1.num_dofs];
    const int* dc = &s.mc.cell_dofs[static_cast<size_t>(cell) * s.ec.num_dofs];
    const int* dd = &s.md.cell_dofs[static_cast<size_t>(cell) * s.ed.num_dofs];
    const int* dD = &s.mD.cell_dofs[static_cast<size_t>(cell) * s.eD.num_dofs];
    const double vol = std::abs(geom.det);
    for (int q = 0; q < rule.size(); ++q) {
      const double wq = rule.weights[q] * vol;
      Vec X = geom.map(rule.points.row(q).transpose());
      Vec Uh = Vec::Zero();
      for (int a = 0; a < s.e1.num_dofs; ++a)
        for (int r = 0; r < Dim; ++r)
          Uh[r] += state.u1[static_cast<long>(r) * s.m1.base_dim + d1[a]] * t1.at(a, q, 0);
      Mat Kh = detail::eval_tensor<Dim>(state.uc, s.mc.base_dim, dc, vc, q);
      Mat Ph = detail::eval_tensor<Dim>(state.ud, s.md.base_dim, dd, vd, q);
      double ph = detail::eval_scalar(state.uD, dD, tD, q);
      err.E_U += wq * (Uh - exact.displacement(X)).squaredNorm();
      err.E_K += wq * (Kh - exact.displacement_gradient(X)).squaredNorm();
      err.E_P += wq * (Ph - Pexact(X)).squaredNorm();
      const double dp = ph - exact.pressure(X);
      err.E_p += wq * dp * dp;
    }
  }
  err.E_U = std::sqrt(err.E_U);
  err.E_K = std::sqrt(err.E_K);
  err.E_P = std::sqrt(err.E_P);
  err.E_p = std::sqrt(err.E_p);
  return err;
}

/// Interpolate the exact solution into all four spaces (K from grad U_e,
/// P from the constitutive law, p from the exact pressure).
template <int Dim>
MixedState interpolate_exact(const SimplicialMesh<Dim>& mesh, const QuartetSpaces<Dim>& s,
                             const NeoHookean& mat, const ExactSolution<Dim>& exact) {
  MixedState st;
  st.u1 = interpolate<Dim>(mesh, s.e1, s.m1, [&](const Eigen::Matrix<double, Dim, 1>& x) {
    Eigen::MatrixXd v(Dim, 1);
    v.col(0) = exact.displacement(x);
    return v;
  });
  st.uc = interpolate<Dim>(mesh, s.ec, s.mc, [&](const Eigen::Matrix<double, Dim, 1>& x) {
    return Eigen::MatrixXd(exact.displacement_gradient(x));
  });
  auto Pe = exact_stress(mat, exact);
  st.ud = interpolate<Dim>(mesh, s.ed, s.md, [&](const Eigen::Matrix<double, Dim, 1>& x) {
    return Eigen::MatrixXd(Pe(x));
  });
  st.uD = interpolate<Dim>(mesh, s.eD, s.mD, [&](const Eigen::Matrix<double, Dim, 1>& x) {
    return Eigen::MatrixXd::Constant(1, 1, exact.pressure(x));
  });
  return st;
}

} // namespace fourfield
