#include <random>

#include <gtest/gtest.h>

#include "fourfield/dofmap.hpp"
#include "fourfield/element.hpp"
#include "fourfield/quartet.hpp"

using namespace fourfield;

namespace {

const std::vector<ElementFamily> kMenu = {
    {Family::Lagrange, 1},      {Family::Lagrange, 2},      {Family::Discontinuous, 0},
    {Family::Discontinuous, 1}, {Family::Discontinuous, 2}, {Family::NedelecKind1, 1},
    {Family::NedelecKind1, 2},  {Family::NedelecKind2, 1},  {Family::NedelecKind2, 2},
    {Family::RaviartThomas, 1}, {Family::RaviartThomas, 2}, {Family::BDM, 1},
    {Family::BDM, 2}};

int expected_dofs(const ElementFamily& ef, int dim) {
  const int d = ef.degree;
  switch (ef.family) {
    case Family::Lagrange: return dim == 2 ? (d == 1 ? 3 : 6) : (d == 1 ? 4 : 10);
    case Family::Discontinuous: return dim == 2 ? (d + 1) * (d + 2) / 2 : (d + 1) * (d + 2) * (d + 3) / 6;
    case Family::NedelecKind1: return dim == 2 ? d * (d + 2) : d * (d + 2) * (d + 3) / 2;
    case Family::NedelecKind2: return dim == 2 ? (d + 1) * (d + 2) : (d + 1) * (d + 2) * (d + 3) / 2;
    case Family::RaviartThomas: return dim == 2 ? d * (d + 2) : d * (d + 1) * (d + 3) / 2;
    case Family::BDM: return dim == 2 ? (d + 1) * (d + 2) : (d + 1) * (d + 2) * (d + 3) / 2;
  }
  return 0;
}

Eigen::MatrixXd random_points(int n, int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXd pts(n, dim);
  for (int i = 0; i < n; ++i) {
    // random barycentric point strictly inside the simplex
    Eigen::VectorXd l(dim + 1);
    double s = 0.0;
    for (int k = 0; k <= dim; ++k) {
      l[k] = uni(rng) + 1e-3;
      s += l[k];
    }
    l /= s;
    for (int d = 0; d < dim; ++d) pts(i, d) = l[d + 1];
  }
  return pts;
}

template <int Dim>
CellGeometry<Dim> random_geometry(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-0.3, 0.3);
  CellGeometry<Dim> g;
  g.J = Eigen::Matrix<double, Dim, Dim>::Identity();
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) g.J(i, j) += uni(rng);
  g.J *= 0.7;
  g.origin.setConstant(0.25);
  g.det = g.J.determinant();
  g.Jinv = g.J.inverse();
  return g;
}

// value of one pushed-forward basis function at one reference point
template <int Dim>
Eigen::VectorXd pushed_value(const ReferenceElement& el, const CellGeometry<Dim>& g,
                             const Eigen::VectorXd& xref, int dof) {
  Eigen::MatrixXd pts = xref.transpose();
  Tabulation ref = el.tabulate(pts, Op::Value);
  Tabulation phys = push_forward(el, g, ref, Op::Value);
  Eigen::VectorXd v(el.value_size);
  for (int c = 0; c < el.value_size; ++c) v[c] = phys.at(dof, 0, c);
  return v;
}

} // namespace

TEST(Elements, MenuDofCountsMatchDiagrams) {
  for (int dim : {2, 3})
    for (const auto& ef : kMenu) {
      auto el = ReferenceElement::make(ef, dim);
      EXPECT_EQ(el.num_dofs, expected_dofs(ef, dim)) << family_name(ef.family) << ef.degree << " " << dim << "D";
    }
}

TEST(Elements, NodalityIsIdentity) {
  for (int dim : {2, 3})
    for (const auto& ef : kMenu) {
      auto el = ReferenceElement::make(ef, dim);
      for (int i = 0; i < el.num_dofs; ++i)
        for (int j = 0; j < el.num_dofs; ++j) {
          double v = el.functionals[i].apply(el.basis[j]);
          EXPECT_NEAR(v, i == j ? 1.0 : 0.0, 1e-12)
              << family_name(ef.family) << ef.degree << " " << dim << "D (" << i << "," << j << ")";
        }
    }
}

TEST(Elements, UnsupportedCombinationsRejected) {
  EXPECT_THROW(ReferenceElement::make(Family::Lagrange, 3, 2), UnsupportedElementError);
  EXPECT_THROW(ReferenceElement::make(Family::Lagrange, 0, 2), UnsupportedElementError);
  EXPECT_THROW(ReferenceElement::make(Family::RaviartThomas, 0, 3), UnsupportedElementError);
  EXPECT_THROW(ReferenceElement::make(Family::NedelecKind2, 3, 3), UnsupportedElementError);
  EXPECT_THROW(ReferenceElement::make(Family::Lagrange, 1, 4), UnsupportedElementError);
}

TEST(Elements, LagrangeBarycenterValues) {
  auto el = ReferenceElement::make(Family::Lagrange, 1, 2);
  EXPECT_EQ(el.num_dofs, 3);
  Eigen::MatrixXd bary(1, 2);
  bary << 1.0 / 3, 1.0 / 3;
  auto tab = el.tabulate(bary, Op::Value);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(tab.at(i, 0, 0), 1.0 / 3, 1e-14);
}

TEST(Elements, LagrangePartitionOfUnity) {
  for (int dim : {2, 3})
    for (int deg : {1, 2}) {
      auto el = ReferenceElement::make(Family::Lagrange, deg, dim);
      auto pts = random_points(7, dim, 42);
      auto tab = el.tabulate(pts, Op::Value);
      for (int q = 0; q < 7; ++q) {
        double s = 0.0;
        for (int i = 0; i < el.num_dofs; ++i) s += tab.at(i, q, 0);
        EXPECT_NEAR(s, 1.0, 1e-13);
      }
    }
}

TEST(Elements, LagrangeNodalTableIsIdentity) {
  auto el = ReferenceElement::make(Family::Lagrange, 1, 2);
  Eigen::MatrixXd verts(3, 2);
  verts << 0, 0, 1, 0, 0, 1;
  auto tab = el.tabulate(verts, Op::Value);
  for (int i = 0; i < 3; ++i)
    for (int q = 0; q < 3; ++q) EXPECT_NEAR(tab.at(i, q, 0), i == q ? 1.0 : 0.0, 1e-14);
}

TEST(Elements, DiscontinuousZeroIsConstantOne) {
  for (int dim : {2, 3}) {
    auto el = ReferenceElement::make(Family::Discontinuous, 0, dim);
    auto pts = random_points(5, dim, 7);
    auto tab = el.tabulate(pts, Op::Value);
    for (int q = 0; q < 5; ++q) EXPECT_NEAR(tab.at(0, q, 0), 1.0, 1e-14);
  }
}

TEST(Elements, RaviartThomasLowestDivergenceConstant) {
  auto el = ReferenceElement::make(Family::RaviartThomas, 1, 2);
  EXPECT_EQ(el.num_dofs, 3);
  EXPECT_EQ(el.entity_dofs[1], 1);
  for (const auto& b : el.basis) {
    Polynomial div(2);
    for (int v = 0; v < 2; ++v) div += b.comp[v].derivative(v);
    EXPECT_LE(div.degree(), 0); // constant
  }
}

TEST(Elements, NedelecFirstKindCurlConstant) {
  // symbolic differentiation: curl of each lowest-order basis is constant
  auto el = ReferenceElement::make(Family::NedelecKind1, 1, 2);
  EXPECT_EQ(el.num_dofs, 3);
  for (const auto& b : el.basis) {
    Polynomial curl = b.comp[1].derivative(0) - b.comp[0].derivative(1);
    EXPECT_LE(curl.degree(), 0);
    EXPECT_FALSE(curl.zero()); // Whitney functions have nonzero curl
  }
  auto el3 = ReferenceElement::make(Family::NedelecKind1, 1, 3);
  for (const auto& b : el3.basis) {
    Polynomial c0 = b.comp[2].derivative(1) - b.comp[1].derivative(2);
    Polynomial c1 = b.comp[0].derivative(2) - b.comp[2].derivative(0);
    Polynomial c2 = b.comp[1].derivative(0) - b.comp[0].derivative(1);
    EXPECT_LE(c0.degree(), 0);
    EXPECT_LE(c1.degree(), 0);
    EXPECT_LE(c2.degree(), 0);
  }
}

TEST(Elements, TabulateRejectsIncompatibleDerivative) {
  auto ned = ReferenceElement::make(Family::NedelecKind1, 1, 2);
  auto pts = random_points(2, 2, 3);
  EXPECT_THROW(ned.tabulate(pts, Op::Div), ContractError);
  auto rt = ReferenceElement::make(Family::RaviartThomas, 1, 3);
  EXPECT_THROW(rt.tabulate(random_points(2, 3, 3), Op::Curl), ContractError);
  auto lag = ReferenceElement::make(Family::Lagrange, 1, 2);
  EXPECT_THROW(lag.tabulate(pts, Op::Curl), ContractError);
}

TEST(Elements, PushForwardIdentityGeometryIsNoop) {
  CellGeometry<2> g;
  g.J.setIdentity();
  g.Jinv.setIdentity();
  g.det = 1.0;
  g.origin.setZero();
  for (const auto& ef : kMenu) {
    auto el = ReferenceElement::make(ef, 2);
    auto pts = random_points(4, 2, 11);
    auto ref = el.tabulate(pts, Op::Value);
    auto phys = push_forward(el, g, ref, Op::Value);
    for (size_t k = 0; k < ref.data.size(); ++k) EXPECT_DOUBLE_EQ(phys.data[k], ref.data[k]);
  }
}

TEST(Elements, ContravariantPushForwardPreservesNormalMoments) {
  // quadrature oracle: physical normal moments of the pushed basis equal the
  // reference dof values (identity matrix)
  auto g = random_geometry<2>(5);
  for (ElementFamily ef : {ElementFamily{Family::RaviartThomas, 2}, ElementFamily{Family::BDM, 2}}) {
    auto el = ReferenceElement::make(ef, 2);
    auto rule = gauss_legendre(6);
    for (int dof = 0; dof < el.num_dofs; ++dof) {
      const DofEntity& de = el.dof_entity[dof];
      if (de.entity_dim != 1) continue;
      auto ev = RefSimplex<2>::edges[de.entity_index];
      Eigen::MatrixXd verts(3, 2);
      verts << 0, 0, 1, 0, 0, 1;
      Eigen::Vector2d A = g.map(verts.row(ev[0]).transpose());
      Eigen::Vector2d B = g.map(verts.row(ev[1]).transpose());
      Eigen::Vector2d n(B[1] - A[1], -(B[0] - A[0])); // unnormalized physical normal
      for (int j = 0; j < el.num_dofs; ++j) {
        double moment = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
          const double s = rule.points(q, 0);
          Eigen::VectorXd xref = verts.row(ev[0]).transpose() + s * (verts.row(ev[1]) - verts.row(ev[0])).transpose();
          Eigen::VectorXd v = pushed_value(el, g, xref, j);
          moment += rule.weights[q] * std::pow(s, de.k) * (v[0] * n[0] + v[1] * n[1]);
        }
        EXPECT_NEAR(moment, dof == j ? 1.0 : 0.0, 1e-12) << family_name(ef.family) << " dof " << dof;
      }
    }
  }
}

TEST(Elements, CovariantPushForwardPreservesTangentialMoments) {
  auto g = random_geometry<3>(9);
  auto el = ReferenceElement::make(Family::NedelecKind2, 2, 3);
  auto rule = gauss_legendre(6);
  Eigen::MatrixXd verts(4, 3);
  verts << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  for (int dof = 0; dof < el.num_dofs; ++dof) {
    const DofEntity& de = el.dof_entity[dof];
    if (de.entity_dim != 1) continue;
    auto ev = RefSimplex<3>::edges[de.entity_index];
    Eigen::Vector3d A = g.map(verts.row(ev[0]).transpose());
    Eigen::Vector3d B = g.map(verts.row(ev[1]).transpose());
    Eigen::Vector3d t = B - A;
    for (int j = 0; j < el.num_dofs; ++j) {
      double moment = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        const double s = rule.points(q, 0);
        Eigen::VectorXd xref =
            verts.row(ev[0]).transpose() + s * (verts.row(ev[1]) - verts.row(ev[0])).transpose();
        Eigen::VectorXd v = pushed_value(el, g, xref, j);
        moment += rule.weights[q] * std::pow(s, de.k) * v.dot(t);
      }
      EXPECT_NEAR(moment, dof == j ? 1.0 : 0.0, 1e-12) << "dof " << dof << " vs " << j;
    }
  }
}

namespace {

// glue check: traces from both incident cells agree at facet quadrature points
template <int Dim>
void check_conformity(const SimplicialMesh<Dim>& mesh, const ElementFamily& ef, unsigned seed) {
  auto el = ReferenceElement::make(ef, Dim);
  DofMap dm = build_dofmap(mesh, el, 1);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd coeffs(dm.global_dim());
  for (long i = 0; i < coeffs.size(); ++i) coeffs[i] = uni(rng);

  QuadratureRule frule = simplex_rule(Dim - 1, 4);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (mesh.is_boundary_facet(f)) continue;
    FacetGeometry<Dim> fg = facet_geometry(mesh, f);
    for (int q = 0; q < frule.size(); ++q) {
      Eigen::Matrix<double, Dim, 1> X = fg.map(frule.points.row(q));
      Eigen::Matrix<double, Dim, 1> val[2];
      for (int side = 0; side < 2; ++side) {
        const int cell = mesh.facet_cells[f][side];
        CellGeometry<Dim> geom = cell_geometry(mesh, cell);
        Eigen::MatrixXd xref = geom.pull_back(X).transpose();
        Tabulation ref = el.tabulate(xref, Op::Value);
        Tabulation phys = push_forward(el, geom, ref, Op::Value);
        Eigen::Matrix<double, Dim, 1> v = Eigen::Matrix<double, Dim, 1>::Zero();
        for (int i = 0; i < el.num_dofs; ++i)
          for (int c = 0; c < Dim; ++c) v[c] += coeffs[dm.base(cell, i)] * phys.at(i, 0, c);
        val[side] = v;
      }
      if (el.conformity == Conformity::Hdiv) {
        EXPECT_NEAR(val[0].dot(fg.normal), val[1].dot(fg.normal), 1e-12)
            << family_name(ef.family) << ef.degree << " facet " << f;
      } else {
        Eigen::Matrix<double, Dim, 1> t0 = val[0] - val[0].dot(fg.normal) * fg.normal;
        Eigen::Matrix<double, Dim, 1> t1 = val[1] - val[1].dot(fg.normal) * fg.normal;
        EXPECT_NEAR((t0 - t1).norm(), 0.0, 1e-12)
            << family_name(ef.family) << ef.degree << " facet " << f;
      }
    }
  }
}

} // namespace

TEST(Elements, TraceContinuityAcrossSharedEntities2D) {
  auto mesh = build_structured_square(2);
  for (const auto& ef : kMenu) {
    if (conformity_of(ef.family) != Conformity::Hcurl && conformity_of(ef.family) != Conformity::Hdiv)
      continue;
    check_conformity<2>(mesh, ef, 100 + ef.degree);
  }
}

TEST(Elements, TraceContinuityAcrossSharedEntities3D) {
  auto mesh = build_structured_cube(1);
  for (const auto& ef : kMenu) {
    if (conformity_of(ef.family) != Conformity::Hcurl && conformity_of(ef.family) != Conformity::Hdiv)
      continue;
    check_conformity<3>(mesh, ef, 200 + ef.degree);
  }
}

TEST(Elements, LagrangeValueContinuityAcrossCells) {
  auto mesh = build_structured_cube(1);
  auto el = ReferenceElement::make(Family::Lagrange, 2, 3);
  DofMap dm = build_dofmap(mesh, el, 1);
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd coeffs(dm.global_dim());
  for (long i = 0; i < coeffs.size(); ++i) coeffs[i] = uni(rng);
  QuadratureRule frule = simplex_rule(2, 3);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (mesh.is_boundary_facet(f)) continue;
    FacetGeometry<3> fg = facet_geometry(mesh, f);
    for (int q = 0; q < frule.size(); ++q) {
      Eigen::Vector3d X = fg.map(frule.points.row(q));
      double v[2];
      for (int side = 0; side < 2; ++side) {
        const int cell = mesh.facet_cells[f][side];
        CellGeometry<3> geom = cell_geometry(mesh, cell);
        Eigen::MatrixXd xref = geom.pull_back(X).transpose();
        Tabulation tab = el.tabulate(xref, Op::Value);
        double s = 0.0;
        for (int i = 0; i < el.num_dofs; ++i) s += coeffs[dm.base(cell, i)] * tab.at(i, 0, 0);
        v[side] = s;
      }
      EXPECT_NEAR(v[0], v[1], 1e-12);
    }
  }
}

TEST(Quartets, EnumerationHas96AndNamesRoundTrip) {
  auto all = ElementQuartet::all();
  EXPECT_EQ(all.size(), 96u);
  for (const auto& q : all) {
    EXPECT_EQ(ElementQuartet::parse(q.name()).name(), q.name());
  }
  auto q = ElementQuartet::parse("L1N12R2D0");
  EXPECT_EQ(q.disp_degree, 1);
  EXPECT_EQ(q.grad_kind, 1);
  EXPECT_EQ(q.grad_degree, 2);
  EXPECT_FALSE(q.stress_bdm);
  EXPECT_EQ(q.stress_degree, 2);
  EXPECT_EQ(q.pressure_degree, 0);
  EXPECT_THROW(ElementQuartet::parse("L3N11R2D0"), ConfigError);
  EXPECT_THROW(ElementQuartet::parse("L1N11X2D0"), ConfigError);
  EXPECT_THROW(ElementQuartet::parse("bogus"), ConfigError);
}
