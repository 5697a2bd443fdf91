#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fourfield/errors.hpp"
#include "fourfield/geometry.hpp"
#include "fourfield/polynomial.hpp"
#include "fourfield/quadrature.hpp"

namespace fourfield {

enum class Family { Lagrange, Discontinuous, NedelecKind1, NedelecKind2, RaviartThomas, BDM };
enum class Conformity { H1, L2, Hcurl, Hdiv };
enum class Transform { Affine, CovariantPiola, ContravariantPiola };
enum class Op { Value, Grad, Curl, Div };

struct ElementFamily {
  Family family;
  int degree;
};

inline Conformity conformity_of(Family f) {
  switch (f) {
    case Family::Lagrange: return Conformity::H1;
    case Family::Discontinuous: return Conformity::L2;
    case Family::NedelecKind1:
    case Family::NedelecKind2: return Conformity::Hcurl;
    default: return Conformity::Hdiv;
  }
}

inline Transform transform_of(Family f) {
  switch (conformity_of(f)) {
    case Conformity::Hcurl: return Transform::CovariantPiola;
    case Conformity::Hdiv: return Transform::ContravariantPiola;
    default: return Transform::Affine;
  }
}

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Lagrange: return "Lagrange";
    case Family::Discontinuous: return "Discontinuous";
    case Family::NedelecKind1: return "NedelecKind1";
    case Family::NedelecKind2: return "NedelecKind2";
    case Family::RaviartThomas: return "RaviartThomas";
    default: return "BDM";
  }
}

/// Which mesh entity a degree of freedom is attached to.
struct DofEntity {
  int entity_dim; // 0 vertex, 1 edge, 2 face (3D), dim cell
  int entity_index;
  int k; // position within the entity's dof block
};

/// A dof as an explicit linear functional: l(v) = sum_q weights(q,:) . v(points(q,:)).
struct DofFunctional {
  Eigen::MatrixXd points;  // nq x dim
  Eigen::MatrixXd weights; // nq x value_size

  double apply(const VecPoly& v) const {
    double s = 0.0;
    for (int q = 0; q < points.rows(); ++q) {
      Eigen::VectorXd x = points.row(q);
      for (int c = 0; c < weights.cols(); ++c) s += weights(q, c) * v.comp[c](x);
    }
    return s;
  }
};

/// Values of an element's basis at a set of points.
/// Layout: data[(dof * npts + pt) * ncomp + comp].
struct Tabulation {
  int ndofs = 0, npts = 0, ncomp = 0;
  std::vector<double> data;

  void resize(int nd, int np, int nc) {
    ndofs = nd;
    npts = np;
    ncomp = nc;
    data.assign(static_cast<size_t>(nd) * np * nc, 0.0);
  }
  double& at(int i, int q, int c) { return data[(static_cast<size_t>(i) * npts + q) * ncomp + c]; }
  double at(int i, int q, int c) const { return data[(static_cast<size_t>(i) * npts + q) * ncomp + c]; }
};

namespace detail {

inline Eigen::MatrixXd ref_vertices(int dim) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim + 1, dim);
  for (int i = 0; i < dim; ++i) v(i + 1, i) = 1.0;
  return v;
}

inline int ref_num_edges(int dim) { return dim == 2 ? 3 : 6; }
inline std::array<int, 2> ref_edge(int dim, int e) {
  if (dim == 2) return {RefSimplex<2>::edges[e][0], RefSimplex<2>::edges[e][1]};
  return {RefSimplex<3>::edges[e][0], RefSimplex<3>::edges[e][1]};
}

} // namespace detail

/// Reference finite element on the unit simplex. The basis is nodal with
/// respect to the dof functionals; those are point evaluations for Lagrange
/// and discontinuous elements and integral moments over globally oriented
/// entity parametrizations for the H(curl)/H(div) families, so that gluing
/// cells with ascending vertex tuples yields conforming global spaces.
class ReferenceElement {
public:
  Family family;
  int degree = 0;
  int dim = 0;
  Conformity conformity = Conformity::H1;
  Transform transform = Transform::Affine;
  int value_size = 1;
  int num_dofs = 0;
  int embedded_degree = 0;        // max polynomial degree of the basis
  std::array<int, 4> entity_dofs{}; // dofs per entity of each dimension
  std::vector<DofEntity> dof_entity;
  std::vector<DofFunctional> functionals;
  std::vector<VecPoly> basis;

  static ReferenceElement make(Family family, int degree, int dim);
  static ReferenceElement make(const ElementFamily& ef, int dim) { return make(ef.family, ef.degree, dim); }

  /// Evaluate basis functions (or a derivative) at reference points (npts x dim).
  Tabulation tabulate(const Eigen::MatrixXd& points, Op op) const {
    check_op(op);
    const int npts = static_cast<int>(points.rows());
    Tabulation tab;
    tab.resize(num_dofs, npts, op_components(op));
    for (int i = 0; i < num_dofs; ++i) {
      std::vector<Polynomial> comps = derived_components(i, op);
      for (int q = 0; q < npts; ++q) {
        Eigen::VectorXd x = points.row(q);
        for (size_t c = 0; c < comps.size(); ++c) tab.at(i, q, static_cast<int>(c)) = comps[c](x);
      }
    }
    return tab;
  }

  int op_components(Op op) const {
    switch (op) {
      case Op::Value: return value_size;
      case Op::Grad: return dim;
      case Op::Curl: return dim == 2 ? 1 : 3;
      case Op::Div: return 1;
    }
    return 0;
  }

private:
  void check_op(Op op) const {
    if (op == Op::Value) return;
    if (op == Op::Grad && (conformity == Conformity::H1 || conformity == Conformity::L2)) return;
    if (op == Op::Curl && conformity == Conformity::Hcurl) return;
    if (op == Op::Div && conformity == Conformity::Hdiv) return;
    throw ContractError("tabulate: derivative incompatible with element conformity");
  }

  std::vector<Polynomial> derived_components(int i, Op op) const {
    const VecPoly& b = basis[i];
    switch (op) {
      case Op::Value: return b.comp;
      case Op::Grad: {
        std::vector<Polynomial> g;
        for (int v = 0; v < dim; ++v) g.push_back(b.comp[0].derivative(v));
        return g;
      }
      case Op::Div: {
        Polynomial d(dim);
        for (int v = 0; v < dim; ++v) d += b.comp[v].derivative(v);
        return {d};
      }
      case Op::Curl: {
        if (dim == 2) return {b.comp[1].derivative(0) - b.comp[0].derivative(1)};
        return {b.comp[2].derivative(1) - b.comp[1].derivative(2),
                b.comp[0].derivative(2) - b.comp[2].derivative(0),
                b.comp[1].derivative(0) - b.comp[0].derivative(1)};
      }
    }
    return {};
  }
};

namespace detail {

struct ElementBuilder {
  int dim;
  int value_size;
  Eigen::MatrixXd verts; // reference vertices
  std::vector<VecPoly> primes;
  std::vector<DofFunctional> functionals;
  std::vector<DofEntity> entities;

  explicit ElementBuilder(int d, int vs) : dim(d), value_size(vs), verts(ref_vertices(d)) {}

  void add_point_eval(const Eigen::VectorXd& x, int entity_dim, int entity_index, int k) {
    DofFunctional f;
    f.points = x.transpose();
    f.weights = Eigen::MatrixXd::Ones(1, 1);
    functionals.push_back(std::move(f));
    entities.push_back({entity_dim, entity_index, k});
  }

  // Integral moment over an edge against q(s) times a constant direction.
  void add_edge_moment(int edge, const Polynomial& q1d, const Eigen::VectorXd& dir, int k) {
    auto ev = ref_edge(dim, edge);
    Eigen::VectorXd a = verts.row(ev[0]), b = verts.row(ev[1]);
    QuadratureRule rule = gauss_legendre(4);
    DofFunctional f;
    f.points.resize(rule.size(), dim);
    f.weights.resize(rule.size(), value_size);
    for (int i = 0; i < rule.size(); ++i) {
      const double s = rule.points(i, 0);
      f.points.row(i) = a + s * (b - a);
      Eigen::VectorXd sv(1);
      sv << s;
      f.weights.row(i) = rule.weights[i] * q1d(sv) * dir.transpose();
    }
    functionals.push_back(std::move(f));
    entities.push_back({1, edge, k});
  }

  // 3D face moment against a direction field W(xi, eta) expressed through the
  // face tangents t1, t2 and (optionally) the unnormalized face normal.
  void add_face_moment(int face, const std::function<Eigen::Vector3d(double, double)>& W, int k) {
    const auto& fv = RefSimplex<3>::faces[face];
    Eigen::Vector3d a = verts.row(fv[0]), b = verts.row(fv[1]), c = verts.row(fv[2]);
    QuadratureRule rule = simplex_rule(2, 6);
    DofFunctional f;
    f.points.resize(rule.size(), 3);
    f.weights.resize(rule.size(), 3);
    for (int i = 0; i < rule.size(); ++i) {
      const double xi = rule.points(i, 0), eta = rule.points(i, 1);
      f.points.row(i) = (a + xi * (b - a) + eta * (c - a)).transpose();
      f.weights.row(i) = rule.weights[i] * W(xi, eta).transpose();
    }
    functionals.push_back(std::move(f));
    entities.push_back({2, face, k});
  }

  void add_interior_moment(const VecPoly& w, int k) {
    QuadratureRule rule = simplex_rule(dim, 6);
    DofFunctional f;
    f.points = rule.points;
    f.weights.resize(rule.size(), value_size);
    for (int i = 0; i < rule.size(); ++i) {
      Eigen::VectorXd x = rule.points.row(i);
      f.weights.row(i) = rule.weights[i] * w(x).transpose();
    }
    functionals.push_back(std::move(f));
    entities.push_back({dim, 0, k});
  }

  Eigen::VectorXd edge_tangent(int edge) const {
    auto ev = ref_edge(dim, edge);
    return verts.row(ev[1]) - verts.row(ev[0]);
  }
  Eigen::VectorXd edge_normal2d(int edge) const {
    Eigen::VectorXd t = edge_tangent(edge);
    Eigen::VectorXd n(2);
    n << t[1], -t[0];
    return n;
  }
};

inline std::vector<VecPoly> scalar_monomials(int dim, int k) {
  std::vector<VecPoly> out;
  for (const auto& e : monomial_exponents(dim, k)) out.push_back(VecPoly::scalar(monomial(dim, e)));
  return out;
}

inline std::vector<VecPoly> vector_monomials(int dim, int k) {
  std::vector<VecPoly> out;
  for (int c = 0; c < dim; ++c)
    for (const auto& e : monomial_exponents(dim, k)) out.push_back(VecPoly::unit(dim, c, monomial(dim, e)));
  return out;
}

// x * m for homogeneous monomials m of degree k-1 (Raviart-Thomas tail).
inline std::vector<VecPoly> rt_tail(int dim, int k) {
  std::vector<VecPoly> out;
  for (const auto& e : monomial_exponents(dim, k - 1)) {
    if (e[0] + e[1] + e[2] != k - 1) continue;
    Polynomial m = monomial(dim, e);
    VecPoly v;
    for (int c = 0; c < dim; ++c) v.comp.push_back(Polynomial::variable(dim, c) * m);
    out.push_back(std::move(v));
  }
  return out;
}

// rot(x) * m in 2D (first-kind Nedelec tail).
inline std::vector<VecPoly> ned1_tail_2d(int k) {
  std::vector<VecPoly> out;
  for (const auto& e : monomial_exponents(2, k - 1)) {
    if (e[0] + e[1] != k - 1) continue;
    Polynomial m = monomial(2, e);
    VecPoly v;
    v.comp.push_back(Polynomial::variable(2, 1) * m * -1.0);
    v.comp.push_back(Polynomial::variable(2, 0) * m);
    out.push_back(std::move(v));
  }
  return out;
}

// 3D homogeneous fields p of degree k with p . x = 0 (first-kind Nedelec tail).
inline std::vector<VecPoly> ned1_tail_3d(int k) {
  auto cross = [](const std::array<Polynomial, 3>& a, const std::array<Polynomial, 3>& b) {
    std::array<Polynomial, 3> c;
    c[0] = a[1] * b[2] - a[2] * b[1];
    c[1] = a[2] * b[0] - a[0] * b[2];
    c[2] = a[0] * b[1] - a[1] * b[0];
    return c;
  };
  std::array<Polynomial, 3> x{Polynomial::variable(3, 0), Polynomial::variable(3, 1),
                              Polynomial::variable(3, 2)};
  std::vector<VecPoly> out;
  if (k == 1) {
    for (int j = 0; j < 3; ++j) {
      std::array<Polynomial, 3> ej{Polynomial::constant(3, j == 0), Polynomial::constant(3, j == 1),
                                   Polynomial::constant(3, j == 2)};
      auto c = cross(ej, x);
      out.push_back(VecPoly{{c[0], c[1], c[2]}});
    }
  } else {
    // x cross (e_j s) for (j, s) skipping the dependent (e_3 z) generator
    for (int j = 0; j < 3; ++j)
      for (int s = 0; s < 3; ++s) {
        if (j == 2 && s == 2) continue;
        std::array<Polynomial, 3> m{Polynomial::constant(3, 0.0), Polynomial::constant(3, 0.0),
                                    Polynomial::constant(3, 0.0)};
        m[j] = Polynomial::variable(3, s);
        auto c = cross(x, m);
        out.push_back(VecPoly{{c[0], c[1], c[2]}});
      }
  }
  return out;
}

inline Polynomial poly_1d_power(int p) {
  Polynomial q = Polynomial::constant(1, 1.0);
  for (int i = 0; i < p; ++i) q = q * Polynomial::variable(1, 0);
  return q;
}

} // namespace detail

inline ReferenceElement ReferenceElement::make(Family family, int degree, int dim) {
  using namespace detail;
  if (dim != 2 && dim != 3) throw UnsupportedElementError("make_reference_element: dim must be 2 or 3");
  auto require = [&](bool ok) {
    if (!ok) throw UnsupportedElementError("make_reference_element: unsupported (family, degree, dim)");
  };

  const bool scalar = (family == Family::Lagrange || family == Family::Discontinuous);
  ElementBuilder b(dim, scalar ? 1 : dim);
  const Eigen::MatrixXd& verts = b.verts;
  const int n_edges = ref_num_edges(dim);

  switch (family) {
    case Family::Lagrange: {
      require(degree == 1 || degree == 2);
      b.primes = scalar_monomials(dim, degree);
      for (int v = 0; v <= dim; ++v) b.add_point_eval(verts.row(v), 0, v, 0);
      if (degree == 2)
        for (int e = 0; e < n_edges; ++e) {
          auto ev = ref_edge(dim, e);
          Eigen::VectorXd mid = 0.5 * (verts.row(ev[0]) + verts.row(ev[1]));
          b.add_point_eval(mid, 1, e, 0);
        }
      break;
    }
    case Family::Discontinuous: {
      require(degree >= 0 && degree <= 2);
      b.primes = scalar_monomials(dim, degree);
      int k = 0;
      if (degree == 0) {
        Eigen::VectorXd bary = verts.colwise().mean();
        b.add_point_eval(bary, dim, 0, k++);
      } else {
        for (int v = 0; v <= dim; ++v) b.add_point_eval(verts.row(v), dim, 0, k++);
        if (degree == 2)
          for (int e = 0; e < n_edges; ++e) {
            auto ev = ref_edge(dim, e);
            Eigen::VectorXd mid = 0.5 * (verts.row(ev[0]) + verts.row(ev[1]));
            b.add_point_eval(mid, dim, 0, k++);
          }
      }
      break;
    }
    case Family::RaviartThomas: {
      require(degree == 1 || degree == 2);
      b.primes = vector_monomials(dim, degree - 1);
      for (auto& t : rt_tail(dim, degree)) b.primes.push_back(t);
      if (dim == 2) {
        for (int e = 0; e < n_edges; ++e)
          for (int j = 0; j < degree; ++j) b.add_edge_moment(e, poly_1d_power(j), b.edge_normal2d(e), j);
      } else {
        for (int f = 0; f < 4; ++f) {
          const auto& fv = RefSimplex<3>::faces[f];
          Eigen::Vector3d t1 = verts.row(fv[1]) - verts.row(fv[0]);
          Eigen::Vector3d t2 = verts.row(fv[2]) - verts.row(fv[0]);
          Eigen::Vector3d N = t1.cross(t2);
          int k = 0;
          for (const auto& e : monomial_exponents(2, degree - 1)) {
            auto W = [N, e](double xi, double eta) {
              return Eigen::Vector3d(N * std::pow(xi, e[0]) * std::pow(eta, e[1]));
            };
            b.add_face_moment(f, W, k++);
          }
        }
      }
      if (degree == 2)
        for (int c = 0; c < dim; ++c)
          b.add_interior_moment(VecPoly::unit(dim, c, Polynomial::constant(dim, 1.0)), c);
      break;
    }
    case Family::BDM: {
      require(degree == 1 || degree == 2);
      b.primes = vector_monomials(dim, degree);
      if (dim == 2) {
        for (int e = 0; e < n_edges; ++e)
          for (int j = 0; j <= degree; ++j) b.add_edge_moment(e, poly_1d_power(j), b.edge_normal2d(e), j);
      } else {
        for (int f = 0; f < 4; ++f) {
          const auto& fv = RefSimplex<3>::faces[f];
          Eigen::Vector3d t1 = verts.row(fv[1]) - verts.row(fv[0]);
          Eigen::Vector3d t2 = verts.row(fv[2]) - verts.row(fv[0]);
          Eigen::Vector3d N = t1.cross(t2);
          int k = 0;
          for (const auto& e : monomial_exponents(2, degree)) {
            auto W = [N, e](double xi, double eta) {
              return Eigen::Vector3d(N * std::pow(xi, e[0]) * std::pow(eta, e[1]));
            };
            b.add_face_moment(f, W, k++);
          }
        }
      }
      if (degree == 2) {
        // interior moments against the first-kind Nedelec space of degree 1
        std::vector<VecPoly> ws = vector_monomials(dim, 0);
        auto tail = (dim == 2) ? ned1_tail_2d(1) : ned1_tail_3d(1);
        for (auto& t : tail) ws.push_back(t);
        for (size_t k = 0; k < ws.size(); ++k) b.add_interior_moment(ws[k], static_cast<int>(k));
      }
      break;
    }
    case Family::NedelecKind1: {
      require(degree == 1 || degree == 2);
      b.primes = vector_monomials(dim, degree - 1);
      auto tail = (dim == 2) ? ned1_tail_2d(degree) : ned1_tail_3d(degree);
      for (auto& t : tail) b.primes.push_back(t);
      for (int e = 0; e < n_edges; ++e)
        for (int j = 0; j < degree; ++j) b.add_edge_moment(e, poly_1d_power(j), b.edge_tangent(e), j);
      if (degree == 2) {
        if (dim == 2) {
          for (int c = 0; c < 2; ++c)
            b.add_interior_moment(VecPoly::unit(2, c, Polynomial::constant(2, 1.0)), c);
        } else {
          for (int f = 0; f < 4; ++f) {
            const auto& fv = RefSimplex<3>::faces[f];
            Eigen::Vector3d t1 = verts.row(fv[1]) - verts.row(fv[0]);
            Eigen::Vector3d t2 = verts.row(fv[2]) - verts.row(fv[0]);
            b.add_face_moment(f, [t1](double, double) { return t1; }, 0);
            b.add_face_moment(f, [t2](double, double) { return t2; }, 1);
          }
        }
      }
      break;
    }
    case Family::NedelecKind2: {
      require(degree == 1 || degree == 2);
      b.primes = vector_monomials(dim, degree);
      for (int e = 0; e < n_edges; ++e)
        for (int j = 0; j <= degree; ++j) b.add_edge_moment(e, poly_1d_power(j), b.edge_tangent(e), j);
      if (degree == 2) {
        if (dim == 2) {
          // interior moments against the Raviart-Thomas space of degree 1
          std::vector<VecPoly> ws = vector_monomials(2, 0);
          for (auto& t : rt_tail(2, 1)) ws.push_back(t);
          for (size_t k = 0; k < ws.size(); ++k) b.add_interior_moment(ws[k], static_cast<int>(k));
        } else {
          // face moments against the face Raviart-Thomas space of degree 1
          for (int f = 0; f < 4; ++f) {
            const auto& fv = RefSimplex<3>::faces[f];
            Eigen::Vector3d t1 = verts.row(fv[1]) - verts.row(fv[0]);
            Eigen::Vector3d t2 = verts.row(fv[2]) - verts.row(fv[0]);
            b.add_face_moment(f, [t1](double, double) { return t1; }, 0);
            b.add_face_moment(f, [t2](double, double) { return t2; }, 1);
            b.add_face_moment(
                f, [t1, t2](double xi, double eta) { return Eigen::Vector3d(xi * t1 + eta * t2); }, 2);
          }
        }
      }
      break;
    }
  }

  const int n = static_cast<int>(b.primes.size());
  if (n != static_cast<int>(b.functionals.size()))
    throw UnsupportedElementError("make_reference_element: dof count does not match space dimension");

  Eigen::MatrixXd V(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) V(i, j) = b.functionals[i].apply(b.primes[j]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible())
    throw UnsupportedElementError("make_reference_element: dof functionals are not unisolvent");
  Eigen::MatrixXd A = lu.solve(Eigen::MatrixXd::Identity(n, n)).transpose(); // A = V^{-T}

  ReferenceElement el;
  el.family = family;
  el.degree = degree;
  el.dim = dim;
  el.conformity = conformity_of(family);
  el.transform = transform_of(family);
  el.value_size = b.value_size;
  el.num_dofs = n;
  el.embedded_degree = degree;
  el.dof_entity = b.entities;
  el.functionals = b.functionals;
  el.entity_dofs = {0, 0, 0, 0};
  for (const auto& de : b.entities) el.entity_dofs[de.entity_dim]++;
  for (int d = 0; d < 4; ++d) {
    int count = 0;
    switch (d) {
      case 0: count = dim + 1; break;
      case 1: count = n_edges; break;
      case 2: count = (dim == 3) ? 4 : 1; break;
      case 3: count = 1; break;
    }
    if (d == dim) count = 1;
    if (el.entity_dofs[d] % std::max(count, 1) != 0)
      throw UnsupportedElementError("make_reference_element: uneven entity dof distribution");
    el.entity_dofs[d] /= std::max(count, 1);
  }
  el.basis.resize(n);
  for (int i = 0; i < n; ++i) {
    VecPoly phi;
    phi.comp.assign(b.value_size, Polynomial::constant(dim, 0.0));
    for (int k = 0; k < n; ++k) {
      if (A(i, k) == 0.0) continue;
      for (int c = 0; c < b.value_size; ++c) phi.comp[c] += b.primes[k].comp[c] * A(i, k);
    }
    el.basis[i] = std::move(phi);
  }
  return el;
}

/// Map a reference tabulation to one physical cell. H1/L2 values compose with
/// the affine map, H(curl) uses the covariant Piola transform J^{-T}, H(div)
/// the contravariant Piola transform J/det(J) with the signed determinant.
template <int Dim>
Tabulation push_forward(const ReferenceElement& el, const CellGeometry<Dim>& geom,
                        const Tabulation& ref, Op op) {
  Tabulation out = ref;
  const Eigen::Matrix<double, Dim, Dim> JinvT = geom.Jinv.transpose();
  switch (el.transform) {
    case Transform::Affine: {
      if (op == Op::Value) return out;
      // gradient: J^{-T} grad_ref
      for (int i = 0; i < ref.ndofs; ++i)
        for (int q = 0; q < ref.npts; ++q) {
          Eigen::Matrix<double, Dim, 1> g;
          for (int c = 0; c < Dim; ++c) g[c] = ref.at(i, q, c);
          g = JinvT * g;
          for (int c = 0; c < Dim; ++c) out.at(i, q, c) = g[c];
        }
      return out;
    }
    case Transform::CovariantPiola: {
      if (op == Op::Value) {
        for (int i = 0; i < ref.ndofs; ++i)
          for (int q = 0; q < ref.npts; ++q) {
            Eigen::Matrix<double, Dim, 1> v;
            for (int c = 0; c < Dim; ++c) v[c] = ref.at(i, q, c);
            v = JinvT * v;
            for (int c = 0; c < Dim; ++c) out.at(i, q, c) = v[c];
          }
        return out;
      }
      // curl
      if constexpr (Dim == 2) {
        for (auto& v : out.data) v /= geom.det;
      } else {
        for (int i = 0; i < ref.ndofs; ++i)
          for (int q = 0; q < ref.npts; ++q) {
            Eigen::Vector3d c3;
            for (int c = 0; c < 3; ++c) c3[c] = ref.at(i, q, c);
            c3 = (geom.J * c3) / geom.det;
            for (int c = 0; c < 3; ++c) out.at(i, q, c) = c3[c];
          }
      }
      return out;
    }
    case Transform::ContravariantPiola: {
      if (op == Op::Value) {
        for (int i = 0; i < ref.ndofs; ++i)
          for (int q = 0; q < ref.npts; ++q) {
            Eigen::Matrix<double, Dim, 1> v;
            for (int c = 0; c < Dim; ++c) v[c] = ref.at(i, q, c);
            v = (geom.J * v) / geom.det;
            for (int c = 0; c < Dim; ++c) out.at(i, q, c) = v[c];
          }
        return out;
      }
      for (auto& v : out.data) v /= geom.det; // divergence
      return out;
    }
  }
  return out;
}

} // namespace fourfield
