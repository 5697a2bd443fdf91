#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "fourfield/errors.hpp"
#include "fourfield/mesh.hpp"

namespace fourfield {

/// Affine map x = origin + J x_ref of one cell. `det` is signed: with cells
/// stored in ascending vertex order both signs occur; integration uses
/// |det| while the Piola transforms keep the sign.
template <int Dim>
struct CellGeometry {
  Eigen::Matrix<double, Dim, Dim> J;
  Eigen::Matrix<double, Dim, Dim> Jinv;
  double det = 0.0;
  Eigen::Matrix<double, Dim, 1> origin;

  Eigen::Matrix<double, Dim, 1> map(const Eigen::Matrix<double, Dim, 1>& xref) const {
    return origin + J * xref;
  }
  Eigen::Matrix<double, Dim, 1> pull_back(const Eigen::Matrix<double, Dim, 1>& x) const {
    return Jinv * (x - origin);
  }
  double volume() const {
    double f = (Dim == 2) ? 2.0 : 6.0;
    return std::abs(det) / f;
  }
};

template <int Dim>
CellGeometry<Dim> cell_geometry(const SimplicialMesh<Dim>& mesh, int cell) {
  CellGeometry<Dim> g;
  g.origin = mesh.vertices[mesh.cells[cell][0]];
  for (int i = 0; i < Dim; ++i) g.J.col(i) = mesh.vertices[mesh.cells[cell][i + 1]] - g.origin;
  g.det = g.J.determinant();
  double scale = g.J.cwiseAbs().maxCoeff();
  if (std::abs(g.det) < 1e-14 * std::pow(scale, Dim))
    throw GeometryError("cell_geometry: degenerate cell");
  g.Jinv = g.J.inverse();
  return g;
}

/// Longest edge of a cell; for the structured meshes used here this equals
/// the circumdiameter.
template <int Dim>
double cell_diameter(const SimplicialMesh<Dim>& mesh, int cell) {
  double h = 0.0;
  for (int a = 0; a <= Dim; ++a)
    for (int b = a + 1; b <= Dim; ++b)
      h = std::max(h, (mesh.vertices[mesh.cells[cell][a]] - mesh.vertices[mesh.cells[cell][b]]).norm());
  return h;
}

template <int Dim>
double mesh_diameter(const SimplicialMesh<Dim>& mesh) {
  double h = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) h = std::max(h, cell_diameter(mesh, c));
  return h;
}

/// Geometry of a boundary facet: affine parametrization over the reference
/// facet (the unit interval in 2D, the unit triangle in 3D) by ascending
/// vertex ids, plus the outward unit normal and the measure scale factor
/// relative to the reference facet measure.
template <int Dim>
struct FacetGeometry {
  Eigen::Matrix<double, Dim, 1> origin;
  Eigen::Matrix<double, Dim, Dim - 1> T; // tangent columns
  Eigen::Matrix<double, Dim, 1> normal;  // unit, outward from the incident cell
  double scale = 0.0;                    // |physical measure| / |reference measure|

  Eigen::Matrix<double, Dim, 1> map(const Eigen::VectorXd& xi) const {
    Eigen::Matrix<double, Dim, 1> x = origin;
    for (int k = 0; k < Dim - 1; ++k) x += T.col(k) * xi[k];
    return x;
  }
};

template <int Dim>
FacetGeometry<Dim> facet_geometry(const SimplicialMesh<Dim>& mesh, int facet) {
  FacetGeometry<Dim> g;
  auto fv = mesh.facet_vertices(facet);
  g.origin = mesh.vertices[fv[0]];
  for (int k = 0; k < Dim - 1; ++k) g.T.col(k) = mesh.vertices[fv[k + 1]] - g.origin;
  if constexpr (Dim == 2) {
    Eigen::Vector2d t = g.T.col(0);
    g.normal = Eigen::Vector2d(t[1], -t[0]).normalized();
    g.scale = t.norm();
  } else {
    Eigen::Vector3d n = g.T.col(0).cross(g.T.col(1));
    g.scale = n.norm();
    g.normal = n / g.scale;
  }
  const int cell = mesh.facet_cells[facet][0];
  const Eigen::Matrix<double, Dim, 1> outward = mesh.facet_centroid(facet) - mesh.cell_centroid(cell);
  if (g.normal.dot(outward) < 0) g.normal = -g.normal;
  return g;
}

} // namespace fourfield
