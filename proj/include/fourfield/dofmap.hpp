#pragma once

#include <functional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "fourfield/element.hpp"
#include "fourfield/mesh.hpp"

namespace fourfield {

/// Global degree-of-freedom map for one discrete space. The "base" space is
/// the scalar/vector element itself; tensor-valued spaces are `rows` copies
/// of the base space (one per tensor row), numbered block-by-row:
/// global = row * base_dim + base index. Shared-entity dofs are identified
/// across cells purely through global entity ids; no orientation signs are
/// needed because cells store ascending vertex tuples.
struct DofMap {
  int rows = 1;
  long base_dim = 0;
  int dofs_per_cell_base = 0;
  std::vector<int> cell_dofs; // num_cells x dofs_per_cell_base, base indices

  long global_dim() const { return rows * base_dim; }
  int dofs_per_cell() const { return rows * dofs_per_cell_base; }

  int base(int cell, int i) const { return cell_dofs[static_cast<size_t>(cell) * dofs_per_cell_base + i]; }
  long global(int cell, int row, int i) const { return static_cast<long>(row) * base_dim + base(cell, i); }
};

template <int Dim>
DofMap build_dofmap(const SimplicialMesh<Dim>& mesh, const ReferenceElement& elem, int rows) {
  if (elem.dim != Dim) throw UnsupportedElementError("build_dofmap: element dimension mismatch");
  DofMap dm;
  dm.rows = rows;
  dm.dofs_per_cell_base = elem.num_dofs;

  long n_entities[4] = {mesh.num_vertices(), mesh.num_edges(),
                        Dim == 3 ? mesh.num_faces() : mesh.num_cells(), mesh.num_cells()};
  long offset[4];
  long acc = 0;
  for (int d = 0; d <= Dim; ++d) {
    offset[d] = acc;
    acc += elem.entity_dofs[d] * n_entities[d];
  }
  dm.base_dim = acc;

  dm.cell_dofs.resize(static_cast<size_t>(mesh.num_cells()) * elem.num_dofs);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    for (int i = 0; i < elem.num_dofs; ++i) {
      const DofEntity& de = elem.dof_entity[i];
      long ent = 0;
      switch (de.entity_dim) {
        case 0: ent = mesh.cells[c][de.entity_index]; break;
        case 1: ent = mesh.cell_edges[c][de.entity_index]; break;
        case 2:
          if constexpr (Dim == 3)
            ent = mesh.cell_faces[c][de.entity_index];
          else
            ent = c;
          break;
        default: ent = c; break;
      }
      dm.cell_dofs[static_cast<size_t>(c) * elem.num_dofs + i] =
          static_cast<int>(offset[de.entity_dim] + ent * elem.entity_dofs[de.entity_dim] + de.k);
    }
  }
  return dm;
}

/// Base-space dofs of a Lagrange element that live on Gamma1 facets
/// (vertices of those facets and, for degree 2, their edges).
template <int Dim>
std::vector<int> gamma1_base_dofs(const SimplicialMesh<Dim>& mesh, const ReferenceElement& elem,
                                  const DofMap& dm) {
  std::set<int> verts;
  std::set<std::array<int, 2>> bedges;
  for (const auto& [f, tag] : mesh.boundary_tags) {
    if (tag != BoundaryTag::Gamma1) continue;
    auto fv = mesh.facet_vertices(f);
    for (int v : fv) verts.insert(v);
    if constexpr (Dim == 2) {
      bedges.insert({fv[0], fv[1]});
    } else {
      bedges.insert({fv[0], fv[1]});
      bedges.insert({fv[0], fv[2]});
      bedges.insert({fv[1], fv[2]});
    }
  }
  std::set<int> out;
  for (int v : verts) out.insert(v); // vertex block starts at 0
  if (elem.entity_dofs[1] > 0) {
    long edge_offset = static_cast<long>(mesh.num_vertices()) * elem.entity_dofs[0];
    for (int e = 0; e < mesh.num_edges(); ++e)
      if (bedges.count(mesh.edges[e]))
        for (int k = 0; k < elem.entity_dofs[1]; ++k)
          out.insert(static_cast<int>(edge_offset + e * elem.entity_dofs[1] + k));
  }
  return {out.begin(), out.end()};
}

/// Nodal interpolation into a (possibly tensor-valued) discrete space.
/// `field(X)` returns a (rows x value_size) matrix: one row of values per
/// tensor row. Coefficients are obtained by pulling the field back to each
/// reference cell and applying the reference dof functionals; shared dofs
/// receive identical values from both incident cells because the Piola
/// transforms preserve the entity moments.
template <int Dim>
Eigen::VectorXd interpolate(const SimplicialMesh<Dim>& mesh, const ReferenceElement& elem,
                            const DofMap& dm,
                            const std::function<Eigen::MatrixXd(const Eigen::Matrix<double, Dim, 1>&)>& field) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(dm.global_dim());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry<Dim> geom = cell_geometry(mesh, c);
    for (int i = 0; i < elem.num_dofs; ++i) {
      const DofFunctional& f = elem.functionals[i];
      // evaluate pulled-back field at functional points for all rows at once
      Eigen::MatrixXd vals(f.points.rows(), static_cast<long>(dm.rows) * elem.value_size);
      for (int q = 0; q < f.points.rows(); ++q) {
        Eigen::Matrix<double, Dim, 1> xref = f.points.row(q);
        Eigen::MatrixXd v = field(geom.map(xref)); // rows x value_size
        for (int r = 0; r < dm.rows; ++r) {
          Eigen::VectorXd vr = v.row(r);
          Eigen::VectorXd pulled;
          switch (elem.transform) {
            case Transform::Affine: pulled = vr; break;
            case Transform::CovariantPiola: pulled = geom.J.transpose() * vr; break;
            case Transform::ContravariantPiola: pulled = geom.det * (geom.Jinv * vr); break;
          }
          for (int comp = 0; comp < elem.value_size; ++comp)
            vals(q, r * elem.value_size + comp) = pulled[comp];
        }
      }
      for (int r = 0; r < dm.rows; ++r) {
        double s = 0.0;
        for (int q = 0; q < f.points.rows(); ++q)
          for (int comp = 0; comp < elem.value_size; ++comp)
            s += f.weights(q, comp) * vals(q, r * elem.value_size + comp);
        coeffs[dm.global(c, r, i)] = s;
      }
    }
  }
  return coeffs;
}

} // namespace fourfield
