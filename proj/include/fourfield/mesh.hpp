#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fourfield/errors.hpp"

namespace fourfield {

/// Reference simplex topology. Local edges/faces are the ascending vertex
/// tuples in lexicographic order; because mesh cells store their vertices in
/// ascending global order, a cell's local entity tuples map onto the global
/// entity tuples without any per-pair sign bookkeeping.
template <int Dim>
struct RefSimplex;

template <>
struct RefSimplex<2> {
  static constexpr int n_vertices = 3;
  static constexpr int n_edges = 3;
  static constexpr int n_faces = 0;
  static constexpr int n_facets = 3; // facets are edges
  static constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {0, 2}, {1, 2}}};
  static constexpr std::array<std::array<int, 2>, 3> facets = edges;
};

template <>
struct RefSimplex<3> {
  static constexpr int n_vertices = 4;
  static constexpr int n_edges = 6;
  static constexpr int n_faces = 4;
  static constexpr int n_facets = 4; // facets are faces
  static constexpr std::array<std::array<int, 2>, 6> edges{
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  static constexpr std::array<std::array<int, 3>, 4> faces{
      {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  static constexpr std::array<std::array<int, 3>, 4> facets = faces;
};

enum class BoundaryTag { Gamma1, Gamma2 };

/// Simplicial mesh of a 2D/3D domain with globally consistent entity
/// numbering. Invariants:
///  - every cell tuple is ascending in global vertex ids,
///  - edges (and faces in 3D) are the lexicographically sorted unique tuples,
///  - each interior facet has exactly two incident cells, boundary facets one,
///  - the boundary tags cover all boundary facets once tagged.
/// Cell volumes are positive; the signed Jacobian determinant of the affine
/// map may take either sign under the ascending-tuple convention, and the
/// per-cell sign is exposed through cell_orientation().
template <int Dim>
struct SimplicialMesh {
  static_assert(Dim == 2 || Dim == 3);
  using Vertex = Eigen::Matrix<double, Dim, 1>;
  static constexpr int n_cell_vertices = Dim + 1;
  static constexpr int n_cell_edges = Dim * (Dim + 1) / 2;
  static constexpr int n_cell_faces = (Dim == 3) ? 4 : 0;
  static constexpr int n_facet_vertices = Dim;

  std::vector<Vertex> vertices;
  std::vector<std::array<int, Dim + 1>> cells;

  // derived entities
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> faces; // 3D only
  std::vector<std::array<int, n_cell_edges>> cell_edges;
  std::vector<std::array<int, 4>> cell_faces; // 3D only
  std::vector<std::array<int, 2>> facet_cells; // second entry -1 on boundary
  std::map<int, BoundaryTag> boundary_tags;    // facet id -> tag

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  int num_facets() const { return Dim == 2 ? num_edges() : num_faces(); }

  int facet_id_of_cell(int cell, int local_facet) const {
    if constexpr (Dim == 2)
      return cell_edges[cell][local_facet];
    else
      return cell_faces[cell][local_facet];
  }

  std::array<int, Dim> facet_vertices(int facet) const {
    std::array<int, Dim> out{};
    if constexpr (Dim == 2) {
      out[0] = edges[facet][0];
      out[1] = edges[facet][1];
    } else {
      out[0] = faces[facet][0];
      out[1] = faces[facet][1];
      out[2] = faces[facet][2];
    }
    return out;
  }

  bool is_boundary_facet(int facet) const { return facet_cells[facet][1] < 0; }

  std::vector<int> boundary_facets() const {
    std::vector<int> out;
    for (int f = 0; f < num_facets(); ++f)
      if (is_boundary_facet(f)) out.push_back(f);
    return out;
  }

  Vertex facet_centroid(int facet) const {
    Vertex c = Vertex::Zero();
    auto fv = facet_vertices(facet);
    for (int v : fv) c += vertices[v];
    return c / double(Dim);
  }

  Vertex cell_centroid(int cell) const {
    Vertex c = Vertex::Zero();
    for (int v : cells[cell]) c += vertices[v];
    return c / double(Dim + 1);
  }

  /// Sign of the affine map's Jacobian determinant.
  int cell_orientation(int cell) const {
    Eigen::Matrix<double, Dim, Dim> J;
    for (int i = 0; i < Dim; ++i) J.col(i) = vertices[cells[cell][i + 1]] - vertices[cells[cell][0]];
    return J.determinant() >= 0 ? 1 : -1;
  }

  /// Rebuild edges/faces/facet incidence from `vertices` and `cells`.
  void derive_entities() {
    for (auto& c : cells) std::sort(c.begin(), c.end());

    std::map<std::array<int, 2>, int> edge_id;
    for (const auto& c : cells)
      for (const auto& le : RefSimplex<Dim>::edges)
        edge_id.emplace(std::array<int, 2>{c[le[0]], c[le[1]]}, 0);
    edges.clear();
    edges.reserve(edge_id.size());
    int id = 0;
    for (auto& [e, i] : edge_id) {
      i = id++;
      edges.push_back(e);
    }
    cell_edges.assign(cells.size(), {});
    for (size_t c = 0; c < cells.size(); ++c)
      for (int k = 0; k < n_cell_edges; ++k) {
        const auto& le = RefSimplex<Dim>::edges[k];
        cell_edges[c][k] = edge_id.at({cells[c][le[0]], cells[c][le[1]]});
      }

    if constexpr (Dim == 3) {
      std::map<std::array<int, 3>, int> face_id;
      for (const auto& c : cells)
        for (const auto& lf : RefSimplex<3>::faces)
          face_id.emplace(std::array<int, 3>{c[lf[0]], c[lf[1]], c[lf[2]]}, 0);
      faces.clear();
      faces.reserve(face_id.size());
      id = 0;
      for (auto& [f, i] : face_id) {
        i = id++;
        faces.push_back(f);
      }
      cell_faces.assign(cells.size(), {});
      for (size_t c = 0; c < cells.size(); ++c)
        for (int k = 0; k < 4; ++k) {
          const auto& lf = RefSimplex<3>::faces[k];
          cell_faces[c][k] = face_id.at({cells[c][lf[0]], cells[c][lf[1]], cells[c][lf[2]]});
        }
    }

    facet_cells.assign(num_facets(), {-1, -1});
    for (int c = 0; c < num_cells(); ++c)
      for (int k = 0; k < Dim + 1; ++k) {
        int f = facet_id_of_cell(c, k);
        if (facet_cells[f][0] < 0)
          facet_cells[f][0] = c;
        else if (facet_cells[f][1] < 0)
          facet_cells[f][1] = c;
        else
          throw GeometryError("mesh: facet shared by more than two cells");
      }
  }
};

/// Entity counts of a mesh; in 2D these satisfy the Euler-type relations
/// N_el - N_ed + N_v = 1 - I and 2 N_ed - N_ed^boundary = 3 N_el.
struct EntityCounts {
  int n_vertices = 0;
  int n_edges = 0;
  int n_faces = 0; // 3D only
  int n_cells = 0;
  int n_boundary_facets = 0;
};

template <int Dim>
EntityCounts entity_counts(const SimplicialMesh<Dim>& mesh) {
  EntityCounts c;
  c.n_vertices = mesh.num_vertices();
  c.n_edges = mesh.num_edges();
  c.n_faces = mesh.num_faces();
  c.n_cells = mesh.num_cells();
  for (int f = 0; f < mesh.num_facets(); ++f)
    if (mesh.is_boundary_facet(f)) ++c.n_boundary_facets;
  return c;
}

/// Uniform-diagonal triangulation of the unit square: n x n subsquares, each
/// split along the diagonal from its lower-left to its upper-right corner.
inline SimplicialMesh<2> build_structured_square(int n) {
  if (n < 1) throw ConfigError("build_structured_square: n must be >= 1");
  SimplicialMesh<2> mesh;
  const int m = n + 1;
  mesh.vertices.reserve(m * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      mesh.vertices.push_back({double(i) / n, double(j) / n});
  auto vid = [m](int i, int j) { return i + j * m; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int p = vid(i, j), q = vid(i + 1, j), r = vid(i + 1, j + 1), s = vid(i, j + 1);
      mesh.cells.push_back({p, q, r});
      mesh.cells.push_back({p, s, r}); // ascending ids for {p, r, s}
    }
  mesh.derive_entities();
  for (int f : mesh.boundary_facets()) mesh.boundary_tags[f] = BoundaryTag::Gamma1;
  return mesh;
}

/// Kuhn (Freudenthal) triangulation of the unit cube: n^3 subcubes with six
/// tetrahedra each, one per monotone lattice path.
inline SimplicialMesh<3> build_structured_cube(int n) {
  if (n < 1) throw ConfigError("build_structured_cube: n must be >= 1");
  SimplicialMesh<3> mesh;
  const int m = n + 1;
  mesh.vertices.reserve(m * m * m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        mesh.vertices.push_back({double(i) / n, double(j) / n, double(k) / n});
  auto vid = [m](int i, int j, int k) { return i + j * m + k * m * m; };
  constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& perm : perms) {
          std::array<int, 3> at{i, j, k};
          std::array<int, 4> tet{};
          tet[0] = vid(at[0], at[1], at[2]);
          for (int s = 0; s < 3; ++s) {
            at[perm[s]] += 1;
            tet[s + 1] = vid(at[0], at[1], at[2]);
          }
          mesh.cells.push_back(tet);
        }
  mesh.derive_entities();
  for (int f : mesh.boundary_facets()) mesh.boundary_tags[f] = BoundaryTag::Gamma1;
  return mesh;
}

/// Tag every boundary facet by evaluating `pred` at its centroid.
template <int Dim>
SimplicialMesh<Dim> tag_boundary(SimplicialMesh<Dim> mesh,
                                 const std::function<BoundaryTag(const Eigen::Matrix<double, Dim, 1>&)>& pred) {
  mesh.boundary_tags.clear();
  for (int f : mesh.boundary_facets()) mesh.boundary_tags[f] = pred(mesh.facet_centroid(f));
  for (int f : mesh.boundary_facets())
    if (!mesh.boundary_tags.count(f)) throw ConfigError("tag_boundary: untagged boundary facet");
  return mesh;
}

/// Tag the x = 1 part of the boundary as Gamma2 and the rest as Gamma1.
template <int Dim>
SimplicialMesh<Dim> tag_x1_gamma2(SimplicialMesh<Dim> mesh) {
  return tag_boundary<Dim>(std::move(mesh), [](const Eigen::Matrix<double, Dim, 1>& x) {
    return x[0] > 1.0 - 1e-12 ? BoundaryTag::Gamma2 : BoundaryTag::Gamma1;
  });
}

/// Remove the star of one vertex (all incident cells), producing a mesh with
/// one hole. Exercises the I != 0 branch of the 2D Euler relation.
template <int Dim>
SimplicialMesh<Dim> remove_vertex_star(const SimplicialMesh<Dim>& mesh, int vertex) {
  SimplicialMesh<Dim> out;
  std::vector<int> vmap(mesh.num_vertices(), -1);
  for (const auto& c : mesh.cells) {
    if (std::find(c.begin(), c.end(), vertex) != c.end()) continue;
    std::array<int, Dim + 1> nc{};
    for (int k = 0; k <= Dim; ++k) {
      if (vmap[c[k]] < 0) {
        vmap[c[k]] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[c[k]]);
      }
      nc[k] = vmap[c[k]];
    }
    std::sort(nc.begin(), nc.end());
    out.cells.push_back(nc);
  }
  out.derive_entities();
  for (int f : out.boundary_facets()) out.boundary_tags[f] = BoundaryTag::Gamma1;
  return out;
}

template <int Dim>
nlohmann::ordered_json mesh_to_json(const SimplicialMesh<Dim>& mesh) {
  nlohmann::ordered_json j;
  j["dim"] = Dim;
  auto& verts = j["vertices"] = nlohmann::ordered_json::array();
  for (const auto& v : mesh.vertices) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int d = 0; d < Dim; ++d) row.push_back(v[d]);
    verts.push_back(row);
  }
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : mesh.cells) cells.push_back(c);
  auto& tags = j["boundary_tags"] = nlohmann::ordered_json::array();
  for (const auto& [f, tag] : mesh.boundary_tags) {
    nlohmann::ordered_json entry;
    entry["facet"] = mesh.facet_vertices(f);
    entry["tag"] = (tag == BoundaryTag::Gamma1) ? "Gamma1" : "Gamma2";
    tags.push_back(entry);
  }
  return j;
}

template <int Dim>
SimplicialMesh<Dim> mesh_from_json(const nlohmann::ordered_json& j) {
  if (j.at("dim").get<int>() != Dim) throw ConfigError("mesh_from_json: dimension mismatch");
  SimplicialMesh<Dim> mesh;
  for (const auto& row : j.at("vertices")) {
    typename SimplicialMesh<Dim>::Vertex v;
    for (int d = 0; d < Dim; ++d) v[d] = row.at(d).get<double>();
    mesh.vertices.push_back(v);
  }
  for (const auto& row : j.at("cells")) {
    std::array<int, Dim + 1> c{};
    for (int k = 0; k <= Dim; ++k) c[k] = row.at(k).get<int>();
    mesh.cells.push_back(c);
  }
  mesh.derive_entities();
  std::map<std::array<int, Dim>, int> facet_of;
  for (int f = 0; f < mesh.num_facets(); ++f) facet_of[mesh.facet_vertices(f)] = f;
  for (const auto& entry : j.at("boundary_tags")) {
    std::array<int, Dim> fv{};
    for (int k = 0; k < Dim; ++k) fv[k] = entry.at("facet").at(k).get<int>();
    mesh.boundary_tags[facet_of.at(fv)] =
        entry.at("tag").get<std::string>() == "Gamma2" ? BoundaryTag::Gamma2 : BoundaryTag::Gamma1;
  }
  return mesh;
}

} // namespace fourfield
