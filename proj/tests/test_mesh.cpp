#include <gtest/gtest.h>

#include "fourfield/geometry.hpp"
#include "fourfield/mesh.hpp"

using namespace fourfield;

TEST(Mesh, SquareCountsSmallest) {
  auto m = build_structured_square(1);
  EXPECT_EQ(m.num_vertices(), 4);
  EXPECT_EQ(m.num_cells(), 2);
  EXPECT_EQ(m.num_edges(), 5);
}

TEST(Mesh, SquareCountsLevel4) {
  auto m = build_structured_square(4);
  auto c = entity_counts(m);
  EXPECT_EQ(c.n_vertices, 25);
  EXPECT_EQ(c.n_cells, 32);
  EXPECT_EQ(c.n_edges, 56);
  EXPECT_EQ(c.n_boundary_facets, 16);
  EXPECT_EQ(2 * c.n_edges - c.n_boundary_facets, 3 * c.n_cells);
}

TEST(Mesh, EulerRelationsAcrossLevels) {
  for (int n : {1, 2, 4, 8}) {
    auto m = build_structured_square(n);
    auto c = entity_counts(m);
    EXPECT_EQ(c.n_cells - c.n_edges + c.n_vertices, 1) << "n=" << n;
    EXPECT_EQ(2 * c.n_edges - c.n_boundary_facets, 3 * c.n_cells) << "n=" << n;
  }
}

TEST(Mesh, HoleFixtureEulerRelation) {
  auto m = build_structured_square(4);
  // remove the star of an interior vertex: id of (2,2) in a 5x5 grid
  auto holed = remove_vertex_star(m, 2 + 2 * 5);
  auto c = entity_counts(holed);
  EXPECT_EQ(c.n_cells - c.n_edges + c.n_vertices, 0); // one hole
  EXPECT_EQ(2 * c.n_edges - c.n_boundary_facets, 3 * c.n_cells);
}

TEST(Mesh, RejectsZeroSubdivisions) {
  EXPECT_THROW(build_structured_square(0), ConfigError);
  EXPECT_THROW(build_structured_cube(0), ConfigError);
}

TEST(Mesh, CubeCounts) {
  auto m1 = build_structured_cube(1);
  EXPECT_EQ(m1.num_vertices(), 8);
  EXPECT_EQ(m1.num_cells(), 6);
  auto m2 = build_structured_cube(2);
  EXPECT_EQ(m2.num_vertices(), 27);
  EXPECT_EQ(m2.num_cells(), 48);
}

TEST(Mesh, CubeTetVolumesSumToOne) {
  auto m = build_structured_cube(2);
  double vol = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) vol += cell_geometry(m, c).volume();
  EXPECT_NEAR(vol, 1.0, 1e-14);
}

TEST(Mesh, CellsAscendingAndNondegenerate) {
  auto check2 = build_structured_square(3);
  for (const auto& c : check2.cells) EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  for (int c = 0; c < check2.num_cells(); ++c) EXPECT_GT(cell_geometry(check2, c).volume(), 0.0);
  auto check3 = build_structured_cube(2);
  for (const auto& c : check3.cells) EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  for (int c = 0; c < check3.num_cells(); ++c) EXPECT_GT(cell_geometry(check3, c).volume(), 0.0);
}

TEST(Mesh, InteriorFacetsSharedByTwoCells) {
  auto m = build_structured_cube(2);
  int boundary = 0;
  for (int f = 0; f < m.num_facets(); ++f) {
    if (m.is_boundary_facet(f)) {
      ++boundary;
      EXPECT_GE(m.facet_cells[f][0], 0);
    } else {
      EXPECT_GE(m.facet_cells[f][0], 0);
      EXPECT_GE(m.facet_cells[f][1], 0);
    }
  }
  EXPECT_EQ(boundary, 2 * 6 * 2 * 2); // 2 triangles per grid face, 6 sides
}

TEST(Mesh, TagBoundaryAllDirichlet) {
  auto m = build_structured_square(2);
  m = tag_boundary<2>(std::move(m), [](const Eigen::Vector2d&) { return BoundaryTag::Gamma1; });
  for (const auto& [f, tag] : m.boundary_tags) EXPECT_EQ(tag, BoundaryTag::Gamma1);
}

TEST(Mesh, TagBoundaryX1FaceCountOnCube) {
  for (int n : {1, 2, 3}) {
    auto m = tag_x1_gamma2(build_structured_cube(n));
    int gamma2 = 0;
    for (const auto& [f, tag] : m.boundary_tags)
      if (tag == BoundaryTag::Gamma2) ++gamma2;
    EXPECT_EQ(gamma2, 2 * n * n) << "n=" << n;
  }
}

TEST(Mesh, TagBoundaryLeftEdgeOnSmallSquare) {
  auto m = tag_boundary<2>(build_structured_square(1), [](const Eigen::Vector2d& x) {
    return x[0] < 1e-12 ? BoundaryTag::Gamma2 : BoundaryTag::Gamma1;
  });
  int gamma2 = 0;
  for (const auto& [f, tag] : m.boundary_tags)
    if (tag == BoundaryTag::Gamma2) ++gamma2;
  EXPECT_EQ(gamma2, 1);
}

TEST(Mesh, JsonRoundTripByteIdentical) {
  auto m = tag_x1_gamma2(build_structured_square(3));
  std::string once = mesh_to_json(m).dump();
  auto parsed = mesh_from_json<2>(nlohmann::ordered_json::parse(once));
  std::string twice = mesh_to_json(parsed).dump();
  EXPECT_EQ(once, twice);
  // rebuilding from scratch reproduces identical numbering
  auto rebuilt = tag_x1_gamma2(build_structured_square(3));
  EXPECT_EQ(mesh_to_json(rebuilt).dump(), once);
}

TEST(Mesh, FacetNormalsPointOutward) {
  auto m = build_structured_cube(1);
  for (int f : m.boundary_facets()) {
    auto fg = facet_geometry(m, f);
    auto centroid = m.facet_centroid(f);
    // outward normal points away from the unit cube's center
    Eigen::Vector3d center(0.5, 0.5, 0.5);
    EXPECT_GT(fg.normal.dot(centroid - center), 0.0);
  }
}
