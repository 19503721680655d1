#include <cmath>

#include <gtest/gtest.h>

#include "darcyto/optimizer.hpp"
#include "darcyto/problems.hpp"
#include "symmetry.hpp"

using namespace darcyto;

TEST(Problems, CatalogNamesResolve) {
  for (const auto& name : problem_names()) {
    const auto s = catalog(name);
    EXPECT_EQ(s.name, name);
    EXPECT_NO_THROW(validate(s));
  }
  EXPECT_THROW(catalog("nonexistent"), std::invalid_argument);
}

TEST(Problems, CatalogParameterValues) {
  EXPECT_DOUBLE_EQ(catalog("lid").volume_fraction, 0.25);
  EXPECT_DOUBLE_EQ(catalog("extpress").volume_fraction, 0.25);
  for (const char* name : {"inverter", "gripper", "magnifier"}) {
    const auto s = catalog(name);
    EXPECT_DOUBLE_EQ(s.flow.eta_k, 0.1);
    EXPECT_DOUBLE_EQ(s.flow.eta_d, 0.2);
    EXPECT_DOUBLE_EQ(s.objective.mu, 100.0);
    EXPECT_EQ(s.objective.kind, ObjectiveKind::MultiCriteria);
    EXPECT_DOUBLE_EQ(s.volume_fraction, 0.1);
    EXPECT_EQ(s.max_iterations, 250);
    EXPECT_EQ(s.resolution, (Index3{120, 60, 60}));
  }
  const auto arc = catalog("arc2d");
  EXPECT_EQ(arc.resolution, (Index3{200, 100, 0}));
  EXPECT_DOUBLE_EQ(arc.filter_factor, 2.0);
  EXPECT_DOUBLE_EQ(arc.volume_fraction, 0.2);
  EXPECT_EQ(arc.max_iterations, 100);
  const auto lid = catalog("lid");
  EXPECT_DOUBLE_EQ(lid.material.e1, 5e8);
  EXPECT_DOUBLE_EQ(lid.material.e0, 5e2);
  EXPECT_DOUBLE_EQ(lid.material.nu, 0.4);
  EXPECT_DOUBLE_EQ(lid.material.zeta, 3.0);
  EXPECT_DOUBLE_EQ(lid.move_limit, 0.1);
  EXPECT_DOUBLE_EQ(lid.flow.epsilon, 1e-7);
  EXPECT_DOUBLE_EQ(lid.flow.remainder, 0.1);
  EXPECT_DOUBLE_EQ(lid.flow.eta_k, 0.3);
  EXPECT_DOUBLE_EQ(lid.flow.eta_d, 0.2);
  EXPECT_DOUBLE_EQ(lid.flow.beta_k, 10.0);
  EXPECT_DOUBLE_EQ(lid.flow.beta_d, 10.0);
  EXPECT_DOUBLE_EQ(lid.filter_factor, std::sqrt(3.0));
  EXPECT_EQ(lid.max_iterations, 100);
  EXPECT_EQ(catalog("extpress").resolution, (Index3{80, 80, 80}));
}

TEST(Problems, DrainageTestBlocksOccupyTheirSixths) {
  const auto s = catalog("test3d");
  const auto g = make_grid(s);
  const auto roles = element_roles(s, g);
  for (int e = 0; e < g.num_elements(); ++e) {
    const int i = g.element_ijk(e)[0];
    const bool solid = (i >= 8 && i < 16) || (i >= 24 && i < 32);
    EXPECT_EQ(roles[static_cast<std::size_t>(e)], solid ? ElementRole::Solid : ElementRole::Void);
  }
}

TEST(Problems, RescaleKeepsPhysicsAndRederivesFilter) {
  const auto lid = catalog("lid");
  const auto small = rescale(lid, {12, 6, 6});
  EXPECT_EQ(small.size, lid.size);
  EXPECT_EQ(small.resolution, (Index3{12, 6, 6}));
  const auto g = make_grid(small);
  EXPECT_NEAR(filter_radius(small, g), std::sqrt(3.0) * 0.2 / 12.0, 1e-15);
  EXPECT_NEAR(resolved_flow(small, g).delta_s, 2.0 * 0.2 / 12.0, 1e-15);
  const auto arc = rescale(catalog("arc2d"), {20, 10, 0});
  EXPECT_NEAR(filter_radius(arc, make_grid(arc)), 2.0 * 0.01, 1e-15);
}

TEST(Problems, RegionsSnapConsistentlyAcrossResolutions) {
  for (int n : {60, 120}) {
    const auto s = rescale(catalog("inverter"), {n, n / 2, n / 2});
    const auto g = make_grid(s);
    const auto roles = element_roles(s, g);
    int solid = 0, empty = 0;
    for (auto r : roles) {
      solid += r == ElementRole::Solid;
      empty += r == ElementRole::Void;
    }
    // void block Lx/10 x 14Ly/15 x 14Lz/15, rim Lx/8 thick
    const int vx = n / 10, vy = 14 * (n / 2) / 15, vz = 14 * (n / 2) / 15;
    EXPECT_EQ(empty, vx * vy * vz);
    const int rx = static_cast<int>(std::lround(n / 8.0)), ny = n / 2;
    EXPECT_EQ(solid, rx * ny * ny - rx * vy * vz);
  }
}

TEST(Problems, OverlappingRegionsAreRejected) {
  auto s = catalog("lid");
  s.solid_regions = {Box{{0.0, 0.0, 0.0}, {0.1, 0.1, 0.1}}};
  s.void_regions = {Box{{0.05, 0.0, 0.0}, {0.2, 0.1, 0.1}}};
  EXPECT_THROW(validate(s), std::invalid_argument);
}

TEST(Problems, PressureOnSymmetryPlaneIsRejected) {
  auto s = catalog("extpress");
  s.pressure.push_back({Face::XMax, 0.0, std::nullopt});
  EXPECT_THROW(validate(s), std::invalid_argument);
}

TEST(Problems, SymmetryPlanesGetRollers) {
  const auto s = rescale(catalog("inverter"), {12, 6, 6});
  const auto g = make_grid(s);
  const auto bc = boundary_conditions(s, g);
  for (int n : nodes_on_face(Face::YMin, g)) {
    EXPECT_TRUE(bc.supports.is_fixed(3 * n + 1));
    EXPECT_EQ(bc.supports.value(3 * n + 1), 0.0);
  }
  for (int n : nodes_on_face(Face::ZMin, g)) EXPECT_TRUE(bc.supports.is_fixed(3 * n + 2));
  const int mid = g.node_index(6, 0, 3);
  EXPECT_FALSE(bc.supports.is_fixed(3 * mid));
  EXPECT_FALSE(bc.supports.is_fixed(3 * mid + 2));
}

TEST(Problems, SymmetryPlaneNodesHaveZeroNormalDisplacement) {
  const auto s = rescale(catalog("inverter"), {12, 6, 6});
  const ProblemInstance inst(s);
  const auto state = inst.model().solve(apply_filter(inst.filter(), inst.initial_design()));
  const auto& g = inst.grid();
  for (int n : nodes_on_face(Face::YMin, g)) EXPECT_EQ(state.u[static_cast<std::size_t>(3 * n + 1)], 0.0);
  for (int n : nodes_on_face(Face::ZMin, g)) EXPECT_EQ(state.u[static_cast<std::size_t>(3 * n + 2)], 0.0);
}

TEST(Problems, QuarterInverterOutputLiesOnSymmetryLine) {
  const auto s = rescale(catalog("inverter"), {12, 6, 6});
  const auto g = make_grid(s);
  const auto bc = boundary_conditions(s, g);
  int count = 0;
  for (std::size_t d = 0; d < bc.dummy_load.size(); ++d) {
    if (bc.dummy_load[d] == 0.0) continue;
    ++count;
    const int node = static_cast<int>(d / 3);
    const auto ijk = g.node_ijk(node);
    EXPECT_EQ(ijk[1], 0);
    EXPECT_EQ(ijk[2], 0);
    EXPECT_EQ(ijk[0], 12);
    EXPECT_EQ(d % 3, 0u);
    EXPECT_EQ(bc.dummy_load[d], -1.0);
  }
  EXPECT_EQ(count, 1);
  ASSERT_EQ(bc.springs.size(), 1u);
  EXPECT_EQ(bc.springs[0].stiffness, 500.0);
}

TEST(Problems, GripperJawCarriesSpringsAndUnitDummyLoad) {
  const auto s = rescale(catalog("gripper"), {24, 12, 20});
  const auto g = make_grid(s);
  const auto bc = boundary_conditions(s, g);
  double total = 0.0;
  for (std::size_t d = 0; d < bc.dummy_load.size(); ++d) {
    if (bc.dummy_load[d] == 0.0) continue;
    EXPECT_EQ(d % 3, 2u);
    EXPECT_FALSE(bc.supports.is_fixed(static_cast<int>(d)));
    total += bc.dummy_load[d];
  }
  EXPECT_NEAR(total, -1.0, 1e-15);
  EXPECT_FALSE(bc.springs.empty());
  for (const auto& sp : bc.springs) {
    EXPECT_EQ(sp.stiffness, 50.0);
    EXPECT_EQ(sp.dof % 3, 2);
  }
}

TEST(Problems, PressureBoundaryValues) {
  const auto s = rescale(catalog("lid"), {6, 4, 4});
  const auto g = make_grid(s);
  const auto bc = boundary_conditions(s, g);
  for (int n : nodes_on_face(Face::ZMax, g)) EXPECT_EQ(bc.pressure.value(n), kBar);
  for (int n : nodes_on_face(Face::ZMin, g)) {
    EXPECT_TRUE(bc.pressure.is_fixed(n));
    EXPECT_EQ(bc.pressure.value(n), 0.0);
  }
  EXPECT_FALSE(bc.pressure.is_fixed(g.node_index(3, 2, 2)));
}

TEST(Problems, FaceNamesRoundTrip) {
  for (Face f : {Face::XMin, Face::XMax, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax}) {
    EXPECT_EQ(face_from_string(to_string(f)), f);
  }
  EXPECT_THROW(face_from_string("top"), std::invalid_argument);
}

TEST(Problems, HalfAndFullExternalPressureModelsAgree) {
  OptimizerSettings s;
  s.flow = {SolverKind::Pcg, 1e-14, 0};
  s.elastic = {SolverKind::Pcg, 1e-12, 0};
  const auto dev = oracle::compare_half_and_full(6, s);
  EXPECT_EQ(dev.shared_nodes, 7 * 7 * 7);
  EXPECT_LE(dev.pressure, 1e-6);
  EXPECT_LE(dev.displacement, 1e-6);
}

TEST(Problems, InitialDesignIsUniformOnDesignableElements) {
  const ProblemInstance inst(rescale(catalog("inverter"), {12, 6, 6}));
  const auto d = inst.initial_design();
  for (int e = 0; e < d.size(); ++e) {
    const double v = d.values()[static_cast<std::size_t>(e)];
    switch (d.role(e)) {
      case ElementRole::Designable: EXPECT_DOUBLE_EQ(v, 0.1); break;
      case ElementRole::Solid: EXPECT_EQ(v, 1.0); break;
      case ElementRole::Void: EXPECT_EQ(v, 0.0); break;
    }
  }
}
