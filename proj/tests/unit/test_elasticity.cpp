#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "darcyto/elasticity.hpp"

using namespace darcyto;

namespace {

// Rigid body modes of one element, node-major DOF layout.
Eigen::MatrixXd rigid_modes(const StructuredGrid& g) {
  const int dim = g.dim();
  const int npe = g.nodes_per_element();
  const auto nodes = element_nodes(g, 0);
  const int nmodes = dim == 3 ? 6 : 3;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dim * npe, nmodes);
  for (int a = 0; a < npe; ++a) {
    const auto x = g.node_coords(nodes[a]);
    for (int c = 0; c < dim; ++c) r(dim * a + c, c) = 1.0;
    if (dim == 2) {
      r(2 * a, 2) = -x[1];
      r(2 * a + 1, 2) = x[0];
    } else {
      r(3 * a + 1, 3) = -x[2];
      r(3 * a + 2, 3) = x[1];
      r(3 * a, 4) = x[2];
      r(3 * a + 2, 4) = -x[0];
      r(3 * a, 5) = -x[1];
      r(3 * a + 1, 5) = x[0];
    }
  }
  return r;
}

DofMap clamp_xmin(const StructuredGrid& g) {
  auto dofs = DofMap::displacement(g);
  const int dim = g.dim();
  for (int n = 0; n < g.num_nodes(); ++n) {
    if (g.node_ijk(n)[0] == 0) {
      for (int c = 0; c < dim; ++c) dofs.fix(dim * n + c);
    }
  }
  return dofs;
}

}  // namespace

TEST(Elasticity, ElementNullspaceIsRigidBodyMotion) {
  for (const auto& g : {StructuredGrid::make_3d(1, 1, 1, 0.3, 0.2, 0.1),
                        StructuredGrid::make_2d(1, 1, 0.3, 0.2, 0.05)}) {
    const auto ke = element_stiffness(5e8, 0.4, g);
    EXPECT_LT((ke - ke.transpose()).norm(), 1e-12 * ke.norm());
    const auto r = rigid_modes(g);
    for (int m = 0; m < r.cols(); ++m) {
      EXPECT_LE((ke * r.col(m)).norm(), 1e-9 * ke.norm() * r.col(m).norm());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ke);
    const auto& ev = es.eigenvalues();
    const int zeros = g.dim() == 3 ? 6 : 3;
    for (int i = 0; i < zeros; ++i) EXPECT_LT(std::abs(ev[i]), 1e-10 * ev.maxCoeff());
    EXPECT_GT(ev[zeros], 1e-6 * ev.maxCoeff());
  }
}

TEST(Elasticity, ElementStiffnessIsLinearInModulus) {
  const auto g = StructuredGrid::make_3d(1, 1, 1, 0.3, 0.2, 0.1);
  EXPECT_EQ(element_stiffness(2.0e8, 0.4, g), 2.0 * element_stiffness(1.0e8, 0.4, g));
}

TEST(Elasticity, UniaxialBarMatchesAnalyticExtension) {
  // Roller supports on three faces admit the homogeneous uniaxial state,
  // which trilinear elements represent exactly.
  const double lx = 0.4, ly = 0.1, lz = 0.1, e = 2e8, traction = 1e5;
  const auto g = StructuredGrid::make_3d(8, 2, 2, lx, ly, lz);
  MaterialParams mat{e, 1e-6 * e, 0.3, 3.0};
  const std::vector<double> rho(static_cast<std::size_t>(g.num_elements()), 1.0);
  auto k = assemble_stiffness(g, rho, mat, {});
  auto dofs = DofMap::displacement(g);
  std::vector<double> f(static_cast<std::size_t>(3 * g.num_nodes()), 0.0);
  for (int n = 0; n < g.num_nodes(); ++n) {
    const auto ijk = g.node_ijk(n);
    if (ijk[0] == 0) dofs.fix(3 * n);
    if (ijk[1] == 0) dofs.fix(3 * n + 1);
    if (ijk[2] == 0) dofs.fix(3 * n + 2);
    if (ijk[0] == 8) {
      // consistent nodal share of a uniform traction on a 2x2 face grid
      const double wy = (ijk[1] == 0 || ijk[1] == 2) ? 0.5 : 1.0;
      const double wz = (ijk[2] == 0 || ijk[2] == 2) ? 0.5 : 1.0;
      f[static_cast<std::size_t>(3 * n)] = traction * wy * wz * (ly / 2) * (lz / 2);
    }
  }
  const auto sys = reduce_stiffness(std::move(k), dofs, {SolverKind::Direct, 0.0, 0});
  const auto u = solve_state(*sys, f, dofs).u;
  for (int n = 0; n < g.num_nodes(); ++n) {
    const auto x = g.node_coords(n);
    EXPECT_NEAR(u[static_cast<std::size_t>(3 * n)], traction / e * x[0], 1e-12);
    EXPECT_NEAR(u[static_cast<std::size_t>(3 * n + 1)], -0.3 * traction / e * x[1], 1e-12);
  }
}

TEST(Elasticity, FullDensityAssemblyUsesSolidModulus) {
  const auto g = StructuredGrid::make_3d(2, 2, 1, 0.2, 0.2, 0.1);
  const MaterialParams mat;
  const std::vector<double> rho(4, 1.0);
  const auto k = assemble_stiffness(g, rho, mat, {});
  const GridPattern pattern(g, 3);
  auto ref = pattern.make_matrix();
  const auto ke = element_stiffness(mat.e1, mat.nu, g);
  for (int e = 0; e < 4; ++e) pattern.add_element(ref, e, ke, 1.0);
  EXPECT_LT((k.to_dense() - ref.to_dense()).norm(), 1e-12 * ref.to_dense().norm());
  EXPECT_EQ(k.symmetry_defect(), 0.0);
}

TEST(Elasticity, SpringAddsToDiagonal) {
  const auto g = StructuredGrid::make_3d(2, 1, 1, 0.2, 0.1, 0.1);
  const std::vector<double> rho(2, 0.5);
  const MaterialParams mat;
  const auto k0 = assemble_stiffness(g, rho, mat, {});
  const std::vector<Spring> springs{{7, 500.0}};
  const auto k1 = assemble_stiffness(g, rho, mat, springs);
  EXPECT_DOUBLE_EQ(k1.coeff(7, 7) - k0.coeff(7, 7), 500.0);
  EXPECT_EQ(k1.coeff(6, 6), k0.coeff(6, 6));
  const std::vector<Spring> bad{{7, -1.0}};
  EXPECT_THROW(assemble_stiffness(g, rho, mat, bad), std::invalid_argument);
}

TEST(Elasticity, ReducedStiffnessFactorsOnRandomDesign) {
  const auto g = StructuredGrid::make_3d(6, 4, 4, 0.06, 0.04, 0.04);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rho(static_cast<std::size_t>(g.num_elements()));
  for (auto& r : rho) r = u(rng);
  auto k = assemble_stiffness(g, rho, MaterialParams{}, {});
  apply_dirichlet(k, clamp_xmin(g));
  Eigen::LLT<Eigen::MatrixXd> llt(k.to_dense());
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Elasticity, SingleCubeCantileverMatchesDenseSolve) {
  const auto g = StructuredGrid::make_3d(1, 1, 1, 0.1, 0.1, 0.1);
  const MaterialParams mat;
  const std::vector<double> rho{1.0};
  const auto dofs = clamp_xmin(g);
  std::vector<double> f(24, 0.0);
  f[3 * g.node_index(1, 1, 1) + 2] = -1.0;
  const auto sys = reduce_stiffness(assemble_stiffness(g, rho, mat, {}), dofs, {SolverKind::Pcg, 1e-14, 0});
  const auto u = solve_state(*sys, f, dofs).u;

  const auto ke_local = element_stiffness(mat.e1, mat.nu, g);
  const auto ids = g.element_nodes(0).ids;
  Eigen::MatrixXd ke(24, 24);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ke(3 * ids[a] + i, 3 * ids[b] + j) = ke_local(3 * a + i, 3 * b + j);
  const auto free = dofs.free_dofs();
  const auto nf = static_cast<int>(free.size());
  Eigen::MatrixXd kff(nf, nf);
  Eigen::VectorXd ff(nf);
  for (int i = 0; i < nf; ++i) {
    ff[i] = f[static_cast<std::size_t>(free[static_cast<std::size_t>(i)])];
    for (int j = 0; j < nf; ++j) kff(i, j) = ke(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd ref = kff.llt().solve(ff);
  for (int i = 0; i < nf; ++i) {
    EXPECT_NEAR(u[static_cast<std::size_t>(free[static_cast<std::size_t>(i)])], ref[i], 1e-10 * ref.norm());
  }
  for (int d : dofs.fixed_dofs()) EXPECT_EQ(u[static_cast<std::size_t>(d)], 0.0);
}

TEST(Elasticity, ZeroLoadGivesZeroDisplacement) {
  const auto g = StructuredGrid::make_3d(2, 2, 2, 0.2, 0.2, 0.2);
  const std::vector<double> rho(8, 0.4);
  const auto dofs = clamp_xmin(g);
  const auto sys = reduce_stiffness(assemble_stiffness(g, rho, MaterialParams{}, {}), dofs, {});
  const auto u = solve_state(*sys, std::vector<double>(81, 0.0), dofs).u;
  for (double v : u) EXPECT_EQ(v, 0.0);
}

TEST(Elasticity, ComplianceAndReciprocity) {
  const auto g = StructuredGrid::make_3d(4, 3, 3, 0.04, 0.03, 0.03);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u01(0.1, 1.0);
  std::normal_distribution<double> n;
  std::vector<double> rho(static_cast<std::size_t>(g.num_elements()));
  for (auto& r : rho) r = u01(rng);
  const auto dofs = clamp_xmin(g);
  const std::vector<Spring> springs{{3 * g.node_index(4, 0, 0), 500.0}};
  const auto k = assemble_stiffness(g, rho, MaterialParams{}, springs);
  const auto sys = reduce_stiffness(k, dofs, {SolverKind::Pcg, 1e-13, 0});
  std::vector<double> f(static_cast<std::size_t>(3 * g.num_nodes())), fd(f.size(), 0.0);
  for (auto& x : f) x = n(rng);
  fd[static_cast<std::size_t>(3 * g.node_index(4, 0, 0))] = -1.0;
  const auto u = solve_state(*sys, f, dofs).u;
  const auto v = solve_dummy(*sys, fd, dofs).u;
  const auto ku = k.multiply(u);
  double fu = 0.0, uku = 0.0, vf = 0.0, ufd = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!dofs.is_fixed(static_cast<int>(i))) fu += f[i] * u[i];
    uku += u[i] * ku[i];
    vf += v[i] * (dofs.is_fixed(static_cast<int>(i)) ? 0.0 : f[i]);
    ufd += u[i] * fd[i];
  }
  EXPECT_GT(fu, 0.0);
  EXPECT_NEAR(fu, uku, 1e-10 * std::abs(fu));
  EXPECT_NEAR(vf, ufd, 1e-10 * std::abs(vf));
}

TEST(Elasticity, ContractDerivativeMatchesFiniteDifference) {
  const auto g = StructuredGrid::make_3d(3, 2, 2, 0.03, 0.02, 0.02);
  const ElasticityModel m(g, MaterialParams{});
  std::vector<double> rho(12, 0.5);
  rho[4] = 0.37;
  std::mt19937 rng(8);
  std::normal_distribution<double> n;
  std::vector<double> a(static_cast<std::size_t>(3 * g.num_nodes())), b(a.size());
  for (auto& x : a) x = n(rng);
  for (auto& x : b) x = n(rng);
  const auto exact = m.contract_derivative(rho, a, b);
  const double h = 1e-6;
  auto rp = rho, rm = rho;
  rp[4] += h;
  rm[4] -= h;
  const auto kp = m.assemble(rp, {}).multiply(b);
  const auto km = m.assemble(rm, {}).multiply(b);
  double fd = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) fd += a[i] * (kp[i] - km[i]) / (2 * h);
  EXPECT_NEAR(exact[4], fd, 1e-6 * std::abs(fd));
}

TEST(Elasticity, InvalidMaterialThrows) {
  EXPECT_THROW((MaterialParams{1.0, 2.0, 0.3, 3.0}.validate()), std::invalid_argument);
  EXPECT_THROW((MaterialParams{2.0, 1.0, 0.5, 3.0}.validate()), std::invalid_argument);
  EXPECT_THROW((MaterialParams{2.0, 1.0, 0.3, 0.5}.validate()), std::invalid_argument);
}
