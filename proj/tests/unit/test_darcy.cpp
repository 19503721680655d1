#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "darcyto/darcy.hpp"

using namespace darcyto;

namespace {

FlowParams table_params(double delta_s = 0.01) {
  FlowParams p;
  p.delta_s = delta_s;
  return p;
}

std::vector<double> random_density(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Darcy, FlowCoefficientEndpointsAndMonotonicity) {
  const auto p = table_params();
  EXPECT_DOUBLE_EQ(flow_coefficient(0.0, p).value, 1.0);
  EXPECT_NEAR(flow_coefficient(1.0, p).value, 1e-7, 1e-20);
  double prev = 2.0;
  for (int i = 0; i <= 100; ++i) {
    const auto k = flow_coefficient(i / 100.0, p);
    EXPECT_LT(k.value, prev);
    EXPECT_LE(k.derivative, 0.0);
    EXPECT_GE(k.value, p.k_solid() * (1.0 - 1e-12));
    prev = k.value;
  }
}

TEST(Darcy, DrainageCoefficientEndpoints) {
  const auto p = table_params(0.002);
  const double ds = std::pow(std::log(0.1) / 0.002, 2) * 1e-7;
  EXPECT_NEAR(p.drainage_solid(), ds, 1e-15 * ds);
  EXPECT_EQ(drainage_coefficient(0.0, p).value, 0.0);
  EXPECT_NEAR(drainage_coefficient(1.0, p).value, ds, 1e-14 * ds);
  auto off = p;
  off.drainage = false;
  EXPECT_EQ(drainage_coefficient(0.7, off).value, 0.0);
  EXPECT_EQ(drainage_coefficient(0.7, off).derivative, 0.0);
}

TEST(Darcy, CoefficientDerivativesMatchCentralDifferences) {
  const auto p = table_params();
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 10; ++t) {
    const double x = u(rng), h = 1e-6;
    const double fk = (flow_coefficient(x + h, p).value - flow_coefficient(x - h, p).value) / (2 * h);
    const double fd = (drainage_coefficient(x + h, p).value - drainage_coefficient(x - h, p).value) / (2 * h);
    const double ek = flow_coefficient(x, p).derivative;
    const double ed = drainage_coefficient(x, p).derivative;
    EXPECT_NEAR(fk, ek, 1e-6 * std::abs(ek) + 1e-9);
    EXPECT_NEAR(fd, ed, 1e-6 * std::abs(ed) + 1e-9 * p.drainage_solid());
  }
}

TEST(Darcy, InvalidParamsThrow) {
  auto p = table_params();
  p.epsilon = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = table_params();
  p.remainder = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(table_params(0.0).validate(), std::invalid_argument);
}

TEST(Darcy, ConductivityPartAnnihilatesConstants) {
  const auto g = StructuredGrid::make_3d(1, 1, 1, 0.3, 0.2, 0.1);
  const auto a = element_flow_matrix(2.0, 0.0, g);
  EXPECT_LT((a * Eigen::VectorXd::Ones(8)).norm(), 1e-13 * a.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  EXPECT_LT(std::abs(es.eigenvalues()[0]), 1e-12 * es.eigenvalues()[7]);
  EXPECT_GT(es.eigenvalues()[1], 1e-6 * es.eigenvalues()[7]);
}

TEST(Darcy, DrainagePartIsTheConsistentMassMatrix) {
  const auto g = StructuredGrid::make_3d(1, 1, 1, 1.0, 1.0, 1.0);
  const double d = 3.0;
  const auto a = element_flow_matrix(0.0, d, g);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      double f = 1.0;
      for (int c = 0; c < 3; ++c) {
        f *= kCornerOffsets[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] ==
                     kCornerOffsets[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)]
                 ? 2.0
                 : 1.0;
      }
      EXPECT_NEAR(a(i, j), d * f / 216.0, 1e-15);
    }
    EXPECT_NEAR(a.row(i).sum(), d / 8.0, 1e-15);
  }
}

TEST(Darcy, ConductivityPartIsLinearInK) {
  const auto g = StructuredGrid::make_3d(1, 1, 1, 0.3, 0.2, 0.1);
  EXPECT_EQ(element_flow_matrix(2.0, 0.0, g), 2.0 * element_flow_matrix(1.0, 0.0, g));
}

TEST(Darcy, SingleElementAssemblyEqualsElementMatrix) {
  const auto g = StructuredGrid::make_3d(1, 1, 1, 0.3, 0.2, 0.1);
  const auto p = table_params(0.05);
  const std::vector<double> rho{0.6};
  const auto a = assemble_flow(g, rho, p).to_dense();
  const auto ref = element_flow_matrix(flow_coefficient(0.6, p).value,
                                       drainage_coefficient(0.6, p).value, g);
  const auto ids = g.element_nodes(0).ids;
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) EXPECT_NEAR(a(ids[r], ids[c]), ref(r, c), 1e-14 * ref.norm());
  }
}

TEST(Darcy, AssemblyIsSymmetricAndReducedSystemIsPositiveDefinite) {
  const auto g = StructuredGrid::make_3d(6, 4, 4, 0.06, 0.04, 0.04);
  const auto p = table_params(0.02);
  const auto rho = random_density(g.num_elements(), 4);
  auto a = assemble_flow(g, rho, p);
  EXPECT_EQ(a.symmetry_defect(), 0.0);
  auto bc = DofMap::pressure(g);
  for (int n : {0, 1, 2}) bc.fix(n, 1.0);
  std::vector<double> rhs(static_cast<std::size_t>(a.rows()), 0.0);
  apply_dirichlet(a, rhs, bc);
  Eigen::LLT<Eigen::MatrixXd> llt(a.to_dense());
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Darcy, VoidDuctHasLinearPressureProfile) {
  const auto g = StructuredGrid::make_3d(8, 2, 2, 0.08, 0.02, 0.02);
  const auto p = table_params(0.02);
  const std::vector<double> rho(static_cast<std::size_t>(g.num_elements()), 0.0);
  auto bc = DofMap::pressure(g);
  for (int j = 0; j <= 2; ++j)
    for (int k = 0; k <= 2; ++k) {
      bc.fix(g.node_index(0, j, k), 1e5);
      bc.fix(g.node_index(8, j, k), 0.0);
    }
  for (auto kind : {SolverKind::Pcg, SolverKind::Direct}) {
    const auto sol = solve_pressure(assemble_flow(g, rho, p), bc, {kind, 1e-14, 0});
    for (int n = 0; n < g.num_nodes(); ++n) {
      const double x = g.node_coords(n)[0];
      EXPECT_NEAR(sol.p[static_cast<std::size_t>(n)], 1e5 * (1.0 - x / 0.08), 1e-6);
    }
    // pressure falling along +x pushes the body towards +x
    const auto f = nodal_loads(transformation_matrix(g), sol.p);
    double fx = 0.0;
    for (int n = 0; n < g.num_nodes(); ++n) fx += f[static_cast<std::size_t>(3 * n)];
    EXPECT_NEAR(fx, 1e5 * 0.02 * 0.02, 1e-9);
  }
}

TEST(Darcy, PrescribedPressuresAreExact) {
  const auto g = StructuredGrid::make_3d(4, 3, 3, 0.04, 0.03, 0.03);
  const auto rho = random_density(g.num_elements(), 8);
  auto bc = DofMap::pressure(g);
  bc.fix(0, 12345.678);
  bc.fix(g.num_nodes() - 1, 0.0);
  const auto sol = solve_pressure(assemble_flow(g, rho, table_params(0.02)), bc, {SolverKind::Pcg, 1e-12, 0});
  EXPECT_EQ(sol.p[0], 12345.678);
  EXPECT_EQ(sol.p.back(), 0.0);
  for (double v : sol.p) {
    EXPECT_GE(v, -1e-3 * 12345.678);
    EXPECT_LE(v, 12345.678 * (1.0 + 1e-3));
  }
}

TEST(Darcy, SolveWithoutPrescribedPressureThrows) {
  const auto g = StructuredGrid::make_3d(2, 2, 2, 1.0, 1.0, 1.0);
  const std::vector<double> rho(8, 0.5);
  EXPECT_THROW(solve_pressure(assemble_flow(g, rho, table_params(0.5)), DofMap::pressure(g), {}),
               std::invalid_argument);
}

TEST(Darcy, ConstantPressureGivesNoInteriorForce) {
  const auto g = StructuredGrid::make_3d(3, 3, 3, 0.3, 0.3, 0.3);
  const auto d = transformation_matrix(g);
  const std::vector<double> p(static_cast<std::size_t>(g.num_nodes()), 7.0);
  const auto f = nodal_loads(d, p);
  const int interior = g.node_index(1, 1, 1);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(f[static_cast<std::size_t>(3 * interior + c)], 0.0, 1e-14);
  Vec3 total{};
  for (int n = 0; n < g.num_nodes(); ++n)
    for (int c = 0; c < 3; ++c) total[static_cast<std::size_t>(c)] += f[static_cast<std::size_t>(3 * n + c)];
  for (double t : total) EXPECT_LE(std::abs(t), 1e-9 * 7.0 * 0.09);
  for (double v : nodal_loads(d, std::vector<double>(p.size(), 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(Darcy, LinearPressureOnOneElementGivesFaceForce) {
  const double lx = 0.5, ly = 0.25, lz = 0.2, dp = 300.0;
  const auto g = StructuredGrid::make_3d(1, 1, 1, lx, ly, lz);
  std::vector<double> p(8);
  for (int n = 0; n < 8; ++n) p[static_cast<std::size_t>(n)] = g.node_coords(n)[0] * dp / lx;
  const auto f = nodal_loads(transformation_matrix(g), p);
  double fx = 0.0;
  for (int n = 0; n < 8; ++n) {
    fx += f[static_cast<std::size_t>(3 * n)];
    EXPECT_NEAR(f[static_cast<std::size_t>(3 * n)], -dp * ly * lz / 8.0, 1e-12);
  }
  EXPECT_NEAR(fx, -dp * ly * lz, 1e-12);
}

TEST(Darcy, TransformationMatrixIsDesignIndependent) {
  const auto g = StructuredGrid::make_3d(3, 2, 2, 0.3, 0.2, 0.2);
  const auto p = table_params(0.2);
  const DarcyModel m(g, p);
  const auto d0 = m.transformation();
  const auto a1 = m.assemble(random_density(g.num_elements(), 1));
  const auto a2 = m.assemble(random_density(g.num_elements(), 2));
  EXPECT_NE(a1.to_dense(), a2.to_dense());
  const auto d1 = transformation_matrix(g);
  ASSERT_EQ(d0.nnz(), d1.nnz());
  for (std::int64_t k = 0; k < d0.nnz(); ++k) {
    EXPECT_EQ(d0.values()[static_cast<std::size_t>(k)], d1.values()[static_cast<std::size_t>(k)]);
  }
}

TEST(Darcy, ContractDerivativeMatchesFiniteDifferenceOfMatrix) {
  const auto g = StructuredGrid::make_3d(3, 2, 2, 0.03, 0.02, 0.02);
  const auto p = table_params(0.02);
  const DarcyModel m(g, p);
  auto rho = random_density(g.num_elements(), 3);
  std::mt19937 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> lam(static_cast<std::size_t>(g.num_nodes())), pr(lam.size());
  for (auto& x : lam) x = n(rng);
  for (auto& x : pr) x = n(rng);
  const auto exact = m.contract_derivative(rho, lam, pr);
  const int e = 5;
  const double h = 1e-6;
  auto rp = rho, rm = rho;
  rp[e] += h;
  rm[e] -= h;
  const auto ap = m.assemble(rp).multiply(pr);
  const auto am = m.assemble(rm).multiply(pr);
  double fd = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) fd += lam[i] * (ap[i] - am[i]) / (2 * h);
  EXPECT_NEAR(exact[e], fd, 1e-6 * std::abs(fd));
}

TEST(Darcy, TwoDimensionalFlowUsesThickness) {
  const auto g1 = StructuredGrid::make_2d(2, 2, 1.0, 1.0, 1.0);
  const auto g2 = StructuredGrid::make_2d(2, 2, 1.0, 1.0, 0.5);
  const std::vector<double> rho(4, 0.3);
  const auto a1 = assemble_flow(g1, rho, table_params(0.5)).to_dense();
  const auto a2 = assemble_flow(g2, rho, table_params(0.5)).to_dense();
  EXPECT_LT((a1 - 2.0 * a2).norm(), 1e-14 * a1.norm());
}
