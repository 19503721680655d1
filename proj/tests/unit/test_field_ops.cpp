#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "darcyto/field_ops.hpp"

using namespace darcyto;

namespace {

std::vector<ElementRole> all_designable(int n) {
  return std::vector<ElementRole>(static_cast<std::size_t>(n), ElementRole::Designable);
}

DesignField field_from(std::vector<double> values) {
  DesignField d(all_designable(static_cast<int>(values.size())), 0.0);
  d.set_designable_values(values);
  return d;
}

std::vector<double> random_vector(std::size_t n, unsigned seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(FieldOps, FilterRowsSumToOneAndAreNonNegative) {
  const auto g = StructuredGrid::make_3d(6, 5, 4, 0.6, 0.5, 0.4);
  const auto f = build_filter(g, std::sqrt(3.0) * g.min_element_edge());
  const auto& w = f.weights();
  for (int i = 0; i < w.rows(); ++i) {
    double s = 0.0;
    for (auto k = w.row_ptr()[static_cast<std::size_t>(i)]; k < w.row_ptr()[static_cast<std::size_t>(i) + 1]; ++k) {
      const double v = w.values()[static_cast<std::size_t>(k)];
      EXPECT_GE(v, 0.0);
      const auto ci = g.element_center(i);
      const auto cj = g.element_center(w.col_idx()[static_cast<std::size_t>(k)]);
      const double d = std::hypot(ci[0] - cj[0], ci[1] - cj[1], ci[2] - cj[2]);
      EXPECT_LT(d, f.radius());
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(FieldOps, SmallRadiusGivesIdentity) {
  const auto g = StructuredGrid::make_3d(3, 3, 3, 0.3, 0.3, 0.3);
  const auto f = build_filter(g, 0.09);
  const Eigen::MatrixXd w = f.weights().to_dense();
  EXPECT_EQ((w - Eigen::MatrixXd::Identity(27, 27)).norm(), 0.0);
}

TEST(FieldOps, NonPositiveRadiusThrows) {
  const auto g = StructuredGrid::make_2d(3, 3, 1.0, 1.0);
  EXPECT_THROW(build_filter(g, 0.0), std::invalid_argument);
  EXPECT_THROW(build_filter(g, -1.0), std::invalid_argument);
}

TEST(FieldOps, ThreeElementStripCentreRow) {
  const auto g = StructuredGrid::make_2d(3, 1, 3.0, 1.0);
  const auto f = build_filter(g, 2.0);
  EXPECT_NEAR(f.weights().coeff(1, 0), 0.25, 1e-15);
  EXPECT_NEAR(f.weights().coeff(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(f.weights().coeff(1, 2), 0.25, 1e-15);
  const auto narrow = build_filter(g, 1.5);
  EXPECT_NEAR(narrow.weights().coeff(1, 0), 0.2, 1e-15);
  EXPECT_NEAR(narrow.weights().coeff(1, 1), 0.6, 1e-15);
  EXPECT_NEAR(narrow.weights().coeff(1, 2), 0.2, 1e-15);
}

TEST(FieldOps, UniformAndExtremeFieldsArePreserved) {
  const auto g = StructuredGrid::make_3d(5, 4, 3, 0.5, 0.4, 0.3);
  const auto f = build_filter(g, 0.25);
  for (double c : {0.0, 0.37, 1.0}) {
    const auto out = apply_filter(f, DesignField(all_designable(g.num_elements()), c));
    for (double v : out) EXPECT_NEAR(v, c, 1e-15);
  }
}

TEST(FieldOps, FilteredFieldStaysWithinInputBounds) {
  const auto g = StructuredGrid::make_3d(6, 5, 4, 0.6, 0.5, 0.4);
  const auto f = build_filter(g, 0.25);
  const auto x = random_vector(static_cast<std::size_t>(g.num_elements()), 3, 0.2, 0.7);
  const auto out = apply_filter(f, field_from(x));
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (double v : out) {
    EXPECT_GE(v, *lo - 1e-15);
    EXPECT_LE(v, *hi + 1e-15);
  }
}

TEST(FieldOps, ForcedElementsAreReclamped) {
  const auto g = StructuredGrid::make_2d(4, 1, 4.0, 1.0);
  std::vector<ElementRole> roles{ElementRole::Solid, ElementRole::Designable,
                                 ElementRole::Designable, ElementRole::Void};
  const DesignField d(roles, 0.5);
  const auto out = apply_filter(build_filter(g, 2.5), d);
  EXPECT_EQ(out[0], 1.0);
  EXPECT_EQ(out[3], 0.0);
  EXPECT_EQ(d.values()[0], 1.0);
  EXPECT_EQ(d.values()[3], 0.0);
}

TEST(FieldOps, ChainRuleIsExactTranspose) {
  const auto g = StructuredGrid::make_3d(6, 5, 4, 0.6, 0.5, 0.4);
  const auto f = build_filter(g, 0.21);
  const auto n = static_cast<std::size_t>(g.num_elements());
  const auto x = random_vector(n, 5);
  const auto y = random_vector(n, 6, -1.0, 1.0);
  const auto roles = all_designable(g.num_elements());
  const auto fx = apply_filter(f, field_from(x));
  const auto ty = filter_chain_rule(f, y, roles);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lhs += fx[i] * y[i];
    rhs += x[i] * ty[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs) + 1e-14);
}

TEST(FieldOps, ChainRuleMatchesDenseTransposeOnSmallGrid) {
  const auto g = StructuredGrid::make_2d(4, 3, 0.4, 0.3);
  const auto f = build_filter(g, 0.15);
  const Eigen::MatrixXd w = f.weights().to_dense();
  const auto roles = all_designable(12);
  const std::vector<double> c(12, 2.5);
  const auto out = filter_chain_rule(f, c, roles);
  const Eigen::VectorXd ref = w.transpose() * Eigen::VectorXd::Constant(12, 2.5);
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(out[static_cast<std::size_t>(i)], ref[i], 1e-14);
}

TEST(FieldOps, ChainRuleZeroesForcedElements) {
  const auto g = StructuredGrid::make_2d(4, 1, 4.0, 1.0);
  std::vector<ElementRole> roles{ElementRole::Solid, ElementRole::Designable,
                                 ElementRole::Designable, ElementRole::Void};
  const auto out = filter_chain_rule(build_filter(g, 2.5), std::vector<double>(4, 1.0), roles);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[3], 0.0);
  EXPECT_GT(out[1], 0.0);
}

TEST(FieldOps, IdentityFilterChainRuleReturnsInput) {
  const auto g = StructuredGrid::make_2d(3, 2, 3.0, 2.0);
  const auto f = build_filter(g, 0.5);
  const std::vector<double> y{1, -2, 3, -4, 5, -6};
  EXPECT_EQ(filter_chain_rule(f, y, all_designable(6)), y);
}

TEST(FieldOps, LengthMismatchThrows) {
  const auto g = StructuredGrid::make_2d(3, 2, 3.0, 2.0);
  const auto f = build_filter(g, 1.5);
  EXPECT_THROW(apply_filter(f, DesignField(all_designable(5), 0.5)), std::invalid_argument);
  EXPECT_THROW(filter_chain_rule(f, std::vector<double>(5, 0.0), all_designable(6)),
               std::invalid_argument);
}

TEST(FieldOps, HeavisideEndpointsAndThreshold) {
  for (double eta : {0.1, 0.2, 0.3, 0.5}) {
    for (double beta : {1.0, 10.0, 100.0}) {
      EXPECT_EQ(heaviside(0.0, eta, beta), 0.0);
      EXPECT_DOUBLE_EQ(heaviside(1.0, eta, beta), 1.0);
    }
  }
  const double at_eta = std::tanh(3.0) / (std::tanh(3.0) + std::tanh(7.0));
  EXPECT_NEAR(heaviside(0.3, 0.3, 10.0), at_eta, 1e-15);
  EXPECT_NEAR(heaviside(0.3, 0.3, 10.0), 0.49876, 1e-5);
  EXPECT_LT(heaviside(0.1, 0.3, 100.0), 1e-6);
  EXPECT_GT(heaviside(0.5, 0.3, 100.0), 1.0 - 1e-6);
}

TEST(FieldOps, HeavisideIsMonotone) {
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double h = heaviside(i / 1000.0, 0.3, 10.0);
    EXPECT_GE(h, prev);
    EXPECT_GE(heaviside_derivative(i / 1000.0, 0.3, 10.0), 0.0);
    prev = h;
  }
}

TEST(FieldOps, HeavisideDerivativeMatchesCentralDifferences) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> r(0.05, 0.95), e(0.1, 0.9), b(1.0, 20.0);
  for (int t = 0; t < 10; ++t) {
    const double x = r(rng), eta = e(rng), beta = b(rng);
    const double h = 1e-6;
    const double fd = (heaviside(x + h, eta, beta) - heaviside(x - h, eta, beta)) / (2.0 * h);
    const double exact = heaviside_derivative(x, eta, beta);
    EXPECT_NEAR(fd, exact, 1e-8 * std::abs(exact) + 1e-10);
  }
}

TEST(FieldOps, SymmetricHeavisideDerivativePeaksAtHalf) {
  const double peak = heaviside_derivative(0.5, 0.5, 8.0);
  for (double x : {0.0, 0.2, 0.45, 0.55, 0.8, 1.0}) {
    EXPECT_LT(heaviside_derivative(x, 0.5, 8.0), peak);
  }
}

TEST(FieldOps, SimpEndpointsAndMidpoint) {
  const double e1 = 5e8, e0 = 1e-6 * e1;
  EXPECT_DOUBLE_EQ(simp_modulus(1.0, e0, e1, 3.0).value, e1);
  EXPECT_DOUBLE_EQ(simp_modulus(0.0, e0, e1, 3.0).value, 500.0);
  EXPECT_DOUBLE_EQ(simp_modulus(0.5, e0, e1, 3.0).value, e0 + 0.125 * (e1 - e0));
  EXPECT_DOUBLE_EQ(simp_modulus(0.5, e0, e1, 3.0).derivative, 3.0 * 0.25 * (e1 - e0));
  EXPECT_DOUBLE_EQ(simp_modulus(0.0, e0, e1, 3.0).derivative, 0.0);
}

TEST(FieldOps, DesignFieldPinsForcedValues) {
  std::vector<ElementRole> roles{ElementRole::Solid, ElementRole::Designable, ElementRole::Void};
  DesignField d(roles, 0.3);
  EXPECT_EQ(d.designable_elements(), std::vector<int>{1});
  d.set_designable_values(std::vector<double>{1.7});
  EXPECT_EQ(d.values()[1], 1.0);
  EXPECT_EQ(d.values()[0], 1.0);
  EXPECT_EQ(d.values()[2], 0.0);
}
