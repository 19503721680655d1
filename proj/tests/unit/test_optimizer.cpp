#include <gtest/gtest.h>

#include "darcyto/optimizer.hpp"

using namespace darcyto;

TEST(Optimizer, SmallLidRunImprovesAndKeepsInvariants) {
  auto spec = rescale(catalog("lid"), {12, 6, 6});
  spec.max_iterations = 15;
  OptimizerSettings s;
  s.change_tolerance = 0.0;
  const ProblemInstance inst(spec, s);
  int rows = 0;
  const auto summary = optimize(inst, s, [&](const ConvergenceRecord& r, const DesignField& d, const StateSolution&) {
    EXPECT_EQ(r.iteration, rows++);
    EXPECT_LE(r.change, spec.move_limit + 1e-12);
    for (double v : d.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  });
  EXPECT_EQ(summary.iterations, 15);
  EXPECT_EQ(rows, 16);
  EXPECT_EQ(summary.history.size(), 16u);
  EXPECT_LT(summary.f0, summary.first_f0);
  EXPECT_FALSE(summary.stopped_by_change);
}

TEST(Optimizer, ForcedRegionsStayPinned) {
  auto spec = rescale(catalog("inverter"), {12, 6, 6});
  spec.max_iterations = 3;
  const ProblemInstance inst(spec);
  const auto summary = optimize(inst, OptimizerSettings{});
  for (int e = 0; e < summary.design.size(); ++e) {
    const double v = summary.design.values()[static_cast<std::size_t>(e)];
    if (summary.design.role(e) == ElementRole::Solid) EXPECT_EQ(v, 1.0);
    if (summary.design.role(e) == ElementRole::Void) EXPECT_EQ(v, 0.0);
    if (summary.design.role(e) == ElementRole::Solid) EXPECT_EQ(summary.state.rho_tilde[static_cast<std::size_t>(e)], 1.0);
  }
}

TEST(Optimizer, ChangeToleranceStopsEarly) {
  auto spec = rescale(catalog("lid"), {6, 4, 4});
  spec.max_iterations = 200;
  OptimizerSettings s;
  s.change_tolerance = 0.5;
  const ProblemInstance inst(spec, s);
  const auto summary = optimize(inst, s);
  EXPECT_TRUE(summary.stopped_by_change);
  EXPECT_LT(summary.iterations, 200);
}

TEST(Optimizer, AnalysisLeavesDesignUntouched) {
  const ProblemInstance inst(rescale(catalog("lid"), {6, 4, 4}));
  auto design = inst.initial_design();
  const std::vector<double> before(design.values().begin(), design.values().end());
  const auto report = analyze(inst, &design);
  EXPECT_EQ(std::vector<double>(design.values().begin(), design.values().end()), before);
  ASSERT_TRUE(report.f0.has_value());
  EXPECT_GT(*report.f0, 0.0);
  EXPECT_NEAR(*report.g1, 0.0, 1e-12);
}

TEST(Optimizer, AnalysisOnlyProblemRefusesToOptimize) {
  const ProblemInstance inst(rescale(catalog("test3d"), {12, 6, 6}));
  EXPECT_THROW(optimize(inst, OptimizerSettings{}), std::invalid_argument);
  const auto report = analyze(inst);
  EXPECT_FALSE(report.f0.has_value());
  EXPECT_EQ(report.solid_region_forces.size(), 2u);
}

TEST(Optimizer, FailuresNameThePhaseAndIteration) {
  auto spec = rescale(catalog("lid"), {6, 4, 4});
  spec.max_iterations = 2;
  OptimizerSettings s;
  s.elastic = {SolverKind::Pcg, 1e-30, 1};
  const ProblemInstance inst(spec, s);
  try {
    optimize(inst, s);
    FAIL() << "expected failure";
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("iteration 0"), std::string::npos) << what;
  }
}
