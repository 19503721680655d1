#pragma once

// Optimization driver: filter -> pressure -> loads -> displacements ->
// objective and sensitivities -> MMA update, repeated until the iteration
// budget is spent or the design stops changing.

#include <functional>
#include <optional>
#include <vector>

#include "darcyto/adjoint.hpp"
#include "darcyto/field_ops.hpp"
#include "darcyto/mma.hpp"
#include "darcyto/problems.hpp"

namespace darcyto {

struct OptimizerSettings {
  /// Pressure solves need a much tighter residual than displacement solves:
  /// void pockets enclosed by low-permeability material form near-singular
  /// modes that a looser test leaves unresolved.
  SolverOptions flow{SolverKind::Pcg, 1e-14, 0};
  SolverOptions elastic;
  /// Stop once max |rho_new - rho| < change_tolerance; 0 disables.
  double change_tolerance = 1e-3;
  MmaParams mma;
};

/// A spec bound to its grid: roles, filter and analysis model.
class ProblemInstance {
 public:
  ProblemInstance(ProblemSpec spec, const OptimizerSettings& settings = {});

  const ProblemSpec& spec() const { return spec_; }
  const StructuredGrid& grid() const { return grid_; }
  const std::vector<ElementRole>& roles() const { return roles_; }
  const FilterOperator& filter() const { return filter_; }
  const PressureLoadModel& model() const { return model_; }
  /// Uniform V* on designable elements, forced elements at 0 or 1.
  DesignField initial_design() const;

 private:
  ProblemSpec spec_;
  StructuredGrid grid_;
  std::vector<ElementRole> roles_;
  FilterOperator filter_;
  PressureLoadModel model_;
};

/// One row per evaluated design; row k is the design after k MMA updates.
struct ConvergenceRecord {
  int iteration = 0;
  double f0 = 0.0;
  double g1 = 0.0;
  double volume_fraction = 0.0;
  double change = 0.0;  ///< max-norm change of the update that produced this design
  int pressure_iterations = 0;
  int state_iterations = 0;
  int dummy_iterations = 0;
  double t_filter = 0.0;
  double t_pressure = 0.0;
  double t_state = 0.0;
  double t_sensitivity = 0.0;
  double t_update = 0.0;  ///< MMA update that produced this design
};

/// Called once per row with the evaluated design and its state.
using IterationCallback =
    std::function<void(const ConvergenceRecord&, const DesignField&, const StateSolution&)>;

struct RunSummary {
  int iterations = 0;  ///< MMA updates performed
  double f0 = 0.0;
  double g1 = 0.0;
  double first_f0 = 0.0;
  double volume_fraction = 0.0;
  bool stopped_by_change = false;
  std::vector<ConvergenceRecord> history;
  DesignField design;
  StateSolution state;
};

/// Throws std::runtime_error naming the phase and iteration on failure.
RunSummary optimize(const ProblemInstance& instance, const OptimizerSettings& settings,
                    const IterationCallback& on_iteration = {});

struct AnalysisReport {
  DesignField design;
  StateSolution state;
  std::optional<double> f0;
  std::optional<double> g1;
  /// Summed nodal force over the nodes of each solid region.
  std::vector<Vec3> solid_region_forces;
  Vec3 total_force{};
};

/// Single evaluation of `design` (the initial design when null). Never
/// modifies the design.
AnalysisReport analyze(const ProblemInstance& instance, const DesignField* design = nullptr);

/// Nodal force summed over the nodes inside `box`.
Vec3 force_in_box(const StructuredGrid& grid, std::span<const double> force, const Box& box);

}  // namespace darcyto
