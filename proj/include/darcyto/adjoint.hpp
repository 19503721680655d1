#pragma once

// State pipeline for one design (filtered densities -> pressure -> loads ->
// displacements) together with objective values and adjoint sensitivities
// that include the design dependence of the pressure loads.

#include <memory>
#include <span>
#include <vector>

#include "darcyto/darcy.hpp"
#include "darcyto/elasticity.hpp"
#include "darcyto/field_ops.hpp"
#include "darcyto/linsolve.hpp"
#include "darcyto/mesh.hpp"

namespace darcyto {

enum class ObjectiveKind { Compliance, MultiCriteria };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::Compliance;
  double mu = 1.0;  ///< scaling of -MSE/SE, used by MultiCriteria only

  void validate() const;
  bool operator==(const Objective&) const = default;
};

/// Boundary data of one analysis: prescribed pressures, supported
/// displacement DOFs (zero), springs to ground and the unit dummy load.
struct BoundaryConditions {
  DofMap pressure;
  DofMap supports;
  std::vector<Spring> springs;
  std::vector<double> dummy_load;  ///< empty when no output DOF is defined
};

struct StateSolution {
  std::vector<double> rho_tilde;
  std::vector<double> p;
  std::vector<double> force;  ///< F = -D p
  std::vector<double> u;
  std::vector<double> v;      ///< dummy-load response, empty without dummy load
  std::shared_ptr<const FactoredSystem> flow;       ///< reduced A
  std::shared_ptr<const FactoredSystem> stiffness;  ///< reduced K, null if not solved
  SolveStats pressure_stats;
  SolveStats state_stats;
  SolveStats dummy_stats;
  double pressure_seconds = 0.0;
  double state_seconds = 0.0;

  /// SE = 1/2 u^T K u.
  double strain_energy() const;
  /// MSE = v^T K u.
  double mutual_strain_energy() const;
};

/// Grid-bound analysis model. Element matrices, assembly patterns and the
/// transformation matrix are built once.
class PressureLoadModel {
 public:
  PressureLoadModel(const StructuredGrid& grid, const FlowParams& flow,
                    const MaterialParams& material, BoundaryConditions bc,
                    SolverOptions flow_solver = {}, SolverOptions elastic_solver = {});

  const StructuredGrid& grid() const { return darcy_.grid(); }
  const DarcyModel& darcy() const { return darcy_; }
  const ElasticityModel& elasticity() const { return elasticity_; }
  const BoundaryConditions& boundary() const { return bc_; }

  /// Solves the pressure field and, when `structural`, the state and dummy
  /// displacement fields. `warm` supplies initial guesses for PCG.
  StateSolution solve(std::span<const double> rho_tilde, const StateSolution* warm = nullptr,
                      bool structural = true) const;

 private:
  DarcyModel darcy_;
  ElasticityModel elasticity_;
  BoundaryConditions bc_;
  SolverOptions flow_solver_;
  SolverOptions elastic_solver_;
};

/// Compliance: 2 SE. MultiCriteria: -mu MSE / SE.
double objective_value(const Objective& objective, const StateSolution& state);

/// `include_load_terms = false` drops the pressure-load contribution; used to
/// demonstrate that it is required.
std::vector<double> compliance_sensitivity(const PressureLoadModel& model,
                                           const StateSolution& state,
                                           bool include_load_terms = true);
std::vector<double> multicriteria_sensitivity(const PressureLoadModel& model,
                                              const StateSolution& state, double mu,
                                              bool include_load_terms = true);

/// d f0 / d rho_tilde for every element.
std::vector<double> objective_sensitivity(const Objective& objective,
                                          const PressureLoadModel& model,
                                          const StateSolution& state,
                                          bool include_load_terms = true);

struct VolumeConstraint {
  double value = 0.0;             ///< g1 = V / V* - 1
  double volume_fraction = 0.0;   ///< V
  std::vector<double> gradient;   ///< d g1 / d rho_tilde, zero on forced elements
};

/// Equal element volumes; forced elements count in V but not in the gradient.
VolumeConstraint volume_constraint(std::span<const double> rho_tilde,
                                   std::span<const ElementRole> roles, double v_star);

struct SensitivityBundle {
  double f0 = 0.0;
  std::vector<double> df0;  ///< per designable element
  double g1 = 0.0;
  std::vector<double> dg1;  ///< per designable element
  double volume_fraction = 0.0;
};

/// Objective and constraint with gradients chained through the filter.
SensitivityBundle full_gradient(const Objective& objective, const PressureLoadModel& model,
                                const FilterOperator& filter, const DesignField& design,
                                const StateSolution& state, double v_star,
                                bool include_load_terms = true);

}  // namespace darcyto
