#pragma once

// SIMP-interpolated small-strain linear elasticity on structured grids.
// 3D uses trilinear hexahedra; 2D uses bilinear quads in plane stress with
// the grid thickness as out-of-plane depth.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "darcyto/linsolve.hpp"
#include "darcyto/mesh.hpp"

namespace darcyto {

struct MaterialParams {
  double e1 = 5e8;    ///< solid Young's modulus [N/m^2]
  double e0 = 5e2;    ///< void Young's modulus [N/m^2]
  double nu = 0.4;
  double zeta = 3.0;  ///< SIMP penalty

  void validate() const;
  bool operator==(const MaterialParams&) const = default;
};

/// Axis-aligned scalar spring to ground on one displacement DOF.
struct Spring {
  int dof = 0;
  double stiffness = 0.0;  ///< [N/m]
};

/// Element stiffness for modulus `e`, integrated with the 2x2(x2) Gauss rule.
Eigen::MatrixXd element_stiffness(double e, double nu, const StructuredGrid& grid);

class ElasticityModel {
 public:
  ElasticityModel(const StructuredGrid& grid, const MaterialParams& material);

  const StructuredGrid& grid() const { return pattern_.grid(); }
  const MaterialParams& material() const { return material_; }
  /// Element stiffness at unit modulus; every element is a scaled copy.
  const Eigen::MatrixXd& unit_stiffness() const { return ke_unit_; }
  const GridPattern& pattern() const { return pattern_; }

  /// Global K before boundary conditions, springs added on the diagonal.
  CsrMatrix assemble(std::span<const double> rho_tilde, std::span<const Spring> springs) const;

  /// Per element: dE/drho(rho_e) * a_e^T K_unit b_e.
  std::vector<double> contract_derivative(std::span<const double> rho_tilde,
                                          std::span<const double> a,
                                          std::span<const double> b) const;

 private:
  MaterialParams material_;
  GridPattern pattern_;
  Eigen::MatrixXd ke_unit_;
};

CsrMatrix assemble_stiffness(const StructuredGrid& grid, std::span<const double> rho_tilde,
                             const MaterialParams& material, std::span<const Spring> springs);

/// Eliminates the supported DOFs (zero displacement) and factors the result.
/// `grid` is required by the multigrid solver only.
std::shared_ptr<const FactoredSystem> reduce_stiffness(CsrMatrix k, const DofMap& supports,
                                                       const SolverOptions& options,
                                                       const StructuredGrid* grid = nullptr);

struct DisplacementSolution {
  std::vector<double> u;
  SolveStats stats;
};

/// K u = F with zeros at supported DOFs. `initial_guess` may be empty.
DisplacementSolution solve_state(const FactoredSystem& k, std::span<const double> f,
                                 const DofMap& supports,
                                 std::span<const double> initial_guess = {});
/// K v = F_d; identical mechanics, named for the unit dummy load case.
DisplacementSolution solve_dummy(const FactoredSystem& k, std::span<const double> f_dummy,
                                 const DofMap& supports,
                                 std::span<const double> initial_guess = {});
/// State and dummy solves together; the multigrid solver advances both
/// systems in one sequence of passes over K.
std::pair<DisplacementSolution, DisplacementSolution> solve_state_and_dummy(
    const FactoredSystem& k, std::span<const double> f, std::span<const double> f_dummy,
    const DofMap& supports, std::span<const double> guess_u = {},
    std::span<const double> guess_v = {});

}  // namespace darcyto
