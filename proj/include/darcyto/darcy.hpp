#pragma once

// Design-dependent pressure field from Darcy flow with a drainage sink, and
// its conversion to consistent nodal loads.
//
// Per element the flow matrix is A_e = K(rho) * C_e + D(rho) * M_e with the
// unit conductivity matrix C_e = int B_p^T B_p and the unit drainage mass
// M_e = int N_p^T N_p. Both parts are integrated once per grid; design
// derivatives are dK/drho * C_e + dD/drho * M_e.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "darcyto/field_ops.hpp"
#include "darcyto/linsolve.hpp"
#include "darcyto/mesh.hpp"

namespace darcyto {

/// Flow and drainage parameters. K_s = epsilon * K_v and the solid drainage
/// d_s = (ln r / delta_s)^2 K_s are derived.
struct FlowParams {
  double k_void = 1.0;   ///< K_v [m^4/(N s)]
  double epsilon = 1e-7; ///< flow contrast K_s / K_v
  double eta_k = 0.3;
  double beta_k = 10.0;
  double eta_d = 0.2;
  double beta_d = 10.0;
  double remainder = 0.1;  ///< r: pressure fraction left at depth delta_s
  double delta_s = 0.0;    ///< penetration depth [m]
  double p_ext = 0.0;      ///< external pressure [N/m^2]
  bool drainage = true;    ///< false switches the sink off (D = 0)

  double k_solid() const { return epsilon * k_void; }
  double drainage_solid() const;
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  bool operator==(const FlowParams&) const = default;
};

/// K = K_v (1 - (1 - eps) H_k(rho)).
ValueAndDerivative flow_coefficient(double rho_tilde, const FlowParams& params);
/// D = d_s H_d(rho); identically zero when drainage is disabled.
ValueAndDerivative drainage_coefficient(double rho_tilde, const FlowParams& params);

struct ElementFlowParts {
  Eigen::MatrixXd conductivity;  ///< int B_p^T B_p
  Eigen::MatrixXd mass;          ///< int N_p^T N_p
};

ElementFlowParts element_flow_parts(const StructuredGrid& grid);
Eigen::MatrixXd element_flow_matrix(double k_e, double d_e, const StructuredGrid& grid);
/// D_e = int N_u^T B_p, shape (dim * npe) x npe, rows node-major.
Eigen::MatrixXd element_transformation_matrix(const StructuredGrid& grid);

/// Global transformation matrix D (dim * nodes x nodes). Design independent.
CsrMatrix transformation_matrix(const StructuredGrid& grid);

/// F = -D p.
std::vector<double> nodal_loads(const CsrMatrix& d, std::span<const double> p);

struct PressureSolution {
  std::vector<double> p;
  SolveStats stats;
  /// Reduced flow matrix with its factorization, shared with the adjoint solve.
  std::shared_ptr<const FactoredSystem> system;
};

/// Solves A p = 0 on the free DOFs with the prescribed pressures of
/// `boundary`. Throws std::invalid_argument if nothing is prescribed and
/// SolverError on non-convergence. `grid` is required by the multigrid
/// solver only.
PressureSolution solve_pressure(CsrMatrix a, const DofMap& boundary,
                                const SolverOptions& options,
                                std::span<const double> initial_guess = {},
                                const StructuredGrid* grid = nullptr);

/// Grid-bound flow model: cached element parts, assembly pattern and the
/// transformation matrix.
class DarcyModel {
 public:
  DarcyModel(const StructuredGrid& grid, const FlowParams& params);

  const StructuredGrid& grid() const { return pattern_.grid(); }
  const FlowParams& params() const { return params_; }
  const ElementFlowParts& element_parts() const { return parts_; }
  const CsrMatrix& transformation() const { return transformation_; }

  /// Global flow matrix before boundary conditions.
  CsrMatrix assemble(std::span<const double> rho_tilde) const;

  /// Per element: lambda_e^T (dA_e / d rho_tilde_e) p_e.
  std::vector<double> contract_derivative(std::span<const double> rho_tilde,
                                          std::span<const double> lambda,
                                          std::span<const double> p) const;

 private:
  FlowParams params_;
  GridPattern pattern_;
  ElementFlowParts parts_;
  CsrMatrix transformation_;
};

/// Convenience wrapper over DarcyModel::assemble.
CsrMatrix assemble_flow(const StructuredGrid& grid, std::span<const double> rho_tilde,
                        const FlowParams& params);

}  // namespace darcyto
