#include "darcyto/darcy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace darcyto {

double FlowParams::drainage_solid() const {
  const double a = std::log(remainder) / delta_s;
  return a * a * k_solid();
}

void FlowParams::validate() const {
  if (!(k_void > 0.0)) throw std::invalid_argument("FlowParams: K_v must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("FlowParams: epsilon must lie in (0, 1)");
  }
  if (!(remainder > 0.0 && remainder < 1.0)) {
    throw std::invalid_argument("FlowParams: r must lie in (0, 1)");
  }
  if (!(delta_s > 0.0)) throw std::invalid_argument("FlowParams: delta_s must be positive");
  if (!(beta_k > 0.0 && beta_d > 0.0)) {
    throw std::invalid_argument("FlowParams: Heaviside slopes must be positive");
  }
  if (!(eta_k > 0.0 && eta_k < 1.0 && eta_d > 0.0 && eta_d < 1.0)) {
    throw std::invalid_argument("FlowParams: Heaviside thresholds must lie in (0, 1)");
  }
}

ValueAndDerivative flow_coefficient(double rho_tilde, const FlowParams& params) {
  const double hc = heaviside_complement(rho_tilde, params.eta_k, params.beta_k);
  const double dh = heaviside_derivative(rho_tilde, params.eta_k, params.beta_k);
  const double span = params.k_void * (1.0 - params.epsilon);
  return {params.k_void * params.epsilon + span * hc, -span * dh};
}

ValueAndDerivative drainage_coefficient(double rho_tilde, const FlowParams& params) {
  if (!params.drainage) return {0.0, 0.0};
  const double ds = params.drainage_solid();
  return {ds * heaviside(rho_tilde, params.eta_d, params.beta_d),
          ds * heaviside_derivative(rho_tilde, params.eta_d, params.beta_d)};
}

namespace {

double jacobian_det(const StructuredGrid& grid) {
  const auto h = grid.element_size();
  // 2D: area Jacobian times out-of-plane thickness (h[2]).
  return grid.dim() == 2 ? 0.25 * h[0] * h[1] * h[2] : 0.125 * h[0] * h[1] * h[2];
}

}  // namespace

ElementFlowParts element_flow_parts(const StructuredGrid& grid) {
  const int dim = grid.dim();
  const int npe = grid.nodes_per_element();
  const auto h = grid.element_size();
  const double det = jacobian_det(grid);
  ElementFlowParts parts{Eigen::MatrixXd::Zero(npe, npe), Eigen::MatrixXd::Zero(npe, npe)};
  for (const auto& q : gauss_rule(dim)) {
    const Eigen::VectorXd n = shape_values(dim, q.xi);
    const Eigen::MatrixXd b = shape_gradients(dim, q.xi, h);
    parts.conductivity += q.weight * det * b.transpose() * b;
    parts.mass += q.weight * det * n * n.transpose();
  }
  return parts;
}

Eigen::MatrixXd element_flow_matrix(double k_e, double d_e, const StructuredGrid& grid) {
  const auto parts = element_flow_parts(grid);
  return k_e * parts.conductivity + d_e * parts.mass;
}

Eigen::MatrixXd element_transformation_matrix(const StructuredGrid& grid) {
  const int dim = grid.dim();
  const int npe = grid.nodes_per_element();
  const auto h = grid.element_size();
  const double det = jacobian_det(grid);
  Eigen::MatrixXd de = Eigen::MatrixXd::Zero(dim * npe, npe);
  for (const auto& q : gauss_rule(dim)) {
    const Eigen::VectorXd n = shape_values(dim, q.xi);
    const Eigen::MatrixXd b = shape_gradients(dim, q.xi, h);
    for (int a = 0; a < npe; ++a) {
      for (int c = 0; c < dim; ++c) {
        de.row(a * dim + c) += q.weight * det * n(a) * b.row(c);
      }
    }
  }
  return de;
}

CsrMatrix transformation_matrix(const StructuredGrid& grid) {
  const int dim = grid.dim();
  const int npe = grid.nodes_per_element();
  // Row (node, c) carries the same neighbour columns as the scalar pattern's row `node`.
  const GridPattern scalar(grid, 1);
  const CsrMatrix s = scalar.make_matrix();
  const auto srp = s.row_ptr();
  const auto sci = s.col_idx();
  const int nnodes = grid.num_nodes();
  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(nnodes) * dim + 1, 0);
  for (int n = 0; n < nnodes; ++n) {
    const auto len = srp[static_cast<std::size_t>(n) + 1] - srp[static_cast<std::size_t>(n)];
    for (int c = 0; c < dim; ++c) row_ptr[static_cast<std::size_t>(n) * dim + c + 1] = len;
  }
  for (std::size_t i = 1; i < row_ptr.size(); ++i) row_ptr[i] += row_ptr[i - 1];
  std::vector<int> cols(static_cast<std::size_t>(row_ptr.back()));
  for (int n = 0; n < nnodes; ++n) {
    for (int c = 0; c < dim; ++c) {
      std::copy(sci.begin() + srp[static_cast<std::size_t>(n)],
                sci.begin() + srp[static_cast<std::size_t>(n) + 1],
                cols.begin() + row_ptr[static_cast<std::size_t>(n) * dim + c]);
    }
  }
  std::vector<double> vals(cols.size(), 0.0);
  const Eigen::MatrixXd de = element_transformation_matrix(grid);
  for (int e = 0; e < grid.num_elements(); ++e) {
    const auto nodes = grid.element_nodes(e);
    for (int a = 0; a < npe; ++a) {
      for (int c = 0; c < dim; ++c) {
        const auto row = static_cast<std::size_t>(nodes[a]) * dim + c;
        const auto first = cols.begin() + row_ptr[row];
        const auto last = cols.begin() + row_ptr[row + 1];
        for (int b = 0; b < npe; ++b) {
          const auto it = std::lower_bound(first, last, nodes[b]);
          vals[static_cast<std::size_t>(it - cols.begin())] += de(a * dim + c, b);
        }
      }
    }
  }
  return CsrMatrix(nnodes * dim, nnodes, std::move(row_ptr), std::move(cols), std::move(vals));
}

std::vector<double> nodal_loads(const CsrMatrix& d, std::span<const double> p) {
  if (p.size() != static_cast<std::size_t>(d.cols())) {
    throw std::invalid_argument("nodal_loads: pressure vector size mismatch");
  }
  auto f = d.multiply(p);
  for (auto& x : f) x = -x;
  return f;
}

PressureSolution solve_pressure(CsrMatrix a, const DofMap& boundary,
                                const SolverOptions& options,
                                std::span<const double> initial_guess,
                                const StructuredGrid* grid) {
  if (boundary.num_fixed() == 0) {
    throw std::invalid_argument("solve_pressure: at least one prescribed pressure is required");
  }
  std::vector<double> rhs(static_cast<std::size_t>(a.rows()), 0.0);
  apply_dirichlet(a, rhs, boundary);
  PressureSolution out;
  GridLayout layout;
  if (grid != nullptr) layout = {grid, 1, boundary.mask()};
  out.system = std::make_shared<const FactoredSystem>(std::move(a), options, layout);
  out.p.assign(rhs.size(), 0.0);
  if (initial_guess.size() == rhs.size()) {
    std::copy(initial_guess.begin(), initial_guess.end(), out.p.begin());
  }
  for (int i = 0; i < boundary.size(); ++i) {
    if (boundary.is_fixed(i)) out.p[static_cast<std::size_t>(i)] = boundary.value(i);
  }
  out.stats = out.system->solve(rhs, out.p);
  // Prescribed entries exactly at their boundary values.
  for (int i = 0; i < boundary.size(); ++i) {
    if (boundary.is_fixed(i)) out.p[static_cast<std::size_t>(i)] = boundary.value(i);
  }
  return out;
}

DarcyModel::DarcyModel(const StructuredGrid& grid, const FlowParams& params)
    : params_(params),
      pattern_(grid, 1),
      parts_(element_flow_parts(grid)),
      transformation_(transformation_matrix(grid)) {
  params_.validate();
}

CsrMatrix DarcyModel::assemble(std::span<const double> rho_tilde) const {
  const auto& g = grid();
  if (rho_tilde.size() != static_cast<std::size_t>(g.num_elements())) {
    throw std::invalid_argument("DarcyModel::assemble: density length mismatch");
  }
  CsrMatrix a = pattern_.make_matrix();
  const int npe = g.nodes_per_element();
  Eigen::MatrixXd ae(npe, npe);
  for (int e = 0; e < g.num_elements(); ++e) {
    const double rho = rho_tilde[static_cast<std::size_t>(e)];
    const double k = flow_coefficient(rho, params_).value;
    const double d = drainage_coefficient(rho, params_).value;
    ae.noalias() = k * parts_.conductivity + d * parts_.mass;
    pattern_.add_element(a, e, ae, 1.0);
  }
  return a;
}

std::vector<double> DarcyModel::contract_derivative(std::span<const double> rho_tilde,
                                                    std::span<const double> lambda,
                                                    std::span<const double> p) const {
  const auto& g = grid();
  const int ne = g.num_elements();
  const int npe = g.nodes_per_element();
  if (rho_tilde.size() != static_cast<std::size_t>(ne) ||
      lambda.size() != static_cast<std::size_t>(g.num_nodes()) || p.size() != lambda.size()) {
    throw std::invalid_argument("DarcyModel::contract_derivative: size mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(ne), 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int e = 0; e < ne; ++e) {
    const auto nodes = g.element_nodes(e);
    Eigen::VectorXd le(npe), pe(npe);
    for (int a = 0; a < npe; ++a) {
      le(a) = lambda[static_cast<std::size_t>(nodes[a])];
      pe(a) = p[static_cast<std::size_t>(nodes[a])];
    }
    const double rho = rho_tilde[static_cast<std::size_t>(e)];
    const double dk = flow_coefficient(rho, params_).derivative;
    const double dd = drainage_coefficient(rho, params_).derivative;
    out[static_cast<std::size_t>(e)] =
        dk * le.dot(parts_.conductivity * pe) + dd * le.dot(parts_.mass * pe);
  }
  return out;
}

CsrMatrix assemble_flow(const StructuredGrid& grid, std::span<const double> rho_tilde,
                        const FlowParams& params) {
  return DarcyModel(grid, params).assemble(rho_tilde);
}

}  // namespace darcyto
