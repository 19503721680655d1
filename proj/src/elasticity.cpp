#include "darcyto/elasticity.hpp"

#include <algorithm>
#include <stdexcept>

#include "darcyto/field_ops.hpp"

namespace darcyto {

void MaterialParams::validate() const {
  if (!(e1 > e0 && e0 > 0.0)) throw std::invalid_argument("MaterialParams: need E1 > E0 > 0");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("MaterialParams: need 0 <= nu < 0.5");
  if (!(zeta >= 1.0)) throw std::invalid_argument("MaterialParams: need zeta >= 1");
}

namespace {

Eigen::MatrixXd constitutive(int dim, double e, double nu) {
  if (dim == 2) {
    Eigen::MatrixXd c(3, 3);
    const double f = e / (1.0 - nu * nu);
    c << f, f * nu, 0.0, f * nu, f, 0.0, 0.0, 0.0, f * 0.5 * (1.0 - nu);
    return c;
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 6);
  const double f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c(i, j) = f * (i == j ? 1.0 - nu : nu);
    c(i + 3, i + 3) = f * 0.5 * (1.0 - 2.0 * nu);
  }
  return c;
}

// Strain-displacement matrix in Voigt order (xx, yy, zz, xy, yz, zx) / (xx, yy, xy).
Eigen::MatrixXd strain_matrix(int dim, const Eigen::MatrixXd& grad) {
  const int npe = static_cast<int>(grad.cols());
  const int nstrain = dim == 2 ? 3 : 6;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nstrain, dim * npe);
  for (int a = 0; a < npe; ++a) {
    const int c = dim * a;
    if (dim == 2) {
      b(0, c) = grad(0, a);
      b(1, c + 1) = grad(1, a);
      b(2, c) = grad(1, a);
      b(2, c + 1) = grad(0, a);
    } else {
      b(0, c) = grad(0, a);
      b(1, c + 1) = grad(1, a);
      b(2, c + 2) = grad(2, a);
      b(3, c) = grad(1, a);
      b(3, c + 1) = grad(0, a);
      b(4, c + 1) = grad(2, a);
      b(4, c + 2) = grad(1, a);
      b(5, c) = grad(2, a);
      b(5, c + 2) = grad(0, a);
    }
  }
  return b;
}

}  // namespace

Eigen::MatrixXd element_stiffness(double e, double nu, const StructuredGrid& grid) {
  const int dim = grid.dim();
  const auto h = grid.element_size();
  const double det = dim == 2 ? 0.25 * h[0] * h[1] * h[2] : 0.125 * h[0] * h[1] * h[2];
  const Eigen::MatrixXd c = constitutive(dim, e, nu);
  const int ndof = dim * grid.nodes_per_element();
  Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(ndof, ndof);
  for (const auto& q : gauss_rule(dim)) {
    const Eigen::MatrixXd b = strain_matrix(dim, shape_gradients(dim, q.xi, h));
    ke += q.weight * det * b.transpose() * c * b;
  }
  return 0.5 * (ke + ke.transpose());
}

ElasticityModel::ElasticityModel(const StructuredGrid& grid, const MaterialParams& material)
    : material_(material),
      pattern_(grid, grid.dim()),
      ke_unit_(element_stiffness(1.0, material.nu, grid)) {
  material_.validate();
}

CsrMatrix ElasticityModel::assemble(std::span<const double> rho_tilde,
                                    std::span<const Spring> springs) const {
  const auto& g = grid();
  if (rho_tilde.size() != static_cast<std::size_t>(g.num_elements())) {
    throw std::invalid_argument("ElasticityModel::assemble: density length mismatch");
  }
  CsrMatrix k = pattern_.make_matrix();
  for (int e = 0; e < g.num_elements(); ++e) {
    const double modulus = simp_modulus(rho_tilde[static_cast<std::size_t>(e)], material_.e0,
                                        material_.e1, material_.zeta)
                               .value;
    pattern_.add_element(k, e, ke_unit_, modulus);
  }
  if (!springs.empty()) {
    const auto rp = k.row_ptr();
    const auto ci = k.col_idx();
    auto v = k.values();
    for (const auto& s : springs) {
      if (s.stiffness < 0.0) throw std::invalid_argument("Spring stiffness must be >= 0");
      if (s.dof < 0 || s.dof >= k.rows()) throw std::out_of_range("Spring dof out of range");
      const auto first = ci.begin() + rp[static_cast<std::size_t>(s.dof)];
      const auto last = ci.begin() + rp[static_cast<std::size_t>(s.dof) + 1];
      const auto it = std::lower_bound(first, last, s.dof);
      v[static_cast<std::size_t>(it - ci.begin())] += s.stiffness;
    }
  }
  return k;
}

std::vector<double> ElasticityModel::contract_derivative(std::span<const double> rho_tilde,
                                                         std::span<const double> a,
                                                         std::span<const double> b) const {
  const auto& g = grid();
  const int ne = g.num_elements();
  const int dim = g.dim();
  const int npe = g.nodes_per_element();
  if (rho_tilde.size() != static_cast<std::size_t>(ne) ||
      a.size() != static_cast<std::size_t>(pattern_.num_dofs()) || b.size() != a.size()) {
    throw std::invalid_argument("ElasticityModel::contract_derivative: size mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(ne), 0.0);
  const bool same = a.data() == b.data();
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int e = 0; e < ne; ++e) {
    const auto nodes = g.element_nodes(e);
    Eigen::VectorXd ae(dim * npe), be(dim * npe);
    for (int n = 0; n < npe; ++n) {
      for (int c = 0; c < dim; ++c) {
        const auto dof = static_cast<std::size_t>(nodes[n]) * dim + c;
        ae(n * dim + c) = a[dof];
        be(n * dim + c) = b[dof];
      }
    }
    const double de = simp_modulus(rho_tilde[static_cast<std::size_t>(e)], material_.e0,
                                   material_.e1, material_.zeta)
                          .derivative;
    const double q = same ? ae.dot(ke_unit_ * ae) : ae.dot(ke_unit_ * be);
    out[static_cast<std::size_t>(e)] = de * q;
  }
  return out;
}

CsrMatrix assemble_stiffness(const StructuredGrid& grid, std::span<const double> rho_tilde,
                             const MaterialParams& material, std::span<const Spring> springs) {
  return ElasticityModel(grid, material).assemble(rho_tilde, springs);
}

std::shared_ptr<const FactoredSystem> reduce_stiffness(CsrMatrix k, const DofMap& supports,
                                                       const SolverOptions& options,
                                                       const StructuredGrid* grid) {
  apply_dirichlet(k, supports);
  GridLayout layout;
  if (grid != nullptr) layout = {grid, grid->dim(), supports.mask()};
  return std::make_shared<const FactoredSystem>(std::move(k), options, layout);
}

namespace {

// Right-hand side and starting point with the supported DOFs at zero.
std::pair<std::vector<double>, std::vector<double>> supported_system(
    std::span<const double> f, const DofMap& supports, std::span<const double> initial_guess) {
  std::vector<double> rhs(f.begin(), f.end());
  std::vector<double> u(rhs.size(), 0.0);
  if (initial_guess.size() == rhs.size()) std::copy(initial_guess.begin(), initial_guess.end(), u.begin());
  for (int i = 0; i < supports.size(); ++i) {
    if (supports.is_fixed(i)) {
      rhs[static_cast<std::size_t>(i)] = 0.0;
      u[static_cast<std::size_t>(i)] = 0.0;
    }
  }
  return {std::move(rhs), std::move(u)};
}

void zero_supported(std::vector<double>& u, const DofMap& supports) {
  for (int i = 0; i < supports.size(); ++i) {
    if (supports.is_fixed(i)) u[static_cast<std::size_t>(i)] = 0.0;
  }
}

void check_sizes(const FactoredSystem& k, std::span<const double> f, const DofMap& supports) {
  if (f.size() != static_cast<std::size_t>(supports.size()) || k.rows() != supports.size()) {
    throw std::invalid_argument("displacement solve: size mismatch");
  }
}

}  // namespace

DisplacementSolution solve_state(const FactoredSystem& k, std::span<const double> f,
                                 const DofMap& supports,
                                 std::span<const double> initial_guess) {
  check_sizes(k, f, supports);
  auto [rhs, u] = supported_system(f, supports, initial_guess);
  DisplacementSolution out;
  out.u = std::move(u);
  out.stats = k.solve(rhs, out.u);
  zero_supported(out.u, supports);
  return out;
}

std::pair<DisplacementSolution, DisplacementSolution> solve_state_and_dummy(
    const FactoredSystem& k, std::span<const double> f, std::span<const double> f_dummy,
    const DofMap& supports, std::span<const double> guess_u, std::span<const double> guess_v) {
  check_sizes(k, f, supports);
  check_sizes(k, f_dummy, supports);
  auto [rhs_u, u] = supported_system(f, supports, guess_u);
  auto [rhs_v, v] = supported_system(f_dummy, supports, guess_v);
  const std::span<const double> b[] = {rhs_u, rhs_v};
  const std::span<double> x[] = {u, v};
  const auto stats = k.solve_many(b, x);
  std::pair<DisplacementSolution, DisplacementSolution> out{{std::move(u), stats[0]},
                                                            {std::move(v), stats[1]}};
  zero_supported(out.first.u, supports);
  zero_supported(out.second.u, supports);
  return out;
}

DisplacementSolution solve_dummy(const FactoredSystem& k, std::span<const double> f_dummy,
                                 const DofMap& supports,
                                 std::span<const double> initial_guess) {
  return solve_state(k, f_dummy, supports, initial_guess);
}

}  // namespace darcyto
