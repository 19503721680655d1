#include "darcyto/adjoint.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace darcyto {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Per element lambda^T (dA_e/drho) p with A lambda = D^T w on the free
// pressure DOFs.
std::vector<double> load_term(const PressureLoadModel& model, const StateSolution& state,
                              std::span<const double> w) {
  auto rhs = model.darcy().transformation().multiply_transpose(w);
  const auto& bc = model.boundary().pressure;
  for (int i = 0; i < bc.size(); ++i) {
    if (bc.is_fixed(i)) rhs[static_cast<std::size_t>(i)] = 0.0;
  }
  std::vector<double> lambda(rhs.size(), 0.0);
  state.flow->solve(rhs, lambda);
  for (int i = 0; i < bc.size(); ++i) {
    if (bc.is_fixed(i)) lambda[static_cast<std::size_t>(i)] = 0.0;
  }
  return model.darcy().contract_derivative(state.rho_tilde, lambda, state.p);
}

void require_structural(const StateSolution& state) {
  if (!state.stiffness || state.u.empty()) {
    throw std::logic_error("sensitivity requires a solved displacement field");
  }
}

}  // namespace

void Objective::validate() const {
  if (kind == ObjectiveKind::MultiCriteria && !(mu > 0.0)) {
    throw std::invalid_argument("Objective: mu must be positive");
  }
}

double StateSolution::strain_energy() const {
  if (!stiffness) return 0.0;
  const auto ku = stiffness->multiply(u);
  return 0.5 * detail::dot(u, ku);
}

double StateSolution::mutual_strain_energy() const {
  if (!stiffness || v.empty()) return 0.0;
  const auto ku = stiffness->multiply(u);
  return detail::dot(v, ku);
}

PressureLoadModel::PressureLoadModel(const StructuredGrid& grid, const FlowParams& flow,
                                     const MaterialParams& material, BoundaryConditions bc,
                                     SolverOptions flow_solver, SolverOptions elastic_solver)
    : darcy_(grid, flow),
      elasticity_(grid, material),
      bc_(std::move(bc)),
      flow_solver_(flow_solver),
      elastic_solver_(elastic_solver) {
  if (bc_.pressure.size() != grid.num_nodes()) {
    throw std::invalid_argument("PressureLoadModel: pressure boundary size mismatch");
  }
  if (bc_.supports.size() != grid.num_nodes() * grid.dim()) {
    throw std::invalid_argument("PressureLoadModel: support map size mismatch");
  }
  if (!bc_.dummy_load.empty() &&
      bc_.dummy_load.size() != static_cast<std::size_t>(bc_.supports.size())) {
    throw std::invalid_argument("PressureLoadModel: dummy load size mismatch");
  }
}

StateSolution PressureLoadModel::solve(std::span<const double> rho_tilde,
                                       const StateSolution* warm, bool structural) const {
  StateSolution s;
  s.rho_tilde.assign(rho_tilde.begin(), rho_tilde.end());

  auto start = std::chrono::steady_clock::now();
  auto pressure = solve_pressure(darcy_.assemble(rho_tilde), bc_.pressure, flow_solver_,
                                 warm ? std::span<const double>(warm->p) : std::span<const double>{},
                                 &grid());
  s.p = std::move(pressure.p);
  s.flow = std::move(pressure.system);
  s.pressure_stats = pressure.stats;
  s.force = nodal_loads(darcy_.transformation(), s.p);
  s.pressure_seconds = seconds_since(start);
  if (!structural) return s;

  start = std::chrono::steady_clock::now();
  s.stiffness =
      reduce_stiffness(elasticity_.assemble(rho_tilde, bc_.springs), bc_.supports, elastic_solver_,
                       &grid());
  const auto guess_u = warm ? std::span<const double>(warm->u) : std::span<const double>{};
  if (bc_.dummy_load.empty()) {
    auto state = solve_state(*s.stiffness, s.force, bc_.supports, guess_u);
    s.u = std::move(state.u);
    s.state_stats = state.stats;
  } else {
    auto [state, dummy] =
        solve_state_and_dummy(*s.stiffness, s.force, bc_.dummy_load, bc_.supports, guess_u,
                              warm ? std::span<const double>(warm->v) : std::span<const double>{});
    s.u = std::move(state.u);
    s.state_stats = state.stats;
    s.v = std::move(dummy.u);
    s.dummy_stats = dummy.stats;
  }
  s.state_seconds = seconds_since(start);
  return s;
}

double objective_value(const Objective& objective, const StateSolution& state) {
  objective.validate();
  require_structural(state);
  const double se = state.strain_energy();
  if (objective.kind == ObjectiveKind::Compliance) return 2.0 * se;
  if (state.v.empty()) throw std::invalid_argument("objective_value: no dummy load defined");
  if (!(se > 0.0)) throw std::domain_error("objective_value: strain energy is zero");
  return -objective.mu * state.mutual_strain_energy() / se;
}

std::vector<double> compliance_sensitivity(const PressureLoadModel& model,
                                           const StateSolution& state,
                                           bool include_load_terms) {
  require_structural(state);
  auto g = model.elasticity().contract_derivative(state.rho_tilde, state.u, state.u);
  for (auto& x : g) x = -x;
  if (include_load_terms) {
    std::vector<double> w(state.u.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 2.0 * state.u[i];
    const auto load = load_term(model, state, w);
    for (std::size_t e = 0; e < g.size(); ++e) g[e] += load[e];
  }
  return g;
}

std::vector<double> multicriteria_sensitivity(const PressureLoadModel& model,
                                              const StateSolution& state, double mu,
                                              bool include_load_terms) {
  require_structural(state);
  if (state.v.empty()) throw std::invalid_argument("multicriteria_sensitivity: no dummy load");
  const double se = state.strain_energy();
  if (!(se > 0.0)) throw std::domain_error("multicriteria_sensitivity: strain energy is zero");
  const double mse = state.mutual_strain_energy();
  const double a = mse / (se * se);
  const double b = 1.0 / se;

  const auto uku = model.elasticity().contract_derivative(state.rho_tilde, state.u, state.u);
  const auto ukv = model.elasticity().contract_derivative(state.rho_tilde, state.u, state.v);
  std::vector<double> g(uku.size());
  for (std::size_t e = 0; e < g.size(); ++e) g[e] = mu * (b * ukv[e] - 0.5 * a * uku[e]);
  if (include_load_terms) {
    std::vector<double> w(state.u.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mu * (a * state.u[i] - b * state.v[i]);
    const auto load = load_term(model, state, w);
    for (std::size_t e = 0; e < g.size(); ++e) g[e] += load[e];
  }
  return g;
}

std::vector<double> objective_sensitivity(const Objective& objective,
                                          const PressureLoadModel& model,
                                          const StateSolution& state,
                                          bool include_load_terms) {
  objective.validate();
  if (objective.kind == ObjectiveKind::Compliance) {
    return compliance_sensitivity(model, state, include_load_terms);
  }
  return multicriteria_sensitivity(model, state, objective.mu, include_load_terms);
}

VolumeConstraint volume_constraint(std::span<const double> rho_tilde,
                                   std::span<const ElementRole> roles, double v_star) {
  if (!(v_star > 0.0 && v_star <= 1.0)) {
    throw std::invalid_argument("volume_constraint: V* must lie in (0, 1]");
  }
  if (rho_tilde.size() != roles.size() || rho_tilde.empty()) {
    throw std::invalid_argument("volume_constraint: length mismatch");
  }
  const double n = static_cast<double>(rho_tilde.size());
  double sum = 0.0;
  for (double r : rho_tilde) sum += r;
  VolumeConstraint out;
  out.volume_fraction = sum / n;
  out.value = out.volume_fraction / v_star - 1.0;
  out.gradient.assign(rho_tilde.size(), 0.0);
  for (std::size_t e = 0; e < roles.size(); ++e) {
    if (roles[e] == ElementRole::Designable) out.gradient[e] = 1.0 / (v_star * n);
  }
  return out;
}

SensitivityBundle full_gradient(const Objective& objective, const PressureLoadModel& model,
                                const FilterOperator& filter, const DesignField& design,
                                const StateSolution& state, double v_star,
                                bool include_load_terms) {
  SensitivityBundle out;
  out.f0 = objective_value(objective, state);
  const auto df = objective_sensitivity(objective, model, state, include_load_terms);
  const auto vol = volume_constraint(state.rho_tilde, design.roles(), v_star);
  out.g1 = vol.value;
  out.volume_fraction = vol.volume_fraction;
  const auto df_rho = filter_chain_rule(filter, df, design.roles());
  const auto dg_rho = filter_chain_rule(filter, vol.gradient, design.roles());
  const auto& ids = design.designable_elements();
  out.df0.reserve(ids.size());
  out.dg1.reserve(ids.size());
  for (int e : ids) {
    out.df0.push_back(df_rho[static_cast<std::size_t>(e)]);
    out.dg1.push_back(dg_rho[static_cast<std::size_t>(e)]);
  }
  for (double x : out.df0) {
    if (!std::isfinite(x)) throw std::runtime_error("full_gradient: non-finite sensitivity");
  }
  return out;
}

}  // namespace darcyto
