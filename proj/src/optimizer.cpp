#include "darcyto/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace darcyto {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

[[noreturn]] void fail(const char* phase, int iteration, const std::exception& e) {
  throw std::runtime_error(std::string(phase) + " failed at iteration " +
                           std::to_string(iteration) + ": " + e.what());
}

}  // namespace

ProblemInstance::ProblemInstance(ProblemSpec spec, const OptimizerSettings& settings)
    : spec_((validate(spec), std::move(spec))),
      grid_(make_grid(spec_)),
      roles_(element_roles(spec_, grid_)),
      filter_(build_filter(grid_, filter_radius(spec_, grid_))),
      model_(grid_, resolved_flow(spec_, grid_), spec_.material, boundary_conditions(spec_, grid_),
             settings.flow, settings.elastic) {}

DesignField ProblemInstance::initial_design() const {
  return DesignField(roles_, spec_.volume_fraction);
}

Vec3 force_in_box(const StructuredGrid& grid, std::span<const double> force, const Box& box) {
  const int dim = grid.dim();
  Vec3 sum{};
  for (int n : nodes_in_box(box, grid)) {
    for (int c = 0; c < dim; ++c) {
      sum[static_cast<std::size_t>(c)] += force[static_cast<std::size_t>(dim * n + c)];
    }
  }
  return sum;
}

AnalysisReport analyze(const ProblemInstance& instance, const DesignField* design) {
  AnalysisReport r;
  r.design = design ? *design : instance.initial_design();
  const auto& spec = instance.spec();
  const auto rho_tilde = apply_filter(instance.filter(), r.design);
  r.state = instance.model().solve(rho_tilde, nullptr, spec.structural);
  if (spec.structural) {
    r.f0 = objective_value(spec.objective, r.state);
    r.g1 = volume_constraint(rho_tilde, r.design.roles(), spec.volume_fraction).value;
  }
  const auto& grid = instance.grid();
  const int dim = grid.dim();
  for (std::size_t i = 0; i < r.state.force.size(); ++i) {
    r.total_force[i % static_cast<std::size_t>(dim)] += r.state.force[i];
  }
  for (const auto& box : spec.solid_regions) {
    r.solid_region_forces.push_back(force_in_box(grid, r.state.force, box));
  }
  return r;
}

RunSummary optimize(const ProblemInstance& instance, const OptimizerSettings& settings,
                    const IterationCallback& on_iteration) {
  const auto& spec = instance.spec();
  if (!spec.structural) {
    throw std::invalid_argument("optimize: problem '" + spec.name + "' is analysis-only");
  }
  RunSummary summary;
  summary.design = instance.initial_design();
  auto& design = summary.design;
  const int n = static_cast<int>(design.designable_elements().size());
  MmaState mma(n, settings.mma);
  StateSolution previous;
  double change = 0.0;
  double update_seconds = 0.0;

  for (int it = 0;; ++it) {
    ConvergenceRecord rec;
    rec.iteration = it;
    rec.change = change;

    auto start = Clock::now();
    const auto rho_tilde = apply_filter(instance.filter(), design);
    rec.t_filter = seconds_since(start);

    StateSolution state;
    try {
      state = instance.model().solve(rho_tilde, it > 0 ? &previous : nullptr, true);
    } catch (const std::exception& e) {
      fail("state solve", it, e);
    }
    rec.t_pressure = state.pressure_seconds;
    rec.t_state = state.state_seconds;
    rec.pressure_iterations = state.pressure_stats.iterations;
    rec.state_iterations = state.state_stats.iterations;
    rec.dummy_iterations = state.dummy_stats.iterations;

    start = Clock::now();
    SensitivityBundle bundle;
    try {
      bundle = full_gradient(spec.objective, instance.model(), instance.filter(), design, state,
                             spec.volume_fraction);
    } catch (const std::exception& e) {
      fail("sensitivity analysis", it, e);
    }
    rec.t_sensitivity = seconds_since(start);
    rec.f0 = bundle.f0;
    rec.g1 = bundle.g1;
    rec.volume_fraction = bundle.volume_fraction;
    if (it == 0) summary.first_f0 = bundle.f0;

    rec.t_update = update_seconds;
    summary.history.push_back(rec);
    if (on_iteration) on_iteration(rec, design, state);

    const bool budget_spent = it >= spec.max_iterations;
    const bool settled =
        it > 0 && settings.change_tolerance > 0.0 && change < settings.change_tolerance;
    if (budget_spent || settled || n == 0) {
      summary.iterations = it;
      summary.f0 = bundle.f0;
      summary.g1 = bundle.g1;
      summary.volume_fraction = bundle.volume_fraction;
      summary.stopped_by_change = settled && !budget_spent;
      summary.state = std::move(state);
      return summary;
    }

    start = Clock::now();
    const auto x = design.designable_values();
    MmaResult step;
    try {
      step = mma_update(x, bundle.f0, bundle.df0, bundle.g1, bundle.dg1, mma, spec.move_limit);
    } catch (const std::exception& e) {
      fail("MMA update", it, e);
    }
    change = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) change = std::max(change, std::abs(step.x[j] - x[j]));
    design.set_designable_values(step.x);
    update_seconds = seconds_since(start);
    previous = std::move(state);
  }
}

}  // namespace darcyto
