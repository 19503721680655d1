#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "darcyto/config.hpp"
#include "darcyto/io.hpp"
#include "darcyto/optimizer.hpp"

namespace fs = std::filesystem;
using namespace darcyto;

namespace {

struct FlagValues {
  std::string config_file;
  std::optional<std::string> problem;
  std::optional<std::string> spec_file;
  std::vector<int> resolution;
  std::optional<int> max_iterations;
  std::optional<std::string> solver;
  std::optional<double> tol_flow;
  std::optional<double> tol_elastic;
  std::optional<double> change_tol;
  std::optional<std::string> output_dir;
  std::optional<int> export_every;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  Overrides overrides;
  bool drainage_on = false;
  bool drainage_off = false;
};

void add_run_flags(CLI::App* app, FlagValues& f) {
  app->add_option("-c,--config", f.config_file, "JSON config file; flags override its values");
  app->add_option("-p,--problem", f.problem, "Catalog problem name");
  app->add_option("--spec", f.spec_file, "JSON problem spec file (replaces --problem)");
  app->add_option("--resolution", f.resolution, "Elements per axis: NX NY [NZ]")->expected(2, 3);
  app->add_option("--max-iterations", f.max_iterations, "MMA iteration budget");
  app->add_option("--solver", f.solver, "Linear solver: pcg | mg | direct");
  app->add_option("--tol-flow", f.tol_flow, "Relative residual of pressure solves");
  app->add_option("--tol-elastic", f.tol_elastic, "Relative residual of displacement solves");
  app->add_option("--change-tol", f.change_tol, "Stop when max design change < value (0 disables)");
  app->add_option("-o,--output-dir", f.output_dir, "Directory for logs and field exports");
  app->add_option("--export-every", f.export_every, "Field export cadence (0: final only)");
  app->add_option("--threads", f.threads, "Worker threads (0: runtime default)");
  app->add_option("--seed", f.seed, "Reserved random seed");
  auto& o = f.overrides;
  app->add_option("--E1", o.e1, "Solid Young's modulus");
  app->add_option("--E0", o.e0, "Void Young's modulus");
  app->add_option("--nu", o.nu, "Poisson's ratio");
  app->add_option("--zeta", o.zeta, "SIMP penalty");
  app->add_option("--move", o.move_limit, "External move limit");
  app->add_option("--p_in", o.p_in, "Inlet pressure");
  app->add_option("--eta_k", o.eta_k, "Flow coefficient step location");
  app->add_option("--beta_k", o.beta_k, "Flow coefficient step slope");
  app->add_option("--eta_d,--eta_h", o.eta_d, "Drainage step location");
  app->add_option("--beta_d,--beta_h", o.beta_d, "Drainage step slope");
  app->add_option("--K_v", o.k_void, "Void flow coefficient");
  app->add_option("--epsilon", o.epsilon, "Flow contrast K_s / K_v");
  app->add_option("--r", o.remainder, "Pressure remainder at the penetration depth");
  app->add_option("--delta_s", o.delta_s, "Penetration depth [m]");
  app->add_option("--V_star", o.volume_fraction, "Permitted volume fraction");
  app->add_option("--mu", o.mu, "Multi-criteria objective scaling");
  app->add_flag("--drainage", f.drainage_on, "Enable the drainage term");
  app->add_flag("--no-drainage", f.drainage_off, "Disable the drainage term");
}

template <class T>
void take(std::optional<T>& dst, const std::optional<T>& src) {
  if (src) dst = src;
}

RunConfig build_config(const FlagValues& f) {
  RunConfig c = f.config_file.empty() ? RunConfig{} : load_config(f.config_file);
  if (f.problem) {
    c.problem = *f.problem;
    c.spec_file.clear();
  }
  if (f.spec_file) c.spec_file = *f.spec_file;
  if (!f.resolution.empty()) {
    c.resolution = Index3{f.resolution[0], f.resolution[1], f.resolution.size() == 3 ? f.resolution[2] : 0};
  }
  take(c.max_iterations, f.max_iterations);
  if (f.solver) {
    if (*f.solver == "pcg") {
      c.solver = SolverKind::Pcg;
    } else if (*f.solver == "mg") {
      c.solver = SolverKind::Multigrid;
    } else if (*f.solver == "direct") {
      c.solver = SolverKind::Direct;
    } else {
      throw std::invalid_argument("unknown solver '" + *f.solver + "'");
    }
  }
  if (f.tol_flow) c.flow_tolerance = *f.tol_flow;
  if (f.tol_elastic) c.elastic_tolerance = *f.tol_elastic;
  if (f.change_tol) c.change_tolerance = *f.change_tol;
  if (f.output_dir) c.output_dir = *f.output_dir;
  if (f.export_every) c.export_every = *f.export_every;
  if (f.threads) c.threads = *f.threads;
  if (f.seed) c.seed = *f.seed;
  auto& o = c.overrides;
  const auto& n = f.overrides;
  take(o.e1, n.e1);
  take(o.e0, n.e0);
  take(o.nu, n.nu);
  take(o.zeta, n.zeta);
  take(o.move_limit, n.move_limit);
  take(o.p_in, n.p_in);
  take(o.eta_k, n.eta_k);
  take(o.beta_k, n.beta_k);
  take(o.eta_d, n.eta_d);
  take(o.beta_d, n.beta_d);
  take(o.k_void, n.k_void);
  take(o.epsilon, n.epsilon);
  take(o.remainder, n.remainder);
  take(o.delta_s, n.delta_s);
  take(o.volume_fraction, n.volume_fraction);
  take(o.mu, n.mu);
  if (f.drainage_on && f.drainage_off) throw std::invalid_argument("--drainage and --no-drainage conflict");
  if (f.drainage_on) o.drainage = true;
  if (f.drainage_off) o.drainage = false;
  c.validate();
  return c;
}

void configure_threads(const RunConfig& c) {
  int threads = c.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("DARCYTO_THREADS")) threads = std::atoi(env);
  }
#if defined(_OPENMP)
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

OptimizerSettings settings_for(const RunConfig& c) {
  OptimizerSettings s;
  s.flow.kind = c.solver;
  s.flow.tolerance = c.flow_tolerance;
  s.elastic.kind = c.solver;
  s.elastic.tolerance = c.elastic_tolerance;
  s.change_tolerance = c.change_tolerance;
  return s;
}

void export_state(const ProblemInstance& inst, const DesignField& design, const StateSolution& state,
                  const fs::path& path) {
  export_fields(inst.grid(), FieldSet{design.values(), state.rho_tilde, state.p, state.u}, path);
}

void print_vec(const char* label, const Vec3& v) {
  std::printf("%s %.9g %.9g %.9g\n", label, v[0], v[1], v[2]);
}

int cmd_analyze(const RunConfig& c) {
  const auto spec = resolve_problem(c);
  const auto settings = settings_for(c);
  const ProblemInstance inst(spec, settings);
  const auto report = analyze(inst);
  const fs::path dir = c.output_dir;
  export_state(inst, report.design, report.state, dir / "analysis.vtk");
  const auto& g = inst.grid();
  std::printf("problem %s grid %dx%dx%d\n", spec.name.c_str(), g.nelx(), g.nely(), g.nelz());
  std::printf("pressure solve: %d iterations, relative residual %.3e\n",
              report.state.pressure_stats.iterations, report.state.pressure_stats.relative_residual);
  print_vec("total nodal force:", report.total_force);
  for (std::size_t i = 0; i < report.solid_region_forces.size(); ++i) {
    std::printf("solid region %zu force: %.9g %.9g %.9g\n", i, report.solid_region_forces[i][0],
                report.solid_region_forces[i][1], report.solid_region_forces[i][2]);
  }
  if (report.f0) std::printf("f0 %.12g\ng1 %.12g\n", *report.f0, *report.g1);
  std::printf("fields written to %s\n", (dir / "analysis.vtk").string().c_str());
  return 0;
}

int cmd_run(const RunConfig& c) {
  const auto spec = resolve_problem(c);
  if (!spec.structural) return cmd_analyze(c);
  const auto settings = settings_for(c);
  const ProblemInstance inst(spec, settings);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << nlohmann::json{{"config", to_json(c)}, {"spec", to_json(spec)}}.dump(2) << '\n';
  }
  ConvergenceLog log(dir / "convergence.csv");
  TimingLog timing(dir / "timing.csv");
  const auto summary = optimize(inst, settings, [&](const ConvergenceRecord& r, const DesignField& d,
                                                    const StateSolution& s) {
    log.append(r);
    timing.append(r);
    std::printf("it %4d  f0 %.6e  g1 %+.3e  change %.3e\n", r.iteration, r.f0, r.g1, r.change);
    std::fflush(stdout);
    if (c.export_every > 0 && r.iteration % c.export_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "fields_%04d.vtk", r.iteration);
      export_state(inst, d, s, dir / name);
    }
  });
  export_state(inst, summary.design, summary.state, dir / "final.vtk");
  nlohmann::json result{{"iterations", summary.iterations},
                        {"f0", summary.f0},
                        {"g1", summary.g1},
                        {"first_f0", summary.first_f0},
                        {"volume_fraction", summary.volume_fraction},
                        {"stopped_by_change", summary.stopped_by_change}};
  if (!summary.state.v.empty()) result["mse"] = summary.state.mutual_strain_energy();
  std::ofstream(dir / "summary.json") << result.dump(2) << '\n';
  std::printf("final f0 %.12g\nfinal g1 %.12g\niterations %d\n", summary.f0, summary.g1,
              summary.iterations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology optimization under design-dependent pressure loads"};
  app.require_subcommand(1);
  FlagValues run_flags;
  FlagValues analyze_flags;
  FlagValues export_flags;
  auto* run = app.add_subcommand("run", "Optimize a problem");
  add_run_flags(run, run_flags);
  auto* an = app.add_subcommand("analyze", "Evaluate the initial design without optimizing");
  add_run_flags(an, analyze_flags);
  auto* list = app.add_subcommand("list-problems", "List catalog problems");
  auto* exp = app.add_subcommand("export-config", "Print the resolved config and problem spec");
  add_run_flags(exp, export_flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (list->parsed()) {
      for (const auto& name : problem_names()) {
        std::printf("%-10s %s\n", name.c_str(), catalog(name).description.c_str());
      }
      return 0;
    }
    if (exp->parsed()) {
      const auto c = build_config(export_flags);
      std::cout << nlohmann::json{{"config", to_json(c)}, {"spec", to_json(resolve_problem(c))}}.dump(2)
                << '\n';
      return 0;
    }
    if (an->parsed()) {
      const auto c = build_config(analyze_flags);
      configure_threads(c);
      return cmd_analyze(c);
    }
    const auto c = build_config(run_flags);
    configure_threads(c);
    return cmd_run(c);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
