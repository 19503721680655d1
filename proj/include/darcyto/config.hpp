#pragma once

// Run configuration and the JSON form of problem specs.

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "darcyto/linsolve.hpp"
#include "darcyto/problems.hpp"

namespace darcyto {

/// Parameter overrides, keyed in config files by their table symbols.
struct Overrides {
  std::optional<double> e1;               ///< "E1"
  std::optional<double> e0;               ///< "E0"
  std::optional<double> nu;               ///< "nu"
  std::optional<double> zeta;             ///< "zeta"
  std::optional<double> move_limit;       ///< "move"
  std::optional<double> p_in;             ///< "p_in"
  std::optional<double> eta_k;            ///< "eta_k"
  std::optional<double> beta_k;           ///< "beta_k"
  std::optional<double> eta_d;            ///< "eta_d" (alias "eta_h")
  std::optional<double> beta_d;           ///< "beta_d" (alias "beta_h")
  std::optional<double> k_void;           ///< "K_v"
  std::optional<double> epsilon;          ///< "epsilon"
  std::optional<double> remainder;        ///< "r"
  std::optional<double> delta_s;          ///< "delta_s"
  std::optional<double> volume_fraction;  ///< "V_star"
  std::optional<double> mu;               ///< "mu"
  std::optional<bool> drainage;           ///< "drainage"

  bool operator==(const Overrides&) const = default;
};

struct RunConfig {
  std::string problem = "arc2d";
  /// JSON file holding a full problem spec; replaces `problem` when set.
  std::string spec_file;
  std::optional<Index3> resolution;
  std::optional<int> max_iterations;
  SolverKind solver = SolverKind::Pcg;
  double flow_tolerance = 1e-14;
  double elastic_tolerance = 1e-8;
  /// Early exit when the max-norm design change drops below this; 0 disables.
  double change_tolerance = 1e-3;
  std::string output_dir = "darcyto_out";
  /// Field export every n iterations; 0 exports the final state only.
  int export_every = 0;
  int threads = 0;  ///< 0 keeps the runtime default
  std::uint64_t seed = 0;
  Overrides overrides;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const ProblemSpec& spec);
/// Strict reader: unknown keys and malformed values throw std::invalid_argument.
ProblemSpec spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
/// Reads a config file; throws std::runtime_error when it cannot be opened.
RunConfig load_config(const std::string& path);
ProblemSpec load_spec(const std::string& path);

/// Resolves the problem (catalog or spec file), resolution and overrides.
ProblemSpec resolve_problem(const RunConfig& config);
ProblemSpec apply_overrides(ProblemSpec spec, const Overrides& overrides);

}  // namespace darcyto
