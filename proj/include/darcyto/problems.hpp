#pragma once

// Benchmark problem catalog. Regions are given in physical coordinates and
// snapped to element (or node) boundaries of the grid they are applied to,
// so every spec can be rescaled to any resolution.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "darcyto/adjoint.hpp"
#include "darcyto/darcy.hpp"
#include "darcyto/elasticity.hpp"
#include "darcyto/field_ops.hpp"
#include "darcyto/mesh.hpp"

namespace darcyto {

/// 1 bar in N/m^2.
inline constexpr double kBar = 1e5;

enum class Face { XMin, XMax, YMin, YMax, ZMin, ZMax };

/// Closed axis-aligned box [lo, hi] in physical coordinates. In 2D the z
/// extent is ignored.
struct Box {
  Vec3 lo{};
  Vec3 hi{};
  bool operator==(const Box&) const = default;
};

/// Prescribed pressure on the nodes of a face, optionally restricted to a box.
struct PressureFace {
  Face face = Face::XMin;
  double value = 0.0;
  std::optional<Box> region;
  bool operator==(const PressureFace&) const = default;
};

/// Zero displacement of the selected components at every node inside `region`.
struct Support {
  Box region;
  std::array<bool, 3> fixed{true, true, true};
  bool operator==(const Support&) const = default;
};

/// Spring to ground on one axis at every node inside `region`.
struct SpringSet {
  Box region;
  int axis = 0;
  double stiffness = 0.0;  ///< per node [N/m]
  bool operator==(const SpringSet&) const = default;
};

/// Output DOFs: a unit dummy load along `axis` with sign `direction`,
/// shared evenly by the nodes inside `region`.
struct OutputSpec {
  Box region;
  int axis = 0;
  double direction = 1.0;
  bool operator==(const OutputSpec&) const = default;
};

struct ProblemSpec {
  std::string name;
  std::string description;
  /// Elements per axis; resolution[2] == 0 selects a 2D grid.
  Index3 resolution{};
  /// Physical size; size[2] is the out-of-plane thickness in 2D.
  Vec3 size{};
  /// Applied in order; a later entry wins on shared nodes.
  std::vector<PressureFace> pressure;
  std::vector<Support> supports;
  std::vector<Face> symmetry_planes;
  std::vector<Box> solid_regions;
  std::vector<Box> void_regions;
  std::vector<SpringSet> springs;
  std::optional<OutputSpec> output;
  Objective objective;
  double volume_fraction = 0.25;
  /// Filter radius = filter_factor * smallest element edge.
  double filter_factor = 1.7320508075688772;
  /// Penetration depth = penetration_factor * smallest element edge, used
  /// when flow.delta_s is zero.
  double penetration_factor = 2.0;
  FlowParams flow;
  MaterialParams material;
  double move_limit = 0.1;
  int max_iterations = 100;
  /// false: pressure-only analysis, no structural solve.
  bool structural = true;

  bool operator==(const ProblemSpec&) const = default;
};

/// Throws std::invalid_argument when the spec is inconsistent.
void validate(const ProblemSpec& spec);

std::vector<std::string> problem_names();
/// Throws std::invalid_argument for an unknown name.
ProblemSpec catalog(std::string_view name);
/// External-pressure problem as a half model (symmetry at x = Lx) or full model.
ProblemSpec make_extpress(bool half_model);
/// Same physical problem on a different grid.
ProblemSpec rescale(const ProblemSpec& spec, Index3 resolution);

StructuredGrid make_grid(const ProblemSpec& spec);
double filter_radius(const ProblemSpec& spec, const StructuredGrid& grid);
/// Flow parameters with the penetration depth resolved for `grid`.
FlowParams resolved_flow(const ProblemSpec& spec, const StructuredGrid& grid);

/// Element roles from the solid and void regions. Throws on overlap.
std::vector<ElementRole> element_roles(const ProblemSpec& spec, const StructuredGrid& grid);

/// Element / node index ranges [first, last) covered by a box on each axis.
std::array<std::array<int, 2>, 3> element_range(const Box& box, const StructuredGrid& grid);
std::array<std::array<int, 2>, 3> node_range(const Box& box, const StructuredGrid& grid);
std::vector<int> nodes_in_box(const Box& box, const StructuredGrid& grid);
std::vector<int> nodes_on_face(Face face, const StructuredGrid& grid);

/// Roller conditions (zero normal displacement) of the symmetry planes.
std::vector<int> apply_symmetry(const ProblemSpec& spec, const StructuredGrid& grid);

/// Pressure, support, spring and dummy-load data of the spec on `grid`.
BoundaryConditions boundary_conditions(const ProblemSpec& spec, const StructuredGrid& grid);

std::string_view to_string(Face face);
Face face_from_string(std::string_view text);

}  // namespace darcyto
