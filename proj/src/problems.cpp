#include "darcyto/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace darcyto {

namespace {

int axis_of(Face f) { return static_cast<int>(f) / 2; }
bool is_max(Face f) { return static_cast<int>(f) % 2 == 1; }

int snap(double x, double h, int n) {
  return std::clamp(static_cast<int>(std::lround(x / h)), 0, n);
}

Box whole(const Vec3& size) { return Box{{0.0, 0.0, 0.0}, size}; }

ProblemSpec structure_base() {
  ProblemSpec s;
  s.size = {0.2, 0.1, 0.1};
  s.objective = {ObjectiveKind::Compliance, 1.0};
  s.volume_fraction = 0.25;
  s.max_iterations = 100;
  return s;
}

ProblemSpec mechanism_base(std::string name, std::string description) {
  ProblemSpec s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.resolution = {120, 60, 60};
  const double lx = 0.2;
  const double ly = 0.1;
  const double lz = 0.1;
  s.size = {lx, ly, lz};
  s.symmetry_planes = {Face::YMin, Face::ZMin};
  // Zero pressure on the outer faces first, the inlet patch last.
  s.pressure = {{Face::XMax, 0.0, std::nullopt},
                {Face::YMax, 0.0, std::nullopt},
                {Face::ZMax, 0.0, std::nullopt},
                {Face::XMin, kBar, Box{{0.0, 0.0, 0.0}, {0.0, 14.0 * ly / 15.0, 14.0 * lz / 15.0}}}};
  const double rim = lx / 8.0;
  s.solid_regions = {Box{{0.0, 14.0 * ly / 15.0, 0.0}, {rim, ly, lz}},
                     Box{{0.0, 0.0, 14.0 * lz / 15.0}, {rim, 14.0 * ly / 15.0, lz}}};
  s.void_regions = {Box{{0.0, 0.0, 0.0}, {lx / 10.0, 14.0 * ly / 15.0, 14.0 * lz / 15.0}}};
  s.supports = {Support{Box{{0.0, 14.0 * ly / 15.0, 0.0}, {0.0, ly, lz}}, {true, true, true}},
                Support{Box{{0.0, 0.0, 14.0 * lz / 15.0}, {0.0, ly, lz}}, {true, true, true}}};
  s.objective = {ObjectiveKind::MultiCriteria, 100.0};
  s.volume_fraction = 0.1;
  s.flow.eta_k = 0.1;
  s.flow.eta_d = 0.2;
  s.max_iterations = 250;
  return s;
}

ProblemSpec make_test3d() {
  ProblemSpec s;
  s.name = "test3d";
  s.description = "Two solid blocks in a void channel, pressure-only analysis";
  s.resolution = {48, 24, 24};
  const double lx = 0.02;
  const double ly = 0.01;
  const double lz = 0.01;
  s.size = {lx, ly, lz};
  s.pressure = {{Face::XMin, kBar, std::nullopt}, {Face::XMax, 0.0, std::nullopt}};
  const double b = lx / 6.0;
  s.solid_regions = {Box{{b, 0.0, 0.0}, {2.0 * b, ly, lz}}, Box{{3.0 * b, 0.0, 0.0}, {4.0 * b, ly, lz}}};
  s.void_regions = {Box{{0.0, 0.0, 0.0}, {b, ly, lz}}, Box{{2.0 * b, 0.0, 0.0}, {3.0 * b, ly, lz}},
                    Box{{4.0 * b, 0.0, 0.0}, {lx, ly, lz}}};
  s.objective = {ObjectiveKind::Compliance, 1.0};
  s.volume_fraction = 1.0 / 3.0;
  s.max_iterations = 0;
  s.structural = false;
  return s;
}

ProblemSpec make_arc2d() {
  ProblemSpec s;
  s.name = "arc2d";
  s.description = "2D internally pressurized arc, compliance";
  s.resolution = {200, 100, 0};
  const double lx = 0.2;
  const double ly = 0.1;
  s.size = {lx, ly, 1.0};
  s.pressure = {{Face::XMin, 0.0, std::nullopt},
                {Face::XMax, 0.0, std::nullopt},
                {Face::YMax, 0.0, std::nullopt},
                {Face::YMin, kBar, std::nullopt}};
  const double foot = lx / 20.0;
  s.supports = {Support{Box{{0.0, 0.0, 0.0}, {foot, 0.0, 0.0}}, {true, true, true}},
                Support{Box{{lx - foot, 0.0, 0.0}, {lx, 0.0, 0.0}}, {true, true, true}}};
  s.objective = {ObjectiveKind::Compliance, 1.0};
  s.volume_fraction = 0.2;
  s.filter_factor = 2.0;
  s.max_iterations = 100;
  return s;
}

ProblemSpec make_lid() {
  ProblemSpec s = structure_base();
  s.name = "lid";
  s.description = "Lid under top pressure, four top edges fixed, compliance";
  s.resolution = {120, 60, 60};
  const auto [lx, ly, lz] = s.size;
  s.pressure = {{Face::ZMin, 0.0, std::nullopt}, {Face::ZMax, kBar, std::nullopt}};
  s.supports = {Support{Box{{0.0, 0.0, lz}, {lx, 0.0, lz}}, {true, true, true}},
                Support{Box{{0.0, ly, lz}, {lx, ly, lz}}, {true, true, true}},
                Support{Box{{0.0, 0.0, lz}, {0.0, ly, lz}}, {true, true, true}},
                Support{Box{{lx, 0.0, lz}, {lx, ly, lz}}, {true, true, true}}};
  return s;
}

}  // namespace

ProblemSpec make_extpress(bool half_model) {
  ProblemSpec s = structure_base();
  s.name = "extpress";
  const double ly = 0.1;
  const double lz = 0.1;
  const double lx = half_model ? 0.1 : 0.2;
  s.size = {lx, ly, lz};
  s.description = half_model ? "Externally pressurized structure, half model (symmetry at x = Lx)"
                             : "Externally pressurized structure, full model";
  s.resolution = half_model ? Index3{80, 80, 80} : Index3{160, 80, 80};
  s.pressure = {{Face::ZMin, 0.0, std::nullopt}, {Face::ZMax, kBar, std::nullopt}};
  s.supports = {Support{Box{{0.0, 0.0, 0.0}, {lx, 0.0, 0.0}}, {true, true, true}},
                Support{Box{{0.0, ly, 0.0}, {lx, ly, 0.0}}, {true, true, true}},
                Support{Box{{0.0, 0.0, 0.0}, {0.0, ly, 0.0}}, {true, true, true}}};
  if (half_model) {
    s.symmetry_planes = {Face::XMax};
  } else {
    s.supports.push_back(Support{Box{{lx, 0.0, 0.0}, {lx, ly, 0.0}}, {true, true, true}});
  }
  return s;
}

std::vector<std::string> problem_names() {
  return {"test3d", "arc2d", "lid", "extpress", "inverter", "gripper", "magnifier"};
}

ProblemSpec catalog(std::string_view name) {
  ProblemSpec s;
  if (name == "test3d") {
    s = make_test3d();
  } else if (name == "arc2d") {
    s = make_arc2d();
  } else if (name == "lid") {
    s = make_lid();
  } else if (name == "extpress") {
    s = make_extpress(true);
  } else if (name == "inverter") {
    s = mechanism_base("inverter", "Quarter pressure-actuated inverter, output -x");
    const double lx = s.size[0];
    const Box out{{lx, 0.0, 0.0}, {lx, 0.0, 0.0}};
    s.output = OutputSpec{out, 0, -1.0};
    s.springs = {SpringSet{out, 0, 500.0}};
  } else if (name == "gripper") {
    s = mechanism_base("gripper", "Quarter pressure-actuated gripper, jaws closing in -z");
    const auto [lx, ly, lz] = s.size;
    const Box jaw{{7.0 * lx / 8.0, 0.0, lz / 10.0}, {lx, ly / 2.0, lz / 10.0 + lz / 20.0}};
    s.solid_regions.push_back(jaw);
    s.void_regions.push_back(Box{{7.0 * lx / 8.0, 0.0, 0.0}, {lx, ly, lz / 10.0}});
    s.springs = {SpringSet{jaw, 2, 50.0}};
    s.output = OutputSpec{Box{{7.0 * lx / 8.0, 0.0, lz / 10.0}, {lx, ly / 2.0, lz / 10.0}}, 2, -1.0};
  } else if (name == "magnifier") {
    s = mechanism_base("magnifier", "Quarter pressure-actuated magnifier, output +y");
    const double lx = s.size[0];
    const double ly = s.size[1];
    const Box out{{lx, ly, 0.0}, {lx, ly, 0.0}};
    s.output = OutputSpec{out, 1, 1.0};
    s.springs = {SpringSet{out, 1, 500.0}};
  } else {
    throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
  }
  validate(s);
  return s;
}

ProblemSpec rescale(const ProblemSpec& spec, Index3 resolution) {
  ProblemSpec s = spec;
  s.resolution = resolution;
  validate(s);
  return s;
}

void validate(const ProblemSpec& s) {
  const bool two_d = s.resolution[2] == 0;
  if (s.resolution[0] < 1 || s.resolution[1] < 1 || s.resolution[2] < 0) {
    throw std::invalid_argument("ProblemSpec: resolution must be positive");
  }
  if (!(s.size[0] > 0.0 && s.size[1] > 0.0 && s.size[2] > 0.0)) {
    throw std::invalid_argument("ProblemSpec: size must be positive");
  }
  if (!(s.volume_fraction > 0.0 && s.volume_fraction <= 1.0)) {
    throw std::invalid_argument("ProblemSpec: volume fraction must lie in (0, 1]");
  }
  if (!(s.filter_factor > 0.0 && s.penetration_factor > 0.0)) {
    throw std::invalid_argument("ProblemSpec: filter and penetration factors must be positive");
  }
  if (!(s.move_limit > 0.0 && s.move_limit <= 1.0)) {
    throw std::invalid_argument("ProblemSpec: move limit must lie in (0, 1]");
  }
  if (s.max_iterations < 0) throw std::invalid_argument("ProblemSpec: negative iteration count");
  if (s.pressure.empty()) throw std::invalid_argument("ProblemSpec: no prescribed pressure");
  s.objective.validate();
  s.material.validate();
  FlowParams flow = s.flow;
  if (flow.delta_s == 0.0) flow.delta_s = 1.0;
  flow.validate();
  const int max_axis = two_d ? 1 : 2;
  auto check_face = [&](Face f) {
    if (axis_of(f) > max_axis) throw std::invalid_argument("ProblemSpec: z face on a 2D grid");
  };
  for (const auto& pf : s.pressure) {
    check_face(pf.face);
    if (std::find(s.symmetry_planes.begin(), s.symmetry_planes.end(), pf.face) !=
        s.symmetry_planes.end()) {
      throw std::invalid_argument("ProblemSpec: pressure face coincides with a symmetry plane");
    }
  }
  for (Face f : s.symmetry_planes) check_face(f);
  for (const auto& sp : s.springs) {
    if (sp.axis < 0 || sp.axis > max_axis || sp.stiffness < 0.0) {
      throw std::invalid_argument("ProblemSpec: invalid spring set");
    }
  }
  if (s.output) {
    if (s.output->axis < 0 || s.output->axis > max_axis ||
        (s.output->direction != 1.0 && s.output->direction != -1.0)) {
      throw std::invalid_argument("ProblemSpec: output needs a valid axis and direction +-1");
    }
  }
  if (s.objective.kind == ObjectiveKind::MultiCriteria && !s.output) {
    throw std::invalid_argument("ProblemSpec: multi-criteria objective needs an output");
  }
  (void)element_roles(s, make_grid(s));
}

StructuredGrid make_grid(const ProblemSpec& spec) {
  if (spec.resolution[2] == 0) {
    return StructuredGrid::make_2d(spec.resolution[0], spec.resolution[1], spec.size[0],
                                   spec.size[1], spec.size[2]);
  }
  return StructuredGrid::make_3d(spec.resolution[0], spec.resolution[1], spec.resolution[2],
                                 spec.size[0], spec.size[1], spec.size[2]);
}

double filter_radius(const ProblemSpec& spec, const StructuredGrid& grid) {
  return spec.filter_factor * grid.min_element_edge();
}

FlowParams resolved_flow(const ProblemSpec& spec, const StructuredGrid& grid) {
  FlowParams f = spec.flow;
  if (f.delta_s == 0.0) f.delta_s = spec.penetration_factor * grid.min_element_edge();
  f.validate();
  return f;
}

std::array<std::array<int, 2>, 3> element_range(const Box& box, const StructuredGrid& grid) {
  const auto h = grid.element_size();
  std::array<std::array<int, 2>, 3> r{};
  for (int d = 0; d < 3; ++d) {
    if (d == 2 && grid.dim() == 2) {
      r[d] = {0, 1};
      continue;
    }
    const int n = grid.elements_per_axis()[static_cast<std::size_t>(d)];
    r[d] = {snap(box.lo[d], h[d], n), snap(box.hi[d], h[d], n)};
  }
  return r;
}

std::array<std::array<int, 2>, 3> node_range(const Box& box, const StructuredGrid& grid) {
  const auto h = grid.element_size();
  std::array<std::array<int, 2>, 3> r{};
  for (int d = 0; d < 3; ++d) {
    if (d == 2 && grid.dim() == 2) {
      r[d] = {0, 1};
      continue;
    }
    const int n = grid.elements_per_axis()[static_cast<std::size_t>(d)];
    r[d] = {snap(box.lo[d], h[d], n), snap(box.hi[d], h[d], n) + 1};
  }
  return r;
}

std::vector<int> nodes_in_box(const Box& box, const StructuredGrid& grid) {
  const auto r = node_range(box, grid);
  std::vector<int> out;
  for (int k = r[2][0]; k < r[2][1]; ++k) {
    for (int j = r[1][0]; j < r[1][1]; ++j) {
      for (int i = r[0][0]; i < r[0][1]; ++i) out.push_back(grid.node_index(i, j, k));
    }
  }
  return out;
}

std::vector<int> nodes_on_face(Face face, const StructuredGrid& grid) {
  const int axis = axis_of(face);
  if (axis >= grid.dim()) throw std::invalid_argument("nodes_on_face: z face on a 2D grid");
  Box b = whole(grid.lengths());
  if (grid.dim() == 2) b.hi[2] = 0.0;
  const double at = is_max(face) ? grid.lengths()[static_cast<std::size_t>(axis)] : 0.0;
  b.lo[axis] = at;
  b.hi[axis] = at;
  return nodes_in_box(b, grid);
}

std::vector<ElementRole> element_roles(const ProblemSpec& spec, const StructuredGrid& grid) {
  std::vector<ElementRole> roles(static_cast<std::size_t>(grid.num_elements()),
                                 ElementRole::Designable);
  auto mark = [&](const Box& box, ElementRole role) {
    const auto r = element_range(box, grid);
    for (int k = r[2][0]; k < r[2][1]; ++k) {
      for (int j = r[1][0]; j < r[1][1]; ++j) {
        for (int i = r[0][0]; i < r[0][1]; ++i) {
          auto& slot = roles[static_cast<std::size_t>(grid.element_index(i, j, k))];
          if (slot != ElementRole::Designable && slot != role) {
            throw std::invalid_argument("ProblemSpec '" + spec.name +
                                        "': solid and void regions overlap");
          }
          slot = role;
        }
      }
    }
  };
  for (const auto& b : spec.solid_regions) mark(b, ElementRole::Solid);
  for (const auto& b : spec.void_regions) mark(b, ElementRole::Void);
  return roles;
}

std::vector<int> apply_symmetry(const ProblemSpec& spec, const StructuredGrid& grid) {
  std::vector<int> dofs;
  const int dim = grid.dim();
  for (Face f : spec.symmetry_planes) {
    for (int n : nodes_on_face(f, grid)) dofs.push_back(dim * n + axis_of(f));
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

BoundaryConditions boundary_conditions(const ProblemSpec& spec, const StructuredGrid& grid) {
  const int dim = grid.dim();
  BoundaryConditions bc;
  bc.pressure = DofMap::pressure(grid);
  for (const auto& pf : spec.pressure) {
    const auto face_nodes = nodes_on_face(pf.face, grid);
    if (!pf.region) {
      for (int n : face_nodes) bc.pressure.fix(n, pf.value);
      continue;
    }
    const auto r = node_range(*pf.region, grid);
    for (int n : face_nodes) {
      const auto ijk = grid.node_ijk(n);
      bool inside = true;
      for (int d = 0; d < 3; ++d) {
        inside = inside && ijk[d] >= r[d][0] && ijk[d] < r[d][1];
      }
      if (inside) bc.pressure.fix(n, pf.value);
    }
  }

  bc.supports = DofMap::displacement(grid);
  for (const auto& s : spec.supports) {
    for (int n : nodes_in_box(s.region, grid)) {
      for (int c = 0; c < dim; ++c) {
        if (s.fixed[static_cast<std::size_t>(c)]) bc.supports.fix(dim * n + c, 0.0);
      }
    }
  }
  for (int dof : apply_symmetry(spec, grid)) bc.supports.fix(dof, 0.0);

  for (const auto& sp : spec.springs) {
    for (int n : nodes_in_box(sp.region, grid)) bc.springs.push_back({dim * n + sp.axis, sp.stiffness});
  }

  if (spec.output) {
    const auto nodes = nodes_in_box(spec.output->region, grid);
    if (nodes.empty()) throw std::invalid_argument("ProblemSpec: output region holds no node");
    bc.dummy_load.assign(static_cast<std::size_t>(grid.num_nodes() * dim), 0.0);
    const double share = spec.output->direction / static_cast<double>(nodes.size());
    for (int n : nodes) bc.dummy_load[static_cast<std::size_t>(dim * n + spec.output->axis)] += share;
  }
  return bc;
}

std::string_view to_string(Face face) {
  switch (face) {
    case Face::XMin: return "xmin";
    case Face::XMax: return "xmax";
    case Face::YMin: return "ymin";
    case Face::YMax: return "ymax";
    case Face::ZMin: return "zmin";
    case Face::ZMax: return "zmax";
  }
  return "xmin";
}

Face face_from_string(std::string_view text) {
  for (Face f : {Face::XMin, Face::XMax, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax}) {
    if (to_string(f) == text) return f;
  }
  throw std::invalid_argument("unknown face '" + std::string(text) + "'");
}

}  // namespace darcyto
