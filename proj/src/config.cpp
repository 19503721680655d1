#include "darcyto/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

namespace darcyto {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::string_view where,
                  std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
T get(const json& j, const char* key, std::string_view where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(where) + "." + key + ": " + e.what());
  }
}

template <class T>
void read_if(const json& j, const char* key, std::string_view where, T& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

template <class T>
void read_if(const json& j, const char* key, std::string_view where, std::optional<T>& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

json vec(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 read_vec(const json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(where) + ": need 3 numbers");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(where) + ": " + e.what());
  }
}

Index3 read_index(const json& j, std::string_view where) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3)) {
    throw std::invalid_argument(std::string(where) + ": need 2 or 3 integers");
  }
  try {
    return {j[0].get<int>(), j[1].get<int>(), j.size() == 3 ? j[2].get<int>() : 0};
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(where) + ": " + e.what());
  }
}

json box(const Box& b) { return json{{"lo", vec(b.lo)}, {"hi", vec(b.hi)}}; }

Box read_box(const json& j, std::string_view where) {
  require_keys(j, where, {"lo", "hi"});
  if (!j.contains("lo") || !j.contains("hi")) {
    throw std::invalid_argument(std::string(where) + ": box needs lo and hi");
  }
  return Box{read_vec(j["lo"], where), read_vec(j["hi"], where)};
}

json flow_json(const FlowParams& f) {
  return json{{"K_v", f.k_void},     {"epsilon", f.epsilon}, {"eta_k", f.eta_k},
              {"beta_k", f.beta_k},  {"eta_d", f.eta_d},     {"beta_d", f.beta_d},
              {"r", f.remainder},    {"delta_s", f.delta_s}, {"p_ext", f.p_ext},
              {"drainage", f.drainage}};
}

FlowParams read_flow(const json& j) {
  constexpr std::string_view w = "spec.flow";
  require_keys(j, w,
               {"K_v", "epsilon", "eta_k", "beta_k", "eta_d", "beta_d", "r", "delta_s", "p_ext",
                "drainage"});
  FlowParams f;
  read_if(j, "K_v", w, f.k_void);
  read_if(j, "epsilon", w, f.epsilon);
  read_if(j, "eta_k", w, f.eta_k);
  read_if(j, "beta_k", w, f.beta_k);
  read_if(j, "eta_d", w, f.eta_d);
  read_if(j, "beta_d", w, f.beta_d);
  read_if(j, "r", w, f.remainder);
  read_if(j, "delta_s", w, f.delta_s);
  read_if(j, "p_ext", w, f.p_ext);
  read_if(j, "drainage", w, f.drainage);
  return f;
}

std::string_view objective_name(ObjectiveKind k) {
  return k == ObjectiveKind::Compliance ? "compliance" : "multicriteria";
}

ObjectiveKind objective_kind(const std::string& s) {
  if (s == "compliance") return ObjectiveKind::Compliance;
  if (s == "multicriteria") return ObjectiveKind::MultiCriteria;
  throw std::invalid_argument("unknown objective kind '" + s + "'");
}

std::string_view solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::Pcg: return "pcg";
    case SolverKind::Multigrid: return "mg";
    case SolverKind::Direct: return "direct";
  }
  return "pcg";
}

SolverKind solver_kind(const std::string& s) {
  if (s == "pcg") return SolverKind::Pcg;
  if (s == "mg") return SolverKind::Multigrid;
  if (s == "direct") return SolverKind::Direct;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
}

}  // namespace

json to_json(const ProblemSpec& s) {
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["resolution"] = json::array({s.resolution[0], s.resolution[1], s.resolution[2]});
  j["size"] = vec(s.size);
  j["pressure"] = json::array();
  for (const auto& p : s.pressure) {
    json e{{"face", to_string(p.face)}, {"value", p.value}};
    if (p.region) e["region"] = box(*p.region);
    j["pressure"].push_back(e);
  }
  j["supports"] = json::array();
  for (const auto& sp : s.supports) {
    j["supports"].push_back(
        {{"region", box(sp.region)}, {"fixed", json::array({sp.fixed[0], sp.fixed[1], sp.fixed[2]})}});
  }
  j["symmetry_planes"] = json::array();
  for (Face f : s.symmetry_planes) j["symmetry_planes"].push_back(to_string(f));
  j["solid_regions"] = json::array();
  for (const auto& b : s.solid_regions) j["solid_regions"].push_back(box(b));
  j["void_regions"] = json::array();
  for (const auto& b : s.void_regions) j["void_regions"].push_back(box(b));
  j["springs"] = json::array();
  for (const auto& sp : s.springs) {
    j["springs"].push_back({{"region", box(sp.region)}, {"axis", sp.axis}, {"stiffness", sp.stiffness}});
  }
  if (s.output) {
    j["output"] = {{"region", box(s.output->region)},
                   {"axis", s.output->axis},
                   {"direction", s.output->direction}};
  } else {
    j["output"] = nullptr;
  }
  j["objective"] = {{"kind", objective_name(s.objective.kind)}, {"mu", s.objective.mu}};
  j["volume_fraction"] = s.volume_fraction;
  j["filter_factor"] = s.filter_factor;
  j["penetration_factor"] = s.penetration_factor;
  j["flow"] = flow_json(s.flow);
  j["material"] = {{"E1", s.material.e1}, {"E0", s.material.e0}, {"nu", s.material.nu},
                   {"zeta", s.material.zeta}};
  j["move_limit"] = s.move_limit;
  j["max_iterations"] = s.max_iterations;
  j["structural"] = s.structural;
  return j;
}

ProblemSpec spec_from_json(const json& j) {
  constexpr std::string_view w = "spec";
  require_keys(j, w,
               {"name", "description", "resolution", "size", "pressure", "supports",
                "symmetry_planes", "solid_regions", "void_regions", "springs", "output", "objective",
                "volume_fraction", "filter_factor", "penetration_factor", "flow", "material",
                "move_limit", "max_iterations", "structural"});
  ProblemSpec s;
  read_if(j, "name", w, s.name);
  read_if(j, "description", w, s.description);
  if (!j.contains("resolution") || !j.contains("size")) {
    throw std::invalid_argument("spec: resolution and size are required");
  }
  s.resolution = read_index(j["resolution"], "spec.resolution");
  s.size = read_vec(j["size"], "spec.size");
  for (const auto& e : j.value("pressure", json::array())) {
    require_keys(e, "spec.pressure", {"face", "value", "region"});
    PressureFace p;
    p.face = face_from_string(get<std::string>(e, "face", "spec.pressure"));
    p.value = get<double>(e, "value", "spec.pressure");
    if (e.contains("region")) p.region = read_box(e["region"], "spec.pressure.region");
    s.pressure.push_back(p);
  }
  for (const auto& e : j.value("supports", json::array())) {
    require_keys(e, "spec.supports", {"region", "fixed"});
    Support sp;
    sp.region = read_box(e.at("region"), "spec.supports.region");
    if (e.contains("fixed")) {
      const auto& f = e["fixed"];
      if (!f.is_array() || f.size() != 3) throw std::invalid_argument("spec.supports.fixed: need 3 booleans");
      for (std::size_t c = 0; c < 3; ++c) sp.fixed[c] = f[c].get<bool>();
    }
    s.supports.push_back(sp);
  }
  for (const auto& e : j.value("symmetry_planes", json::array())) {
    s.symmetry_planes.push_back(face_from_string(e.get<std::string>()));
  }
  for (const auto& e : j.value("solid_regions", json::array())) {
    s.solid_regions.push_back(read_box(e, "spec.solid_regions"));
  }
  for (const auto& e : j.value("void_regions", json::array())) {
    s.void_regions.push_back(read_box(e, "spec.void_regions"));
  }
  for (const auto& e : j.value("springs", json::array())) {
    require_keys(e, "spec.springs", {"region", "axis", "stiffness"});
    s.springs.push_back(SpringSet{read_box(e.at("region"), "spec.springs.region"),
                                  get<int>(e, "axis", "spec.springs"),
                                  get<double>(e, "stiffness", "spec.springs")});
  }
  if (j.contains("output") && !j["output"].is_null()) {
    const auto& e = j["output"];
    require_keys(e, "spec.output", {"region", "axis", "direction"});
    s.output = OutputSpec{read_box(e.at("region"), "spec.output.region"),
                          get<int>(e, "axis", "spec.output"), get<double>(e, "direction", "spec.output")};
  }
  if (j.contains("objective")) {
    const auto& e = j["objective"];
    require_keys(e, "spec.objective", {"kind", "mu"});
    s.objective.kind = objective_kind(get<std::string>(e, "kind", "spec.objective"));
    read_if(e, "mu", "spec.objective", s.objective.mu);
  }
  read_if(j, "volume_fraction", w, s.volume_fraction);
  read_if(j, "filter_factor", w, s.filter_factor);
  read_if(j, "penetration_factor", w, s.penetration_factor);
  if (j.contains("flow")) s.flow = read_flow(j["flow"]);
  if (j.contains("material")) {
    const auto& e = j["material"];
    require_keys(e, "spec.material", {"E1", "E0", "nu", "zeta"});
    read_if(e, "E1", "spec.material", s.material.e1);
    read_if(e, "E0", "spec.material", s.material.e0);
    read_if(e, "nu", "spec.material", s.material.nu);
    read_if(e, "zeta", "spec.material", s.material.zeta);
  }
  read_if(j, "move_limit", w, s.move_limit);
  read_if(j, "max_iterations", w, s.max_iterations);
  read_if(j, "structural", w, s.structural);
  validate(s);
  return s;
}

void RunConfig::validate() const {
  if (resolution && ((*resolution)[0] < 1 || (*resolution)[1] < 1 || (*resolution)[2] < 0)) {
    throw std::invalid_argument("config: resolution must be positive");
  }
  if (max_iterations && *max_iterations < 0) {
    throw std::invalid_argument("config: max_iterations must be >= 0");
  }
  if (!(flow_tolerance > 0.0 && flow_tolerance < 1.0 && elastic_tolerance > 0.0 &&
        elastic_tolerance < 1.0)) {
    throw std::invalid_argument("config: solver tolerances must lie in (0, 1)");
  }
  if (change_tolerance < 0.0) throw std::invalid_argument("config: change_tol must be >= 0");
  if (export_every < 0) throw std::invalid_argument("config: export_every must be >= 0");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir must not be empty");
}

json to_json(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  if (!c.spec_file.empty()) j["spec_file"] = c.spec_file;
  if (c.resolution) {
    j["resolution"] = json::array({(*c.resolution)[0], (*c.resolution)[1], (*c.resolution)[2]});
  }
  if (c.max_iterations) j["max_iterations"] = *c.max_iterations;
  j["solver"] = solver_name(c.solver);
  j["tol_flow"] = c.flow_tolerance;
  j["tol_elastic"] = c.elastic_tolerance;
  j["change_tol"] = c.change_tolerance;
  j["output_dir"] = c.output_dir;
  j["export_every"] = c.export_every;
  j["threads"] = c.threads;
  j["seed"] = c.seed;
  const auto& o = c.overrides;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("E1", o.e1);
  put("E0", o.e0);
  put("nu", o.nu);
  put("zeta", o.zeta);
  put("move", o.move_limit);
  put("p_in", o.p_in);
  put("eta_k", o.eta_k);
  put("beta_k", o.beta_k);
  put("eta_d", o.eta_d);
  put("beta_d", o.beta_d);
  put("K_v", o.k_void);
  put("epsilon", o.epsilon);
  put("r", o.remainder);
  put("delta_s", o.delta_s);
  put("V_star", o.volume_fraction);
  put("mu", o.mu);
  if (o.drainage) j["drainage"] = *o.drainage;
  return j;
}

RunConfig config_from_json(const json& j) {
  constexpr std::string_view w = "config";
  require_keys(j, w,
               {"problem", "spec_file", "resolution", "max_iterations", "solver", "tol_flow",
                "tol_elastic", "change_tol", "output_dir", "export_every", "threads", "seed", "E1",
                "E0", "nu", "zeta", "move", "p_in", "eta_k", "beta_k", "eta_d", "eta_h", "beta_d",
                "beta_h", "K_v", "epsilon", "r", "delta_s", "V_star", "mu", "drainage"});
  RunConfig c;
  read_if(j, "problem", w, c.problem);
  read_if(j, "spec_file", w, c.spec_file);
  if (j.contains("resolution")) c.resolution = read_index(j["resolution"], "config.resolution");
  read_if(j, "max_iterations", w, c.max_iterations);
  if (j.contains("solver")) c.solver = solver_kind(get<std::string>(j, "solver", w));
  read_if(j, "tol_flow", w, c.flow_tolerance);
  read_if(j, "tol_elastic", w, c.elastic_tolerance);
  read_if(j, "change_tol", w, c.change_tolerance);
  read_if(j, "output_dir", w, c.output_dir);
  read_if(j, "export_every", w, c.export_every);
  read_if(j, "threads", w, c.threads);
  read_if(j, "seed", w, c.seed);
  auto& o = c.overrides;
  read_if(j, "E1", w, o.e1);
  read_if(j, "E0", w, o.e0);
  read_if(j, "nu", w, o.nu);
  read_if(j, "zeta", w, o.zeta);
  read_if(j, "move", w, o.move_limit);
  read_if(j, "p_in", w, o.p_in);
  read_if(j, "eta_k", w, o.eta_k);
  read_if(j, "beta_k", w, o.beta_k);
  read_if(j, "eta_h", w, o.eta_d);
  read_if(j, "eta_d", w, o.eta_d);
  read_if(j, "beta_h", w, o.beta_d);
  read_if(j, "beta_d", w, o.beta_d);
  read_if(j, "K_v", w, o.k_void);
  read_if(j, "epsilon", w, o.epsilon);
  read_if(j, "r", w, o.remainder);
  read_if(j, "delta_s", w, o.delta_s);
  read_if(j, "V_star", w, o.volume_fraction);
  read_if(j, "mu", w, o.mu);
  read_if(j, "drainage", w, o.drainage);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return config_from_json(read_file(path)); }

ProblemSpec load_spec(const std::string& path) { return spec_from_json(read_file(path)); }

ProblemSpec apply_overrides(ProblemSpec s, const Overrides& o) {
  if (o.e1) {
    // E0 follows E1 at the fixed 1e-6 ratio unless given explicitly.
    s.material.e0 = *o.e1 * (s.material.e0 / s.material.e1);
    s.material.e1 = *o.e1;
  }
  if (o.e0) s.material.e0 = *o.e0;
  if (o.nu) s.material.nu = *o.nu;
  if (o.zeta) s.material.zeta = *o.zeta;
  if (o.move_limit) s.move_limit = *o.move_limit;
  if (o.p_in) {
    for (auto& p : s.pressure) {
      if (p.value != 0.0) p.value = *o.p_in;
    }
  }
  if (o.eta_k) s.flow.eta_k = *o.eta_k;
  if (o.beta_k) s.flow.beta_k = *o.beta_k;
  if (o.eta_d) s.flow.eta_d = *o.eta_d;
  if (o.beta_d) s.flow.beta_d = *o.beta_d;
  if (o.k_void) s.flow.k_void = *o.k_void;
  if (o.epsilon) s.flow.epsilon = *o.epsilon;
  if (o.remainder) s.flow.remainder = *o.remainder;
  if (o.delta_s) s.flow.delta_s = *o.delta_s;
  if (o.volume_fraction) s.volume_fraction = *o.volume_fraction;
  if (o.mu) s.objective.mu = *o.mu;
  if (o.drainage) s.flow.drainage = *o.drainage;
  validate(s);
  return s;
}

ProblemSpec resolve_problem(const RunConfig& config) {
  config.validate();
  ProblemSpec s = config.spec_file.empty() ? catalog(config.problem) : load_spec(config.spec_file);
  if (config.resolution) s = rescale(s, *config.resolution);
  if (config.max_iterations) s.max_iterations = *config.max_iterations;
  return apply_overrides(std::move(s), config.overrides);
}

}  // namespace darcyto
