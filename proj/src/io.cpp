#include "darcyto/io.hpp"

#include <charconv>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace darcyto {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_scalars(std::ofstream& out, const char* name, std::span<const double> v) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double x : v) out << format_double(x) << '\n';
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

void export_fields(const StructuredGrid& grid, const FieldSet& f,
                   const std::filesystem::path& path) {
  const auto ne = static_cast<std::size_t>(grid.num_elements());
  const auto nn = static_cast<std::size_t>(grid.num_nodes());
  const int dim = grid.dim();
  if (f.rho.size() != ne || f.rho_tilde.size() != ne || f.p.size() != nn ||
      (!f.u.empty() && f.u.size() != nn * static_cast<std::size_t>(dim))) {
    throw std::invalid_argument("export_fields: field size mismatch");
  }
  const auto npa = grid.nodes_per_axis();
  const auto h = grid.element_size();
  {
    auto out = open_for_write(path);
    out << "# vtk DataFile Version 3.0\n"
        << "darcyto fields\n"
        << "ASCII\n"
        << "DATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << npa[0] << ' ' << npa[1] << ' ' << (dim == 3 ? npa[2] : 1) << '\n'
        << "ORIGIN 0 0 0\n"
        << "SPACING " << format_double(h[0]) << ' ' << format_double(h[1]) << ' '
        << format_double(dim == 3 ? h[2] : 1.0) << '\n';
    out << "CELL_DATA " << ne << '\n';
    write_scalars(out, "rho", f.rho);
    write_scalars(out, "rho_tilde", f.rho_tilde);
    out << "POINT_DATA " << nn << '\n';
    write_scalars(out, "p", f.p);
    if (!f.u.empty()) {
      out << "VECTORS u double\n";
      for (std::size_t n = 0; n < nn; ++n) {
        for (int c = 0; c < 3; ++c) {
          const double v = c < dim ? f.u[n * static_cast<std::size_t>(dim) + c] : 0.0;
          out << format_double(v) << (c == 2 ? '\n' : ' ');
        }
      }
    }
  }
  nlohmann::ordered_json meta;
  meta["format"] = "vtk-legacy-ascii-structured-points";
  meta["dimension"] = dim;
  meta["elements"] = {grid.nelx(), grid.nely(), grid.nelz()};
  meta["nodes"] = {npa[0], npa[1], dim == 3 ? npa[2] : 1};
  meta["lengths"] = {grid.lengths()[0], grid.lengths()[1], grid.lengths()[2]};
  meta["spacing"] = {h[0], h[1], h[2]};
  meta["ordering"] = "x fastest, then y, then z";
  meta["cell_fields"] = {"rho", "rho_tilde"};
  meta["point_fields"] = f.u.empty() ? nlohmann::ordered_json{"p"} : nlohmann::ordered_json{"p", "u"};
  meta["units"] = {{"length", "m"}, {"p", "N/m^2"}, {"u", "m"}};
  meta["isosurface_rho_tilde"] = 0.25;
  auto side = open_for_write(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

ConvergenceLog::ConvergenceLog(const std::filesystem::path& path) : out_(open_for_write(path)) {
  out_ << header() << '\n';
}

const char* ConvergenceLog::header() {
  return "iteration,f0,g1,volume_fraction,change,pressure_iterations,state_iterations,"
         "dummy_iterations";
}

void ConvergenceLog::append(const ConvergenceRecord& r) {
  out_ << r.iteration << ',' << format_double(r.f0) << ',' << format_double(r.g1) << ','
       << format_double(r.volume_fraction) << ',' << format_double(r.change) << ','
       << r.pressure_iterations << ',' << r.state_iterations << ',' << r.dummy_iterations << '\n';
  out_.flush();
}

TimingLog::TimingLog(const std::filesystem::path& path) : out_(open_for_write(path)) {
  out_ << header() << '\n';
}

const char* TimingLog::header() {
  return "iteration,t_filter,t_pressure,t_state,t_sensitivity,t_update";
}

void TimingLog::append(const ConvergenceRecord& r) {
  out_ << r.iteration << ',' << format_double(r.t_filter) << ',' << format_double(r.t_pressure)
       << ',' << format_double(r.t_state) << ',' << format_double(r.t_sensitivity) << ','
       << format_double(r.t_update) << '\n';
  out_.flush();
}

}  // namespace darcyto
