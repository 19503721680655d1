#pragma once

// File output: legacy-VTK structured-points field exports with a JSON
// sidecar, and the convergence / timing CSV logs.

#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "darcyto/mesh.hpp"
#include "darcyto/optimizer.hpp"

namespace darcyto {

struct FieldSet {
  std::span<const double> rho;        ///< cell data
  std::span<const double> rho_tilde;  ///< cell data
  std::span<const double> p;          ///< point data
  std::span<const double> u;          ///< point data, dim components per node (may be empty)
};

/// Writes `<path>` (ASCII legacy VTK, STRUCTURED_POINTS) and `<path>.json`.
/// Output is byte-identical for identical inputs.
void export_fields(const StructuredGrid& grid, const FieldSet& fields,
                   const std::filesystem::path& path);

/// Iteration, objective and solver counts; deterministic content.
class ConvergenceLog {
 public:
  explicit ConvergenceLog(const std::filesystem::path& path);
  void append(const ConvergenceRecord& record);
  static const char* header();

 private:
  std::ofstream out_;
};

/// Wall time per phase, kept apart so the convergence log stays reproducible.
class TimingLog {
 public:
  explicit TimingLog(const std::filesystem::path& path);
  void append(const ConvergenceRecord& record);
  static const char* header();

 private:
  std::ofstream out_;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace darcyto
