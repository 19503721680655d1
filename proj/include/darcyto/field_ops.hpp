#pragma once

// Density filter, smooth Heaviside projection and modified SIMP.

#include <span>
#include <vector>

#include "darcyto/linsolve.hpp"
#include "darcyto/mesh.hpp"

namespace darcyto {

enum class ElementRole : unsigned char { Designable, Solid, Void };

/// Per-element design variables with their role. Forced-solid elements hold
/// 1 and forced-void elements hold 0 at all times.
class DesignField {
 public:
  DesignField() = default;
  /// Designable entries start at `initial`; forced entries at their role value.
  DesignField(std::vector<ElementRole> roles, double initial);

  int size() const { return static_cast<int>(values_.size()); }
  std::span<const double> values() const { return values_; }
  std::span<const ElementRole> roles() const { return roles_; }
  ElementRole role(int e) const { return roles_[static_cast<std::size_t>(e)]; }
  bool designable(int e) const { return role(e) == ElementRole::Designable; }

  /// Indices of designable elements in ascending order.
  const std::vector<int>& designable_elements() const { return designable_; }
  std::vector<double> designable_values() const;
  /// Writes designable values (ordered as designable_elements()); entries are
  /// clamped to [0, 1].
  void set_designable_values(std::span<const double> x);
  void set(int e, double value);

 private:
  std::vector<double> values_;
  std::vector<ElementRole> roles_;
  std::vector<int> designable_;
};

/// Row-normalized linear hat filter over element centres. Immutable.
class FilterOperator {
 public:
  FilterOperator() = default;
  FilterOperator(CsrMatrix weights, double radius)
      : weights_(std::move(weights)), radius_(radius) {}

  const CsrMatrix& weights() const { return weights_; }
  double radius() const { return radius_; }
  int size() const { return weights_.rows(); }

  /// Raw linear map x -> W x (no role handling).
  std::vector<double> apply(std::span<const double> x) const;
  /// Raw transpose y -> W^T y.
  std::vector<double> apply_transpose(std::span<const double> y) const;

 private:
  CsrMatrix weights_;
  double radius_ = 0.0;
};

/// Weights w_ij = v_j max(0, 1 - |x_i - x_j| / radius), row-normalized.
/// Throws std::invalid_argument for radius <= 0.
FilterOperator build_filter(const StructuredGrid& grid, double radius);

/// Filtered (physical) densities; forced elements are reset to their role
/// value after filtering.
std::vector<double> apply_filter(const FilterOperator& op, const DesignField& rho);

/// Maps d f / d rho_tilde to d f / d rho. Entries of forced elements are
/// zeroed on both sides of the transpose product since their physical
/// density is pinned.
std::vector<double> filter_chain_rule(const FilterOperator& op,
                                      std::span<const double> df_drho_tilde,
                                      std::span<const ElementRole> roles);

/// Smooth Heaviside step with threshold eta and slope beta; H(0) = 0, H(1) = 1.
double heaviside(double rho_tilde, double eta, double beta);
double heaviside_derivative(double rho_tilde, double eta, double beta);
/// 1 - H computed without cancellation; exactly 0 at rho_tilde = 1.
double heaviside_complement(double rho_tilde, double eta, double beta);

struct ValueAndDerivative {
  double value = 0.0;
  double derivative = 0.0;
};

/// E = E0 + rho^zeta (E1 - E0) and dE/drho.
ValueAndDerivative simp_modulus(double rho_tilde, double e0, double e1, double zeta);

}  // namespace darcyto
