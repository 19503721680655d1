#include "darcyto/field_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace darcyto {

DesignField::DesignField(std::vector<ElementRole> roles, double initial)
    : values_(roles.size()), roles_(std::move(roles)) {
  for (std::size_t e = 0; e < roles_.size(); ++e) {
    switch (roles_[e]) {
      case ElementRole::Designable:
        values_[e] = std::clamp(initial, 0.0, 1.0);
        designable_.push_back(static_cast<int>(e));
        break;
      case ElementRole::Solid:
        values_[e] = 1.0;
        break;
      case ElementRole::Void:
        values_[e] = 0.0;
        break;
    }
  }
}

std::vector<double> DesignField::designable_values() const {
  std::vector<double> x;
  x.reserve(designable_.size());
  for (int e : designable_) x.push_back(values_[static_cast<std::size_t>(e)]);
  return x;
}

void DesignField::set_designable_values(std::span<const double> x) {
  if (x.size() != designable_.size()) {
    throw std::invalid_argument("DesignField: designable length mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    values_[static_cast<std::size_t>(designable_[i])] = std::clamp(x[i], 0.0, 1.0);
  }
}

void DesignField::set(int e, double value) {
  if (!designable(e)) throw std::logic_error("DesignField: element is not designable");
  values_[static_cast<std::size_t>(e)] = std::clamp(value, 0.0, 1.0);
}

std::vector<double> FilterOperator::apply(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(size())) {
    throw std::invalid_argument("filter: field length does not match the grid");
  }
  return weights_.multiply(x);
}

std::vector<double> FilterOperator::apply_transpose(std::span<const double> y) const {
  if (y.size() != static_cast<std::size_t>(size())) {
    throw std::invalid_argument("filter: sensitivity length does not match the grid");
  }
  return weights_.multiply_transpose(y);
}

FilterOperator build_filter(const StructuredGrid& grid, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("build_filter: radius must be positive");
  const auto h = grid.element_size();
  const int dim = grid.dim();
  const Index3 reach{static_cast<int>(std::ceil(radius / h[0])),
                     static_cast<int>(std::ceil(radius / h[1])),
                     dim == 3 ? static_cast<int>(std::ceil(radius / h[2])) : 0};
  const double v = grid.element_volume();
  const int ne = grid.num_elements();

  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(ne) + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<int> row_cols;
  std::vector<double> row_vals;
  for (int e = 0; e < ne; ++e) {
    const auto ijk = grid.element_ijk(e);
    row_cols.clear();
    row_vals.clear();
    double sum = 0.0;
    for (int k = std::max(0, ijk[2] - reach[2]);
         k <= std::min(std::max(grid.nelz(), 1) - 1, ijk[2] + reach[2]); ++k) {
      for (int j = std::max(0, ijk[1] - reach[1]); j <= std::min(grid.nely() - 1, ijk[1] + reach[1]);
           ++j) {
        for (int i = std::max(0, ijk[0] - reach[0]);
             i <= std::min(grid.nelx() - 1, ijk[0] + reach[0]); ++i) {
          const double dx = (i - ijk[0]) * h[0];
          const double dy = (j - ijk[1]) * h[1];
          const double dz = dim == 3 ? (k - ijk[2]) * h[2] : 0.0;
          const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
          const double w = std::max(0.0, 1.0 - dist / radius) * v;
          if (w <= 0.0) continue;
          row_cols.push_back(grid.element_index(i, j, k));
          row_vals.push_back(w);
          sum += w;
        }
      }
    }
    for (std::size_t q = 0; q < row_cols.size(); ++q) {
      cols.push_back(row_cols[q]);
      vals.push_back(row_vals[q] / sum);
    }
    row_ptr[static_cast<std::size_t>(e) + 1] = static_cast<std::int64_t>(cols.size());
  }
  return FilterOperator(CsrMatrix(ne, ne, std::move(row_ptr), std::move(cols), std::move(vals)),
                        radius);
}

std::vector<double> apply_filter(const FilterOperator& op, const DesignField& rho) {
  auto out = op.apply(rho.values());
  for (int e = 0; e < rho.size(); ++e) {
    auto& x = out[static_cast<std::size_t>(e)];
    switch (rho.role(e)) {
      case ElementRole::Solid: x = 1.0; break;
      case ElementRole::Void: x = 0.0; break;
      case ElementRole::Designable: x = std::clamp(x, 0.0, 1.0); break;
    }
  }
  return out;
}

std::vector<double> filter_chain_rule(const FilterOperator& op,
                                      std::span<const double> df_drho_tilde,
                                      std::span<const ElementRole> roles) {
  if (df_drho_tilde.size() != roles.size()) {
    throw std::invalid_argument("filter_chain_rule: length mismatch");
  }
  std::vector<double> g(df_drho_tilde.begin(), df_drho_tilde.end());
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (roles[e] != ElementRole::Designable) g[e] = 0.0;
  }
  auto out = op.apply_transpose(g);
  for (std::size_t e = 0; e < out.size(); ++e) {
    if (roles[e] != ElementRole::Designable) out[e] = 0.0;
  }
  return out;
}

double heaviside(double rho_tilde, double eta, double beta) {
  const double a = std::tanh(beta * eta);
  return (a + std::tanh(beta * (rho_tilde - eta))) / (a + std::tanh(beta * (1.0 - eta)));
}

double heaviside_derivative(double rho_tilde, double eta, double beta) {
  const double t = std::tanh(beta * (rho_tilde - eta));
  return beta * (1.0 - t * t) / (std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta)));
}

double heaviside_complement(double rho_tilde, double eta, double beta) {
  const double b = std::tanh(beta * (1.0 - eta));
  return (b - std::tanh(beta * (rho_tilde - eta))) / (std::tanh(beta * eta) + b);
}

ValueAndDerivative simp_modulus(double rho_tilde, double e0, double e1, double zeta) {
  return {e0 + std::pow(rho_tilde, zeta) * (e1 - e0),
          zeta * std::pow(rho_tilde, zeta - 1.0) * (e1 - e0)};
}

}  // namespace darcyto
