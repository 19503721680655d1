#include "darcyto/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace darcyto {

StructuredGrid::StructuredGrid(Index3 elements, Vec3 lengths)
    : nel_(elements), len_(lengths) {
  if (nel_[0] < 1 || nel_[1] < 1 || nel_[2] < 0) {
    throw std::invalid_argument("StructuredGrid: element counts must be >= 1");
  }
  for (double l : len_) {
    if (!(l > 0.0)) {
      throw std::invalid_argument("StructuredGrid: lengths must be positive");
    }
  }
}

StructuredGrid StructuredGrid::make_2d(int nelx, int nely, double lx, double ly,
                                       double thickness) {
  return StructuredGrid({nelx, nely, 0}, {lx, ly, thickness});
}

StructuredGrid StructuredGrid::make_3d(int nelx, int nely, int nelz, double lx,
                                       double ly, double lz) {
  if (nelz < 1) throw std::invalid_argument("StructuredGrid: nelz must be >= 1");
  return StructuredGrid({nelx, nely, nelz}, {lx, ly, lz});
}

int StructuredGrid::num_elements() const {
  return nel_[0] * nel_[1] * std::max(nel_[2], 1);
}

Index3 StructuredGrid::nodes_per_axis() const {
  return {nel_[0] + 1, nel_[1] + 1, dim() == 2 ? 1 : nel_[2] + 1};
}

int StructuredGrid::num_nodes() const {
  const auto n = nodes_per_axis();
  return n[0] * n[1] * n[2];
}

Vec3 StructuredGrid::element_size() const {
  return {len_[0] / nel_[0], len_[1] / nel_[1],
          dim() == 2 ? len_[2] : len_[2] / nel_[2]};
}

double StructuredGrid::min_element_edge() const {
  const auto h = element_size();
  return dim() == 2 ? std::min(h[0], h[1]) : std::min({h[0], h[1], h[2]});
}

double StructuredGrid::element_volume() const {
  const auto h = element_size();
  return h[0] * h[1] * h[2];
}

int StructuredGrid::node_index(int i, int j, int k) const {
  const auto n = nodes_per_axis();
  return i + n[0] * (j + n[1] * k);
}

int StructuredGrid::element_index(int i, int j, int k) const {
  return i + nel_[0] * (j + nel_[1] * k);
}

Index3 StructuredGrid::node_ijk(int node) const {
  const auto n = nodes_per_axis();
  return {node % n[0], (node / n[0]) % n[1], node / (n[0] * n[1])};
}

Index3 StructuredGrid::element_ijk(int element) const {
  return {element % nel_[0], (element / nel_[0]) % nel_[1],
          element / (nel_[0] * nel_[1])};
}

Vec3 StructuredGrid::node_coords(int node) const {
  const auto ijk = node_ijk(node);
  const auto h = element_size();
  return {ijk[0] * h[0], ijk[1] * h[1], dim() == 2 ? 0.0 : ijk[2] * h[2]};
}

Vec3 StructuredGrid::element_center(int element) const {
  const auto ijk = element_ijk(element);
  const auto h = element_size();
  return {(ijk[0] + 0.5) * h[0], (ijk[1] + 0.5) * h[1],
          dim() == 2 ? 0.0 : (ijk[2] + 0.5) * h[2]};
}

ElementNodes StructuredGrid::element_nodes(int element) const {
  if (element < 0 || element >= num_elements()) {
    throw std::out_of_range("element index " + std::to_string(element) +
                            " outside [0, " + std::to_string(num_elements()) +
                            ")");
  }
  const auto ijk = element_ijk(element);
  ElementNodes out;
  out.count = nodes_per_element();
  for (int c = 0; c < out.count; ++c) {
    const auto& o = kCornerOffsets[static_cast<std::size_t>(c)];
    out.ids[static_cast<std::size_t>(c)] =
        node_index(ijk[0] + o[0], ijk[1] + o[1], ijk[2] + o[2]);
  }
  return out;
}

ElementNodes element_nodes(const StructuredGrid& grid, int element) {
  return grid.element_nodes(element);
}

namespace {

// Reference coordinate (+1/-1) of corner c along axis d.
double corner_sign(int c, int d) {
  return kCornerOffsets[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)]
             ? 1.0
             : -1.0;
}

}  // namespace

Eigen::VectorXd shape_values(int dim, const Vec3& xi) {
  const int npe = dim == 2 ? 4 : 8;
  Eigen::VectorXd n(npe);
  for (int c = 0; c < npe; ++c) {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= 0.5 * (1.0 + corner_sign(c, d) * xi[d]);
    n(c) = v;
  }
  return n;
}

Eigen::MatrixXd shape_gradients(int dim, const Vec3& xi, const Vec3& h) {
  const int npe = dim == 2 ? 4 : 8;
  Eigen::MatrixXd b(dim, npe);
  for (int c = 0; c < npe; ++c) {
    for (int d = 0; d < dim; ++d) {
      // d/dxi_d of the tensor product, then dxi/dx = 2/h.
      double v = 0.5 * corner_sign(c, d) * 2.0 / h[d];
      for (int e = 0; e < dim; ++e) {
        if (e != d) v *= 0.5 * (1.0 + corner_sign(c, e) * xi[e]);
      }
      b(d, c) = v;
    }
  }
  return b;
}

std::vector<QuadraturePoint> gauss_rule(int dim) {
  const double g = 1.0 / std::sqrt(3.0);
  const int npts = dim == 2 ? 4 : 8;
  std::vector<QuadraturePoint> rule;
  rule.reserve(static_cast<std::size_t>(npts));
  for (int c = 0; c < npts; ++c) {
    QuadraturePoint q;
    for (int d = 0; d < dim; ++d) q.xi[d] = corner_sign(c, d) * g;
    q.weight = 1.0;
    rule.push_back(q);
  }
  return rule;
}

DofMap::DofMap(int num_dofs)
    : fixed_(static_cast<std::size_t>(num_dofs), 0),
      values_(static_cast<std::size_t>(num_dofs), 0.0) {}

DofMap DofMap::pressure(const StructuredGrid& grid) {
  return DofMap(grid.num_nodes());
}

DofMap DofMap::displacement(const StructuredGrid& grid) {
  return DofMap(grid.dim() * grid.num_nodes());
}

void DofMap::fix(int dof, double value) {
  if (dof < 0 || dof >= size()) throw std::out_of_range("DofMap::fix");
  fixed_[static_cast<std::size_t>(dof)] = 1;
  values_[static_cast<std::size_t>(dof)] = value;
}

std::vector<int> DofMap::fixed_dofs() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (is_fixed(i)) out.push_back(i);
  }
  return out;
}

std::vector<int> DofMap::free_dofs() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (!is_fixed(i)) out.push_back(i);
  }
  return out;
}

int DofMap::num_fixed() const {
  return static_cast<int>(std::count(fixed_.begin(), fixed_.end(), 1));
}

}  // namespace darcyto
