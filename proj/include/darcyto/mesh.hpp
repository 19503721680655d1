#pragma once

// Structured hexahedral (3D) / quadrilateral (2D) grids, trilinear shape
// functions and degree-of-freedom bookkeeping.
//
// Numbering is lexicographic with x fastest, then y, then z, for both nodes
// and elements. Element corners follow the usual hex8 ordering:
//
//        7-------6          3-------2
//       /|      /|          |       |
//      4-------5 |          |       |     (2D, z omitted)
//      | 3-----|-2          0-------1
//      |/      |/
//      0-------1        x ->, y into the page (3D), z up
//
// i.e. corner c sits at local offsets (dx, dy, dz) = kCornerOffsets[c].

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace darcyto {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

inline constexpr std::array<Index3, 8> kCornerOffsets{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

/// Node ids of one element in corner order. Only the first `size()` entries
/// are meaningful (4 in 2D, 8 in 3D).
struct ElementNodes {
  std::array<int, 8> ids{};
  int count = 0;

  int size() const { return count; }
  int operator[](int a) const { return ids[static_cast<std::size_t>(a)]; }
  const int* begin() const { return ids.data(); }
  const int* end() const { return ids.data() + count; }
};

/// Axis-aligned grid of congruent box elements.
///
/// A 2D grid is a grid with `nelz == 0`; its `lz` is kept as the out-of-plane
/// thickness so that every element integral carries physical units (element
/// volume = dx * dy * lz).
class StructuredGrid {
 public:
  StructuredGrid() = default;
  StructuredGrid(Index3 elements, Vec3 lengths);

  static StructuredGrid make_2d(int nelx, int nely, double lx, double ly,
                                double thickness = 1.0);
  static StructuredGrid make_3d(int nelx, int nely, int nelz, double lx,
                                double ly, double lz);

  int dim() const { return nel_[2] == 0 ? 2 : 3; }
  int nelx() const { return nel_[0]; }
  int nely() const { return nel_[1]; }
  int nelz() const { return nel_[2]; }
  const Index3& elements_per_axis() const { return nel_; }
  const Vec3& lengths() const { return len_; }
  double thickness() const { return dim() == 2 ? len_[2] : 1.0; }

  int nodes_per_element() const { return dim() == 2 ? 4 : 8; }
  int num_elements() const;
  int num_nodes() const;
  /// Nodes along each axis; 1 along z in 2D.
  Index3 nodes_per_axis() const;

  /// Edge lengths (dx, dy, dz); dz is the thickness in 2D.
  Vec3 element_size() const;
  double min_element_edge() const;
  double element_volume() const;

  int node_index(int i, int j, int k = 0) const;
  int element_index(int i, int j, int k = 0) const;
  Index3 node_ijk(int node) const;
  Index3 element_ijk(int element) const;
  Vec3 node_coords(int node) const;
  Vec3 element_center(int element) const;

  /// Throws std::out_of_range for an invalid element index.
  ElementNodes element_nodes(int element) const;

  bool operator==(const StructuredGrid&) const = default;

 private:
  Index3 nel_{1, 1, 1};
  Vec3 len_{1.0, 1.0, 1.0};
};

/// Free function form of StructuredGrid::element_nodes.
ElementNodes element_nodes(const StructuredGrid& grid, int element);

/// Trilinear (3D) or bilinear (2D) shape values at a reference point in
/// [-1, 1]^dim. Only the first `dim` entries of `xi` are read.
Eigen::VectorXd shape_values(int dim, const Vec3& xi);

/// Physical-space shape gradients B_p: row c holds d/dx_c of each nodal
/// shape function, for a box element of edge lengths `h`.
Eigen::MatrixXd shape_gradients(int dim, const Vec3& xi, const Vec3& h);

struct QuadraturePoint {
  Vec3 xi{};
  double weight = 0.0;
};

/// Tensor Gauss rule with two points per axis (4 points in 2D, 8 in 3D);
/// weights refer to the reference element.
std::vector<QuadraturePoint> gauss_rule(int dim);

/// Per-field DOF bookkeeping: prescribed values and the free/fixed split.
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(int num_dofs);

  /// Pressure map: one DOF per node.
  static DofMap pressure(const StructuredGrid& grid);
  /// Displacement map: dim DOFs per node, dof = dim * node + component.
  static DofMap displacement(const StructuredGrid& grid);

  int size() const { return static_cast<int>(fixed_.size()); }
  /// Prescribes `value` at `dof`; the last call for a DOF wins.
  void fix(int dof, double value = 0.0);
  bool is_fixed(int dof) const { return fixed_[static_cast<std::size_t>(dof)] != 0; }
  double value(int dof) const { return values_[static_cast<std::size_t>(dof)]; }

  std::vector<int> fixed_dofs() const;
  std::vector<int> free_dofs() const;
  int num_fixed() const;
  std::span<const double> values() const { return values_; }
  std::span<const unsigned char> mask() const { return fixed_; }

 private:
  std::vector<unsigned char> fixed_;
  std::vector<double> values_;
};

}  // namespace darcyto
