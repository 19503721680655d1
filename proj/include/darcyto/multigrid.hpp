#pragma once

// Geometric multigrid V-cycle for systems assembled on a structured grid.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "darcyto/linsolve.hpp"
#include "darcyto/mesh.hpp"

namespace darcyto {

/// V-cycle preconditioner on a hierarchy of structured grids.
///
/// Each coarser level halves the element count along every axis, rounding up;
/// with an odd count the last coarse element spans one fine element.
/// Prolongation is multilinear per DOF component, with zero rows at
/// eliminated (fixed) DOFs, and coarse operators are Galerkin products
/// P^T A P. Smoothing is Gauss-Seidel, forward before and backward after the
/// coarse correction, on single-precision copies of the level matrices; every
/// step of the cycle uses that same operator, so the cycle stays symmetric.
/// The coarsest level is solved with a sparse Cholesky factor.
class GridMultigrid {
 public:
  struct Options {
    int smoothing_sweeps = 1;
    /// Coarsening stops once a level has at most this many DOFs.
    int coarsest_dofs = 4000;
  };

  /// `a` is the eliminated system on `grid` with `block` DOFs per node
  /// (dof = block * node + component); `fixed` flags the eliminated DOFs.
  GridMultigrid(std::shared_ptr<const CsrMatrix> a, const StructuredGrid& grid, int block,
                std::span<const unsigned char> fixed);
  GridMultigrid(std::shared_ptr<const CsrMatrix> a, const StructuredGrid& grid, int block,
                std::span<const unsigned char> fixed, Options options);
  ~GridMultigrid();
  GridMultigrid(GridMultigrid&&) noexcept;
  GridMultigrid& operator=(GridMultigrid&&) noexcept;

  /// z = M^{-1} r: one V-cycle from a zero initial guess.
  void apply(std::span<const double> r, std::span<double> z) const;
  /// z_j = M^{-1} r_j for several vectors, sharing each pass over a level.
  void apply_block(ConstVectors r, Vectors z) const;

  int num_levels() const { return static_cast<int>(levels_.size()); }
  /// Number of DOFs on each level, finest first.
  std::vector<int> level_sizes() const;

  /// Gauss-Seidel on a single-precision copy of one level matrix.
  struct Smoother {
    Smoother() = default;
    explicit Smoother(const CsrMatrix& a);
    void sweep(ConstVectors r, Vectors z, bool forward) const;
    /// r - A z right after a forward sweep that started from `z_before`
    /// (empty means zero).
    void residual_after_forward(ConstVectors z_before, ConstVectors z, Vectors res) const;

    std::vector<std::int64_t> row_ptr;
    std::vector<int> col_idx;
    std::vector<float> values;
    std::vector<std::int64_t> diag_pos;
    std::vector<double> inv_diag;
  };

 private:
  struct Level {
    std::shared_ptr<const CsrMatrix> a;
    Smoother smoother;
    /// Prolongation from the next coarser level (empty on the coarsest).
    CsrMatrix p;
  };
  struct CoarseSolver;

  void cycle(std::size_t level, ConstVectors r, Vectors z) const;

  std::vector<Level> levels_;
  std::vector<int> sizes_;
  int smoothing_sweeps_ = 1;
  std::unique_ptr<CoarseSolver> coarse_;
};

/// Multilinear prolongation from the grid with ceil(`fine.elements / factors`)
/// elements to `fine`, `block` components per node; rows of DOFs flagged in
/// `fixed` are empty. `factors` holds 1 or 2 per axis.
CsrMatrix grid_prolongation(const StructuredGrid& fine, Index3 factors, int block,
                            std::span<const unsigned char> fixed);

/// Galerkin product P^T A P on the coarse grid pattern. Rows of coarse DOFs
/// that receive no fine contribution get a unit diagonal.
CsrMatrix galerkin_product(const CsrMatrix& a, const CsrMatrix& p, const StructuredGrid& coarse,
                           int block);

}  // namespace darcyto
