#pragma once

// Sparse symmetric linear algebra: CSR storage with a structured-grid
// assembly pattern, Dirichlet elimination, zero-fill incomplete Cholesky,
// preconditioned conjugate gradients and a sparse direct fallback.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "darcyto/mesh.hpp"

namespace darcyto {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved_residual = NAN)
      : std::runtime_error(what), residual_(achieved_residual) {}
  double achieved_residual() const { return residual_; }

 private:
  double residual_;
};

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix with sorted column indices per row.
/// Several vectors of equal length, processed together by block kernels.
using ConstVectors = std::span<const std::span<const double>>;
using Vectors = std::span<const std::span<double>>;

class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr,
            std::vector<int> col_idx, std::vector<double> values);

  /// Duplicate entries are summed.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
  static CsrMatrix from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }

  std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
  std::span<const int> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Stored value at (i, j); zero when (i, j) is outside the pattern.
  double coeff(int i, int j) const;
  void set_zero();

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> multiply_transpose(std::span<const double> x) const;
  /// y_j = A x_j for every pair, in one pass over A per two vectors.
  void multiply_block(ConstVectors x, Vectors y) const;

  std::vector<double> diagonal() const;
  /// Largest |A_ij - A_ji| over the pattern (square matrices only).
  double symmetry_defect() const;
  Eigen::MatrixXd to_dense() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Global sparsity for element assembly on a structured grid with `block`
/// DOFs per node (1 for pressure, dim for displacement). Value slots are
/// resolved through a per-node table of neighbour positions, so no
/// per-element index arrays are stored.
class GridPattern {
 public:
  GridPattern(const StructuredGrid& grid, int block);

  const StructuredGrid& grid() const { return grid_; }
  int block() const { return block_; }
  int num_dofs() const { return grid_.num_nodes() * block_; }
  int dofs_per_element() const { return grid_.nodes_per_element() * block_; }

  /// Zero matrix carrying the full pattern.
  CsrMatrix make_matrix() const;
  /// Global DOF ids of an element, node-major: node_a * block + component.
  std::vector<int> element_dofs(int element) const;
  /// A += scale * ke scattered at `element`.
  void add_element(CsrMatrix& a, int element, const Eigen::MatrixXd& ke,
                   double scale) const;

 private:
  StructuredGrid grid_;
  int block_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<int> col_idx_;
  // rank of each of the 27 (9 in 2D) neighbour offsets within a node's row
  std::vector<std::int8_t> neighbour_rank_;
};

/// Row/column elimination of prescribed DOFs with a unit diagonal. The
/// right-hand side is lifted by the prescribed values and its fixed entries
/// set to them, so the reduced system stays symmetric positive definite.
void apply_dirichlet(CsrMatrix& a, std::span<double> rhs, const DofMap& dofs);
/// Matrix-only variant for systems whose prescribed values are all zero.
void apply_dirichlet(CsrMatrix& a, const DofMap& dofs);

struct IdentityPreconditioner {
  void apply(std::span<const double> r, std::span<double> z) const;
};

/// Zero-fill incomplete Cholesky factor on the lower pattern of A. On a
/// non-positive pivot the factorization restarts on A + alpha * diag(A) with
/// alpha = initial_shift * 2^k, k = 0, 1, ...
class IncompleteCholesky {
 public:
  struct Options {
    double initial_shift = 1e-3;
    int max_shift_attempts = 30;
  };

  IncompleteCholesky() = default;
  explicit IncompleteCholesky(const CsrMatrix& a);
  IncompleteCholesky(const CsrMatrix& a, Options options);

  /// z = (L L^T)^{-1} r
  void apply(std::span<const double> r, std::span<double> z) const;

  double shift() const { return shift_; }
  int rows() const { return n_; }
  /// Lower factor as a CSR matrix (diagonal last in each row).
  CsrMatrix factor() const;

 private:
  bool try_factor(const CsrMatrix& a, double alpha);

  int n_ = 0;
  double shift_ = 0.0;
  std::vector<std::int64_t> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

namespace detail {
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
}  // namespace detail

/// Preconditioned conjugate gradients on A x = b (`a` provides
/// multiply(x, y) computing y = A x), starting from the incoming
/// `x`. Stops when ||b - A x|| <= tol ||b||. If `maxit` is reached, `x` holds
/// the iterate with the smallest residual seen and `converged` is false.
template <class Operator, class Preconditioner>
SolveStats pcg(const Operator& a, std::span<const double> b, std::span<double> x,
               const Preconditioner& m, double tol, int maxit) {
  const std::size_t n = b.size();
  SolveStats stats;
  const double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    stats.converged = true;
    return stats;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  double rnorm = detail::norm2(r);
  std::vector<double> best(x.begin(), x.end());
  double best_norm = rnorm;
  if (rnorm <= tol * bnorm) {
    stats.relative_residual = rnorm / bnorm;
    stats.converged = true;
    return stats;
  }
  m.apply(r, z);
  p = z;
  double rz = detail::dot(r, z);
  for (int it = 1; it <= maxit; ++it) {
    a.multiply(p, q);
    const double pq = detail::dot(p, q);
    if (!(pq > 0.0)) break;  // loss of positive definiteness
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rnorm = detail::norm2(r);
    stats.iterations = it;
    if (rnorm < best_norm) {
      best_norm = rnorm;
      if (rnorm <= tol * bnorm) {
        stats.relative_residual = rnorm / bnorm;
        stats.converged = true;
        return stats;
      }
      std::copy(x.begin(), x.end(), best.begin());
    }
    m.apply(r, z);
    const double rz_new = detail::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  std::copy(best.begin(), best.end(), x.begin());
  stats.relative_residual = best_norm / bnorm;
  stats.converged = false;
  return stats;
}

/// Dense Cholesky solve. Throws SolverError when A is not positive definite.
Eigen::VectorXd direct_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);
/// Sparse Cholesky solve (AMD ordering) for small and moderate systems.
std::vector<double> direct_solve(const CsrMatrix& a, std::span<const double> b);

enum class SolverKind { Pcg, Multigrid, Direct };

class GridMultigrid;

/// Grid structure of a system assembled by GridPattern, required by the
/// multigrid solver: dof = block * node + component, with `fixed` flagging
/// the eliminated DOFs.
struct GridLayout {
  const StructuredGrid* grid = nullptr;
  int block = 1;
  std::span<const unsigned char> fixed;
};

struct SolverOptions {
  SolverKind kind = SolverKind::Pcg;
  double tolerance = 1e-8;
  /// 0 selects 10 * n.
  int max_iterations = 0;
};

/// One factorization of a reduced SPD matrix, reused for every right-hand
/// side that shares the matrix (state, dummy and adjoint solves). The PCG
/// path iterates on the symmetrically diagonal-scaled system S A S (S =
/// diag(A)^-1/2), so the residual test weighs stiff and compliant rows alike.
/// The multigrid path iterates on the same scaled system, preconditioned by a
/// geometric V-cycle built from `layout`.
class FactoredSystem {
 public:
  FactoredSystem(CsrMatrix a, SolverOptions options, const GridLayout& layout = {});
  ~FactoredSystem();
  FactoredSystem(FactoredSystem&&) noexcept;
  FactoredSystem& operator=(FactoredSystem&&) noexcept;

  /// Solves A x = b with `x` as initial guess (ignored by the direct path).
  /// Throws SolverError on non-convergence.
  SolveStats solve(std::span<const double> b, std::span<double> x) const;
  std::vector<double> solve(std::span<const double> b) const;
  /// Solves A x_j = b_j for several right-hand sides. The multigrid path runs
  /// the iterations in lockstep so each pass over the matrices serves every
  /// system; the other paths solve one after another.
  std::vector<SolveStats> solve_many(ConstVectors b, Vectors x) const;

  int rows() const { return n_; }
  /// y = A x with the original (unscaled) matrix.
  std::vector<double> multiply(std::span<const double> x) const;
  const SolverOptions& options() const { return options_; }
  /// Diagonal shift applied by the incomplete factor (PCG path).
  double preconditioner_shift() const;

 private:
  struct DirectImpl;
  int n_ = 0;
  CsrMatrix a_;  ///< S A S on the PCG path, A on the direct path
  std::shared_ptr<const CsrMatrix> unscaled_;  ///< A on the multigrid path
  std::vector<double> scale_;
  SolverOptions options_;
  IncompleteCholesky ic_;
  std::unique_ptr<DirectImpl> direct_;
  std::unique_ptr<GridMultigrid> multigrid_;
};

}  // namespace darcyto
