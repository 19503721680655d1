#include "darcyto/linsolve.hpp"
#include "darcyto/multigrid.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace darcyto {

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix::CsrMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr,
                     std::vector<int> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 ||
      col_idx_.size() != values_.size() ||
      static_cast<std::size_t>(row_ptr_.back()) != values_.size()) {
    throw std::invalid_argument("CsrMatrix: inconsistent arrays");
  }
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> col_idx;
  std::vector<double> values;
  col_idx.reserve(entries.size());
  values.reserve(entries.size());
  int last_row = -1;
  int last_col = -1;
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::out_of_range("CsrMatrix::from_triplets: entry out of range");
    }
    if (t.row == last_row && t.col == last_col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[static_cast<std::size_t>(t.row) + 1];
    last_row = t.row;
    last_col = t.col;
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  return CsrMatrix(rows, cols, std::move(row_ptr), std::move(col_idx),
                   std::move(values));
}

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense, double drop_tol) {
  std::vector<Triplet> t;
  for (int i = 0; i < dense.rows(); ++i) {
    for (int j = 0; j < dense.cols(); ++j) {
      if (std::abs(dense(i, j)) > drop_tol) t.push_back({i, j, dense(i, j)});
    }
  }
  return from_triplets(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()),
                       std::move(t));
}

double CsrMatrix::coeff(int i, int j) const {
  const auto first = col_idx_.begin() + row_ptr_[static_cast<std::size_t>(i)];
  const auto last = col_idx_.begin() + row_ptr_[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(cols_) ||
      y.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("CsrMatrix::multiply: size mismatch");
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    const auto end = row_ptr_[static_cast<std::size_t>(i) + 1];
    for (auto k = row_ptr_[static_cast<std::size_t>(i)]; k < end; ++k) {
      s += values_[static_cast<std::size_t>(k)] *
           x[static_cast<std::size_t>(col_idx_[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(i)] = s;
  }
}

namespace {

template <int M>
void multiply_group(const CsrMatrix& a, const std::span<const double>* x, const std::span<double>* y) {
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto v = a.values();
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < a.rows(); ++i) {
    std::array<double, M> s{};
    const auto end = static_cast<std::size_t>(rp[static_cast<std::size_t>(i) + 1]);
    for (auto k = static_cast<std::size_t>(rp[static_cast<std::size_t>(i)]); k < end; ++k) {
      const auto c = static_cast<std::size_t>(ci[k]);
      for (int m = 0; m < M; ++m) s[m] += v[k] * x[m][c];
    }
    for (int m = 0; m < M; ++m) y[m][static_cast<std::size_t>(i)] = s[m];
  }
}

}  // namespace

void CsrMatrix::multiply_block(ConstVectors x, Vectors y) const {
  if (x.size() != y.size()) throw std::invalid_argument("CsrMatrix::multiply_block: count mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j].size() != static_cast<std::size_t>(cols_) ||
        y[j].size() != static_cast<std::size_t>(rows_)) {
      throw std::invalid_argument("CsrMatrix::multiply_block: size mismatch");
    }
  }
  std::size_t j = 0;
  for (; j + 2 <= x.size(); j += 2) multiply_group<2>(*this, &x[j], &y[j]);
  if (j < x.size()) multiply_group<1>(*this, &x[j], &y[j]);
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(rows_) ||
      y.size() != static_cast<std::size_t>(cols_)) {
    throw std::invalid_argument("CsrMatrix::multiply_transpose: size mismatch");
  }
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < rows_; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    if (xi == 0.0) continue;
    const auto end = row_ptr_[static_cast<std::size_t>(i) + 1];
    for (auto k = row_ptr_[static_cast<std::size_t>(i)]; k < end; ++k) {
      y[static_cast<std::size_t>(col_idx_[static_cast<std::size_t>(k)])] +=
          values_[static_cast<std::size_t>(k)] * xi;
    }
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows_));
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::multiply_transpose(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(cols_));
  multiply_transpose(x, y);
  return y;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
  for (int i = 0; i < static_cast<int>(d.size()); ++i) d[static_cast<std::size_t>(i)] = coeff(i, i);
  return d;
}

double CsrMatrix::symmetry_defect() const {
  if (rows_ != cols_) throw std::logic_error("symmetry_defect: matrix not square");
  double worst = 0.0;
  for (int i = 0; i < rows_; ++i) {
    for (auto k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const int j = col_idx_[static_cast<std::size_t>(k)];
      worst = std::max(worst, std::abs(values_[static_cast<std::size_t>(k)] - coeff(j, i)));
    }
  }
  return worst;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int i = 0; i < rows_; ++i) {
    for (auto k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      d(i, col_idx_[static_cast<std::size_t>(k)]) += values_[static_cast<std::size_t>(k)];
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// GridPattern

namespace {

constexpr int kNeighbourCodes = 27;

int offset_code(int dx, int dy, int dz) { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }

}  // namespace

GridPattern::GridPattern(const StructuredGrid& grid, int block)
    : grid_(grid), block_(block) {
  if (block_ < 1) throw std::invalid_argument("GridPattern: block must be >= 1");
  const auto n = grid_.nodes_per_axis();
  const int nnodes = grid_.num_nodes();
  const int zr = grid_.dim() == 3 ? 1 : 0;
  neighbour_rank_.assign(static_cast<std::size_t>(nnodes) * kNeighbourCodes, -1);
  row_ptr_.assign(static_cast<std::size_t>(nnodes) * block_ + 1, 0);

  std::vector<int> nbrs;
  nbrs.reserve(kNeighbourCodes);
  std::size_t total = 0;
  // First pass: counts and rank table.
  for (int node = 0; node < nnodes; ++node) {
    const auto ijk = grid_.node_ijk(node);
    std::int8_t rank = 0;
    for (int dz = -zr; dz <= zr; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int i = ijk[0] + dx, j = ijk[1] + dy, k = ijk[2] + dz;
          if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) continue;
          neighbour_rank_[static_cast<std::size_t>(node) * kNeighbourCodes +
                          static_cast<std::size_t>(offset_code(dx, dy, dz))] = rank++;
        }
      }
    }
    for (int c = 0; c < block_; ++c) {
      row_ptr_[static_cast<std::size_t>(node) * block_ + c + 1] =
          static_cast<std::int64_t>(rank) * block_;
    }
    total += static_cast<std::size_t>(rank) * block_ * block_;
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  col_idx_.resize(total);
  for (int node = 0; node < nnodes; ++node) {
    const auto ijk = grid_.node_ijk(node);
    nbrs.clear();
    for (int dz = -zr; dz <= zr; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int i = ijk[0] + dx, j = ijk[1] + dy, k = ijk[2] + dz;
          if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) continue;
          nbrs.push_back(grid_.node_index(i, j, k));
        }
      }
    }
    for (int c = 0; c < block_; ++c) {
      auto pos = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(node) * block_ + c]);
      for (int m : nbrs) {
        for (int cc = 0; cc < block_; ++cc) col_idx_[pos++] = m * block_ + cc;
      }
    }
  }
}

CsrMatrix GridPattern::make_matrix() const {
  return CsrMatrix(num_dofs(), num_dofs(), row_ptr_, col_idx_,
                   std::vector<double>(col_idx_.size(), 0.0));
}

std::vector<int> GridPattern::element_dofs(int element) const {
  const auto nodes = grid_.element_nodes(element);
  std::vector<int> dofs;
  dofs.reserve(static_cast<std::size_t>(nodes.size() * block_));
  for (int a : nodes) {
    for (int c = 0; c < block_; ++c) dofs.push_back(a * block_ + c);
  }
  return dofs;
}

void GridPattern::add_element(CsrMatrix& a, int element, const Eigen::MatrixXd& ke,
                              double scale) const {
  const auto nodes = grid_.element_nodes(element);
  const int npe = nodes.size();
  auto vals = a.values();
  const auto rp = a.row_ptr();
  for (int ca = 0; ca < npe; ++ca) {
    const auto& oa = kCornerOffsets[static_cast<std::size_t>(ca)];
    const int na = nodes[ca];
    for (int cb = 0; cb < npe; ++cb) {
      const auto& ob = kCornerOffsets[static_cast<std::size_t>(cb)];
      const int code = offset_code(ob[0] - oa[0], ob[1] - oa[1], ob[2] - oa[2]);
      const int rank = neighbour_rank_[static_cast<std::size_t>(na) * kNeighbourCodes +
                                       static_cast<std::size_t>(code)];
      for (int rc = 0; rc < block_; ++rc) {
        const auto base = rp[static_cast<std::size_t>(na) * block_ + rc] +
                          static_cast<std::int64_t>(rank) * block_;
        for (int cc = 0; cc < block_; ++cc) {
          vals[static_cast<std::size_t>(base + cc)] +=
              scale * ke(ca * block_ + rc, cb * block_ + cc);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Dirichlet elimination

void apply_dirichlet(CsrMatrix& a, std::span<double> rhs, const DofMap& dofs) {
  if (a.rows() != dofs.size() || rhs.size() != static_cast<std::size_t>(dofs.size())) {
    throw std::invalid_argument("apply_dirichlet: size mismatch");
  }
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  auto v = a.values();
  for (int i = 0; i < a.rows(); ++i) {
    const bool row_fixed = dofs.is_fixed(i);
    for (auto k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const int j = ci[kk];
      if (row_fixed) {
        v[kk] = (i == j) ? 1.0 : 0.0;
      } else if (dofs.is_fixed(j)) {
        rhs[static_cast<std::size_t>(i)] -= v[kk] * dofs.value(j);
        v[kk] = 0.0;
      }
    }
    if (row_fixed) rhs[static_cast<std::size_t>(i)] = dofs.value(i);
  }
}

void apply_dirichlet(CsrMatrix& a, const DofMap& dofs) {
  std::vector<double> scratch(static_cast<std::size_t>(a.rows()), 0.0);
  apply_dirichlet(a, scratch, dofs);
}

// ---------------------------------------------------------------------------
// Preconditioners

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  std::copy(r.begin(), r.end(), z.begin());
}

IncompleteCholesky::IncompleteCholesky(const CsrMatrix& a) : IncompleteCholesky(a, Options{}) {}

IncompleteCholesky::IncompleteCholesky(const CsrMatrix& a, Options options) {
  if (a.rows() != a.cols()) throw std::invalid_argument("IncompleteCholesky: not square");
  n_ = a.rows();
  // Lower pattern, diagonal stored last in each row.
  row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  for (int i = 0; i < n_; ++i) {
    std::int64_t cnt = 0;
    for (auto k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      if (ci[static_cast<std::size_t>(k)] <= i) ++cnt;
    }
    row_ptr_[static_cast<std::size_t>(i) + 1] = row_ptr_[static_cast<std::size_t>(i)] + cnt;
  }
  col_idx_.resize(static_cast<std::size_t>(row_ptr_.back()));
  values_.resize(col_idx_.size());
  for (int i = 0; i < n_; ++i) {
    auto pos = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    for (auto k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      if (ci[static_cast<std::size_t>(k)] <= i) col_idx_[pos++] = ci[static_cast<std::size_t>(k)];
    }
    if (pos == static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]) ||
        col_idx_[pos - 1] != i) {
      throw SolverError("IncompleteCholesky: missing diagonal entry in row " +
                        std::to_string(i));
    }
  }
  if (try_factor(a, 0.0)) return;
  double alpha = options.initial_shift;
  for (int attempt = 0; attempt < options.max_shift_attempts; ++attempt, alpha *= 2.0) {
    if (try_factor(a, alpha)) return;
  }
  throw SolverError("IncompleteCholesky: breakdown persists after " +
                    std::to_string(options.max_shift_attempts) + " diagonal shifts");
}

bool IncompleteCholesky::try_factor(const CsrMatrix& a, double alpha) {
  shift_ = alpha;
  const auto arp = a.row_ptr();
  const auto aci = a.col_idx();
  const auto av = a.values();
  for (int i = 0; i < n_; ++i) {
    // Copy row i of A's lower part.
    auto pos = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    for (auto k = arp[static_cast<std::size_t>(i)]; k < arp[static_cast<std::size_t>(i) + 1]; ++k) {
      const int j = aci[static_cast<std::size_t>(k)];
      if (j > i) break;
      values_[pos++] = av[static_cast<std::size_t>(k)] * (j == i ? 1.0 + alpha : 1.0);
    }
    const auto ri0 = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    const auto ri1 = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]) - 1;  // diag
    for (auto p = ri0; p < ri1; ++p) {
      const int k = col_idx_[p];
      const auto rk0 = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(k)]);
      const auto rk1 = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(k) + 1]) - 1;
      // sum_{j<k} L_ij L_kj over the shared pattern
      double s = 0.0;
      auto x = ri0, y = rk0;
      while (x < p && y < rk1) {
        const int cx = col_idx_[x], cy = col_idx_[y];
        if (cx == cy) {
          s += values_[x++] * values_[y++];
        } else if (cx < cy) {
          ++x;
        } else {
          ++y;
        }
      }
      values_[p] = (values_[p] - s) / values_[rk1];
    }
    double d = values_[ri1];
    for (auto p = ri0; p < ri1; ++p) d -= values_[p] * values_[p];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    values_[ri1] = std::sqrt(d);
  }
  return true;
}

void IncompleteCholesky::apply(std::span<const double> r, std::span<double> z) const {
  // forward: L y = r (stored in z)
  for (int i = 0; i < n_; ++i) {
    const auto r0 = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    const auto rd = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]) - 1;
    double s = r[static_cast<std::size_t>(i)];
    for (auto p = r0; p < rd; ++p) s -= values_[p] * z[static_cast<std::size_t>(col_idx_[p])];
    z[static_cast<std::size_t>(i)] = s / values_[rd];
  }
  // backward: L^T z = y, column sweep over rows of L
  for (int i = n_ - 1; i >= 0; --i) {
    const auto r0 = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    const auto rd = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]) - 1;
    const double zi = z[static_cast<std::size_t>(i)] / values_[rd];
    z[static_cast<std::size_t>(i)] = zi;
    for (auto p = r0; p < rd; ++p) z[static_cast<std::size_t>(col_idx_[p])] -= values_[p] * zi;
  }
}

CsrMatrix IncompleteCholesky::factor() const {
  return CsrMatrix(n_, n_, row_ptr_, col_idx_, values_);
}

namespace detail {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Direct solves

Eigen::VectorXd direct_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw SolverError("direct_solve: matrix is not positive definite");
  }
  return llt.solve(b);
}

namespace {

Eigen::SparseMatrix<double> to_eigen(const CsrMatrix& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto v = a.values();
  for (int i = 0; i < a.rows(); ++i) {
    for (auto k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      if (v[static_cast<std::size_t>(k)] != 0.0) {
        t.emplace_back(i, ci[static_cast<std::size_t>(k)], v[static_cast<std::size_t>(k)]);
      }
    }
  }
  Eigen::SparseMatrix<double> m(a.rows(), a.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

struct FactoredSystem::DirectImpl {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

std::vector<double> direct_solve(const CsrMatrix& a, std::span<const double> b) {
  FactoredSystem sys(a, SolverOptions{SolverKind::Direct, 0.0, 0});
  return sys.solve(b);
}

FactoredSystem::FactoredSystem(CsrMatrix a, SolverOptions options, const GridLayout& layout)
    : n_(a.rows()), a_(std::move(a)), options_(options) {
  if (a_.rows() != a_.cols()) throw std::invalid_argument("FactoredSystem: not square");
  if (options_.kind == SolverKind::Direct) {
    direct_ = std::make_unique<DirectImpl>();
    direct_->llt.compute(to_eigen(a_));
    if (direct_->llt.info() != Eigen::Success) {
      throw SolverError("sparse Cholesky failed: matrix is not positive definite");
    }
    return;
  }
  const auto d = a_.diagonal();
  scale_.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw SolverError("FactoredSystem: non-positive diagonal entry");
    scale_[i] = 1.0 / std::sqrt(d[i]);
  }
  if (options_.kind == SolverKind::Multigrid) {
    if (layout.grid == nullptr) {
      throw std::invalid_argument("FactoredSystem: the multigrid solver needs a grid layout");
    }
    unscaled_ = std::make_shared<const CsrMatrix>(std::move(a_));
    a_ = CsrMatrix();
    multigrid_ = std::make_unique<GridMultigrid>(unscaled_, *layout.grid, layout.block,
                                                 layout.fixed);
    return;
  }
  const auto rp = a_.row_ptr();
  const auto ci = a_.col_idx();
  auto v = a_.values();
  for (int i = 0; i < a_.rows(); ++i) {
    for (auto k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      v[static_cast<std::size_t>(k)] *=
          scale_[static_cast<std::size_t>(i)] * scale_[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])];
    }
  }
  ic_ = IncompleteCholesky(a_);
}

namespace {

// y_j = S A S x_j for several vectors.
void scaled_multiply_block(const CsrMatrix& a, const std::vector<double>& scale, ConstVectors x,
                           Vectors y) {
  std::vector<std::vector<double>> tmp(x.size());
  std::vector<std::span<const double>> views;
  for (std::size_t j = 0; j < x.size(); ++j) {
    tmp[j].resize(x[j].size());
    for (std::size_t i = 0; i < x[j].size(); ++i) tmp[j][i] = scale[i] * x[j][i];
    views.emplace_back(tmp[j]);
  }
  a.multiply_block(views, y);
  for (const auto& yj : y)
    for (std::size_t i = 0; i < yj.size(); ++i) yj[i] *= scale[i];
}

// z_j = S^-1 M^-1 S^-1 r_j for several vectors.
void scaled_precondition_block(const GridMultigrid& m, const std::vector<double>& scale,
                               ConstVectors r, Vectors z) {
  std::vector<std::vector<double>> tmp(r.size());
  std::vector<std::span<const double>> views;
  for (std::size_t j = 0; j < r.size(); ++j) {
    tmp[j].resize(r[j].size());
    for (std::size_t i = 0; i < r[j].size(); ++i) tmp[j][i] = r[j][i] / scale[i];
    views.emplace_back(tmp[j]);
  }
  m.apply_block(views, z);
  for (const auto& zj : z)
    for (std::size_t i = 0; i < zj.size(); ++i) zj[i] /= scale[i];
}

// Independent preconditioned CG iterations on A x_j = b_j, advanced together
// so that each operator and preconditioner application covers every system
// still iterating. Per system the arithmetic is that of pcg().
template <class Multiply, class Precondition>
std::vector<SolveStats> pcg_lockstep(const Multiply& multiply, const Precondition& precondition,
                                     ConstVectors b, Vectors x, double tol, int maxit) {
  const std::size_t count = b.size();
  const std::size_t n = count > 0 ? b[0].size() : 0;
  std::vector<SolveStats> stats(count);
  std::vector<double> bnorm(count), best_norm(count), rz(count);
  std::vector<std::vector<double>> r(count), z(count), p(count), q(count), best(count);
  std::vector<std::size_t> active;

  auto spans = [](std::vector<std::vector<double>>& v, const std::vector<std::size_t>& idx) {
    std::vector<std::span<double>> out;
    for (std::size_t j : idx) out.emplace_back(v[j]);
    return out;
  };
  auto const_spans = [](const std::vector<std::vector<double>>& v, const std::vector<std::size_t>& idx) {
    std::vector<std::span<const double>> out;
    for (std::size_t j : idx) out.emplace_back(v[j]);
    return out;
  };

  std::vector<std::size_t> all;
  std::vector<std::span<const double>> xs;
  for (std::size_t j = 0; j < count; ++j) {
    bnorm[j] = detail::norm2(b[j]);
    if (bnorm[j] == 0.0) {
      std::fill(x[j].begin(), x[j].end(), 0.0);
      stats[j].converged = true;
      continue;
    }
    r[j].resize(n);
    all.push_back(j);
    xs.emplace_back(x[j]);
  }
  multiply(xs, spans(r, all));
  for (std::size_t j : all) {
    for (std::size_t i = 0; i < n; ++i) r[j][i] = b[j][i] - r[j][i];
    best_norm[j] = detail::norm2(r[j]);
    best[j].assign(x[j].begin(), x[j].end());
    if (best_norm[j] <= tol * bnorm[j]) {
      stats[j].relative_residual = best_norm[j] / bnorm[j];
      stats[j].converged = true;
    } else {
      active.push_back(j);
      z[j].resize(n);
      q[j].resize(n);
    }
  }
  precondition(const_spans(r, active), spans(z, active));
  for (std::size_t j : active) {
    p[j] = z[j];
    rz[j] = detail::dot(r[j], z[j]);
  }
  for (int it = 1; it <= maxit && !active.empty(); ++it) {
    multiply(const_spans(p, active), spans(q, active));
    std::vector<std::size_t> still;
    for (std::size_t j : active) {
      const double pq = detail::dot(p[j], q[j]);
      if (!(pq > 0.0)) continue;  // loss of positive definiteness
      const double alpha = rz[j] / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[j][i] += alpha * p[j][i];
        r[j][i] -= alpha * q[j][i];
      }
      const double rnorm = detail::norm2(r[j]);
      stats[j].iterations = it;
      if (rnorm < best_norm[j]) {
        best_norm[j] = rnorm;
        if (rnorm <= tol * bnorm[j]) {
          stats[j].relative_residual = rnorm / bnorm[j];
          stats[j].converged = true;
          continue;
        }
        std::copy(x[j].begin(), x[j].end(), best[j].begin());
      }
      still.push_back(j);
    }
    active = std::move(still);
    if (active.empty()) break;
    precondition(const_spans(r, active), spans(z, active));
    for (std::size_t j : active) {
      const double rz_new = detail::dot(r[j], z[j]);
      const double beta = rz_new / rz[j];
      rz[j] = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[j][i] = z[j][i] + beta * p[j][i];
    }
  }
  for (std::size_t j : all) {
    if (stats[j].converged) continue;
    std::copy(best[j].begin(), best[j].end(), x[j].begin());
    stats[j].relative_residual = best_norm[j] / bnorm[j];
  }
  return stats;
}

void throw_unless_converged(const SolveStats& stats, double tolerance) {
  if (stats.converged) return;
  std::ostringstream msg;
  msg << "PCG did not converge in " << stats.iterations << " iterations (relative residual "
      << stats.relative_residual << ", tolerance " << tolerance << ")";
  throw SolverError(msg.str(), stats.relative_residual);
}

}  // namespace

std::vector<double> FactoredSystem::multiply(std::span<const double> x) const {
  if (unscaled_) return unscaled_->multiply(x);
  if (scale_.empty()) return a_.multiply(x);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / scale_[i];
  auto z = a_.multiply(y);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] /= scale_[i];
  return z;
}

FactoredSystem::~FactoredSystem() = default;
FactoredSystem::FactoredSystem(FactoredSystem&&) noexcept = default;
FactoredSystem& FactoredSystem::operator=(FactoredSystem&&) noexcept = default;

double FactoredSystem::preconditioner_shift() const { return ic_.shift(); }

SolveStats FactoredSystem::solve(std::span<const double> b, std::span<double> x) const {
  if (b.size() != static_cast<std::size_t>(n_) || x.size() != b.size()) {
    throw std::invalid_argument("FactoredSystem::solve: size mismatch");
  }
  if (options_.kind == SolverKind::Direct) {
    const Eigen::Map<const Eigen::VectorXd> bb(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::Map<Eigen::VectorXd> xx(x.data(), static_cast<Eigen::Index>(x.size()));
    xx = direct_->llt.solve(bb);
    SolveStats s;
    s.converged = true;
    const double bn = bb.norm();
    if (bn > 0.0) {
      std::vector<double> r = a_.multiply(x);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
      s.relative_residual = detail::norm2(r) / bn;
    }
    return s;
  }
  if (multigrid_) {
    const std::span<const double> bs[] = {b};
    const std::span<double> xs[] = {x};
    return solve_many(bs, xs)[0];
  }
  const int maxit = options_.max_iterations > 0 ? options_.max_iterations : 10 * n_;
  std::vector<double> bs(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    bs[i] = b[i] * scale_[i];
    x[i] /= scale_[i];
  }
  const auto stats = pcg(a_, bs, x, ic_, options_.tolerance, maxit);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= scale_[i];
  throw_unless_converged(stats, options_.tolerance);
  return stats;
}

std::vector<SolveStats> FactoredSystem::solve_many(ConstVectors b, Vectors x) const {
  if (b.size() != x.size()) throw std::invalid_argument("FactoredSystem::solve_many: count mismatch");
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j].size() != static_cast<std::size_t>(n_) || x[j].size() != b[j].size()) {
      throw std::invalid_argument("FactoredSystem::solve_many: size mismatch");
    }
  }
  std::vector<SolveStats> stats;
  if (!multigrid_) {
    for (std::size_t j = 0; j < b.size(); ++j) stats.push_back(solve(b[j], x[j]));
    return stats;
  }
  const int maxit = options_.max_iterations > 0 ? options_.max_iterations : 10 * n_;
  std::vector<std::vector<double>> bs(b.size());
  std::vector<std::span<const double>> views;
  for (std::size_t j = 0; j < b.size(); ++j) {
    bs[j].resize(b[j].size());
    for (std::size_t i = 0; i < b[j].size(); ++i) {
      bs[j][i] = b[j][i] * scale_[i];
      x[j][i] /= scale_[i];
    }
    views.emplace_back(bs[j]);
  }
  stats = pcg_lockstep(
      [&](ConstVectors v, Vectors y) { scaled_multiply_block(*unscaled_, scale_, v, y); },
      [&](ConstVectors r, Vectors z) { scaled_precondition_block(*multigrid_, scale_, r, z); },
      views, x, options_.tolerance, maxit);
  for (const auto& xj : x)
    for (std::size_t i = 0; i < xj.size(); ++i) xj[i] *= scale_[i];
  for (const auto& s : stats) throw_unless_converged(s, options_.tolerance);
  return stats;
}

std::vector<double> FactoredSystem::solve(std::span<const double> b) const {
  std::vector<double> x(b.size(), 0.0);
  solve(b, x);
  return x;
}

}  // namespace darcyto
