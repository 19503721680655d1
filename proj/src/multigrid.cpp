#include "darcyto/multigrid.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <stdexcept>
#include <utility>

namespace darcyto {

namespace {

StructuredGrid coarsen(const StructuredGrid& fine, Index3 factors) {
  Index3 nel = fine.elements_per_axis();
  for (int a = 0; a < 3; ++a) nel[a] = (nel[a] + factors[a] - 1) / factors[a];
  return StructuredGrid(nel, fine.lengths());
}

Index3 coarsening_factors(const StructuredGrid& grid) {
  Index3 f{1, 1, 1};
  const Index3& nel = grid.elements_per_axis();
  for (int a = 0; a < grid.dim(); ++a) {
    if (nel[a] >= 2) f[a] = 2;
  }
  return f;
}

// Coarse node indices and weights of fine node index `i` along an axis with
// `n` fine elements. With odd `n` the last coarse element spans one fine
// element.
int axis_stencil(int i, int n, int factor, std::array<int, 2>& idx, std::array<double, 2>& w) {
  if (factor == 1) {
    idx[0] = i;
    w[0] = 1.0;
    return 1;
  }
  if (i % 2 == 0 || i == n) {
    idx[0] = (i + 1) / 2;
    w[0] = 1.0;
    return 1;
  }
  idx = {i / 2, i / 2 + 1};
  w = {0.5, 0.5};
  return 2;
}

Eigen::SparseMatrix<double> to_eigen_sparse(const CsrMatrix& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto v = a.values();
  for (int i = 0; i < a.rows(); ++i) {
    for (auto k = rp[i]; k < rp[i + 1]; ++k) t.emplace_back(i, ci[k], v[k]);
  }
  Eigen::SparseMatrix<double> m(a.rows(), a.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

CsrMatrix grid_prolongation(const StructuredGrid& fine, Index3 factors, int block,
                            std::span<const unsigned char> fixed) {
  const StructuredGrid coarse = coarsen(fine, factors);
  const int nf = fine.num_nodes() * block;
  const int nc = coarse.num_nodes() * block;
  if (static_cast<int>(fixed.size()) != nf) {
    throw std::invalid_argument("grid_prolongation: fixed mask size mismatch");
  }
  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(nf) + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  cols.reserve(static_cast<std::size_t>(nf) * 2);
  vals.reserve(static_cast<std::size_t>(nf) * 2);
  std::vector<std::pair<int, double>> entries;
  for (int node = 0; node < fine.num_nodes(); ++node) {
    const Index3 ijk = fine.node_ijk(node);
    std::array<std::array<int, 2>, 3> idx{};
    std::array<std::array<double, 2>, 3> w{};
    std::array<int, 3> count{};
    for (int a = 0; a < 3; ++a) {
      count[a] = axis_stencil(ijk[a], fine.elements_per_axis()[a], factors[a], idx[a], w[a]);
    }
    entries.clear();
    for (int c = 0; c < count[2]; ++c) {
      for (int b = 0; b < count[1]; ++b) {
        for (int a = 0; a < count[0]; ++a) {
          const int cn = coarse.node_index(idx[0][a], idx[1][b], idx[2][c]);
          entries.emplace_back(cn, w[0][a] * w[1][b] * w[2][c]);
        }
      }
    }
    std::sort(entries.begin(), entries.end());
    for (int comp = 0; comp < block; ++comp) {
      const int row = node * block + comp;
      if (!fixed[static_cast<std::size_t>(row)]) {
        for (const auto& [cn, wt] : entries) {
          cols.push_back(cn * block + comp);
          vals.push_back(wt);
        }
      }
      row_ptr[static_cast<std::size_t>(row) + 1] = static_cast<std::int64_t>(cols.size());
    }
  }
  return CsrMatrix(nf, nc, std::move(row_ptr), std::move(cols), std::move(vals));
}

CsrMatrix galerkin_product(const CsrMatrix& a, const CsrMatrix& p, const StructuredGrid& coarse,
                           int block) {
  CsrMatrix ac = GridPattern(coarse, block).make_matrix();
  if (ac.rows() != p.cols() || a.rows() != p.rows()) {
    throw std::invalid_argument("galerkin_product: dimension mismatch");
  }
  const auto arp = a.row_ptr();
  const auto aci = a.col_idx();
  const auto av = a.values();
  const auto prp = p.row_ptr();
  const auto pci = p.col_idx();
  const auto pv = p.values();
  const auto crp = ac.row_ptr();
  const auto cci = ac.col_idx();
  auto cv = ac.values();

  const auto nc = static_cast<std::size_t>(ac.rows());
  std::vector<double> spa(nc, 0.0);
  std::vector<unsigned char> used(nc, 0);
  std::vector<int> touched;
  std::vector<std::int64_t> slot(nc, -1);

  for (int i = 0; i < a.rows(); ++i) {
    if (prp[i] == prp[i + 1]) continue;
    // row i of A P
    touched.clear();
    for (auto k = arp[i]; k < arp[i + 1]; ++k) {
      const int j = aci[k];
      const double aij = av[k];
      for (auto l = prp[j]; l < prp[j + 1]; ++l) {
        const int jc = pci[l];
        if (!used[jc]) {
          used[jc] = 1;
          touched.push_back(jc);
        }
        spa[jc] += aij * pv[l];
      }
    }
    for (auto l = prp[i]; l < prp[i + 1]; ++l) {
      const int ic = pci[l];
      const double wi = pv[l];
      for (auto s = crp[ic]; s < crp[ic + 1]; ++s) slot[cci[s]] = s;
      for (int jc : touched) {
        const std::int64_t s = slot[jc];
        if (s < 0) throw std::logic_error("galerkin_product: entry outside coarse pattern");
        cv[s] += wi * spa[jc];
      }
      for (auto s = crp[ic]; s < crp[ic + 1]; ++s) slot[cci[s]] = -1;
    }
    for (int jc : touched) {
      spa[jc] = 0.0;
      used[jc] = 0;
    }
  }
  for (int r = 0; r < ac.rows(); ++r) {
    for (auto s = crp[r]; s < crp[r + 1]; ++s) {
      if (cci[s] == r && cv[s] == 0.0) cv[s] = 1.0;
    }
  }
  return ac;
}

GridMultigrid::Smoother::Smoother(const CsrMatrix& a)
    : row_ptr(a.row_ptr().begin(), a.row_ptr().end()),
      col_idx(a.col_idx().begin(), a.col_idx().end()),
      values(a.values().begin(), a.values().end()),
      diag_pos(static_cast<std::size_t>(a.rows())),
      inv_diag(static_cast<std::size_t>(a.rows())) {
  for (int i = 0; i < a.rows(); ++i) {
    auto k = row_ptr[static_cast<std::size_t>(i)];
    const auto end = row_ptr[static_cast<std::size_t>(i) + 1];
    while (k < end && col_idx[static_cast<std::size_t>(k)] != i) ++k;
    const double d = k < end ? values[static_cast<std::size_t>(k)] : 0.0;
    if (!(d > 0.0)) throw std::runtime_error("multigrid: non-positive diagonal entry");
    diag_pos[static_cast<std::size_t>(i)] = k;
    inv_diag[static_cast<std::size_t>(i)] = 1.0 / d;
  }
}

namespace {

using Smoother = GridMultigrid::Smoother;

template <int M>
void sweep_group(const Smoother& sm, const std::span<const double>* r, const std::span<double>* z,
                 bool forward) {
  const auto relax = [&](std::size_t i) {
    std::array<double, M> s;
    for (int m = 0; m < M; ++m) s[m] = r[m][i];
    const auto d = static_cast<std::size_t>(sm.diag_pos[i]);
    for (auto k = static_cast<std::size_t>(sm.row_ptr[i]); k < d; ++k) {
      const auto c = static_cast<std::size_t>(sm.col_idx[k]);
      for (int m = 0; m < M; ++m) s[m] -= sm.values[k] * z[m][c];
    }
    for (auto k = d + 1; k < static_cast<std::size_t>(sm.row_ptr[i + 1]); ++k) {
      const auto c = static_cast<std::size_t>(sm.col_idx[k]);
      for (int m = 0; m < M; ++m) s[m] -= sm.values[k] * z[m][c];
    }
    for (int m = 0; m < M; ++m) z[m][i] = s[m] * sm.inv_diag[i];
  };
  const std::size_t n = sm.inv_diag.size();
  if (forward) {
    for (std::size_t i = 0; i < n; ++i) relax(i);
  } else {
    for (std::size_t i = n; i-- > 0;) relax(i);
  }
}

// Rows are exact in the lower part and diagonal right after a forward sweep,
// so only the strictly upper part carries a residual.
template <int M>
void residual_group(const Smoother& sm, const std::span<const double>* before,
                    const std::span<const double>* z, const std::span<double>* res) {
  const std::size_t n = sm.inv_diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, M> s{};
    for (auto k = static_cast<std::size_t>(sm.diag_pos[i]) + 1;
         k < static_cast<std::size_t>(sm.row_ptr[i + 1]); ++k) {
      const auto c = static_cast<std::size_t>(sm.col_idx[k]);
      for (int m = 0; m < M; ++m) {
        s[m] += sm.values[k] * ((before == nullptr ? 0.0 : before[m][c]) - z[m][c]);
      }
    }
    for (int m = 0; m < M; ++m) res[m][i] = s[m];
  }
}

std::vector<std::span<const double>> const_views(const std::vector<std::vector<double>>& v) {
  return {v.begin(), v.end()};
}

std::vector<std::span<double>> mutable_views(std::vector<std::vector<double>>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

void GridMultigrid::Smoother::sweep(ConstVectors r, Vectors z, bool forward) const {
  std::size_t j = 0;
  for (; j + 2 <= r.size(); j += 2) sweep_group<2>(*this, &r[j], &z[j], forward);
  if (j < r.size()) sweep_group<1>(*this, &r[j], &z[j], forward);
}

void GridMultigrid::Smoother::residual_after_forward(ConstVectors z_before, ConstVectors z,
                                                     Vectors res) const {
  const auto* before = z_before.empty() ? nullptr : z_before.data();
  std::size_t j = 0;
  for (; j + 2 <= z.size(); j += 2) {
    residual_group<2>(*this, before ? before + j : nullptr, &z[j], &res[j]);
  }
  if (j < z.size()) residual_group<1>(*this, before ? before + j : nullptr, &z[j], &res[j]);
}

struct GridMultigrid::CoarseSolver {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

GridMultigrid::GridMultigrid(std::shared_ptr<const CsrMatrix> a, const StructuredGrid& grid,
                             int block, std::span<const unsigned char> fixed)
    : GridMultigrid(std::move(a), grid, block, fixed, Options{}) {}

GridMultigrid::GridMultigrid(std::shared_ptr<const CsrMatrix> a, const StructuredGrid& grid,
                             int block, std::span<const unsigned char> fixed, Options options) {
  if (!a || a->rows() != grid.num_nodes() * block) {
    throw std::invalid_argument("GridMultigrid: matrix does not match the grid layout");
  }
  if (options.smoothing_sweeps < 1) {
    throw std::invalid_argument("GridMultigrid: smoothing_sweeps must be >= 1");
  }
  StructuredGrid current = grid;
  std::vector<unsigned char> mask(fixed.begin(), fixed.end());
  levels_.push_back(Level{std::move(a), {}, {}});
  sizes_.push_back(levels_.back().a->rows());
  while (true) {
    Level& fine = levels_.back();
    const Index3 f = coarsening_factors(current);
    if (fine.a->rows() <= options.coarsest_dofs || f == Index3{1, 1, 1}) break;
    fine.smoother = Smoother(*fine.a);
    fine.p = grid_prolongation(current, f, block, mask);
    StructuredGrid coarse = coarsen(current, f);
    auto ac = std::make_shared<const CsrMatrix>(galerkin_product(*fine.a, fine.p, coarse, block));
    mask.assign(static_cast<std::size_t>(ac->rows()), 0);
    current = std::move(coarse);
    levels_.push_back(Level{std::move(ac), {}, {}});
    sizes_.push_back(levels_.back().a->rows());
  }
  smoothing_sweeps_ = options.smoothing_sweeps;
  coarse_ = std::make_unique<CoarseSolver>();
  coarse_->llt.compute(to_eigen_sparse(*levels_.back().a));
  if (coarse_->llt.info() != Eigen::Success) {
    throw std::runtime_error("GridMultigrid: coarsest level factorization failed");
  }
  // coarse matrices live on in the smoothers and the coarse factor
  for (std::size_t i = 1; i < levels_.size(); ++i) levels_[i].a.reset();
}

GridMultigrid::~GridMultigrid() = default;
GridMultigrid::GridMultigrid(GridMultigrid&&) noexcept = default;
GridMultigrid& GridMultigrid::operator=(GridMultigrid&&) noexcept = default;

std::vector<int> GridMultigrid::level_sizes() const { return sizes_; }

void GridMultigrid::apply(std::span<const double> r, std::span<double> z) const {
  const std::span<const double> rs[] = {r};
  const std::span<double> zs[] = {z};
  cycle(0, rs, zs);
}

void GridMultigrid::apply_block(ConstVectors r, Vectors z) const {
  if (r.size() != z.size()) throw std::invalid_argument("GridMultigrid::apply_block: count mismatch");
  cycle(0, r, z);
}

void GridMultigrid::cycle(std::size_t level, ConstVectors r, Vectors z) const {
  const Level& l = levels_[level];
  const std::size_t count = r.size();
  if (level + 1 == levels_.size()) {
    for (std::size_t j = 0; j < count; ++j) {
      const Eigen::Map<const Eigen::VectorXd> rhs(r[j].data(), static_cast<Eigen::Index>(r[j].size()));
      Eigen::Map<Eigen::VectorXd>(z[j].data(), static_cast<Eigen::Index>(z[j].size())) =
          coarse_->llt.solve(rhs);
    }
    return;
  }
  const auto n = r[0].size();
  for (const auto& zj : z) std::fill(zj.begin(), zj.end(), 0.0);
  std::vector<std::vector<double>> before;
  for (int s = 0; s < smoothing_sweeps_; ++s) {
    if (s + 1 == smoothing_sweeps_ && s > 0) {
      before.clear();
      for (const auto& zj : z) before.emplace_back(zj.begin(), zj.end());
    }
    l.smoother.sweep(r, z, true);
  }
  std::vector<std::vector<double>> res(count, std::vector<double>(n));
  const std::vector<std::span<const double>> zc_const(z.begin(), z.end());
  l.smoother.residual_after_forward(const_views(before), zc_const, mutable_views(res));

  const auto nc = static_cast<std::size_t>(l.p.cols());
  std::vector<std::vector<double>> rc(count, std::vector<double>(nc)), zc(count, std::vector<double>(nc));
  for (std::size_t j = 0; j < count; ++j) l.p.multiply_transpose(res[j], rc[j]);
  cycle(level + 1, const_views(rc), mutable_views(zc));
  for (std::size_t j = 0; j < count; ++j) {
    l.p.multiply(zc[j], res[j]);
    for (std::size_t i = 0; i < n; ++i) z[j][i] += res[j][i];
  }

  for (int s = 0; s < smoothing_sweeps_; ++s) l.smoother.sweep(r, z, false);
}

}  // namespace darcyto
