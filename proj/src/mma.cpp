#include "darcyto/mma.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace darcyto {

void MmaParams::validate() const {
  if (!(asyinit > 0.0 && asyincr >= 1.0 && asydecr > 0.0 && asydecr <= 1.0)) {
    throw std::invalid_argument("MmaParams: invalid asymptote factors");
  }
  if (!(albefa > 0.0 && albefa < 1.0 && raa0 > 0.0)) {
    throw std::invalid_argument("MmaParams: invalid albefa or raa0");
  }
  if (!(asymin > 0.0 && asymin <= asyinit && asyinit <= asymax)) {
    throw std::invalid_argument("MmaParams: need asymin <= asyinit <= asymax");
  }
  if (!(c > 0.0 && d > 0.0)) throw std::invalid_argument("MmaParams: c and d must be positive");
}

MmaState::MmaState(int n, MmaParams params)
    : params_(params),
      low_(static_cast<std::size_t>(n), 0.0),
      upp_(static_cast<std::size_t>(n), 1.0),
      xold1_(static_cast<std::size_t>(n), 0.0),
      xold2_(static_cast<std::size_t>(n), 0.0) {
  if (n < 0) throw std::invalid_argument("MmaState: negative size");
  params_.validate();
}

struct MmaUpdater {
  static void advance(MmaState& s, std::span<const double> x) {
    const auto& p = s.params_;
    const std::size_t n = x.size();
    ++s.iteration_;
    if (s.iteration_ <= 2) {
      for (std::size_t j = 0; j < n; ++j) {
        s.low_[j] = x[j] - p.asyinit;
        s.upp_[j] = x[j] + p.asyinit;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const double trend = (x[j] - s.xold1_[j]) * (s.xold1_[j] - s.xold2_[j]);
        const double factor = trend > 0.0 ? p.asyincr : (trend < 0.0 ? p.asydecr : 1.0);
        s.low_[j] = std::clamp(x[j] - factor * (s.xold1_[j] - s.low_[j]), x[j] - p.asymax,
                               x[j] - p.asymin);
        s.upp_[j] = std::clamp(x[j] + factor * (s.upp_[j] - s.xold1_[j]), x[j] + p.asymin,
                               x[j] + p.asymax);
      }
    }
  }

  static void record(MmaState& s, std::span<const double> x) {
    s.xold2_ = s.xold1_;
    s.xold1_.assign(x.begin(), x.end());
  }
};

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double a : v) {
    if (!std::isfinite(a)) throw std::invalid_argument(what);
  }
}

}  // namespace

MmaResult mma_update(std::span<const double> x, double f0, std::span<const double> df0,
                     double g1, std::span<const double> dg1, MmaState& state, double move) {
  const std::size_t n = x.size();
  if (df0.size() != n || dg1.size() != n || static_cast<std::size_t>(state.size()) != n) {
    throw std::invalid_argument("mma_update: size mismatch");
  }
  if (!(move > 0.0 && move <= 1.0)) throw std::invalid_argument("mma_update: move must be in (0, 1]");
  if (!std::isfinite(f0) || !std::isfinite(g1)) {
    throw std::invalid_argument("mma_update: non-finite function value");
  }
  check_finite(x, "mma_update: non-finite design");
  check_finite(df0, "mma_update: non-finite objective gradient");
  check_finite(dg1, "mma_update: non-finite constraint gradient");
  for (double a : x) {
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("mma_update: design outside [0, 1]");
  }

  MmaUpdater::advance(state, x);
  const auto& prm = state.params();
  const auto& low = state.low();
  const auto& upp = state.upp();

  std::vector<double> alpha(n), beta(n), p0(n), q0(n), p1(n), q1(n);
  for (std::size_t j = 0; j < n; ++j) {
    alpha[j] = std::max({low[j] + prm.albefa * (x[j] - low[j]), x[j] - move, 0.0});
    beta[j] = std::min({upp[j] - prm.albefa * (upp[j] - x[j]), x[j] + move, 1.0});
    const double ux2 = (upp[j] - x[j]) * (upp[j] - x[j]);
    const double xl2 = (x[j] - low[j]) * (x[j] - low[j]);
    const double f_pos = std::max(df0[j], 0.0);
    const double f_neg = std::max(-df0[j], 0.0);
    p0[j] = ux2 * (1.001 * f_pos + 0.001 * f_neg + prm.raa0);
    q0[j] = xl2 * (0.001 * f_pos + 1.001 * f_neg + prm.raa0);
    const double g_pos = std::max(dg1[j], 0.0);
    const double g_neg = std::max(-dg1[j], 0.0);
    p1[j] = ux2 * (1.001 * g_pos + 0.001 * g_neg + prm.raa0);
    q1[j] = xl2 * (0.001 * g_pos + 1.001 * g_neg + prm.raa0);
  }

  auto primal = [&](double lambda, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) {
      const double sp = std::sqrt(p0[j] + lambda * p1[j]);
      const double sq = std::sqrt(q0[j] + lambda * q1[j]);
      out[j] = std::clamp((low[j] * sp + upp[j] * sq) / (sp + sq), alpha[j], beta[j]);
    }
  };
  auto model = [&](const std::vector<double>& pv, const std::vector<double>& qv, double base,
                   std::span<const double> z) {
    double v = base;
    for (std::size_t j = 0; j < n; ++j) {
      v += pv[j] * (1.0 / (upp[j] - z[j]) - 1.0 / (upp[j] - x[j])) +
           qv[j] * (1.0 / (z[j] - low[j]) - 1.0 / (x[j] - low[j]));
    }
    return v;
  };
  auto relax = [&](double lambda) { return std::max(0.0, (lambda - prm.c) / prm.d); };

  std::vector<double> z(n);
  auto dual_slope = [&](double lambda) {
    primal(lambda, z);
    return model(p1, q1, g1, z) - relax(lambda);
  };

  double lambda = 0.0;
  if (dual_slope(0.0) > 0.0) {
    double lo = 0.0;
    double hi = 1.0;
    while (dual_slope(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) throw std::runtime_error("mma_update: dual bracket failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (dual_slope(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    lambda = 0.5 * (lo + hi);
  }

  MmaResult r;
  r.lambda = lambda;
  r.x.resize(n);
  primal(lambda, r.x);
  r.y = relax(lambda);
  r.model_f0_current = f0;
  r.model_f0_next = model(p0, q0, f0, r.x);
  r.model_g1_next = model(p1, q1, g1, r.x);
  const double slack = r.model_g1_next - r.y;
  r.kkt_residual = lambda > 0.0 ? std::abs(slack) : std::max(0.0, slack);
  MmaUpdater::record(state, x);
  return r;
}

}  // namespace darcyto
