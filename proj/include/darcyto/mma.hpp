#pragma once

// Method of Moving Asymptotes for min f0(x) s.t. g1(x) <= 0, 0 <= x <= 1,
// with an external move limit. The single constraint gives a one-dimensional
// dual that is solved by bisection on the multiplier.

#include <span>
#include <vector>

namespace darcyto {

struct MmaParams {
  double asyinit = 0.5;   ///< initial asymptote distance / box width
  double asyincr = 1.2;   ///< expansion on monotone progress
  double asydecr = 0.7;   ///< contraction on oscillation
  double albefa = 0.1;    ///< step bound as a fraction of the asymptote distance
  double raa0 = 1e-5;     ///< regularization of the approximation curvature
  double asymin = 0.01;   ///< smallest asymptote distance / box width
  double asymax = 10.0;   ///< largest asymptote distance / box width
  double c = 1000.0;      ///< linear penalty of the elastic constraint variable y
  double d = 1.0;         ///< quadratic penalty of y

  void validate() const;
  bool operator==(const MmaParams&) const = default;
};

class MmaState {
 public:
  MmaState() = default;
  MmaState(int n, MmaParams params = {});

  int size() const { return static_cast<int>(low_.size()); }
  int iteration() const { return iteration_; }
  const MmaParams& params() const { return params_; }
  const std::vector<double>& low() const { return low_; }
  const std::vector<double>& upp() const { return upp_; }
  const std::vector<double>& xold1() const { return xold1_; }
  const std::vector<double>& xold2() const { return xold2_; }

 private:
  friend struct MmaUpdater;
  MmaParams params_;
  int iteration_ = 0;
  std::vector<double> low_, upp_, xold1_, xold2_;
};

struct MmaResult {
  std::vector<double> x;
  double lambda = 0.0;           ///< constraint multiplier of the subproblem
  double y = 0.0;                ///< elastic constraint relaxation
  double model_f0_current = 0.0; ///< objective approximation at the incoming x
  double model_f0_next = 0.0;    ///< objective approximation at the new x
  double model_g1_next = 0.0;    ///< constraint approximation at the new x
  double kkt_residual = 0.0;     ///< dual feasibility / complementarity residual
};

/// One MMA step. Entries of `x` outside [0, 1] are rejected; `state` is
/// advanced in place. Throws std::invalid_argument on size mismatch,
/// non-finite input or a move limit outside (0, 1].
MmaResult mma_update(std::span<const double> x, double f0, std::span<const double> df0,
                     double g1, std::span<const double> dg1, MmaState& state, double move);

}  // namespace darcyto
