#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nlcms/channel_models.hpp"
#include "nlcms/elm_core.hpp"
#include "nlcms/rng.hpp"
#include "nlcms/types.hpp"

namespace nlcms {

inline constexpr double kRhoMin = 1e-9;

enum class PhaseRange {
  HalfCircle,  // theta in [0, 1], i.e. phase in [0, pi]
  FullCircle,  // theta in [0, 2), wrapped
};

/// Tunable parameters of the linear cascade. Layer l response is
/// amps[l] .* exp(j pi phases[l]); layer 0 is the one facing the front layer.
struct CascadeState {
  std::vector<RVector> amps;
  std::vector<RVector> phases;
  double rho = 1.0;
};

/// Same shape as CascadeState; partial derivatives of the normalized squared objective.
struct CascadeGradient {
  std::vector<RVector> amps;
  std::vector<RVector> phases;
  double rho = 0.0;
};

struct PgdOptions {
  std::size_t max_iters = 1500;
  double step_size = 0.01;
  double rel_tol = 1e-6;
  std::size_t patience = 20;
  PhaseRange phase_range = PhaseRange::HalfCircle;
  /// Called after every evaluated iterate (before the step) with the iteration index.
  std::function<void(std::size_t, const CascadeState&, double)> observer;
};

struct PgdTrace {
  /// Best-so-far value of ||w* - rho w_phi^T|| at each evaluated iterate.
  std::vector<double> objective_per_iter;
  /// Objective of the iterate itself, which may oscillate under a fixed step.
  std::vector<double> raw_objective_per_iter;
  std::size_t iters_run = 0;
  bool converged = false;
  double final_objective = 0.0;
};

/// Throws InvalidArgument unless `state` matches the layer sizes of `channels`
/// and lies inside the feasible set.
void check_state(const CascadeState& state, const ChannelRealization& channels,
                 PhaseRange range = PhaseRange::FullCircle);

/// w_phi = h_L^T Phi_L H_L ... Phi_1 H_1, returned as a length-N_r column.
/// Evaluated as a chain of diagonal scalings and matrix-vector products.
CVector cascade_transfer(const CascadeState& state, const ChannelRealization& channels);

/// ||w* - rho w_phi^T||_2.
double approximation_objective(const IdealWeights& w_star, const CascadeState& state,
                               const ChannelRealization& channels);

/// f = ||w* - rho w_phi^T||^2 / ||w*||^2 (||w*|| = 1 when w* = 0) and its gradient
/// with respect to every amplitude, phase and rho.
std::pair<double, CascadeGradient> objective_and_gradient(const IdealWeights& w_star,
                                                          const CascadeState& state,
                                                          const ChannelRealization& channels);

/// Positive least-squares gain for a fixed transfer, clamped at kRhoMin.
double optimal_gain(const CVector& w_phi, const CVector& w_star);

/// All-pass amplitudes, random phases, least-squares gain. Phase draws whose
/// transfer is anti-correlated with w* (which would pin rho at kRhoMin and stall
/// the descent) are redrawn a bounded number of times.
CascadeState init_state(const ChannelRealization& channels, const IdealWeights& w_star, Rng& rng,
                        const PgdOptions& opts = {});

void project(CascadeState& state, PhaseRange range);

/// Projected gradient descent on the normalized squared objective over all
/// amplitudes and phases; rho is re-solved exactly after every step. Returns the
/// best iterate seen.
std::pair<CascadeState, PgdTrace> pgd_fit(const IdealWeights& w_star,
                                          const ChannelRealization& channels,
                                          const PgdOptions& opts, Rng& rng,
                                          std::optional<CascadeState> initial = std::nullopt);

}  // namespace nlcms
