#include "nlcms/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlcms/errors.hpp"

namespace nlcms {

namespace {

CVector layer_response(const CascadeState& state, std::size_t l) {
  const RVector& a = state.amps[l];
  const RVector& th = state.phases[l];
  CVector phi(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) phi(k) = std::polar(a(k), kPi * th(k));
  return phi;
}

double phase_upper(PhaseRange range) { return range == PhaseRange::HalfCircle ? 1.0 : 2.0; }

// Transfer plus the incoming vector u_l seen by each layer (needed by the gradient).
CVector forward(const CascadeState& state, const ChannelRealization& channels,
                std::vector<CVector>* incoming, std::vector<CVector>* responses) {
  const std::size_t L = channels.num_layers();
  CVector u = channels.terminal;
  if (incoming) incoming->assign(L, CVector());
  if (responses) responses->assign(L, CVector());
  for (std::size_t i = L; i-- > 0;) {
    CVector phi = layer_response(state, i);
    if (incoming) (*incoming)[i] = u;
    CVector s = u.cwiseProduct(phi);
    u = channels.layer_channels[i].transpose() * s;
    if (responses) (*responses)[i] = std::move(phi);
  }
  return u;
}

}  // namespace

void check_state(const CascadeState& state, const ChannelRealization& channels, PhaseRange range) {
  const std::size_t L = channels.num_layers();
  if (L == 0) throw InvalidArgument("cascade: channel realization has no cascade layers");
  if (state.amps.size() != L || state.phases.size() != L)
    throw InvalidArgument("cascade: state has " + std::to_string(state.amps.size()) +
                          " layers, channels have " + std::to_string(L));
  if (channels.terminal.size() != channels.layer_channels.back().rows())
    throw InvalidArgument("cascade: terminal vector does not match last layer");
  const double upper = phase_upper(range);
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::Index n = channels.layer_channels[l].rows();
    if (state.amps[l].size() != n || state.phases[l].size() != n)
      throw InvalidArgument("cascade: layer " + std::to_string(l) + " expects " +
                            std::to_string(n) + " elements");
    if ((state.amps[l].array() < 0.0).any() || (state.amps[l].array() > 1.0).any())
      throw InvalidArgument("cascade: amplitude outside [0, 1] in layer " + std::to_string(l));
    if ((state.phases[l].array() < 0.0).any() || (state.phases[l].array() > upper).any())
      throw InvalidArgument("cascade: phase outside range in layer " + std::to_string(l));
  }
  if (!(state.rho > 0.0)) throw InvalidArgument("cascade: gain must be positive");
}

CVector cascade_transfer(const CascadeState& state, const ChannelRealization& channels) {
  check_state(state, channels);
  return forward(state, channels, nullptr, nullptr);
}

double approximation_objective(const IdealWeights& w_star, const CascadeState& state,
                               const ChannelRealization& channels) {
  const CVector w = cascade_transfer(state, channels);
  if (w.size() != w_star.w_star.size())
    throw InvalidArgument("approximation_objective: weight length mismatch");
  return (w_star.w_star - state.rho * w).norm();
}

std::pair<double, CascadeGradient> objective_and_gradient(const IdealWeights& w_star,
                                                          const CascadeState& state,
                                                          const ChannelRealization& channels) {
  check_state(state, channels);
  const CVector& target = w_star.w_star;
  std::vector<CVector> incoming;
  std::vector<CVector> responses;
  const CVector w = forward(state, channels, &incoming, &responses);
  if (w.size() != target.size())
    throw InvalidArgument("objective_and_gradient: weight length mismatch");

  const double sq = target.squaredNorm();
  const double norm = sq > 0.0 ? sq : 1.0;
  const CVector r = state.rho * w - target;
  const double value = r.squaredNorm() / norm;

  const std::size_t L = channels.num_layers();
  CascadeGradient grad;
  grad.amps.resize(L);
  grad.phases.resize(L);
  grad.rho = 2.0 * (r.conjugate().cwiseProduct(w)).sum().real() / norm;

  const double scale = 2.0 * state.rho / norm;
  CVector t = r.conjugate();
  for (std::size_t l = 0; l < L; ++l) {
    const CVector p = channels.layer_channels[l] * t;
    const CVector& u = incoming[l];
    const CVector& phi = responses[l];
    const RVector& theta = state.phases[l];
    RVector ga(p.size());
    RVector gt(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const cplx up = u(k) * p(k);
      ga(k) = scale * (up * std::polar(1.0, kPi * theta(k))).real();
      gt(k) = -scale * kPi * (up * phi(k)).imag();
    }
    grad.amps[l] = std::move(ga);
    grad.phases[l] = std::move(gt);
    t = phi.cwiseProduct(p);
  }
  return {value, std::move(grad)};
}

double optimal_gain(const CVector& w_phi, const CVector& w_star) {
  const double energy = w_phi.squaredNorm();
  if (!(energy > 0.0)) return kRhoMin;
  const double corr = w_phi.dot(w_star).real();  // dot() conjugates the left operand
  return std::max(kRhoMin, corr / energy);
}

void project(CascadeState& state, PhaseRange range) {
  for (auto& a : state.amps) a = a.cwiseMax(0.0).cwiseMin(1.0);
  for (auto& th : state.phases) {
    if (range == PhaseRange::HalfCircle) {
      th = th.cwiseMax(0.0).cwiseMin(1.0);
    } else {
      for (Eigen::Index k = 0; k < th.size(); ++k) {
        double v = std::fmod(th(k), 2.0);
        if (v < 0.0) v += 2.0;
        th(k) = v >= 2.0 ? 0.0 : v;
      }
    }
  }
  state.rho = std::max(state.rho, kRhoMin);
}

CascadeState init_state(const ChannelRealization& channels, const IdealWeights& w_star, Rng& rng,
                        const PgdOptions& opts) {
  const std::size_t L = channels.num_layers();
  if (L == 0) throw InvalidArgument("init_state: channel realization has no cascade layers");
  constexpr int kMaxDraws = 32;

  const double upper = phase_upper(opts.phase_range);
  std::uniform_real_distribution<double> phase(0.0, upper);

  CascadeState best;
  double best_corr = -std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    CascadeState s;
    s.amps.resize(L);
    s.phases.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const Eigen::Index n = channels.layer_channels[l].rows();
      s.amps[l] = RVector::Ones(n);
      s.phases[l].resize(n);
      for (Eigen::Index k = 0; k < n; ++k) s.phases[l](k) = phase(rng);
    }
    const CVector w = forward(s, channels, nullptr, nullptr);
    if (w.size() != w_star.w_star.size())
      throw InvalidArgument("init_state: weight length mismatch");
    s.rho = optimal_gain(w, w_star.w_star);
    const double corr = w.dot(w_star.w_star).real();
    if (corr > best_corr) {
      best_corr = corr;
      best = std::move(s);
    }
    if (corr >= 0.0) break;
  }
  return best;
}

std::pair<CascadeState, PgdTrace> pgd_fit(const IdealWeights& w_star,
                                          const ChannelRealization& channels,
                                          const PgdOptions& opts, Rng& rng,
                                          std::optional<CascadeState> initial) {
  if (opts.max_iters < 1) throw InvalidArgument("pgd_fit: max_iters must be at least 1");
  if (!(opts.step_size > 0.0)) throw InvalidArgument("pgd_fit: step size must be positive");
  if (!w_star.w_star.allFinite()) throw InvalidArgument("pgd_fit: non-finite target weights");

  CascadeState state = initial ? std::move(*initial) : init_state(channels, w_star, rng, opts);
  check_state(state, channels, opts.phase_range);

  const double target_norm = w_star.w_star.norm();
  const double exact_tol = 1e-12 * (target_norm > 0.0 ? target_norm : 1.0);
  const double norm_scale = target_norm > 0.0 ? target_norm : 1.0;

  PgdTrace trace;
  CascadeState best = state;
  double best_obj = std::numeric_limits<double>::infinity();
  std::size_t stalled = 0;

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    auto [value, grad] = objective_and_gradient(w_star, state, channels);
    const double obj = std::sqrt(value) * norm_scale;
    if (!std::isfinite(obj)) throw NumericFailure("pgd_fit: non-finite objective", static_cast<long>(it));
    if (opts.observer) opts.observer(it, state, obj);

    const double prev_best = best_obj;
    if (obj < best_obj) {
      best_obj = obj;
      best = state;
    }
    trace.raw_objective_per_iter.push_back(obj);
    trace.objective_per_iter.push_back(best_obj);
    trace.iters_run = it;

    if (best_obj <= exact_tol) {
      trace.converged = true;
      break;
    }
    if (std::isfinite(prev_best)) {
      const double improvement = (prev_best - best_obj) / prev_best;
      stalled = improvement < opts.rel_tol ? stalled + 1 : 0;
      if (stalled >= opts.patience) {
        trace.converged = true;
        break;
      }
    }
    if (it + 1 == opts.max_iters) break;

    for (std::size_t l = 0; l < state.amps.size(); ++l) {
      if (!grad.amps[l].allFinite() || !grad.phases[l].allFinite())
        throw NumericFailure("pgd_fit: non-finite gradient", static_cast<long>(it));
      state.amps[l] -= opts.step_size * grad.amps[l];
      state.phases[l] -= opts.step_size * grad.phases[l];
    }
    project(state, opts.phase_range);
    state.rho = optimal_gain(forward(state, channels, nullptr, nullptr), w_star.w_star);
    trace.iters_run = it + 1;
  }

  trace.final_objective = trace.objective_per_iter.back();
  return {std::move(best), std::move(trace)};
}

}  // namespace nlcms
