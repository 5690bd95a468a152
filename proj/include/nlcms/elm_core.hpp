#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nlcms/nl_frontend.hpp"
#include "nlcms/rng.hpp"
#include "nlcms/types.hpp"

namespace nlcms {

/// Hidden-layer outputs, one row per sample (D x N_r).
struct ActivationMatrix {
  CMatrix G;
  ActivationMode source_mode = ActivationMode::Approximate;
};

enum class SolverPath { Primal, Dual };

struct IdealWeights {
  CVector w_star;
  double ridge = 0.0;
  SolverPath solver_path = SolverPath::Primal;
};

enum class TargetEncoding {
  ZeroOne,    // targets {0, 1}, decision threshold 0.5
  PlusMinus,  // targets {-1, +1}, decision threshold 0
};

/// Regression target for a class label in {0, 1}.
double target_value(int label, TargetEncoding encoding);

/// x_bar_k = x_k * exp(j pi theta_k). Features must lie in [0, 1].
CVector encode_am(std::span<const double> x, std::span<const double> theta);
CVector encode_am(std::span<const double> x);

/// y = H x_bar.
CVector forward_to_frontend(const CVector& x_bar, const CMatrix& H);

/// Row i of G is activate(H encode_am(inputs.row(i), tx_phases), bias, mode)^T.
/// Empty `tx_phases` means all-zero transmit phases.
ActivationMatrix build_activation_matrix(const RMatrix& inputs, const CMatrix& H,
                                         const BiasVector& bias, ActivationMode mode,
                                         std::span<const double> tx_phases = {});

/// w* = (G^H G + ridge I)^-1 G^H z, solved on the smaller Gram matrix with an LLT
/// factorization. Passing `force` pins the primal or dual route.
IdealWeights ridge_solve(const CMatrix& G, const CVector& z, double ridge,
                         std::optional<SolverPath> force = std::nullopt);

/// z_hat = (w*)^T g(y), plus CN(0, sigma^2) noise when noise_sigma2 > 0.
cplx predict_ideal(const IdealWeights& w, const CVector& g_y, double noise_sigma2, Rng& rng);

/// Class label {0, 1} from the receiver output.
int decide(cplx z_hat, TargetEncoding encoding);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace nlcms
