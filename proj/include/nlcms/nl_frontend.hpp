#pragma once

#include <cstddef>
#include <functional>

#include "nlcms/rng.hpp"
#include "nlcms/types.hpp"

namespace nlcms {

/// Per-element thresholds of the nonlinear front layer. All entries > 0.
struct BiasVector {
  RVector b;
  double scale = 0.0;
};

enum class ActivationMode {
  Exact,        // first-harmonic AM/AM of an ideal threshold diode
  Approximate,  // 0.5 * max(0, |y| - b), phase preserved (modReLU-like)
};

/// How the Rayleigh scale of the bias draw is derived from ||H||_F.
enum class BiasScaleRule {
  RmsEntry,    // ||H||_F / (2 sqrt(N_r N_t)): half the RMS channel entry
  PerElement,  // ||H||_F / (2 N_r N_t)
};

double bias_scale(BiasScaleRule rule, double h_frobenius, std::size_t n_r, std::size_t n_t);

/// Draws N_r i.i.d. Rayleigh thresholds with the given scale. Zero draws are
/// replaced by the scale itself so that every entry is strictly positive.
BiasVector sample_bias_with_scale(std::size_t n_r, double scale, Rng& rng);

BiasVector sample_bias(std::size_t n_r, double h_frobenius, std::size_t n_t, Rng& rng,
                       BiasScaleRule rule = BiasScaleRule::RmsEntry);

/// Closed-form AM/AM for a thresholding element:
///   0                                                  for v <= b
///   (v acos(b/v) - b sqrt(1 - (b/v)^2)) / pi           otherwise
double amam_exact(double v, double b);

/// C(v) = (2/pi) * integral_0^pi F(v cos phi) cos phi dphi.
///
/// `n_points` uniform panels seed an adaptive 7-point Gauss-Legendre scheme that
/// bisects each panel until the halves agree, so kinks in F (threshold devices)
/// are resolved without knowing where they are.
double amam_quadrature(const std::function<double(double)>& F, double v,
                       std::size_t n_points = 64);

/// Element-wise g(y) = C(|y|) exp(j arg y); g(0) = 0.
CVector activate(const CVector& y, const BiasVector& bias, ActivationMode mode);

}  // namespace nlcms
