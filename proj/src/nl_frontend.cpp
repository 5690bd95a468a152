#include "nlcms/nl_frontend.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nlcms/errors.hpp"

namespace nlcms {

double bias_scale(BiasScaleRule rule, double h_frobenius, std::size_t n_r, std::size_t n_t) {
  const double cells = static_cast<double>(n_r) * static_cast<double>(n_t);
  switch (rule) {
    case BiasScaleRule::RmsEntry:
      return h_frobenius / (2.0 * std::sqrt(cells));
    case BiasScaleRule::PerElement:
      return h_frobenius / (2.0 * cells);
  }
  return 0.0;
}

BiasVector sample_bias_with_scale(std::size_t n_r, double scale, Rng& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidArgument("sample_bias: Rayleigh scale must be positive and finite");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BiasVector out;
  out.scale = scale;
  out.b.resize(static_cast<Eigen::Index>(n_r));
  for (Eigen::Index k = 0; k < out.b.size(); ++k) {
    // Inverse CDF of Rayleigh(scale).
    const double u = unit(rng);
    double r = scale * std::sqrt(-2.0 * std::log1p(-u));
    if (!(r > 0.0)) r = scale;
    out.b(k) = r;
  }
  return out;
}

BiasVector sample_bias(std::size_t n_r, double h_frobenius, std::size_t n_t, Rng& rng,
                       BiasScaleRule rule) {
  if (n_r == 0 || n_t == 0) throw InvalidArgument("sample_bias: dimensions must be positive");
  return sample_bias_with_scale(n_r, bias_scale(rule, h_frobenius, n_r, n_t), rng);
}

double amam_exact(double v, double b) {
  if (v <= b) return 0.0;
  const double ratio = b / v;
  return (v * std::acos(ratio) - b * std::sqrt(1.0 - ratio * ratio)) / kPi;
}

namespace {

// 7-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 7> kGlNodes = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
    0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
constexpr std::array<double, 7> kGlWeights = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

template <typename Fn>
double gauss_legendre(const Fn& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) sum += kGlWeights[i] * f(mid + half * kGlNodes[i]);
  return half * sum;
}

template <typename Fn>
double adaptive(const Fn& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = gauss_legendre(f, a, m);
  const double right = gauss_legendre(f, m, b);
  const double both = left + right;
  if (depth <= 0 || std::abs(both - whole) <= tol) return both;
  return adaptive(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

double amam_quadrature(const std::function<double(double)>& F, double v, std::size_t n_points) {
  if (n_points < 16) throw InvalidArgument("amam_quadrature: need at least 16 panels");
  if (!(v >= 0.0)) throw InvalidArgument("amam_quadrature: envelope must be non-negative");

  auto integrand = [&](double phi) {
    const double c = std::cos(phi);
    const double val = F(v * c);
    if (!std::isfinite(val)) throw NumericFailure("amam_quadrature: non-finite F value");
    return val * c;
  };

  const double width = kPi / static_cast<double>(n_points);
  std::vector<double> coarse(n_points);
  double magnitude = 0.0;
  for (std::size_t p = 0; p < n_points; ++p) {
    const double a = width * static_cast<double>(p);
    coarse[p] = gauss_legendre(integrand, a, a + width);
    magnitude += std::abs(coarse[p]);
  }
  // Absolute tolerance relative to the integrand mass; the floor keeps v = 0 cheap.
  const double tol = std::max(magnitude, 1e-300) * 1e-13 / static_cast<double>(n_points);

  double total = 0.0;
  for (std::size_t p = 0; p < n_points; ++p) {
    const double a = width * static_cast<double>(p);
    total += adaptive(integrand, a, a + width, coarse[p], tol, 40);
  }
  return 2.0 / kPi * total;
}

CVector activate(const CVector& y, const BiasVector& bias, ActivationMode mode) {
  if (y.size() != bias.b.size())
    throw InvalidArgument("activate: input length " + std::to_string(y.size()) +
                          " does not match bias length " + std::to_string(bias.b.size()));
  CVector out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double mag = std::abs(y(k));
    const double b = bias.b(k);
    if (mag <= b) {
      out(k) = cplx(0.0, 0.0);
      continue;
    }
    const double env = mode == ActivationMode::Approximate ? 0.5 * (mag - b) : amam_exact(mag, b);
    out(k) = y(k) * (env / mag);
  }
  return out;
}

}  // namespace nlcms
