#include "nlcms/elm_core.hpp"

#include <cmath>
#include <string>

#include "nlcms/errors.hpp"

namespace nlcms {

double target_value(int label, TargetEncoding encoding) {
  if (label != 0 && label != 1) throw InvalidArgument("target_value: label must be 0 or 1");
  return encoding == TargetEncoding::ZeroOne ? static_cast<double>(label) : 2.0 * label - 1.0;
}

CVector encode_am(std::span<const double> x, std::span<const double> theta) {
  if (x.size() != theta.size()) throw InvalidArgument("encode_am: phase vector length mismatch");
  CVector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= 0.0 && x[k] <= 1.0))
      throw InvalidArgument("encode_am: feature " + std::to_string(k) + " outside [0, 1]");
    out(static_cast<Eigen::Index>(k)) =
        x[k] == 0.0 || theta[k] == 0.0 ? cplx(x[k], 0.0) : std::polar(x[k], kPi * theta[k]);
  }
  return out;
}

CVector encode_am(std::span<const double> x) {
  const std::vector<double> zeros(x.size(), 0.0);
  return encode_am(x, zeros);
}

CVector forward_to_frontend(const CVector& x_bar, const CMatrix& H) {
  if (H.cols() != x_bar.size())
    throw InvalidArgument("forward_to_frontend: channel has " + std::to_string(H.cols()) +
                          " columns, signal has " + std::to_string(x_bar.size()) + " entries");
  return H * x_bar;
}

ActivationMatrix build_activation_matrix(const RMatrix& inputs, const CMatrix& H,
                                         const BiasVector& bias, ActivationMode mode,
                                         std::span<const double> tx_phases) {
  if (inputs.cols() != H.cols())
    throw InvalidArgument("build_activation_matrix: feature length " +
                          std::to_string(inputs.cols()) + " != N_t " + std::to_string(H.cols()));
  if (bias.b.size() != H.rows())
    throw InvalidArgument("build_activation_matrix: bias length does not match N_r");
  for (Eigen::Index i = 0; i < inputs.rows(); ++i)
    for (Eigen::Index k = 0; k < inputs.cols(); ++k)
      if (!(inputs(i, k) >= 0.0 && inputs(i, k) <= 1.0))
        throw InvalidArgument("build_activation_matrix: feature outside [0, 1] in sample " +
                              std::to_string(i));

  if (!tx_phases.empty() && static_cast<Eigen::Index>(tx_phases.size()) != inputs.cols())
    throw InvalidArgument("build_activation_matrix: transmit phase length mismatch");

  // All received vectors come from one product: Y = X_bar H^T.
  CMatrix X = inputs.cast<cplx>();
  if (!tx_phases.empty()) {
    for (Eigen::Index k = 0; k < X.cols(); ++k)
      X.col(k) *= std::polar(1.0, kPi * tx_phases[static_cast<std::size_t>(k)]);
  }
  const CMatrix Y = X * H.transpose();

  ActivationMatrix out;
  out.source_mode = mode;
  out.G.resize(Y.rows(), Y.cols());
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    out.G.row(i) = activate(Y.row(i).transpose(), bias, mode).transpose();
  return out;
}

IdealWeights ridge_solve(const CMatrix& G, const CVector& z, double ridge,
                         std::optional<SolverPath> force) {
  if (!(ridge > 0.0)) throw InvalidArgument("ridge_solve: ridge must be positive");
  if (G.rows() != z.size())
    throw InvalidArgument("ridge_solve: G has " + std::to_string(G.rows()) + " rows but z has " +
                          std::to_string(z.size()) + " entries");
  if (G.rows() == 0 || G.cols() == 0) throw InvalidArgument("ridge_solve: empty system");

  const SolverPath path =
      force.value_or(G.cols() <= G.rows() ? SolverPath::Primal : SolverPath::Dual);

  IdealWeights out;
  out.ridge = ridge;
  out.solver_path = path;

  if (path == SolverPath::Primal) {
    CMatrix gram = CMatrix::Identity(G.cols(), G.cols()) * ridge;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(G.adjoint());
    Eigen::LLT<CMatrix, Eigen::Lower> llt(gram);
    if (llt.info() != Eigen::Success)
      throw NumericFailure("ridge_solve: primal Cholesky factorization failed");
    out.w_star = llt.solve(G.adjoint() * z);
  } else {
    CMatrix gram = CMatrix::Identity(G.rows(), G.rows()) * ridge;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(G);
    Eigen::LLT<CMatrix, Eigen::Lower> llt(gram);
    if (llt.info() != Eigen::Success)
      throw NumericFailure("ridge_solve: dual Cholesky factorization failed");
    out.w_star = G.adjoint() * llt.solve(z);
  }
  if (!out.w_star.allFinite()) throw NumericFailure("ridge_solve: non-finite weights");
  return out;
}

cplx predict_ideal(const IdealWeights& w, const CVector& g_y, double noise_sigma2, Rng& rng) {
  if (w.w_star.size() != g_y.size())
    throw InvalidArgument("predict_ideal: weight and activation lengths differ");
  cplx out = w.w_star.cwiseProduct(g_y).sum();
  if (noise_sigma2 > 0.0) out += sample_cn(rng, noise_sigma2);
  return out;
}

int decide(cplx z_hat, TargetEncoding encoding) {
  const double threshold = encoding == TargetEncoding::ZeroOne ? 0.5 : 0.0;
  return z_hat.real() > threshold ? 1 : 0;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.empty()) throw InvalidArgument("accuracy: empty label list");
  if (predicted.size() != truth.size()) throw InvalidArgument("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace nlcms
