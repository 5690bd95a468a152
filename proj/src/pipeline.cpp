#include "nlcms/pipeline.hpp"

#include <cmath>
#include <string>

#include "nlcms/errors.hpp"

namespace nlcms {

namespace {

RMatrix gather_rows(const RMatrix& m, std::span<const std::size_t> rows) {
  RMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// Combining weights as seen at the RF chain: w* for ideal, rho * w_phi^T for OTA.
CVector effective_weights(const TrainedModel& model) {
  if (!model.cascade) return model.w_star.w_star;
  return model.cascade->rho * cascade_transfer(*model.cascade, model.channels);
}

}  // namespace

TrainedModel train(const LabeledDataset& dataset, const ChannelRealization& channels,
                   const BiasVector& bias, const TrainConfig& config, Rng& rng) {
  if (dataset.split.train.empty()) throw InvalidArgument("train: empty training split");
  if (static_cast<std::size_t>(dataset.features.cols()) != channels.n_t())
    throw InvalidArgument("train: dataset has " + std::to_string(dataset.features.cols()) +
                          " features but the channel has N_t = " + std::to_string(channels.n_t()));
  if (static_cast<std::size_t>(bias.b.size()) != channels.n_r())
    throw InvalidArgument("train: bias length does not match N_r");

  const RMatrix X = gather_rows(dataset.features, dataset.split.train);
  CVector z(static_cast<Eigen::Index>(dataset.split.train.size()));
  for (std::size_t i = 0; i < dataset.split.train.size(); ++i)
    z(static_cast<Eigen::Index>(i)) =
        target_value(dataset.labels[dataset.split.train[i]], config.encoding);

  const ActivationMatrix G = build_activation_matrix(X, channels.H, bias, config.train_activation);

  TrainedModel model;
  model.w_star = ridge_solve(G.G, z, config.ridge);
  model.bias = bias;
  model.channels = channels;
  model.encoding = config.encoding;
  model.infer_activation = config.infer_activation;
  model.train_ls_error = (z - G.G * model.w_star.w_star).norm();

  if (config.variant == Variant::OtaWeights && channels.num_layers() > 0) {
    auto [state, trace] = pgd_fit(model.w_star, channels, config.pgd, rng);
    model.cascade = std::move(state);
    model.pgd_trace = std::move(trace);
  }

  const CVector outputs = G.G * effective_weights(model);
  model.signal_power = outputs.squaredNorm() / static_cast<double>(outputs.size());
  const bool noisy = model.cascade.has_value() || config.ideal_noise;
  model.noise_sigma2 = noisy ? noise_variance_from_snr(config.snr_db, model.signal_power) : 0.0;
  return model;
}

cplx noiseless_output(const TrainedModel& model, const CVector& g_y) {
  if (!model.cascade) {
    if (g_y.size() != model.w_star.w_star.size())
      throw InvalidArgument("noiseless_output: activation length mismatch");
    return model.w_star.w_star.cwiseProduct(g_y).sum();
  }
  const CVector w_phi = cascade_transfer(*model.cascade, model.channels);
  if (g_y.size() != w_phi.size())
    throw InvalidArgument("noiseless_output: activation length mismatch");
  return model.cascade->rho * w_phi.cwiseProduct(g_y).sum();
}

std::pair<cplx, int> infer(std::span<const double> x, const TrainedModel& model, Rng& rng) {
  if (x.size() != model.channels.n_t())
    throw InvalidArgument("infer: feature vector has " + std::to_string(x.size()) +
                          " entries, expected " + std::to_string(model.channels.n_t()));
  const CVector y = forward_to_frontend(encode_am(x), model.channels.H);
  const CVector g = activate(y, model.bias, model.infer_activation);

  cplx z_hat;
  if (model.cascade) {
    z_hat = noiseless_output(model, g);
    if (model.noise_sigma2 > 0.0) z_hat += sample_cn(rng, model.noise_sigma2);
  } else {
    z_hat = predict_ideal(model.w_star, g, model.noise_sigma2, rng);
  }
  return {z_hat, decide(z_hat, model.encoding)};
}

double evaluate_split(const LabeledDataset& dataset, std::span<const std::size_t> indices,
                      const TrainedModel& model, Rng& rng) {
  if (indices.empty()) throw InvalidArgument("evaluate: empty split");
  if (static_cast<std::size_t>(dataset.features.cols()) != model.channels.n_t())
    throw InvalidArgument("evaluate: dataset feature count does not match N_t");

  // Batched version of infer(): identical arithmetic per sample, one noise
  // substream per sample index so the result does not depend on evaluation order.
  const RMatrix X = gather_rows(dataset.features, indices);
  const ActivationMatrix G = build_activation_matrix(X, model.channels.H, model.bias,
                                                     model.infer_activation);
  const std::uint64_t base = rng();
  const CVector weights = model.cascade ? cascade_transfer(*model.cascade, model.channels)
                                        : model.w_star.w_star;

  std::vector<int> predicted(indices.size());
  std::vector<int> truth(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    cplx z_hat = G.G.row(row).transpose().cwiseProduct(weights).sum();
    if (model.cascade) z_hat *= model.cascade->rho;
    if (model.noise_sigma2 > 0.0) {
      Rng sample_rng(derive_seed(base, {indices[i]}));
      z_hat += sample_cn(sample_rng, model.noise_sigma2);
    }
    predicted[i] = decide(z_hat, model.encoding);
    truth[i] = dataset.labels[indices[i]];
  }
  return accuracy(predicted, truth);
}

EvalReport evaluate(const LabeledDataset& dataset, const TrainedModel& model, Rng& rng) {
  EvalReport report;
  report.variant = model.variant();
  report.train_accuracy = evaluate_split(dataset, dataset.split.train, model, rng);
  report.test_accuracy = evaluate_split(dataset, dataset.split.test, model, rng);
  report.samples_evaluated = dataset.split.train.size() + dataset.split.test.size();
  if (model.cascade)
    report.mean_abs_weight_residual =
        approximation_objective(model.w_star, *model.cascade, model.channels);
  return report;
}

}  // namespace nlcms
