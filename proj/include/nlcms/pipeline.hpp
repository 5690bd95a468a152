#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nlcms/cascade.hpp"
#include "nlcms/channel_models.hpp"
#include "nlcms/data_io.hpp"
#include "nlcms/elm_core.hpp"
#include "nlcms/nl_frontend.hpp"

namespace nlcms {

enum class Variant { IdealWeights, OtaWeights };

struct TrainConfig {
  Variant variant = Variant::IdealWeights;
  double ridge = 1e-6;
  double snr_db = 15.0;
  TargetEncoding encoding = TargetEncoding::ZeroOne;
  /// Activation used to build G during training.
  ActivationMode train_activation = ActivationMode::Approximate;
  /// Activation applied at inference (differs from training for mismatch studies).
  ActivationMode infer_activation = ActivationMode::Approximate;
  /// Inject calibrated receiver noise into the ideal-weights output as well.
  bool ideal_noise = false;
  PgdOptions pgd;
};

struct TrainedModel {
  IdealWeights w_star;
  std::optional<CascadeState> cascade;
  BiasVector bias;
  ChannelRealization channels;
  TargetEncoding encoding = TargetEncoding::ZeroOne;
  ActivationMode infer_activation = ActivationMode::Approximate;
  /// Noise variance applied at inference (0 for the noiseless ideal variant).
  double noise_sigma2 = 0.0;
  /// Mean |z_hat|^2 of the noiseless output over the training split.
  double signal_power = 0.0;
  double train_ls_error = 0.0;
  std::optional<PgdTrace> pgd_trace;

  Variant variant() const { return cascade ? Variant::OtaWeights : Variant::IdealWeights; }
};

struct EvalReport {
  Variant variant = Variant::IdealWeights;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double mean_abs_weight_residual = 0.0;
  std::size_t samples_evaluated = 0;
};

/// Training: activation matrix over the train split, closed-form ridge weights,
/// optional cascade fit, and noise calibration against the noiseless output power.
/// An OTA request on channels without cascade layers falls back to ideal weights.
TrainedModel train(const LabeledDataset& dataset, const ChannelRealization& channels,
                   const BiasVector& bias, const TrainConfig& config, Rng& rng);

/// Noiseless receiver output for one activation vector.
cplx noiseless_output(const TrainedModel& model, const CVector& g_y);

/// One forward pass over the air: returns z_hat and the decided label.
std::pair<cplx, int> infer(std::span<const double> x, const TrainedModel& model, Rng& rng);

/// Accuracy over `indices` of the dataset; each sample gets its own noise substream.
double evaluate_split(const LabeledDataset& dataset, std::span<const std::size_t> indices,
                      const TrainedModel& model, Rng& rng);

EvalReport evaluate(const LabeledDataset& dataset, const TrainedModel& model, Rng& rng);

}  // namespace nlcms
