#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlcms/cascade.hpp"
#include "nlcms/elm_core.hpp"
#include "nlcms/nl_frontend.hpp"
#include "nlcms/pipeline.hpp"

namespace nlcms {

/// Environment variable naming the dataset root directory.
inline constexpr const char* kDataRootEnv = "NLCMS_DATA_ROOT";

struct ExperimentConfig {
  std::vector<std::string> datasets = {"wbcd"};
  /// Empty: use $NLCMS_DATA_ROOT, falling back to "data".
  std::string data_root;
  /// Per-dataset file overrides (relative to the data root unless absolute).
  std::map<std::string, std::vector<std::string>> files;
  std::vector<Variant> variants = {Variant::IdealWeights, Variant::OtaWeights};
  std::vector<std::size_t> n_r = {16, 64, 256, 1024};
  std::size_t num_layers = 5;
  std::size_t layer_size = 4096;  // 64 x 64
  double pathloss_db = -50.0;
  double intra_pathloss_db = -10.0;
  std::vector<double> snr_db = {15.0};
  double ridge = 1e-6;
  PgdOptions pgd;
  /// nullopt = Rayleigh channel; a value = Ricean with that linear K factor.
  std::vector<std::optional<double>> ricean_k = {std::nullopt};
  TargetEncoding encoding = TargetEncoding::ZeroOne;
  std::vector<std::uint64_t> seeds = {0};
  std::size_t mnist_pixels = 100;
  std::size_t mnist_max_samples = 10000;
  ActivationMode activation = ActivationMode::Approximate;
  ActivationMode inference_activation = ActivationMode::Approximate;
  BiasScaleRule bias_scale = BiasScaleRule::RmsEntry;
  double test_fraction = 0.3;
  bool ideal_noise = false;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  bool record_wallclock = true;
};

struct ExperimentRecord {
  std::string dataset;
  std::string variant;
  std::size_t n_r = 0;
  std::optional<double> ricean_k;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_ls_error = 0.0;
  double pgd_final_objective = 0.0;
  std::size_t pgd_iters = 0;
  double wallclock_ms = 0.0;
  std::string error;
};

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, std::string_view assignment);

/// Resolved input files per dataset; throws IoError for anything missing.
std::map<std::string, std::vector<std::filesystem::path>> resolve_dataset_files(
    const ExperimentConfig& config);

/// Executes the full sweep. Rows come back in sweep order
/// (dataset, variant, n_r, K, SNR, seed) regardless of worker count, and each row
/// depends only on its own sweep coordinates and the master seed.
std::vector<ExperimentRecord> run(const ExperimentConfig& config);

std::size_t expected_record_count(const ExperimentConfig& config);

extern const std::vector<std::string> kRecordFields;

std::string format_csv(const std::vector<ExperimentRecord>& records);
void write_csv(const std::vector<ExperimentRecord>& records, const std::filesystem::path& path);
std::vector<ExperimentRecord> parse_csv(std::string_view text);

}  // namespace nlcms
