#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlcms/rng.hpp"
#include "nlcms/types.hpp"

namespace nlcms {

/// Column reference by header name or zero-based index.
struct ColumnRef {
  std::string name;
  std::optional<std::size_t> index;

  static ColumnRef by_name(std::string n) { return {std::move(n), std::nullopt}; }
  static ColumnRef at(std::size_t i) { return {{}, i}; }
};

struct CsvSchema {
  ColumnRef label_column;
  std::string positive_label;
  std::vector<ColumnRef> drop_columns;
  bool has_header = false;
  char delimiter = ',';
};

/// Unscaled features with binary class labels (1 = positive class).
struct RawTable {
  RMatrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct ScalingParams {
  RVector min;
  RVector max;
};

struct LabeledDataset {
  std::string name;
  RMatrix features;  // scaled into [0, 1]
  std::vector<int> labels;
  Split split;
  ScalingParams scaling;

  std::size_t size() const { return labels.size(); }
  std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
};

/// Built-in schema for the tabular datasets.
enum class DatasetId { Parkinsons, Wbcd, Mnist };

DatasetId parse_dataset_id(std::string_view name);
std::string_view dataset_name(DatasetId id);

/// Parkinson's: header row, `name` dropped, label `status` == "1".
/// WBCD (wdbc.data): no header, column 0 (ID) dropped, label column 1 == "M".
CsvSchema builtin_schema(DatasetId id);

/// Default file names relative to a dataset root.
std::vector<std::string> default_files(DatasetId id);

RawTable load_csv(const std::filesystem::path& path, const CsvSchema& schema);

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

/// IDX readers (big-endian headers). gzip-compressed files are accepted as well.
IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

/// Even/odd MNIST: `n_pixels` positions chosen once at random and shared by every
/// image, pixels divided by 255, label 1 for odd digits. `max_samples` > 0 keeps a
/// random subset of that many images.
RawTable load_mnist_binary(const std::filesystem::path& images_path,
                           const std::filesystem::path& labels_path, std::size_t n_pixels,
                           Rng& rng, std::size_t max_samples = 0);

/// Same as above from already-loaded IDX content.
RawTable mnist_binary(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                      std::size_t n_pixels, Rng& rng, std::size_t max_samples = 0);

ScalingParams fit_scale(const RMatrix& train_features);

/// (x - min) / (max - min) per feature, clamped to [0, 1]; constant features map to 0.
RMatrix apply_scale(const RMatrix& features, const ScalingParams& params);

/// Uniform random permutation; the first ceil((1 - test_fraction) n) indices train.
Split split(std::size_t n, double test_fraction, Rng& rng);

/// Split, then min-max scale every row with statistics from the train rows only.
LabeledDataset prepare_dataset(const RawTable& raw, std::string name, double test_fraction,
                               Rng& rng);

}  // namespace nlcms
