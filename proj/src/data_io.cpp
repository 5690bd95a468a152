#include "nlcms/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <zlib.h>

#include "nlcms/errors.hpp"

namespace nlcms {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::size_t resolve(const ColumnRef& ref, const std::vector<std::string>& header,
                    std::size_t n_cols) {
  if (ref.index) {
    if (*ref.index >= n_cols)
      throw SchemaError("column index " + std::to_string(*ref.index) + " out of range (" +
                        std::to_string(n_cols) + " columns)");
    return *ref.index;
  }
  const auto it = std::find(header.begin(), header.end(), ref.name);
  if (it == header.end()) throw SchemaError("missing column '" + ref.name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// Whole-file read through zlib, which passes uncompressed files through unchanged.
std::vector<std::uint8_t> read_maybe_gz(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open", path.string());
  std::vector<std::uint8_t> data;
  std::vector<std::uint8_t> buf(1 << 20);
  while (true) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      gzclose(f);
      throw FormatError("corrupt compressed stream in " + path.string());
    }
    if (n == 0) break;
    data.insert(data.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return data;
}

std::filesystem::path existing(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) return path;
  std::filesystem::path gz = path;
  gz += ".gz";
  if (std::filesystem::exists(gz)) return gz;
  throw IoError("no such file", path.string());
}

}  // namespace

DatasetId parse_dataset_id(std::string_view name) {
  if (name == "parkinsons") return DatasetId::Parkinsons;
  if (name == "wbcd") return DatasetId::Wbcd;
  if (name == "mnist") return DatasetId::Mnist;
  throw InvalidArgument("unknown dataset '" + std::string(name) + "'");
}

std::string_view dataset_name(DatasetId id) {
  switch (id) {
    case DatasetId::Parkinsons: return "parkinsons";
    case DatasetId::Wbcd: return "wbcd";
    case DatasetId::Mnist: return "mnist";
  }
  return "";
}

CsvSchema builtin_schema(DatasetId id) {
  CsvSchema s;
  switch (id) {
    case DatasetId::Parkinsons:
      s.has_header = true;
      s.label_column = ColumnRef::by_name("status");
      s.positive_label = "1";
      s.drop_columns = {ColumnRef::by_name("name")};
      break;
    case DatasetId::Wbcd:
      s.has_header = false;
      s.label_column = ColumnRef::at(1);
      s.positive_label = "M";
      s.drop_columns = {ColumnRef::at(0)};
      break;
    case DatasetId::Mnist:
      throw InvalidArgument("mnist is stored as IDX, not delimited text");
  }
  return s;
}

std::vector<std::string> default_files(DatasetId id) {
  switch (id) {
    case DatasetId::Parkinsons: return {"parkinsons.data"};
    case DatasetId::Wbcd: return {"wdbc.data"};
    case DatasetId::Mnist:
      return {"mnist/train-images-idx3-ubyte", "mnist/train-labels-idx1-ubyte"};
  }
  return {};
}

RawTable load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open", path.string());

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!trim(line).empty()) lines.push_back(std::move(line));
  if (lines.empty()) throw SchemaError("empty file " + path.string());

  std::vector<std::string> header;
  std::size_t first_row = 0;
  const std::size_t n_cols = split_line(lines[0], schema.delimiter).size();
  if (schema.has_header) {
    for (auto c : split_line(lines[0], schema.delimiter)) header.emplace_back(c);
    first_row = 1;
  }

  const std::size_t label_col = resolve(schema.label_column, header, n_cols);
  std::vector<bool> skip(n_cols, false);
  skip[label_col] = true;
  for (const auto& d : schema.drop_columns) skip[resolve(d, header, n_cols)] = true;

  std::vector<std::size_t> feature_cols;
  RawTable table;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (skip[c]) continue;
    feature_cols.push_back(c);
    table.feature_names.push_back(schema.has_header ? header[c] : "f" + std::to_string(c));
  }

  const std::size_t n_rows = lines.size() - first_row;
  table.features.resize(static_cast<Eigen::Index>(n_rows),
                        static_cast<Eigen::Index>(feature_cols.size()));
  table.labels.resize(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t file_row = r + first_row;
    const auto cells = split_line(lines[file_row], schema.delimiter);
    if (cells.size() != n_cols)
      throw ParseError("expected " + std::to_string(n_cols) + " cells, found " +
                           std::to_string(cells.size()),
                       file_row, cells.size());
    table.labels[r] = cells[label_col] == schema.positive_label ? 1 : 0;
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string_view cell = cells[feature_cols[j]];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("non-numeric feature '" + std::string(cell) + "'", file_row,
                         feature_cols[j]);
      table.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return table;
}

IdxImages load_idx_images(const std::filesystem::path& path) {
  const auto data = read_maybe_gz(existing(path));
  if (data.size() < 16) throw FormatError("truncated IDX image header in " + path.string());
  if (read_be32(data.data()) != 0x00000803)
    throw FormatError("bad IDX image magic number in " + path.string());
  IdxImages img;
  img.count = read_be32(data.data() + 4);
  img.rows = read_be32(data.data() + 8);
  img.cols = read_be32(data.data() + 12);
  const std::size_t expected = img.count * img.rows * img.cols;
  if (data.size() - 16 < expected) throw FormatError("truncated IDX image data in " + path.string());
  img.pixels.assign(data.begin() + 16, data.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
  return img;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  const auto data = read_maybe_gz(existing(path));
  if (data.size() < 8) throw FormatError("truncated IDX label header in " + path.string());
  if (read_be32(data.data()) != 0x00000801)
    throw FormatError("bad IDX label magic number in " + path.string());
  const std::size_t count = read_be32(data.data() + 4);
  if (data.size() - 8 < count) throw FormatError("truncated IDX label data in " + path.string());
  return {data.begin() + 8, data.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

RawTable mnist_binary(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                      std::size_t n_pixels, Rng& rng, std::size_t max_samples) {
  const std::size_t image_size = images.rows * images.cols;
  if (labels.size() != images.count)
    throw FormatError("MNIST image and label counts differ");
  if (n_pixels == 0 || n_pixels > image_size)
    throw InvalidArgument("mnist: n_pixels must be in [1, " + std::to_string(image_size) + "]");

  std::vector<std::size_t> positions(image_size);
  std::iota(positions.begin(), positions.end(), 0);
  std::shuffle(positions.begin(), positions.end(), rng);
  positions.resize(n_pixels);

  std::vector<std::size_t> samples(images.count);
  std::iota(samples.begin(), samples.end(), 0);
  if (max_samples > 0 && max_samples < images.count) {
    std::shuffle(samples.begin(), samples.end(), rng);
    samples.resize(max_samples);
    std::sort(samples.begin(), samples.end());
  }

  RawTable table;
  table.features.resize(static_cast<Eigen::Index>(samples.size()),
                        static_cast<Eigen::Index>(n_pixels));
  table.labels.resize(samples.size());
  for (std::size_t p = 0; p < n_pixels; ++p)
    table.feature_names.push_back("px" + std::to_string(positions[p]));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::uint8_t* img = images.pixels.data() + samples[i] * image_size;
    for (std::size_t p = 0; p < n_pixels; ++p)
      table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          img[positions[p]] / 255.0;
    table.labels[i] = labels[samples[i]] % 2;
  }
  return table;
}

RawTable load_mnist_binary(const std::filesystem::path& images_path,
                           const std::filesystem::path& labels_path, std::size_t n_pixels,
                           Rng& rng, std::size_t max_samples) {
  return mnist_binary(load_idx_images(images_path), load_idx_labels(labels_path), n_pixels, rng,
                      max_samples);
}

ScalingParams fit_scale(const RMatrix& train_features) {
  if (train_features.rows() == 0) throw InvalidArgument("fit_scale: empty training set");
  return {train_features.colwise().minCoeff().transpose(),
          train_features.colwise().maxCoeff().transpose()};
}

RMatrix apply_scale(const RMatrix& features, const ScalingParams& params) {
  if (features.cols() != params.min.size())
    throw InvalidArgument("apply_scale: feature count does not match scaling parameters");
  RMatrix out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double lo = params.min(c);
    const double range = params.max(c) - lo;
    for (Eigen::Index r = 0; r < features.rows(); ++r)
      out(r, c) = range > 0.0 ? std::clamp((features(r, c) - lo) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

Split split(std::size_t n, double test_fraction, Rng& rng) {
  if (n < 2) throw InvalidArgument("split: need at least two samples");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgument("split: test fraction must be in (0, 1)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  // The epsilon absorbs representation error in (1 - f) * n, e.g. 0.7 * 10.
  auto n_train =
      static_cast<std::size_t>(std::ceil((1.0 - test_fraction) * static_cast<double>(n) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return s;
}

LabeledDataset prepare_dataset(const RawTable& raw, std::string name, double test_fraction,
                               Rng& rng) {
  LabeledDataset ds;
  ds.name = std::move(name);
  ds.labels = raw.labels;
  ds.split = split(raw.labels.size(), test_fraction, rng);

  RMatrix train(static_cast<Eigen::Index>(ds.split.train.size()), raw.features.cols());
  for (std::size_t i = 0; i < ds.split.train.size(); ++i)
    train.row(static_cast<Eigen::Index>(i)) =
        raw.features.row(static_cast<Eigen::Index>(ds.split.train[i]));
  ds.scaling = fit_scale(train);
  ds.features = apply_scale(raw.features, ds.scaling);
  return ds;
}

}  // namespace nlcms
