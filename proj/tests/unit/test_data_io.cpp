#include <doctest.h>

#include <zlib.h>

#include <algorithm>
#include <set>

#include "../common/tempdir.hpp"
#include "nlcms/data_io.hpp"
#include "nlcms/errors.hpp"

using namespace nlcms;
using nlcms::testing::TempDir;

namespace {

constexpr const char* kParkinsonsSample =
    "name,MDVP:Fo(Hz),MDVP:Fhi(Hz),status,spread1\n"
    "phon_R01_S01_1,119.992,157.302,1,-4.813031\n"
    "phon_R01_S01_2,122.400,148.650,1,-4.075192\n"
    "phon_R01_S07_1,197.076,206.896,0,-6.759264\n";

constexpr const char* kWdbcSample =
    "842302,M,17.99,10.38,122.8\n"
    "842517,M,20.57,17.77,132.9\n"
    "8510426,B,13.54,14.36,87.46\n";

std::vector<unsigned char> be32(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

// count images of 2x3 pixels; pixel p of image i holds 10 * i + p.
std::vector<unsigned char> idx_images(std::uint32_t count, std::uint32_t magic = 0x803) {
  std::vector<unsigned char> out;
  for (auto v : {magic, count, 2u, 3u}) {
    const auto b = be32(v);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (std::uint32_t i = 0; i < count; ++i)
    for (unsigned p = 0; p < 6; ++p) out.push_back(static_cast<unsigned char>(10 * i + p));
  return out;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& digits,
                                      std::uint32_t magic = 0x801) {
  std::vector<unsigned char> out;
  for (auto v : {magic, static_cast<std::uint32_t>(digits.size())}) {
    const auto b = be32(v);
    out.insert(out.end(), b.begin(), b.end());
  }
  out.insert(out.end(), digits.begin(), digits.end());
  return out;
}

void write_gz(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

}  // namespace

TEST_CASE("dataset ids") {
  CHECK(parse_dataset_id("wbcd") == DatasetId::Wbcd);
  CHECK(parse_dataset_id("parkinsons") == DatasetId::Parkinsons);
  CHECK(parse_dataset_id("mnist") == DatasetId::Mnist);
  CHECK_THROWS_AS(parse_dataset_id("iris"), InvalidArgument);
  for (auto id : {DatasetId::Parkinsons, DatasetId::Wbcd, DatasetId::Mnist})
    CHECK(parse_dataset_id(dataset_name(id)) == id);
}

TEST_CASE("parkinsons-style csv with header") {
  TempDir dir;
  const auto p = dir.write("parkinsons.data", kParkinsonsSample);
  const RawTable t = load_csv(p, builtin_schema(DatasetId::Parkinsons));
  CHECK(t.features.rows() == 3);
  CHECK(t.features.cols() == 3);
  CHECK(t.labels == std::vector<int>{1, 1, 0});
  CHECK(t.feature_names == std::vector<std::string>{"MDVP:Fo(Hz)", "MDVP:Fhi(Hz)", "spread1"});
  CHECK(t.features(2, 0) == doctest::Approx(197.076));
  CHECK(t.features(0, 2) == doctest::Approx(-4.813031));
}

TEST_CASE("wbcd-style csv without header") {
  TempDir dir;
  const auto p = dir.write("wdbc.data", kWdbcSample);
  const RawTable t = load_csv(p, builtin_schema(DatasetId::Wbcd));
  CHECK(t.features.rows() == 3);
  CHECK(t.features.cols() == 3);
  CHECK(t.labels == std::vector<int>{1, 1, 0});
  CHECK(t.features(1, 2) == doctest::Approx(132.9));
}

TEST_CASE("csv errors") {
  TempDir dir;
  const CsvSchema pk = builtin_schema(DatasetId::Parkinsons);

  CHECK_THROWS_AS(load_csv(dir.path() / "absent.data", pk), IoError);
  CHECK_THROWS_AS(load_csv(dir.write("empty.data", "\n\n"), pk), SchemaError);

  const auto no_status = dir.write("a.data", "name,x\nfoo,1\n");
  CHECK_THROWS_AS(load_csv(no_status, pk), SchemaError);

  const auto bad_cell = dir.write("b.data", "name,x,status\nfoo,1.5,1\nbar,abc,0\n");
  try {
    load_csv(bad_cell, pk);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == 1);
  }

  const auto ragged = dir.write("c.data", "name,x,status\nfoo,1.5\n");
  CHECK_THROWS_AS(load_csv(ragged, pk), ParseError);

  CsvSchema out_of_range = builtin_schema(DatasetId::Wbcd);
  out_of_range.label_column = ColumnRef::at(9);
  CHECK_THROWS_AS(load_csv(dir.write("d.data", kWdbcSample), out_of_range), SchemaError);
}

TEST_CASE("idx readers, plain and compressed") {
  TempDir dir;
  const auto img = dir.write_bytes("img", idx_images(4));
  const auto lab = dir.write_bytes("lab", idx_labels({3, 4, 7, 0}));
  const IdxImages images = load_idx_images(img);
  CHECK(images.count == 4);
  CHECK(images.rows == 2);
  CHECK(images.cols == 3);
  CHECK(images.pixels[6 * 2 + 5] == 25);
  CHECK(load_idx_labels(lab) == std::vector<std::uint8_t>{3, 4, 7, 0});

  write_gz(dir.path() / "img.gz", idx_images(4));
  CHECK(load_idx_images(dir.path() / "img.gz").pixels == images.pixels);
}

TEST_CASE("idx format errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_idx_images(dir.write_bytes("m", idx_images(2, 0x801))), FormatError);
  CHECK_THROWS_AS(load_idx_labels(dir.write_bytes("l", idx_labels({1}, 0x803))), FormatError);
  auto truncated = idx_images(3);
  truncated.resize(truncated.size() - 1);
  CHECK_THROWS_AS(load_idx_images(dir.write_bytes("t", truncated)), FormatError);
  CHECK_THROWS_AS(load_idx_images(dir.write_bytes("h", {0, 0, 8})), FormatError);
  auto short_labels = idx_labels({1, 2, 3});
  short_labels.pop_back();
  CHECK_THROWS_AS(load_idx_labels(dir.write_bytes("s", short_labels)), FormatError);
  CHECK_THROWS_AS(load_idx_images(dir.path() / "missing"), IoError);
}

TEST_CASE("even/odd mnist projection") {
  TempDir dir;
  const auto img = dir.write_bytes("img", idx_images(5));
  const auto lab = dir.write_bytes("lab", idx_labels({0, 1, 2, 7, 9}));

  Rng rng(4);
  const RawTable t = load_mnist_binary(img, lab, 4, rng);
  CHECK(t.labels == std::vector<int>{0, 1, 0, 1, 1});
  CHECK(t.features.cols() == 4);
  // Every image must use the same pixel positions.
  for (Eigen::Index p = 0; p < 4; ++p) {
    const double pos = std::stod(t.feature_names[static_cast<std::size_t>(p)].substr(2));
    for (Eigen::Index i = 0; i < 5; ++i)
      CHECK(t.features(i, p) == doctest::Approx((10.0 * static_cast<double>(i) + pos) / 255.0));
  }
  std::set<std::string> distinct(t.feature_names.begin(), t.feature_names.end());
  CHECK(distinct.size() == 4);

  Rng r2(4);
  const RawTable capped = load_mnist_binary(img, lab, 4, r2, 3);
  CHECK(capped.features.rows() == 3);

  Rng r3(1);
  CHECK_THROWS_AS(load_mnist_binary(img, lab, 7, r3), InvalidArgument);
  const auto lab_short = dir.write_bytes("lab2", idx_labels({1, 2}));
  CHECK_THROWS_AS(load_mnist_binary(img, lab_short, 2, r3), FormatError);
}

TEST_CASE("min-max scaling") {
  RMatrix train(3, 2);
  train << 1, 5, 3, 5, 2, 5;
  const ScalingParams s = fit_scale(train);
  CHECK(s.min(0) == 1.0);
  CHECK(s.max(0) == 3.0);
  RMatrix x(3, 2);
  x << 2, 5, 0, 9, 4, 1;
  const RMatrix y = apply_scale(x, s);
  CHECK(y(0, 0) == 0.5);
  CHECK(y(1, 0) == 0.0);
  CHECK(y(2, 0) == 1.0);
  CHECK(y.col(1).isZero(0.0));
  CHECK_THROWS_AS(apply_scale(RMatrix(1, 3), s), InvalidArgument);
  CHECK_THROWS_AS(fit_scale(RMatrix(0, 2)), InvalidArgument);
}

TEST_CASE("split sizes and partition") {
  Rng rng(5);
  const Split s10 = split(10, 0.3, rng);
  CHECK(s10.train.size() == 7);
  CHECK(s10.test.size() == 3);
  const Split s569 = split(569, 0.3, rng);
  CHECK(s569.train.size() == 399);
  CHECK(s569.test.size() == 170);
  std::vector<std::size_t> all = s569.train;
  all.insert(all.end(), s569.test.begin(), s569.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);

  CHECK(split(2, 0.3, rng).train.size() == 1);
  CHECK_THROWS_AS(split(1, 0.3, rng), InvalidArgument);
  CHECK_THROWS_AS(split(10, 0.0, rng), InvalidArgument);
  CHECK_THROWS_AS(split(10, 1.0, rng), InvalidArgument);

  Rng a(6), b(6);
  CHECK(split(50, 0.3, a).train == split(50, 0.3, b).train);
}

TEST_CASE("scaling statistics come from the training rows only") {
  RawTable raw;
  raw.features.resize(20, 1);
  for (Eigen::Index i = 0; i < 20; ++i) raw.features(i, 0) = static_cast<double>(i);
  raw.labels.assign(20, 0);
  Rng rng(7);
  const LabeledDataset ds = prepare_dataset(raw, "toy", 0.3, rng);

  double lo = 1e9, hi = -1e9;
  for (std::size_t i : ds.split.train) {
    lo = std::min(lo, raw.features(static_cast<Eigen::Index>(i), 0));
    hi = std::max(hi, raw.features(static_cast<Eigen::Index>(i), 0));
  }
  CHECK(ds.scaling.min(0) == lo);
  CHECK(ds.scaling.max(0) == hi);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const double expected = std::clamp((raw.features(i, 0) - lo) / (hi - lo), 0.0, 1.0);
    CHECK(ds.features(i, 0) == doctest::Approx(expected));
  }
  CHECK(ds.features.minCoeff() >= 0.0);
  CHECK(ds.features.maxCoeff() <= 1.0);
}

#ifdef NLCMS_DATA_DIR
TEST_CASE("bundled wbcd file") {
  const std::filesystem::path p = std::filesystem::path(NLCMS_DATA_DIR) / "wdbc.data";
  if (!std::filesystem::exists(p)) return;
  const RawTable t = load_csv(p, builtin_schema(DatasetId::Wbcd));
  CHECK(t.features.rows() == 569);
  CHECK(t.features.cols() == 30);
  CHECK(std::count(t.labels.begin(), t.labels.end(), 1) == 212);
}
#endif
