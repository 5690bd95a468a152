#include "nlcms/experiment.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nlcms/channel_models.hpp"
#include "nlcms/data_io.hpp"
#include "nlcms/errors.hpp"
#include "nlcms/rng.hpp"

namespace nlcms {

using nlohmann::json;

const std::vector<std::string> kRecordFields = {
    "dataset",        "variant",        "n_r",          "ricean_k",           "snr_db",
    "seed",           "train_accuracy", "test_accuracy", "train_ls_error",    "pgd_final_objective",
    "pgd_iters",      "wallclock_ms",   "error"};

namespace {

// Stream tags keep the substreams of one sweep point apart.
enum : std::uint64_t { kTagData = 1, kTagSystem = 2, kTagCascade = 3, kTagPgd = 4, kTagNoise = 5 };

constexpr std::uint64_t kRayleighKey = 0x7261796c65696768ULL;

std::uint64_t k_key(const std::optional<double>& k) {
  return k ? std::bit_cast<std::uint64_t>(*k) : kRayleighKey;
}

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<Variant> kVariantNames[] = {{Variant::IdealWeights, "ideal"},
                                               {Variant::OtaWeights, "ota"}};
constexpr EnumName<PhaseRange> kPhaseNames[] = {{PhaseRange::HalfCircle, "half"},
                                                {PhaseRange::FullCircle, "full"}};
constexpr EnumName<TargetEncoding> kEncodingNames[] = {{TargetEncoding::ZeroOne, "zero_one"},
                                                       {TargetEncoding::PlusMinus, "plus_minus"}};
constexpr EnumName<ActivationMode> kActivationNames[] = {
    {ActivationMode::Approximate, "approximate"}, {ActivationMode::Exact, "exact"}};
constexpr EnumName<BiasScaleRule> kBiasNames[] = {{BiasScaleRule::RmsEntry, "rms_entry"},
                                                  {BiasScaleRule::PerElement, "per_element"}};

template <typename E, std::size_t N>
const char* name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "";
}

template <typename E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], std::string_view s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw InvalidArgument(std::string("config: unknown ") + what + " '" + std::string(s) + "'");
}

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  return s;
}

}  // namespace

std::string_view variant_name(Variant v) { return name_of(kVariantNames, v); }
Variant parse_variant(std::string_view s) { return parse_enum(kVariantNames, s, "variant"); }

json to_json(const ExperimentConfig& c) {
  json j;
  j["datasets"] = c.datasets;
  j["data_root"] = c.data_root;
  j["files"] = c.files;
  json variants = json::array();
  for (auto v : c.variants) variants.push_back(variant_name(v));
  j["variants"] = variants;
  j["n_r"] = c.n_r;
  j["num_layers"] = c.num_layers;
  j["layer_size"] = c.layer_size;
  j["pathloss_db"] = c.pathloss_db;
  j["intra_pathloss_db"] = c.intra_pathloss_db;
  j["snr_db"] = c.snr_db;
  j["ridge"] = c.ridge;
  j["pgd"] = {{"max_iters", c.pgd.max_iters},
              {"step_size", c.pgd.step_size},
              {"rel_tol", c.pgd.rel_tol},
              {"patience", c.pgd.patience},
              {"phase_range", name_of(kPhaseNames, c.pgd.phase_range)}};
  json ks = json::array();
  for (const auto& k : c.ricean_k) ks.push_back(k ? json(*k) : json("rayleigh"));
  j["ricean_k"] = ks;
  j["encoding"] = name_of(kEncodingNames, c.encoding);
  j["seeds"] = c.seeds;
  j["mnist_pixels"] = c.mnist_pixels;
  j["mnist_max_samples"] = c.mnist_max_samples;
  j["activation"] = name_of(kActivationNames, c.activation);
  j["inference_activation"] = name_of(kActivationNames, c.inference_activation);
  j["bias_scale"] = name_of(kBiasNames, c.bias_scale);
  j["test_fraction"] = c.test_fraction;
  j["ideal_noise"] = c.ideal_noise;
  j["master_seed"] = c.master_seed;
  j["workers"] = c.workers;
  j["record_wallclock"] = c.record_wallclock;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  static const std::set<std::string> known = {
      "datasets",      "data_root",         "files",       "variants",      "n_r",
      "num_layers",    "layer_size",        "pathloss_db", "intra_pathloss_db",
      "snr_db",        "ridge",             "pgd",         "ricean_k",      "encoding",
      "seeds",         "mnist_pixels",      "mnist_max_samples", "activation",
      "inference_activation", "bias_scale", "test_fraction", "ideal_noise", "master_seed",
      "workers",       "record_wallclock"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw InvalidArgument("config: unknown key '" + key + "'");

  ExperimentConfig c;
  try {
    if (j.contains("datasets")) c.datasets = j.at("datasets").get<std::vector<std::string>>();
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
    if (j.contains("files"))
      c.files = j.at("files").get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (j.contains("n_r")) c.n_r = j.at("n_r").get<std::vector<std::size_t>>();
    if (j.contains("num_layers")) c.num_layers = j.at("num_layers").get<std::size_t>();
    if (j.contains("layer_size")) c.layer_size = j.at("layer_size").get<std::size_t>();
    if (j.contains("pathloss_db")) c.pathloss_db = j.at("pathloss_db").get<double>();
    if (j.contains("intra_pathloss_db")) c.intra_pathloss_db = j.at("intra_pathloss_db").get<double>();
    if (j.contains("snr_db")) {
      const auto& s = j.at("snr_db");
      c.snr_db = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
    }
    if (j.contains("ridge")) c.ridge = j.at("ridge").get<double>();
    if (j.contains("pgd")) {
      const auto& p = j.at("pgd");
      for (const auto& [key, _] : p.items())
        if (key != "max_iters" && key != "step_size" && key != "rel_tol" && key != "patience" &&
            key != "phase_range")
          throw InvalidArgument("config: unknown key 'pgd." + key + "'");
      if (p.contains("max_iters")) c.pgd.max_iters = p.at("max_iters").get<std::size_t>();
      if (p.contains("step_size")) c.pgd.step_size = p.at("step_size").get<double>();
      if (p.contains("rel_tol")) c.pgd.rel_tol = p.at("rel_tol").get<double>();
      if (p.contains("patience")) c.pgd.patience = p.at("patience").get<std::size_t>();
      if (p.contains("phase_range"))
        c.pgd.phase_range = parse_enum(kPhaseNames, p.at("phase_range").get<std::string>(), "phase range");
    }
    if (j.contains("ricean_k")) {
      c.ricean_k.clear();
      const auto& ks = j.at("ricean_k");
      const json list = ks.is_array() ? ks : json::array({ks});
      for (const auto& k : list) {
        if (k.is_string()) {
          if (k.get<std::string>() != "rayleigh")
            throw InvalidArgument("config: ricean_k entries are numbers or \"rayleigh\"");
          c.ricean_k.emplace_back(std::nullopt);
        } else {
          c.ricean_k.emplace_back(k.get<double>());
        }
      }
    }
    if (j.contains("encoding"))
      c.encoding = parse_enum(kEncodingNames, j.at("encoding").get<std::string>(), "encoding");
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("mnist_pixels")) c.mnist_pixels = j.at("mnist_pixels").get<std::size_t>();
    if (j.contains("mnist_max_samples"))
      c.mnist_max_samples = j.at("mnist_max_samples").get<std::size_t>();
    if (j.contains("activation"))
      c.activation = parse_enum(kActivationNames, j.at("activation").get<std::string>(), "activation");
    if (j.contains("inference_activation"))
      c.inference_activation =
          parse_enum(kActivationNames, j.at("inference_activation").get<std::string>(), "activation");
    else if (j.contains("activation"))
      c.inference_activation = c.activation;
    if (j.contains("bias_scale"))
      c.bias_scale = parse_enum(kBiasNames, j.at("bias_scale").get<std::string>(), "bias scale");
    if (j.contains("test_fraction")) c.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("ideal_noise")) c.ideal_noise = j.at("ideal_noise").get<bool>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
    if (j.contains("record_wallclock")) c.record_wallclock = j.at("record_wallclock").get<bool>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }

  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("config: ") + what);
  };
  require(!c.datasets.empty(), "datasets must be non-empty");
  require(!c.variants.empty(), "variants must be non-empty");
  require(!c.n_r.empty(), "n_r must be non-empty");
  require(!c.snr_db.empty(), "snr_db must be non-empty");
  require(!c.ricean_k.empty(), "ricean_k must be non-empty");
  require(!c.seeds.empty(), "seeds must be non-empty");
  for (auto n : c.n_r) require(n > 0, "n_r entries must be positive");
  for (const auto& k : c.ricean_k) require(!k || *k >= 0.0, "ricean_k must be non-negative");
  for (const auto& d : c.datasets) parse_dataset_id(d);
  require(c.ridge > 0.0, "ridge must be positive");
  require(c.pgd.max_iters >= 1, "pgd.max_iters must be at least 1");
  require(c.pgd.step_size > 0.0, "pgd.step_size must be positive");
  require(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction must be in (0, 1)");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config", path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw InvalidArgument("override must look like key.path=value: '" + std::string(assignment) + "'");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::string pointer;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw InvalidArgument("override key has an empty segment: '" + key + "'");
    pointer += "/" + part;
  }
  j[json::json_pointer(pointer)] = value;
}

std::map<std::string, std::vector<std::filesystem::path>> resolve_dataset_files(
    const ExperimentConfig& config) {
  std::filesystem::path root = config.data_root;
  if (root.empty()) {
    const char* env = std::getenv(kDataRootEnv);
    root = env && *env ? env : "data";
  }
  std::map<std::string, std::vector<std::filesystem::path>> out;
  for (const auto& name : config.datasets) {
    const DatasetId id = parse_dataset_id(name);
    const auto it = config.files.find(name);
    const std::vector<std::string> files = it != config.files.end() ? it->second : default_files(id);
    const std::size_t needed = id == DatasetId::Mnist ? 2 : 1;
    if (files.size() != needed)
      throw InvalidArgument("dataset " + name + " needs " + std::to_string(needed) + " file(s)");
    for (const auto& f : files) {
      std::filesystem::path p = f;
      if (p.is_relative()) p = root / p;
      std::filesystem::path gz = p;
      gz += ".gz";
      if (!std::filesystem::exists(p) && !(id == DatasetId::Mnist && std::filesystem::exists(gz)))
        throw IoError("dataset file not found", p.string());
      out[name].push_back(p);
    }
  }
  return out;
}

std::size_t expected_record_count(const ExperimentConfig& c) {
  return c.datasets.size() * c.variants.size() * c.n_r.size() * c.ricean_k.size() *
         c.snr_db.size() * c.seeds.size();
}

namespace {

struct Task {
  std::size_t dataset;
  Variant variant;
  std::size_t n_r;
  std::optional<double> k;
  double snr_db;
  std::uint64_t seed;
  std::size_t prepared;  // index into the prepared-dataset table
};

struct SourceData {
  std::optional<RawTable> table;  // tabular datasets
  std::optional<IdxImages> images;
  std::vector<std::uint8_t> labels;
};

ExperimentRecord run_task(const ExperimentConfig& c, const Task& t, const std::string& dataset,
                          const LabeledDataset& data) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.dataset = dataset;
  rec.variant = std::string(variant_name(t.variant));
  rec.n_r = t.n_r;
  rec.ricean_k = t.k;
  rec.snr_db = t.snr_db;
  rec.seed = t.seed;

  const std::uint64_t ds_key = hash_string(dataset);
  const std::uint64_t variant_key = static_cast<std::uint64_t>(t.variant);
  try {
    // Channel and bias depend on (dataset, seed, N_r, K) only, so both variants
    // see the same system.
    Rng sys = derive_stream(c.master_seed, {ds_key, t.seed, t.n_r, k_key(t.k), kTagSystem});
    ChannelRealization ch;
    ch.pathloss_db = c.pathloss_db;
    ch.intra_pathloss_db = c.intra_pathloss_db;
    const std::size_t n_t = data.n_features();
    if (t.k) {
      const RiceanParams params = sample_ricean_params(*t.k, sys);
      ch.H = sample_ricean(t.n_r, n_t, c.pathloss_db, params, sys);
    } else {
      ch.H = sample_rayleigh(t.n_r, n_t, c.pathloss_db, sys);
    }
    const BiasVector bias = sample_bias(t.n_r, ch.H.norm(), n_t, sys, c.bias_scale);

    if (t.variant == Variant::OtaWeights && c.num_layers > 0) {
      Rng casc = derive_stream(c.master_seed, {ds_key, t.seed, t.n_r, k_key(t.k), kTagCascade});
      auto cc = sample_cascade_channels(std::vector<std::size_t>(c.num_layers, c.layer_size), t.n_r,
                                        c.intra_pathloss_db, casc);
      ch.layer_channels = std::move(cc.layers);
      ch.terminal = std::move(cc.terminal);
    }

    TrainConfig tc;
    tc.variant = t.variant;
    tc.ridge = c.ridge;
    tc.snr_db = t.snr_db;
    tc.encoding = c.encoding;
    tc.train_activation = c.activation;
    tc.infer_activation = c.inference_activation;
    tc.ideal_noise = c.ideal_noise;
    tc.pgd = c.pgd;

    Rng pgd_rng = derive_stream(c.master_seed,
                                {ds_key, t.seed, t.n_r, k_key(t.k), variant_key, kTagPgd});
    const TrainedModel model = train(data, ch, bias, tc, pgd_rng);
    Rng noise = derive_stream(c.master_seed, {ds_key, t.seed, t.n_r, k_key(t.k), variant_key,
                                              std::bit_cast<std::uint64_t>(t.snr_db), kTagNoise});
    const EvalReport report = evaluate(data, model, noise);

    rec.train_accuracy = report.train_accuracy;
    rec.test_accuracy = report.test_accuracy;
    rec.train_ls_error = model.train_ls_error;
    if (model.pgd_trace) {
      rec.pgd_final_objective = model.pgd_trace->final_objective;
      rec.pgd_iters = model.pgd_trace->iters_run;
    }
  } catch (const NumericFailure& e) {
    const double nan = std::nan("");
    rec.train_accuracy = rec.test_accuracy = rec.train_ls_error = rec.pgd_final_objective = nan;
    rec.error = e.what();
  }
  if (c.record_wallclock)
    rec.wallclock_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return rec;
}

}  // namespace

std::vector<ExperimentRecord> run(const ExperimentConfig& config) {
  // Resolve every input before any computation.
  const auto files = resolve_dataset_files(config);

  std::vector<SourceData> sources(config.datasets.size());
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    const auto& name = config.datasets[d];
    const DatasetId id = parse_dataset_id(name);
    const auto& paths = files.at(name);
    if (id == DatasetId::Mnist) {
      sources[d].images = load_idx_images(paths[0]);
      sources[d].labels = load_idx_labels(paths[1]);
    } else {
      sources[d].table = load_csv(paths[0], builtin_schema(id));
    }
  }

  // Split and scaling depend on (dataset, seed) only.
  std::vector<LabeledDataset> prepared;
  std::map<std::pair<std::size_t, std::uint64_t>, std::size_t> prepared_index;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    const auto& name = config.datasets[d];
    for (auto seed : config.seeds) {
      if (prepared_index.contains({d, seed})) continue;
      Rng rng = derive_stream(config.master_seed, {hash_string(name), seed, kTagData});
      const RawTable raw = sources[d].images
                               ? mnist_binary(*sources[d].images, sources[d].labels,
                                              config.mnist_pixels, rng, config.mnist_max_samples)
                               : *sources[d].table;
      prepared_index[{d, seed}] = prepared.size();
      prepared.push_back(prepare_dataset(raw, name, config.test_fraction, rng));
    }
  }

  std::vector<Task> tasks;
  for (std::size_t d = 0; d < config.datasets.size(); ++d)
    for (auto v : config.variants)
      for (auto n : config.n_r)
        for (const auto& k : config.ricean_k)
          for (auto snr : config.snr_db)
            for (auto seed : config.seeds)
              tasks.push_back({d, v, n, k, snr, seed, prepared_index.at({d, seed})});

  std::vector<ExperimentRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const Task& t = tasks[i];
        records[i] = run_task(config, t, config.datasets[t.dataset], prepared[t.prepared]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, tasks.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::string format_csv(const std::vector<ExperimentRecord>& records) {
  std::string out;
  for (std::size_t i = 0; i < kRecordFields.size(); ++i) {
    if (i) out += ',';
    out += kRecordFields[i];
  }
  out += '\n';
  for (const auto& r : records) {
    out += sanitize(r.dataset) + ',' + sanitize(r.variant) + ',' + std::to_string(r.n_r) + ',' +
           (r.ricean_k ? fmt6(*r.ricean_k) : "rayleigh") + ',' + fmt6(r.snr_db) + ',' +
           std::to_string(r.seed) + ',' + fmt6(r.train_accuracy) + ',' + fmt6(r.test_accuracy) +
           ',' + fmt6(r.train_ls_error) + ',' + fmt6(r.pgd_final_objective) + ',' +
           std::to_string(r.pgd_iters) + ',' + fmt6(r.wallclock_ms) + ',' + sanitize(r.error) +
           '\n';
  }
  return out;
}

void write_csv(const std::vector<ExperimentRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  const std::string text = format_csv(records);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failed", path.string());
}

std::vector<ExperimentRecord> parse_csv(std::string_view text) {
  std::vector<ExperimentRecord> out;
  std::stringstream ss{std::string(text)};
  std::string line;
  if (!std::getline(ss, line)) throw FormatError("csv: missing header");
  std::size_t row = 0;
  while (std::getline(ss, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() == kRecordFields.size() - 1) cells.emplace_back();  // empty error column
    if (cells.size() != kRecordFields.size())
      throw ParseError("csv: wrong number of cells", row, cells.size());
    auto num = [&](std::size_t col) {
      try {
        return cells[col] == "nan" ? std::nan("") : std::stod(cells[col]);
      } catch (const std::exception&) {
        throw ParseError("csv: bad number '" + cells[col] + "'", row, col);
      }
    };
    ExperimentRecord r;
    r.dataset = cells[0];
    r.variant = cells[1];
    r.n_r = static_cast<std::size_t>(std::stoull(cells[2]));
    if (cells[3] != "rayleigh") r.ricean_k = num(3);
    r.snr_db = num(4);
    r.seed = std::stoull(cells[5]);
    r.train_accuracy = num(6);
    r.test_accuracy = num(7);
    r.train_ls_error = num(8);
    r.pgd_final_objective = num(9);
    r.pgd_iters = static_cast<std::size_t>(std::stoull(cells[10]));
    r.wallclock_ms = num(11);
    r.error = cells[12];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace nlcms
