// Experiment runner: `nlcms run --config <file> [--out <csv>] [--seed <u64>] [--override k=v ...]`

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlcms/experiment.hpp"

namespace {

nlohmann::json effective_config(const std::string& config_path,
                                const std::vector<std::string>& overrides,
                                const std::optional<std::uint64_t>& seed) {
  nlohmann::json j = config_path.empty() ? nlcms::to_json(nlcms::ExperimentConfig{})
                                         : nlcms::to_json(nlcms::load_config(config_path));
  for (const auto& o : overrides) nlcms::apply_override(j, o);
  if (seed) j["master_seed"] = *seed;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Over-the-air ELM experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::optional<std::size_t> workers;

  auto* run = app.add_subcommand("run", "Execute a sweep and write CSV records");
  run->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "CSV output path (stdout when omitted)");
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--override", overrides, "Dotted key override, e.g. pgd.step_size=0.05");
  run->add_option("--workers", workers, "Parallel sweep workers");

  auto* show = app.add_subcommand("config", "Print the effective config as JSON");
  show->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  show->add_option("--seed", seed, "Master seed (overrides the config)");
  show->add_option("--override", overrides, "Dotted key override");

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json j = effective_config(config_path, overrides, seed);
    if (workers) j["workers"] = *workers;
    const nlcms::ExperimentConfig config = nlcms::config_from_json(j);

    if (*show) {
      std::cout << nlcms::to_json(config).dump(2) << '\n';
      return 0;
    }

    std::cerr << "running " << nlcms::expected_record_count(config) << " records\n";
    const auto records = nlcms::run(config);
    if (out_path.empty()) {
      std::cout << nlcms::format_csv(records);
    } else {
      nlcms::write_csv(records, out_path);
      std::cerr << "wrote " << records.size() << " records to " << out_path << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
