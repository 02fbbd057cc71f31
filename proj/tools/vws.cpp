#include <cstdint>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vws/cli.hpp"

namespace {

nlohmann::json load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw vws::cli::ValidationError({"cannot open config " + path});
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw vws::cli::ValidationError({"config " + path + " is not valid JSON: " + e.what()});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted estimates lab"};
  std::string command, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "solve | truncate | weights-ap | verify | divcurl | dirac | report")
      ->required()
      ->check(CLI::IsMember(vws::cli::commands()));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "output directory (must not exist)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    nlohmann::json j = load(config_path);
    if (j.is_object() && !j.contains("command")) j["command"] = command;
    if (*seed_opt && j.is_object()) j["seed"] = seed;
    vws::cli::ExperimentConfig config = vws::cli::parse_config(j);
    if (config.command != command)
      throw vws::cli::ValidationError({"config command '" + config.command + "' does not match '" + command + "'"});
    const auto manifest = vws::cli::run(config, out_dir);
    std::cout << manifest.json.at("summary").dump() << '\n';
    return 0;
  } catch (const vws::cli::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pipeline failure: " << e.what() << '\n';
    return 3;
  }
}
