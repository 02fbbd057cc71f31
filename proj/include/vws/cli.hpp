#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vws/lab.hpp"

namespace vws::cli {

/// Thrown for configuration problems; carries every problem found.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct SolverBlock {
  double tol = 1e-8;
  int max_iters = 200;
  double theta = 1.0;
  double linear_tol = 1e-10;
  bool operator==(const SolverBlock&) const = default;
};

struct TruncateBlock {
  int corpus = 50;
  std::vector<double> lambda_quantiles{0.5, 0.75, 0.9};
  double c0 = 1.0;
  bool operator==(const TruncateBlock&) const = default;
};

struct VerifyBlock {
  std::string inequality = "keyest";
  std::vector<NamedRecipe> f_family;
  std::vector<NamedRecipe> weight_family;
  std::vector<nlohmann::json> balls;  ///< {center: [x, y], radius}
  std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
  double q_tilde = 1.5;
  bool operator==(const VerifyBlock&) const = default;
};

struct DivCurlBlock {
  std::vector<std::string> recipes{"positive_trig", "negative_control"};
  std::vector<int> ks{8, 16, 32, 64};
  int j_max = 6;
  bool operator==(const DivCurlBlock&) const = default;
};

struct DiracBlock {
  double x = 0.5, y = 0.5;
  bool operator==(const DiracBlock&) const = default;
};

struct ExperimentConfig {
  std::string command;
  std::vector<int> ladder{32};
  NamedRecipe op{"linear_identity", nlohmann::json::object()};
  NamedRecipe rhs{"zero", nlohmann::json::object()};
  NamedRecipe weight{"one", nlohmann::json::object()};
  double p = 2.0;
  double q = 1.5;
  SolverBlock solver;
  std::uint64_t seed = 1;
  std::string output;
  TruncateBlock truncate;
  VerifyBlock verify;
  DivCurlBlock divcurl;
  DiracBlock dirac;
  std::vector<std::string> runs;  ///< report: run directories

  bool operator==(const ExperimentConfig&) const = default;
};

const std::vector<std::string>& commands();

/// Parses and validates; throws ValidationError listing all problems.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json serialize_config(const ExperimentConfig& c);
/// Problems with registry ids, ranges and the ladder; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& c);

struct RunManifest {
  nlohmann::json json;
  bool complete() const { return json.value("status", "") == "complete"; }
};

/// Executes the command into `out_dir` through a temporary directory that is
/// renamed into place. Throws ValidationError before any work; a pipeline
/// failure leaves the partial outputs and a manifest marked failed, then
/// rethrows.
RunManifest run(const ExperimentConfig& config, const std::string& out_dir);

/// Recomputes every hash listed in a run directory's manifest; throws
/// ValidationError naming the first offending file.
nlohmann::json verify_manifest(const std::string& run_dir);

std::string sha256_file(const std::string& path);

}  // namespace vws::cli
