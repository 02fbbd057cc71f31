#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "vws/cli.hpp"

namespace fs = std::filesystem;
using namespace vws::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vws_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

nlohmann::json small_verify() {
  return {{"command", "verify"},
          {"mesh", {{"ladder", {8, 16}}}},
          {"operator", {{"id", "linear_identity"}}},
          {"verify",
           {{"inequality", "keyest"},
            {"f_family", {{{"id", "grad_sin"}}, {{"id", "rough_random"}, {"params", {{"seed", 3}}}}}},
            {"weight_family", {{{"id", "one"}}}}}}};
}

int exit_code(const std::string& args) {
  const int status = std::system((std::string(VWS_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round-trips through serialization") {
  const ExperimentConfig c = parse_config(small_verify());
  const ExperimentConfig again = parse_config(serialize_config(c));
  CHECK(c == again);
  CHECK(serialize_config(again) == serialize_config(c));
  CHECK(c.verify.f_family.size() == 2);
  CHECK(c.verify.f_family[1].params.at("seed") == 3);
}

TEST_CASE("validation reports every problem at once") {
  nlohmann::json j = small_verify();
  j["mesh"]["ladder"] = {1};
  j["operator"]["id"] = "nope";
  j["colour"] = "blue";
  j["solver"] = {{"theta", 2.0}};
  try {
    (void)parse_config(j);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string all = e.what();
    CHECK(e.problems().size() >= 4);
    CHECK(all.find("colour") != std::string::npos);
    CHECK(all.find("ladder") != std::string::npos);
    CHECK(all.find("nope") != std::string::npos);
    CHECK(all.find("theta") != std::string::npos);
  }
}

TEST_CASE("wrong types are reported with their path") {
  nlohmann::json j = small_verify();
  j["exponents"] = {{"p", "two"}};
  CHECK_THROWS_AS(parse_config(j), ValidationError);
}

TEST_CASE("runs are deterministic, hashed and refuse to overwrite") {
  const ExperimentConfig c = parse_config(small_verify());
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const RunManifest ma = run(c, a.string());
  const RunManifest mb = run(c, b.string());
  CHECK(ma.complete());
  CHECK(ma.json.at("files") == mb.json.at("files"));
  CHECK_NOTHROW(verify_manifest(a.string()));
  CHECK_THROWS_AS(run(c, a.string()), ValidationError);
  CHECK_FALSE(fs::exists(a.string() + ".lock"));

  std::ofstream(a / "verify.csv", std::ios::app) << "tampered\n";
  CHECK_THROWS_AS(verify_manifest(a.string()), ValidationError);
}

TEST_CASE("pipeline failures leave a failed manifest") {
  nlohmann::json j = {{"command", "solve"},
                      {"mesh", {{"ladder", {16}}}},
                      {"operator", {{"id", "prototype_smooth"}}},
                      {"rhs", {{"id", "grad_sin"}, {"params", {{"amplitude", 10.0}}}}},
                      {"solver", {{"max_iters", 1}}}};
  const fs::path out = scratch("failed");
  CHECK_THROWS_AS(run(parse_config(j), out.string()), std::runtime_error);
  std::ifstream is(out / "manifest.json");
  REQUIRE(is);
  CHECK(nlohmann::json::parse(is).at("status") == "failed");
}

TEST_CASE("report aggregates runs into variation factors") {
  const ExperimentConfig c = parse_config(small_verify());
  const fs::path src = scratch("report_src"), out = scratch("report_out");
  run(c, src.string());
  ExperimentConfig r = parse_config({{"command", "report"}, {"runs", {src.string()}}});
  run(r, out.string());
  std::ifstream is(out / "summary.csv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header.find("variation_factor") != std::string::npos);
  CHECK(row.rfind("keyest,grad_sin,one", 0) == 0);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("exit");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << small_verify().dump();
    std::ofstream(dir / "bad.json") << R"({"command":"verify","mesh":{"ladder":[0]}})";
    std::ofstream(dir / "broken.json") << "{not json";
    nlohmann::json fail = {{"command", "solve"},
                           {"mesh", {{"ladder", {16}}}},
                           {"operator", {{"id", "prototype_smooth"}}},
                           {"rhs", {{"id", "grad_sin"}, {"params", {{"amplitude", 10.0}}}}},
                           {"solver", {{"max_iters", 1}}}};
    std::ofstream(dir / "fail.json") << fail.dump();
  }
  const std::string d = dir.string();
  CHECK(exit_code("verify --config " + d + "/ok.json --out " + d + "/o1 --seed 5") == 0);
  CHECK(exit_code("verify --config " + d + "/ok.json --out " + d + "/o1") == 2);
  CHECK(exit_code("verify --config " + d + "/bad.json --out " + d + "/o2") == 2);
  CHECK(exit_code("verify --config " + d + "/broken.json --out " + d + "/o3") == 2);
  CHECK(exit_code("frobnicate --config " + d + "/ok.json --out " + d + "/o4") == 2);
  CHECK(exit_code("solve --config " + d + "/fail.json --out " + d + "/o5") == 3);
  std::ifstream is(dir / "o1" / "manifest.json");
  CHECK(nlohmann::json::parse(is).at("seed") == 5);
}
