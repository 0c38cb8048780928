// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "rdsw/cli.hpp"
#include "rdsw/io.hpp"

using namespace rdsw;
using namespace rdsw::cli;
using nlohmann::json;

namespace {

struct Invocation {
  int code = 0;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rdsw");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("rdsw-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config: defaults and echo") {
  const auto cfg = parse_config(R"({"command": "stationary", "system": "binary_affine"})");
  CHECK(cfg.seed == 42);
  CHECK(cfg.threads == 1);
  CHECK(cfg.params["samples"] == 100000);
  CHECK(cfg.echo["params"]["burn_in"] == 1000);
  CHECK(cfg.system->name() == "binary_affine");
}

TEST_CASE("config: strict validation with field diagnostics") {
  auto where = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.where() + ": " + e.what();
    }
    return std::string("accepted");
  };
  CHECK(where(R"({"command": "stationary", "system": "binary_affine", "sede": 1})")
            .rfind("sede: unknown key", 0) == 0);
  CHECK(where(R"({"command": "sync", "system": "binary_affine", "params": {"n": -3}})")
            .rfind("params.n:", 0) == 0);
  CHECK(where(R"({"command": "sync", "system": "binary_affine", "params": {"alpah": 1}})")
            .rfind("params.alpah: unknown key", 0) == 0);
  CHECK(where(R"({"command": "stationary", "system": "nope"})").rfind("system:", 0) == 0);
  CHECK(where(R"({"command": "cocycle"})").rfind("cocycle:", 0) == 0);
  CHECK(where(R"({"command": "jump"})").rfind("command: unknown command", 0) == 0);
  const auto bad_map = where(R"({"command": "stationary", "system": {"maps": [
      {"type": "affine", "a": 0.5, "b": 0}, {"type": "affine", "a": 0.5, "bb": 0.5}],
      "probs": [0.5, 0.5]}})");
  CHECK(bad_map.rfind("system.maps[1].b: missing required field", 0) == 0);
  const auto probs = where(R"({"command": "stationary", "system": {"maps": [
      {"type": "affine", "a": 0.5, "b": 0}, {"type": "affine", "a": 0.5, "b": 0.5}],
      "probs": [0.5, 0.4]}})");
  CHECK(probs.find("system.probs: probs must sum to 1") == 0);
  CHECK(where("{\"command\": \"stationary\",\n  \"system\": }").rfind("line 2, column 13", 0) == 0);
}

TEST_CASE("config: inline systems and cocycles") {
  const auto cfg = parse_config(R"({"command": "ulam", "system": {"name": "mix", "maps": [
      {"type": "rotation", "c": 0.5},
      {"type": "perturbed_rotation", "c": 0.1, "amp": 0.3, "harmonic": 2},
      {"type": "moebius", "matrix": [[2, 0], [0, 0.5]]},
      {"type": "tabulated", "x": [0.0, 0.5], "y": [0.1, 0.4], "slopes": [0.6, 1.4]}],
      "probs": [0.25, 0.25, 0.25, 0.25]}})");
  CHECK(cfg.system->size() == 4);
  const auto coc = parse_config(R"({"command": "cocycle", "cocycle": {"matrices": [[2, 0, 0, 0.5],
      [[0, -1], [1, 0]]], "probs": [0.5, 0.5]}})");
  CHECK(coc.cocycle->dim() == 2);
}

TEST_CASE("cli: probability vector summing to 0.9 exits 2") {
  const auto dir = scratch("probs");
  std::filesystem::create_directories(dir);
  write_text(dir / "bad.json", R"({"command": "stationary", "system": {"maps": [
      {"type": "affine", "a": 0.5, "b": 0}, {"type": "affine", "a": 0.5, "b": 0.5}],
      "probs": [0.5, 0.4]}})");
  const auto r = invoke({"run", "--config", (dir / "bad.json").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("probs must sum to 1") != std::string::npos);
  CHECK(invoke({"bogus"}).code == kExitConfig);
  CHECK(invoke({"run"}).code == kExitConfig);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli: stationary writes atoms and a manifest, reruns are byte identical") {
  const auto dir = scratch("stationary");
  const auto args = std::vector<std::string>{"stationary", "--system", "binary_affine", "--seed",
                                             "42", "--out", dir.string()};
  REQUIRE(invoke(args).code == kExitOk);
  const auto first = read_text(dir / "measure.csv");
  CHECK(first.rfind("point,weight\n", 0) == 0);
  auto manifest = json::parse(read_text(dir / "manifest.json"));
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["files"]["measure.csv"]["fnv1a64"] == hex64(fnv1a64(first)));
  CHECK(manifest.contains("wall_time_seconds"));
  REQUIRE(invoke(args).code == kExitOk);
  CHECK(read_text(dir / "measure.csv") == first);
  auto again = json::parse(read_text(dir / "manifest.json"));
  manifest.erase("wall_time_seconds");
  again.erase("wall_time_seconds");
  CHECK(manifest == again);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli: json output and library errors") {
  const auto cfg = parse_config(
      R"({"command": "ld", "system": "slope_pair", "format": "json",
          "params": {"horizons": [8, 12], "replicas": 1000, "gamma": -1.0397207708399179}})");
  const auto out = execute(cfg);
  REQUIRE(out.files.count("ld.json"));
  const auto rows = json::parse(out.files.at("ld.json"));
  CHECK(rows.size() == 20);
  CHECK(rows[0].contains("ci_low"));

  const auto dir = scratch("refusal");
  const auto r = invoke({"cocycle", "--cocycle", "rotation_only", "--out", dir.string()});
  CHECK(r.code == kExitLibrary);
  CHECK(r.err.find("error[hypothesis_failed]") == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli: gallery listing") {
  const auto dir = scratch("gallery");
  const auto r = invoke({"gallery", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("binary_affine") != std::string::npos);
  CHECK(r.out.find("gamma = -log 2") != std::string::npos);
  CHECK(r.out.find("non-proximal; (LC) holds") != std::string::npos);
  CHECK(r.out.find("diag_rot") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli: every command runs on a small config") {
  const std::vector<std::string> configs{
      R"({"command": "sync", "system": "anton", "params": {"x": 0.3, "y": 0.8, "n": 50, "average_replicas": 100}})",
      R"({"command": "limits", "system": "binary_affine", "params": {"n": 500, "replicas": 50, "slln_n": 1000, "lil_n_max": 10000, "lil_replicas": 4}})",
      R"({"command": "lyapunov", "system": "moebius_pair", "params": {"n": 500, "distortion": true, "distortion_n": 50, "distortion_replicas": 4}})",
      R"({"command": "ld", "system": "slope_pair", "params": {"horizons": [8], "sync": true}})",
      R"({"command": "cocycle", "cocycle": "diag_rot", "params": {"n": 1000, "replicas": 4, "lc_replicas": 50}})",
      R"({"command": "ulam", "system": "anton", "params": {"k_cells": 64, "export": true}})",
      R"({"command": "ulam", "system": "binary_affine", "params": {"k_cells": 16, "operator": "laplace_markov"}})",
      R"({"command": "stationary", "system": {"maps": [{"type": "projective", "matrix": [[2, 0], [0, 0.5]]},
          {"type": "projective", "matrix": [[0.7071067811865476, -0.7071067811865476], [0.7071067811865476, 0.7071067811865476]]}],
          "probs": [0.5, 0.5]}, "params": {"samples": 1000}})"};
  for (const auto& text : configs) {
    CAPTURE(text);
    const auto out = execute(parse_config(text));
    CHECK_FALSE(out.files.empty());
    CHECK_FALSE(out.summary.empty());
  }
}

TEST_CASE("cli: verify runs selected criteria") {
  const auto out = execute(parse_config(R"({"command": "verify", "params": {"cases": [2, 12], "probe": false}})"));
  CHECK(out.ok);
  CHECK(out.files.count("case_02/rates.csv"));
  CHECK(out.files.at("verify.csv").rfind("criterion,pass,digest\n2,true,", 0) == 0);
}
