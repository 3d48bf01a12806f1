// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the installed command line tool. Each case shells out
// to the real binary, so these tests pin the process exit codes and the
// on-disk artifacts rather than any internal API.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliScratch {
  fs::path dir;
  CliScratch() {
    dir = fs::temp_directory_path() / "kvslim_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~CliScratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

int run_cli(const std::string& args, const fs::path& out, const fs::path& err) {
  const std::string cmd = std::string("\"") + KVSLIM_CLI_PATH + "\" " + args +
                          " > \"" + out.string() + "\" 2> \"" + err.string() +
                          "\"";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kConfig = R"({
  "frames": 8,
  "tokens_per_frame": 2,
  "frames_per_chunk": 4,
  "prompt_tokens": 4,
  "layers": 2,
  "heads": 2,
  "width": 8,
  "max_context": 14,
  "seed": 11
})";

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  REQUIRE(out.good());
}

std::string quoted(const fs::path& path) {
  return "\"" + path.string() + "\"";
}

}  // namespace

TEST_CASE("cli round trip: gen, compress, analyze, verify") {
  CliScratch scratch;
  const fs::path cfg = scratch / "config.json";
  write_file(cfg, kConfig);
  const fs::path out = scratch / "out.txt";
  const fs::path err = scratch / "err.txt";

  const fs::path features = scratch / "features.artk";
  const fs::path prompt = scratch / "prompt.artk";
  const fs::path model = scratch / "model.artk";
  const std::string inputs = " --config " + quoted(cfg) + " --features " +
                             quoted(features) + " --prompt " + quoted(prompt) +
                             " --model " + quoted(model);

  REQUIRE(run_cli("gen --config " + quoted(cfg) + " --out-features " +
                      quoted(features) + " --out-prompt " + quoted(prompt) +
                      " --out-model " + quoted(model),
                  out, err) == 0);
  REQUIRE(fs::exists(features));
  REQUIRE(fs::exists(prompt));
  REQUIRE(fs::exists(model));

  SUBCASE("compress writes a structured report") {
    const fs::path report = scratch / "compress.json";
    CHECK(run_cli("compress" + inputs + " --report " + quoted(report), out,
                  err) == 0);
    const auto doc = nlohmann::json::parse(slurp(report));
    CHECK(doc.contains("config"));
    CHECK(doc.contains("temporal"));
    CHECK(doc.contains("chunks"));
    CHECK(doc.contains("cache"));
    CHECK(doc.contains("timing"));
    CHECK(doc["chunks"].size() == 2);
  }

  SUBCASE("compress reports are byte-identical without timing") {
    const fs::path first = scratch / "first.json";
    const fs::path second = scratch / "second.json";
    CHECK(run_cli("compress" + inputs + " --no-timing --report " +
                      quoted(first),
                  out, err) == 0);
    CHECK(run_cli("compress" + inputs + " --no-timing --report " +
                      quoted(second),
                  out, err) == 0);
    CHECK(slurp(first) == slurp(second));
    CHECK(!nlohmann::json::parse(slurp(first)).contains("timing"));
  }

  SUBCASE("analyze writes the report and the heatmap") {
    const fs::path report = scratch / "analyze.json";
    const fs::path heatmap = scratch / "heatmap.csv";
    CHECK(run_cli("analyze" + inputs + " --report " + quoted(report) +
                      " --heatmap " + quoted(heatmap),
                  out, err) == 0);
    const auto doc = nlohmann::json::parse(slurp(report));
    CHECK(doc.contains("lambda"));
    CHECK(doc.contains("window_count"));
    const std::string csv = slurp(heatmap);
    CHECK(csv.rfind("chunk,layer,lambda\n", 0) == 0);
  }

  SUBCASE("mismatched tensors are rejected as bad input") {
    CHECK(run_cli("compress --config " + quoted(cfg) + " --features " +
                      quoted(prompt) + " --prompt " + quoted(prompt) +
                      " --model " + quoted(model),
                  out, err) == 2);
    CHECK(slurp(err).find("error:") != std::string::npos);
  }
}

TEST_CASE("cli verify succeeds and its report is reproducible") {
  CliScratch scratch;
  const fs::path out = scratch / "out.txt";
  const fs::path err = scratch / "err.txt";
  const fs::path first = scratch / "verify1.json";
  const fs::path second = scratch / "verify2.json";
  const std::string trials =
      "verify --identity-trials 50 --bound-trials 50 --greedy-trials 100 "
      "--seed 7 --no-timing --report ";

  CHECK(run_cli(trials + quoted(first), out, err) == 0);
  CHECK(run_cli(trials + quoted(second), out, err) == 0);
  CHECK(slurp(first) == slurp(second));

  const auto doc = nlohmann::json::parse(slurp(first));
  CHECK(doc["ok"] == true);
  CHECK(doc["masked_softmax_identity"]["failures"] == 0);
  CHECK(doc["loss_bound"]["violations"] == 0);
  CHECK(doc["near_optimality"]["gain_rule_failures"] == 0);
}

TEST_CASE("cli usage errors exit with code 2") {
  CliScratch scratch;
  const fs::path out = scratch / "out.txt";
  const fs::path err = scratch / "err.txt";

  SUBCASE("unknown flag") {
    CHECK(run_cli("verify --definitely-not-a-flag", out, err) == 2);
    CHECK(slurp(err).find("error:") != std::string::npos);
    CHECK(slurp(err).find("Usage") != std::string::npos);
  }
  SUBCASE("missing required option") {
    CHECK(run_cli("gen", out, err) == 2);
  }
  SUBCASE("missing subcommand") {
    CHECK(run_cli("", out, err) == 2);
  }
  SUBCASE("nonexistent config file") {
    CHECK(run_cli("gen --config /definitely/missing.json", out, err) == 2);
    CHECK(slurp(err).find("error:") != std::string::npos);
  }
  SUBCASE("malformed config file") {
    const fs::path cfg = scratch / "bad.json";
    write_file(cfg, "{ not json");
    CHECK(run_cli("gen --config " + quoted(cfg), out, err) == 2);
  }
}

TEST_CASE("cli help exits cleanly") {
  CliScratch scratch;
  const fs::path out = scratch / "out.txt";
  const fs::path err = scratch / "err.txt";
  CHECK(run_cli("--help", out, err) == 0);
  CHECK(slurp(out).find("gen") != std::string::npos);
  CHECK(slurp(out).find("verify") != std::string::npos);
}
