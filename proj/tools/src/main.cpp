// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0
//
// kvslim command line front end.
//
//   kvslim gen       write synthetic features, prompt, and model tensors
//   kvslim compress  run the chunked-prefill compression pipeline
//   kvslim analyze   profile attention redundancy over time windows
//   kvslim verify    run the numerical verification suite
//
// Exit codes: 0 success, 1 verification failure or broken internal
// invariant, 2 bad usage or bad input.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "kvslim/analysis.hpp"
#include "kvslim/compressor.hpp"
#include "kvslim/config.hpp"
#include "kvslim/error.hpp"
#include "kvslim/model.hpp"
#include "kvslim/oracle.hpp"
#include "kvslim/report.hpp"
#include "kvslim/rng.hpp"
#include "kvslim/synthetic.hpp"
#include "kvslim/tensor_io.hpp"

namespace {

using kvslim::PipelineConfig;

struct GenArgs {
  std::string config;
  std::string out_features = "features.artk";
  std::string out_prompt = "prompt.artk";
  std::string out_model = "model.artk";
  std::size_t scenes = 4;
  double noise = 0.05;
};

struct RunArgs {
  std::string config;
  std::string features;
  std::string prompt;
  std::string model;
  std::string report;
  std::string heatmap;  // analyze only
  bool no_timing = false;
};

struct VerifyArgs {
  std::size_t identity_trials = 200;
  std::size_t bound_trials = 500;
  std::size_t greedy_trials = 1000;
  std::uint64_t seed = 0;
  std::string report;
  bool no_timing = false;
};

void emit(const nlohmann::ordered_json& report, const std::string& path) {
  if (path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    kvslim::write_text(path, report.dump(2) + "\n");
    std::cerr << "report written to " << path << "\n";
  }
}

// Loads the three tensors and checks them against the configuration before
// any heavy work starts.
struct LoadedInputs {
  kvslim::Mat features;
  kvslim::Mat prompt;
  kvslim::ModelParams model;
};

LoadedInputs load_inputs(const PipelineConfig& cfg, const RunArgs& args) {
  LoadedInputs in;
  in.features = kvslim::as_matrix(kvslim::read_tensor(args.features));
  in.prompt = kvslim::as_matrix(kvslim::read_tensor(args.prompt));
  in.model = kvslim::unpack_model(kvslim::read_tensor(args.model));
  KVSLIM_REQUIRE(in.features.rows == cfg.video_tokens() &&
                     in.features.cols == cfg.width,
                 args.features, ": expected [", cfg.video_tokens(), " x ",
                 cfg.width, "], got [", in.features.rows, " x ",
                 in.features.cols, "]");
  KVSLIM_REQUIRE(
      in.prompt.rows == cfg.prompt_tokens && in.prompt.cols == cfg.width,
      args.prompt, ": expected [", cfg.prompt_tokens, " x ", cfg.width,
      "], got [", in.prompt.rows, " x ", in.prompt.cols, "]");
  KVSLIM_REQUIRE(in.model.width == cfg.width &&
                     in.model.layers.size() == cfg.layers,
                 args.model, ": expected ", cfg.layers, " layers of width ",
                 cfg.width, ", got ", in.model.layers.size(), " of width ",
                 in.model.width);
  return in;
}

int run_gen(const GenArgs& args) {
  const PipelineConfig cfg = kvslim::load_config(args.config);
  const kvslim::Mat features =
      kvslim::synthesize_features(cfg, args.scenes, args.noise);
  const kvslim::Mat prompt = kvslim::synthesize_prompt(cfg);
  const kvslim::ModelParams model = kvslim::init_model(cfg);

  kvslim::write_tensor(args.out_features, kvslim::from_matrix(features));
  kvslim::write_tensor(args.out_prompt, kvslim::from_matrix(prompt));
  kvslim::write_tensor(args.out_model, kvslim::pack_model(model));

  std::cerr << "wrote " << args.out_features << " [" << features.rows << " x "
            << features.cols << "]\n"
            << "wrote " << args.out_prompt << " [" << prompt.rows << " x "
            << prompt.cols << "]\n"
            << "wrote " << args.out_model << " [" << model.layers.size()
            << " layers, width " << model.width << "]\n";
  return 0;
}

int run_compress(const RunArgs& args) {
  const PipelineConfig cfg = kvslim::load_config(args.config);
  const LoadedInputs in = load_inputs(cfg, args);
  const kvslim::PipelineResult result =
      kvslim::run_pipeline(in.features, in.prompt, in.model, cfg);
  emit(kvslim::compress_report(cfg, result, !args.no_timing), args.report);
  return 0;
}

int run_analyze(const RunArgs& args) {
  const PipelineConfig cfg = kvslim::load_config(args.config);
  const LoadedInputs in = load_inputs(cfg, args);
  const auto start = std::chrono::steady_clock::now();
  const kvslim::HeavyHitterReport profile =
      kvslim::redundancy_profile(in.features, in.prompt, in.model, cfg);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  if (!args.heatmap.empty()) {
    kvslim::write_heatmap_csv(profile, args.heatmap);
    std::cerr << "heatmap written to " << args.heatmap << "\n";
  }
  emit(kvslim::analyze_report(cfg, profile, !args.no_timing, wall_ms),
       args.report);
  return 0;
}

int run_verify(const VerifyArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  const auto identities = kvslim::oracle::verify_masked_softmax_identity(
      args.identity_trials, kvslim::mix_seed(args.seed, 1));
  const auto bounds =
      kvslim::oracle::verify_bound(args.bound_trials,
                                   kvslim::mix_seed(args.seed, 2));
  const auto greedys = kvslim::oracle::check_near_optimality(
      args.greedy_trials, kvslim::mix_seed(args.seed, 3));
  const double wall_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();

  const kvslim::VerifySummary summary =
      kvslim::summarize_verification(identities, bounds, greedys);
  std::cerr << "masked softmax identity: " << summary.identity_trials
            << " trials, " << summary.identity_failures
            << " failures, max diff " << summary.identity_max_diff << "\n"
            << "loss bound: " << summary.bound_trials << " trials, "
            << summary.bound_violations << " violations, min slack "
            << summary.bound_min_slack << "\n"
            << "near optimality: " << summary.greedy_trials << " trials, "
            << summary.gain_rule_failures << " gain-rule failures, "
            << summary.greedy_exact << " exact optima\n";

  emit(kvslim::verify_report(summary, bounds, args.seed, !args.no_timing,
                             wall_ms),
       args.report);
  return summary.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive KV cache compression toolkit"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate synthetic inputs");
  gen->add_option("--config", gen_args.config, "pipeline config JSON")
      ->required();
  gen->add_option("--out-features", gen_args.out_features,
                  "video feature tensor path");
  gen->add_option("--out-prompt", gen_args.out_prompt, "prompt tensor path");
  gen->add_option("--out-model", gen_args.out_model, "model tensor path");
  gen->add_option("--scenes", gen_args.scenes, "number of scene cuts");
  gen->add_option("--noise", gen_args.noise, "within-scene jitter scale");

  RunArgs compress_args;
  CLI::App* compress =
      app.add_subcommand("compress", "run the compression pipeline");
  RunArgs analyze_args;
  CLI::App* analyze =
      app.add_subcommand("analyze", "profile attention redundancy");
  for (auto [cmd, args] : {std::pair{compress, &compress_args},
                           std::pair{analyze, &analyze_args}}) {
    cmd->add_option("--config", args->config, "pipeline config JSON")
        ->required();
    cmd->add_option("--features", args->features, "video feature tensor")
        ->required();
    cmd->add_option("--prompt", args->prompt, "prompt tensor")->required();
    cmd->add_option("--model", args->model, "model tensor")->required();
    cmd->add_option("--report", args->report,
                    "write the JSON report here instead of stdout");
    cmd->add_flag("--no-timing", args->no_timing,
                  "omit wall-clock timing from the report");
  }
  analyze->add_option("--heatmap", analyze_args.heatmap,
                      "write the window/layer CSV heatmap here");

  VerifyArgs verify_args;
  CLI::App* verify =
      app.add_subcommand("verify", "run the numerical verification suite");
  verify->add_option("--identity-trials", verify_args.identity_trials,
                     "masked-softmax identity trials");
  verify->add_option("--bound-trials", verify_args.bound_trials,
                     "loss bound trials");
  verify->add_option("--greedy-trials", verify_args.greedy_trials,
                     "near-optimality trials");
  verify->add_option("--seed", verify_args.seed, "base seed");
  verify->add_option("--report", verify_args.report,
                     "write the JSON report here instead of stdout");
  verify->add_flag("--no-timing", verify_args.no_timing,
                   "omit wall-clock timing from the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (compress->parsed()) return run_compress(compress_args);
    if (analyze->parsed()) return run_analyze(analyze_args);
    return run_verify(verify_args);
  } catch (const kvslim::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const kvslim::InternalError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
