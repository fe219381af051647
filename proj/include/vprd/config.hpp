#pragma once

// Run configuration shared by all subcommands. Sources, weakest first:
// built-in defaults, the VPRD_SEED environment variable (seed only), a JSON
// config file, explicit command-line flags. Unknown config keys are errors,
// and every run writes the fully resolved configuration next to its outputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprd/data_model.hpp"
#include "vprd/evaluation.hpp"
#include "vprd/mlp.hpp"
#include "vprd/synthetic.hpp"
#include "vprd/training.hpp"

namespace vprd {

struct Config {
  std::uint64_t seed = 42;

  // network and training
  std::size_t hidden = 294;
  double dropout_p = 0.45;
  double lr = 0.005;
  double scheduler_factor = 0.05;
  std::size_t scheduler_patience = 238;
  std::size_t early_stop_patience = 1225;
  std::size_t max_steps = 50000;
  std::string loss = "mse";            // "mse" or "anti-mean"
  double alpha = 0.0;
  std::string reduction = "mean";      // "mean" or "sum"
  bool standardize = true;
  SplitFractions split;

  // preprocessing
  std::size_t smooth_radius_px = 10;
  std::size_t crop_padding_px = 10;

  // evaluation
  std::string neighbor_alignment = "lower";

  // synthetic data
  std::size_t synth_n = 2826;
  std::size_t synth_d_in = 22;
  std::size_t synth_d_out = 567;
  std::string synth_mapping = "bump";
  double synth_noise_std = 0.02;
  double synth_jitter_std_px = 8.0;
  std::size_t synth_image_rows = 48;

  // benchmarking
  std::size_t bench_runs = 10000;
  std::size_t bench_warmup = 1000;

  /// Throws on out-of-range values; returns warnings worth surfacing (large
  /// alpha is legal but known to hurt accuracy).
  std::vector<std::string> validate() const;

  TrainConfig train_config() const;
  SynthConfig synth_config() const;
  EvalOptions eval_options() const;

  nlohmann::json to_json() const;
};

/// Applies `j`'s entries on top of `c`. Rejects unknown keys.
void apply_json(Config& c, const nlohmann::json& j);

/// Defaults, then VPRD_SEED (when set; must parse as u64), then the config
/// file (when given).
Config load_config(const std::filesystem::path* config_file);

}  // namespace vprd
