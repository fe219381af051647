#pragma once

// Single-batch training: every step runs one forward/backward/Adam update on
// the entire training split, then an eval-mode pass over the entire
// validation split. Scheduler and early stopper consume the validation loss
// each step. The returned model is the early stopper's best snapshot.
//
// The loop is single-threaded and fully deterministic: weight init and
// dropout masks come from fixed sub-streams of the seed, and the matrix
// kernels never reorder floating-point sums.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vprd/data_model.hpp"
#include "vprd/mlp.hpp"

namespace vprd {

struct TrainConfig {
  std::uint64_t seed = 42;
  std::size_t hidden = 294;
  double dropout_p = 0.45;
  double lr = 0.005;
  double scheduler_factor = 0.05;
  std::size_t scheduler_patience = 238;
  double min_lr = 0.0;
  std::size_t early_stop_patience = 1225;
  LossKind loss_kind = LossKind::Mse;
  double alpha = 0.0;
  double alpha_warn_threshold = 0.05;  // larger values degraded test error
  Reduction reduction = Reduction::MeanPerElement;
  std::size_t max_steps = 50000;
  bool standardize = true;
  bool monitor_penalized = false;  // scheduler/stopper watch plain MSE by default
  Activation activation = Activation::Relu;

  // Progress hook, called after every step. Purely observational.
  std::function<void(std::size_t step, double train_loss, double val_loss,
                     double lr)> on_step;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> lr_trace;  // lr in effect for each step's update
  std::size_t steps_run = 0;
  bool early_stopped = false;
  double best_val_loss = 0.0;
  std::size_t best_step = 0;
  double duration_seconds = 0.0;  // wall clock; never part of deterministic outputs
  int threads = 1;
  std::vector<std::string> warnings;
};

struct TrainResult {
  MlpModel model;  // best-validation snapshot
  TrainReport report;
  std::vector<double> label_mean;  // mean training label (yhat)
  std::optional<Standardization> standardization;
};

TrainResult train(const Dataset& dataset, const SplitIndices& split,
                  const TrainConfig& cfg);

}  // namespace vprd
