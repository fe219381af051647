#pragma once

// Fully connected d_in -> hidden -> d_out regression network with rectifier
// hidden activation, inverted dropout on the hidden layer, hand-derived
// gradients, Adam, reduce-on-plateau scheduling and early stopping.
//
// Loss options: plain squared error, or the mean-regression penalty variant
//   L = sum_i (x_i - y_i)^2 - alpha * sum_i (x_i - yhat_i)^2
// where yhat is the element-wise mean label of the training split. With
// alpha = 0 the penalty code path is bypassed entirely, so the result is
// bit-identical to the plain squared-error loss.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vprd/matrix.hpp"
#include "vprd/prng.hpp"

namespace vprd {

enum class Activation { Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct MlpModel {
  std::size_t d_in = 22;
  std::size_t hidden = 294;
  std::size_t d_out = 567;
  Activation activation = Activation::Relu;
  Matrix w1;               // hidden x d_in
  std::vector<double> b1;  // hidden
  Matrix w2;               // d_out x hidden
  std::vector<double> b2;  // d_out

  bool finite() const;
};

/// Fan-in scaled uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases
/// zero. Draw order: w1 row-major, then w2 row-major, from the kWeightInit
/// stream of `seed`.
MlpModel init_weights(std::size_t d_in, std::size_t hidden, std::size_t d_out,
                      std::uint64_t seed, Activation activation = Activation::Relu);

struct DropoutConfig {
  double p = 0.45;
  bool train_mode = false;
};

struct ForwardCache {
  const MlpModel* model = nullptr;
  Matrix x;                   // batch inputs
  Matrix z1;                  // hidden pre-activations
  Matrix a1d;                 // hidden activations after dropout scaling
  std::vector<std::uint8_t> mask;  // keep mask, row-major over (sample, unit)
  bool train_mode = false;
  double keep = 1.0;
  bool filled = false;
};

/// Batch forward pass; inputs are rows of standardized parameters. In train
/// mode the hidden layer gets an inverted-dropout mask drawn row-major from
/// `rng` and is scaled by 1/(1-p); in eval mode no mask and no scaling. Pass
/// a cache to enable backward().
Matrix forward(const MlpModel& model, const Matrix& inputs,
               const DropoutConfig& dropout = {}, Rng* rng = nullptr,
               ForwardCache* cache = nullptr);

enum class LossKind { Mse, AntiMean };
enum class Reduction { Sum, MeanPerElement };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);
std::string to_string(Reduction r);
Reduction reduction_from_string(const std::string& s);

struct LossConfig {
  LossKind kind = LossKind::Mse;
  double alpha = 0.0;
  std::vector<double> y_hat;  // mean training label, required for AntiMean
  Reduction reduction = Reduction::MeanPerElement;
};

double loss_mse(const Matrix& pred, const Matrix& label, Reduction reduction);
double loss_anti_mean(const Matrix& pred, const Matrix& label,
                      const LossConfig& cfg);
double loss_value(const Matrix& pred, const Matrix& label, const LossConfig& cfg);

/// dL/dpred for the configured loss, including the reduction divisor.
Matrix loss_grad(const Matrix& pred, const Matrix& label, const LossConfig& cfg);

struct Gradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

/// Analytic gradients for the cached forward pass. dY must be dL/doutput of
/// the same batch.
Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const Matrix& dY);

struct AdamState {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  Gradients m;
  Gradients v;

  AdamState() = default;
  AdamState(const MlpModel& model, double learning_rate);
};

/// Standard Adam update with bias correction; increments state.t.
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state);

/// Reduce-on-plateau: tolerates `patience` consecutive non-improving
/// validations, multiplies lr by `factor` on the next one.
struct PlateauScheduler {
  double factor = 0.05;
  std::size_t patience = 238;
  double min_delta = 0.0;
  double min_lr = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;

  /// Returns true when lr was reduced.
  bool step(double val_loss, double& lr);
};

/// Stops on the `patience`-th consecutive non-improving validation and keeps
/// the best model seen, not the last one.
struct EarlyStopper {
  std::size_t patience = 1225;
  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;
  MlpModel best_snapshot;
  std::size_t best_step = 0;
  bool has_snapshot = false;

  /// Returns true when training should stop.
  bool step(double val_loss, const MlpModel& model, std::size_t step_index);
};

}  // namespace vprd
