#include "vprd/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "vprd/matrix.hpp"
#include "vprd/prng.hpp"

namespace vprd {

namespace {

Matrix gather_params(const Dataset& ds, const std::vector<std::size_t>& idx) {
  const std::size_t d = ds.samples.empty() ? 0 : ds.samples[0].params.values.size();
  Matrix m(idx.size(), d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& v = ds.samples[idx[r]].params.values;
    if (v.size() != d) throw std::invalid_argument("train: ragged parameter vectors");
    for (std::size_t c = 0; c < d; ++c) m(r, c) = v[c];
  }
  return m;
}

Matrix gather_profiles(const Dataset& ds, const std::vector<std::size_t>& idx) {
  const std::size_t d = ds.samples.empty() ? 0 : ds.samples[0].profile.power.size();
  Matrix m(idx.size(), d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& v = ds.samples[idx[r]].profile.power;
    if (v.size() != d) throw std::invalid_argument("train: ragged profiles");
    for (std::size_t c = 0; c < d; ++c) m(r, c) = v[c];
  }
  return m;
}

void apply_standardization_rows(Matrix& m, const Standardization& st) {
  if (m.cols != st.mean.size())
    throw std::invalid_argument("train: standardization width mismatch");
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c)
      m(r, c) = (m(r, c) - st.mean[c]) / st.stddev[c];
}

}  // namespace

void TrainConfig::validate() const {
  if (hidden == 0) throw std::invalid_argument("hidden layer width must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw std::invalid_argument("dropout probability must lie in [0, 1)");
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw std::invalid_argument("learning rate must be positive and finite");
  if (!(scheduler_factor > 0.0 && scheduler_factor <= 1.0))
    throw std::invalid_argument("scheduler factor must lie in (0, 1]");
  if (!(min_lr >= 0.0)) throw std::invalid_argument("min_lr must be non-negative");
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be non-negative and finite");
}

TrainResult train(const Dataset& dataset, const SplitIndices& split,
                  const TrainConfig& cfg) {
  cfg.validate();
  dataset.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");
  if (split.val.empty()) throw std::invalid_argument("train: empty validation split");
  const std::size_t n = dataset.samples.size();
  for (const auto* part : {&split.train, &split.val}) {
    for (std::size_t i : *part)
      if (i >= n) throw std::out_of_range("train: split index out of range");
  }

  const auto t_start = std::chrono::steady_clock::now();

  TrainResult result;
  TrainReport& report = result.report;

  if (cfg.loss_kind == LossKind::AntiMean && cfg.alpha > cfg.alpha_warn_threshold) {
    report.warnings.push_back(
        "alpha " + std::to_string(cfg.alpha) + " exceeds " +
        std::to_string(cfg.alpha_warn_threshold) +
        "; penalties this large degraded test accuracy");
  }

  Matrix x_train = gather_params(dataset, split.train);
  Matrix y_train = gather_profiles(dataset, split.train);
  Matrix x_val = gather_params(dataset, split.val);
  Matrix y_val = gather_profiles(dataset, split.val);
  const std::size_t d_in = x_train.cols;
  const std::size_t d_out = y_train.cols;
  if (d_in == 0 || d_out == 0)
    throw std::invalid_argument("train: zero-width inputs or labels");

  std::vector<Sample> train_samples;
  train_samples.reserve(split.train.size());
  for (std::size_t i : split.train) train_samples.push_back(dataset.samples[i]);

  if (cfg.standardize) {
    result.standardization = standardize_fit(train_samples, dataset.param_names);
    apply_standardization_rows(x_train, *result.standardization);
    apply_standardization_rows(x_val, *result.standardization);
  }

  result.label_mean = label_mean(train_samples);

  LossConfig train_loss_cfg;
  train_loss_cfg.kind = cfg.loss_kind;
  train_loss_cfg.alpha = cfg.alpha;
  train_loss_cfg.reduction = cfg.reduction;
  if (cfg.loss_kind == LossKind::AntiMean) train_loss_cfg.y_hat = result.label_mean;

  LossConfig val_loss_cfg = train_loss_cfg;
  if (!cfg.monitor_penalized) {
    val_loss_cfg.kind = LossKind::Mse;
    val_loss_cfg.alpha = 0.0;
    val_loss_cfg.y_hat.clear();
  }

  MlpModel model = init_weights(d_in, cfg.hidden, d_out, cfg.seed, cfg.activation);
  AdamState adam(model, cfg.lr);
  PlateauScheduler scheduler;
  scheduler.factor = cfg.scheduler_factor;
  scheduler.patience = cfg.scheduler_patience;
  scheduler.min_lr = cfg.min_lr;
  EarlyStopper stopper;
  stopper.patience = cfg.early_stop_patience;

  Rng dropout_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(RngStream::kDropout)));
  const DropoutConfig train_mode{cfg.dropout_p, true};
  const DropoutConfig eval_mode{cfg.dropout_p, false};

  report.train_loss.reserve(cfg.max_steps);
  report.val_loss.reserve(cfg.max_steps);
  report.lr_trace.reserve(cfg.max_steps);

  ForwardCache cache;
  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const double lr_used = adam.lr;
    Matrix pred = forward(model, x_train, train_mode, &dropout_rng, &cache);
    const double tl = loss_value(pred, y_train, train_loss_cfg);
    if (!std::isfinite(tl))
      throw std::runtime_error("training diverged at step " + std::to_string(step) +
                               ": non-finite training loss");
    Matrix dy = loss_grad(pred, y_train, train_loss_cfg);
    Gradients grads = backward(model, cache, dy);
    adam_step(model, grads, adam);

    Matrix val_pred = forward(model, x_val, eval_mode, nullptr, nullptr);
    const double vl = loss_value(val_pred, y_val, val_loss_cfg);
    if (!std::isfinite(vl))
      throw std::runtime_error("training diverged at step " + std::to_string(step) +
                               ": non-finite validation loss");

    report.train_loss.push_back(tl);
    report.val_loss.push_back(vl);
    report.lr_trace.push_back(lr_used);
    if (cfg.on_step) cfg.on_step(step, tl, vl, lr_used);

    scheduler.step(vl, adam.lr);
    if (stopper.step(vl, model, step)) {
      report.early_stopped = true;
      break;
    }
  }

  report.steps_run = report.train_loss.size();
  report.best_val_loss = stopper.best;
  report.best_step = stopper.best_step;
  if (!stopper.has_snapshot)
    throw std::logic_error("train: no snapshot recorded");
  result.model = std::move(stopper.best_snapshot);

  const auto t_end = std::chrono::steady_clock::now();
  report.duration_seconds =
      std::chrono::duration<double>(t_end - t_start).count();
  return result;
}

}  // namespace vprd
