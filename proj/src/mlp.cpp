#include "vprd/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace vprd {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
  }
  throw std::logic_error("unknown activation");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Mse: return "mse";
    case LossKind::AntiMean: return "anti_mean";
  }
  throw std::logic_error("unknown loss kind");
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mse") return LossKind::Mse;
  if (s == "anti_mean" || s == "anti-mean") return LossKind::AntiMean;
  throw std::invalid_argument("unknown loss kind: " + s);
}

std::string to_string(Reduction r) {
  switch (r) {
    case Reduction::Sum: return "sum";
    case Reduction::MeanPerElement: return "mean_per_element";
  }
  throw std::logic_error("unknown reduction");
}

Reduction reduction_from_string(const std::string& s) {
  if (s == "sum") return Reduction::Sum;
  if (s == "mean_per_element" || s == "mean") return Reduction::MeanPerElement;
  throw std::invalid_argument("unknown reduction: " + s);
}

bool MlpModel::finite() const {
  auto all_finite = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return all_finite(w1.data) && all_finite(b1) && all_finite(w2.data) &&
         all_finite(b2);
}

MlpModel init_weights(std::size_t d_in, std::size_t hidden, std::size_t d_out,
                      std::uint64_t seed, Activation activation) {
  if (d_in == 0 || hidden == 0 || d_out == 0)
    throw std::invalid_argument("init_weights: dims must be positive");
  MlpModel m;
  m.d_in = d_in;
  m.hidden = hidden;
  m.d_out = d_out;
  m.activation = activation;
  m.w1 = Matrix(hidden, d_in);
  m.b1.assign(hidden, 0.0);
  m.w2 = Matrix(d_out, hidden);
  m.b2.assign(d_out, 0.0);

  Rng rng(derive_seed(seed, RngStream::kWeightInit));
  const double l1 = std::sqrt(6.0 / static_cast<double>(d_in));
  for (double& w : m.w1.data) w = rng.next_uniform(-l1, l1);
  const double l2 = std::sqrt(6.0 / static_cast<double>(hidden));
  for (double& w : m.w2.data) w = rng.next_uniform(-l2, l2);
  return m;
}

Matrix forward(const MlpModel& model, const Matrix& inputs,
               const DropoutConfig& dropout, Rng* rng, ForwardCache* cache) {
  if (inputs.cols != model.d_in)
    throw std::invalid_argument("forward: input width " +
                                std::to_string(inputs.cols) + " != d_in " +
                                std::to_string(model.d_in));
  if (dropout.p < 0.0 || dropout.p >= 1.0)
    throw std::invalid_argument("forward: dropout p must be in [0, 1)");
  const bool masked = dropout.train_mode && dropout.p > 0.0;
  if (masked && rng == nullptr)
    throw std::invalid_argument("forward: train-mode dropout needs an rng");

  const std::size_t n = inputs.rows;

  Matrix z1(n, model.hidden);
  {
    const Matrix w1t = transpose(model.w1);  // d_in x hidden
    gemm_nn_acc(z1, inputs, w1t);
    add_row_broadcast(z1, model.b1);
  }

  // rectifier + inverted dropout in a single pass
  Matrix a1d = z1;
  std::vector<std::uint8_t> mask;
  const double keep = 1.0 - dropout.p;
  if (masked) {
    mask.resize(n * model.hidden);
    const double inv_keep = 1.0 / keep;
    for (std::size_t i = 0; i < a1d.data.size(); ++i) {
      const bool keep_unit = rng->next_double() < keep;
      mask[i] = keep_unit ? 1 : 0;
      double v = a1d.data[i];
      v = v > 0.0 ? v : 0.0;
      a1d.data[i] = keep_unit ? v * inv_keep : 0.0;
    }
  } else {
    for (double& v : a1d.data) v = v > 0.0 ? v : 0.0;
  }

  Matrix out(n, model.d_out);
  {
    const Matrix w2t = transpose(model.w2);  // hidden x d_out
    gemm_nn_acc(out, a1d, w2t);
    add_row_broadcast(out, model.b2);
  }

  if (cache) {
    cache->model = &model;
    cache->x = inputs;
    cache->z1 = std::move(z1);
    cache->a1d = std::move(a1d);
    cache->mask = std::move(mask);
    cache->train_mode = masked;
    cache->keep = keep;
    cache->filled = true;
  }
  return out;
}

namespace {

double sum_sq_diff(const Matrix& pred, const Matrix& label) {
  if (!pred.same_shape(label))
    throw std::invalid_argument("loss: shape mismatch " +
                                std::to_string(pred.rows) + "x" +
                                std::to_string(pred.cols) + " vs " +
                                std::to_string(label.rows) + "x" +
                                std::to_string(label.cols));
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - label.data[i];
    s += d * d;
  }
  return s;
}

double sum_sq_diff_rowvec(const Matrix& pred, const std::vector<double>& v) {
  if (v.size() != pred.cols)
    throw std::invalid_argument("loss: y_hat length " + std::to_string(v.size()) +
                                " != prediction width " + std::to_string(pred.cols));
  double s = 0.0;
  for (std::size_t r = 0; r < pred.rows; ++r) {
    const double* p = pred.row(r);
    for (std::size_t c = 0; c < pred.cols; ++c) {
      const double d = p[c] - v[c];
      s += d * d;
    }
  }
  return s;
}

double apply_reduction(double sum, const Matrix& shape, Reduction r) {
  if (r == Reduction::Sum) return sum;
  return sum / static_cast<double>(shape.rows * shape.cols);
}

}  // namespace

double loss_mse(const Matrix& pred, const Matrix& label, Reduction reduction) {
  return apply_reduction(sum_sq_diff(pred, label), pred, reduction);
}

double loss_anti_mean(const Matrix& pred, const Matrix& label,
                      const LossConfig& cfg) {
  double s = sum_sq_diff(pred, label);
  if (cfg.alpha != 0.0) {
    if (cfg.y_hat.empty())
      throw std::invalid_argument("loss_anti_mean: y_hat (training label mean) not set");
    s -= cfg.alpha * sum_sq_diff_rowvec(pred, cfg.y_hat);
  }
  return apply_reduction(s, pred, cfg.reduction);
}

double loss_value(const Matrix& pred, const Matrix& label, const LossConfig& cfg) {
  if (cfg.kind == LossKind::Mse) return loss_mse(pred, label, cfg.reduction);
  return loss_anti_mean(pred, label, cfg);
}

Matrix loss_grad(const Matrix& pred, const Matrix& label, const LossConfig& cfg) {
  if (!pred.same_shape(label))
    throw std::invalid_argument("loss_grad: shape mismatch");
  const bool penalized = cfg.kind == LossKind::AntiMean && cfg.alpha != 0.0;
  if (penalized && cfg.y_hat.size() != pred.cols)
    throw std::invalid_argument("loss_grad: y_hat length mismatch");
  const double scale =
      cfg.reduction == Reduction::Sum
          ? 1.0
          : 1.0 / static_cast<double>(pred.rows * pred.cols);

  Matrix g(pred.rows, pred.cols);
  for (std::size_t r = 0; r < pred.rows; ++r) {
    const double* x = pred.row(r);
    const double* y = label.row(r);
    double* gr = g.row(r);
    if (penalized) {
      for (std::size_t c = 0; c < pred.cols; ++c)
        gr[c] = scale * (2.0 * (x[c] - y[c]) -
                         2.0 * cfg.alpha * (x[c] - cfg.y_hat[c]));
    } else {
      for (std::size_t c = 0; c < pred.cols; ++c)
        gr[c] = scale * 2.0 * (x[c] - y[c]);
    }
  }
  return g;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const Matrix& dY) {
  if (!cache.filled)
    throw std::invalid_argument("backward: cache not filled by a forward pass");
  if (cache.model != &model)
    throw std::invalid_argument("backward: cache came from a different model");
  if (dY.rows != cache.x.rows || dY.cols != model.d_out)
    throw std::invalid_argument("backward: dY shape mismatch");

  Gradients g;
  g.w2 = Matrix(model.d_out, model.hidden);
  gemm_tn_acc(g.w2, dY, cache.a1d);
  g.b2.assign(model.d_out, 0.0);
  column_sums(dY, g.b2);

  Matrix da1d(dY.rows, model.hidden);
  gemm_nn_acc(da1d, dY, model.w2);

  // through dropout scaling and the rectifier (derivative 0 at z == 0)
  Matrix dz1 = std::move(da1d);
  if (cache.train_mode) {
    const double inv_keep = 1.0 / cache.keep;
    for (std::size_t i = 0; i < dz1.data.size(); ++i)
      dz1.data[i] = (cache.mask[i] && cache.z1.data[i] > 0.0)
                        ? dz1.data[i] * inv_keep
                        : 0.0;
  } else {
    for (std::size_t i = 0; i < dz1.data.size(); ++i)
      if (!(cache.z1.data[i] > 0.0)) dz1.data[i] = 0.0;
  }

  g.w1 = Matrix(model.hidden, model.d_in);
  gemm_tn_acc(g.w1, dz1, cache.x);
  g.b1.assign(model.hidden, 0.0);
  column_sums(dz1, g.b1);
  return g;
}

AdamState::AdamState(const MlpModel& model, double learning_rate)
    : lr(learning_rate) {
  m.w1 = Matrix(model.hidden, model.d_in);
  m.b1.assign(model.hidden, 0.0);
  m.w2 = Matrix(model.d_out, model.hidden);
  m.b2.assign(model.d_out, 0.0);
  v = m;
}

namespace {

void adam_update(std::vector<double>& theta, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 const AdamState& s, double bc1, double bc2) {
  if (g.size() != theta.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    theta[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  adam_update(model.w1.data, grads.w1.data, state.m.w1.data, state.v.w1.data,
              state, bc1, bc2);
  adam_update(model.b1, grads.b1, state.m.b1, state.v.b1, state, bc1, bc2);
  adam_update(model.w2.data, grads.w2.data, state.m.w2.data, state.v.w2.data,
              state, bc1, bc2);
  adam_update(model.b2, grads.b2, state.m.b2, state.v.b2, state, bc1, bc2);
}

bool PlateauScheduler::step(double val_loss, double& lr) {
  if (!std::isfinite(val_loss))
    throw std::invalid_argument("scheduler: non-finite validation loss");
  if (val_loss < best - min_delta) {
    best = val_loss;
    wait = 0;
    return false;
  }
  ++wait;
  if (wait > patience) {
    wait = 0;
    const double next = std::max(lr * factor, min_lr);
    if (next < lr) {
      lr = next;
      return true;
    }
  }
  return false;
}

bool EarlyStopper::step(double val_loss, const MlpModel& model,
                        std::size_t step_index) {
  if (!std::isfinite(val_loss))
    throw std::invalid_argument("early stopper: non-finite validation loss");
  if (val_loss < best || !has_snapshot) {
    best = val_loss;
    wait = 0;
    best_snapshot = model;
    best_step = step_index;
    has_snapshot = true;
    return false;
  }
  ++wait;
  return wait >= patience;
}

}  // namespace vprd
