#include "vprd/reconstruct.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "vprd/prng.hpp"

namespace vprd {

Predictor::Predictor(const MlpModel& model,
                     std::optional<Standardization> standardization,
                     double time_bin_fs)
    : d_in_(model.d_in),
      hidden_(model.hidden),
      d_out_(model.d_out),
      time_bin_fs_(time_bin_fs),
      standardization_(std::move(standardization)) {
  if (model.w1.rows != hidden_ || model.w1.cols != d_in_ ||
      model.w2.rows != d_out_ || model.w2.cols != hidden_ ||
      model.b1.size() != hidden_ || model.b2.size() != d_out_)
    throw std::invalid_argument("predictor: model shape mismatch");
  if (!model.finite()) throw std::invalid_argument("predictor: non-finite weights");
  if (standardization_ && (standardization_->mean.size() != d_in_ ||
                           standardization_->stddev.size() != d_in_))
    throw std::invalid_argument("predictor: standardization width mismatch");
  if (!(time_bin_fs_ > 0.0))
    throw std::invalid_argument("predictor: time bin must be positive");

  // Transposed copies make both layer products walk memory row by row.
  w1t_.resize(d_in_ * hidden_);
  for (std::size_t h = 0; h < hidden_; ++h)
    for (std::size_t j = 0; j < d_in_; ++j) w1t_[j * hidden_ + h] = model.w1(h, j);
  w2t_.resize(hidden_ * d_out_);
  for (std::size_t o = 0; o < d_out_; ++o)
    for (std::size_t h = 0; h < hidden_; ++h) w2t_[h * d_out_ + o] = model.w2(o, h);
  b1_ = model.b1;
  b2_ = model.b2;
  x_.resize(d_in_);
  h_.resize(hidden_);
}

void Predictor::predict(std::span<const double> params, std::span<double> out) {
  if (params.size() != d_in_)
    throw std::invalid_argument("predict: expected " + std::to_string(d_in_) +
                                " parameters, got " + std::to_string(params.size()));
  if (out.size() != d_out_)
    throw std::invalid_argument("predict: output span has wrong length");

  if (standardization_) {
    for (std::size_t j = 0; j < d_in_; ++j)
      x_[j] = (params[j] - standardization_->mean[j]) / standardization_->stddev[j];
  } else {
    for (std::size_t j = 0; j < d_in_; ++j) x_[j] = params[j];
  }

  for (std::size_t h = 0; h < hidden_; ++h) h_[h] = b1_[h];
  for (std::size_t j = 0; j < d_in_; ++j) {
    const double xj = x_[j];
    const double* row = &w1t_[j * hidden_];
    for (std::size_t h = 0; h < hidden_; ++h) h_[h] += xj * row[h];
  }
  for (std::size_t h = 0; h < hidden_; ++h)
    if (h_[h] < 0.0) h_[h] = 0.0;

  for (std::size_t o = 0; o < d_out_; ++o) out[o] = b2_[o];
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double ah = h_[h];
    if (ah == 0.0) continue;  // rectifier zeros contribute exactly nothing
    const double* row = &w2t_[h * d_out_];
    for (std::size_t o = 0; o < d_out_; ++o) out[o] += ah * row[o];
  }
}

PowerProfile Predictor::predict(const MachineParameters& params) {
  PowerProfile p;
  p.power.resize(d_out_);
  p.time_bin_fs = time_bin_fs_;
  predict(params.values, p.power);
  return p;
}

namespace {

std::string read_cpu_model() {
  std::ifstream f("/proc/cpuinfo");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos == std::string::npos) break;
      auto start = line.find_first_not_of(' ', pos + 1);
      if (start == std::string::npos) break;
      return line.substr(start);
    }
  }
  return "unknown";
}

}  // namespace

LatencyReport bench_inference(Predictor& predictor, std::size_t n_runs,
                              std::size_t warmup_runs) {
  LatencyReport report;
  report.n_runs = std::max<std::size_t>(n_runs, 1000);
  report.warmup_runs = std::max<std::size_t>(warmup_runs, 100);
  report.threads = 1;
  report.cpu_model = read_cpu_model();

  Rng rng(derive_seed(1234567, 1));
  std::vector<double> params(predictor.d_in());
  for (double& v : params) v = rng.next_normal();
  std::vector<double> out(predictor.d_out());
  std::vector<double> lat_us(report.n_runs);

  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < report.warmup_runs; ++i) predictor.predict(params, out);
  for (std::size_t i = 0; i < report.n_runs; ++i) {
    const auto t0 = clock::now();
    predictor.predict(params, out);
    const auto t1 = clock::now();
    lat_us[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
  }

  double sum = 0.0;
  for (double v : lat_us) sum += v;
  report.mean_us = sum / static_cast<double>(report.n_runs);
  double ss = 0.0;
  for (double v : lat_us) {
    const double d = v - report.mean_us;
    ss += d * d;
  }
  report.std_us = std::sqrt(ss / static_cast<double>(report.n_runs - 1));
  return report;
}

PhotonPower photon_power(const PowerProfile& lasing_on,
                         const PowerProfile& predicted_lasing_off,
                         const std::string& checkpoint_id,
                         std::int64_t shot_index) {
  if (lasing_on.power.size() != predicted_lasing_off.power.size())
    throw std::invalid_argument(
        "photon_power: profile lengths differ (" +
        std::to_string(lasing_on.power.size()) + " vs " +
        std::to_string(predicted_lasing_off.power.size()) + ")");
  if (lasing_on.power.empty())
    throw std::invalid_argument("photon_power: empty profiles");
  if (lasing_on.time_bin_fs != predicted_lasing_off.time_bin_fs)
    throw std::invalid_argument("photon_power: time binning differs");

  PhotonPower out;
  out.power.resize(lasing_on.power.size());
  for (std::size_t i = 0; i < out.power.size(); ++i)
    out.power[i] = lasing_on.power[i] - predicted_lasing_off.power[i];
  out.time_bin_fs = lasing_on.time_bin_fs;
  out.checkpoint_id = checkpoint_id;
  out.shot_index = shot_index;
  return out;
}

}  // namespace vprd
