#pragma once

// Online-oriented inference path and photon power reconstruction. The
// Predictor keeps transposed weight copies and scratch buffers so a single
// prediction touches no allocator; share the underlying model freely, give
// each thread its own Predictor.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vprd/data_model.hpp"
#include "vprd/mlp.hpp"

namespace vprd {

class Predictor {
 public:
  Predictor(const MlpModel& model, std::optional<Standardization> standardization,
            double time_bin_fs);

  std::size_t d_in() const { return d_in_; }
  std::size_t d_out() const { return d_out_; }
  double time_bin_fs() const { return time_bin_fs_; }

  /// Raw (unstandardized) parameters in, predicted profile out. `out` must
  /// have d_out elements. Allocation-free.
  void predict(std::span<const double> params, std::span<double> out);

  PowerProfile predict(const MachineParameters& params);

 private:
  std::size_t d_in_;
  std::size_t hidden_;
  std::size_t d_out_;
  double time_bin_fs_;
  std::optional<Standardization> standardization_;
  std::vector<double> w1t_;  // d_in x hidden, row-major
  std::vector<double> w2t_;  // hidden x d_out, row-major
  std::vector<double> b1_;
  std::vector<double> b2_;
  std::vector<double> x_;  // standardized input scratch
  std::vector<double> h_;  // hidden scratch
};

struct LatencyReport {
  double mean_us = 0.0;
  double std_us = 0.0;
  std::size_t n_runs = 0;
  std::size_t warmup_runs = 0;
  int threads = 1;
  std::string cpu_model;
};

/// Times single-shot predictions on one core. Runs at least 100 warmup and
/// 1000 timed iterations (requests below the floor are raised to it) over a
/// fixed input so the numbers are comparable across builds.
LatencyReport bench_inference(Predictor& predictor, std::size_t n_runs = 10000,
                              std::size_t warmup_runs = 1000);

struct PhotonPower {
  std::vector<double> power;  // same arbitrary units as the inputs
  double time_bin_fs = 1.0;
  std::string checkpoint_id;
  std::int64_t shot_index = 0;
};

/// Photon profile by subtraction: measured lasing-on minus predicted
/// lasing-off, bin by bin. Lengths and time binning must agree.
PhotonPower photon_power(const PowerProfile& lasing_on,
                         const PowerProfile& predicted_lasing_off,
                         const std::string& checkpoint_id,
                         std::int64_t shot_index);

}  // namespace vprd
