#pragma once

// Synthetic shot generator used by the end-to-end tests and the demo
// pipeline. Produces machine-parameter vectors around nominal operating
// values, maps them through a fixed ground-truth function to a temporal
// profile, and can expand profiles into jittered phase-space images whose
// energy-weighted projection recovers the profile.
//
// Ground-truth mappings (x is the parameter vector, nominal/spread are the
// per-feature draw statistics, z_k = sum_j proj[k][j] * (x_j - nominal_j)):
//
//   linear  y = |A x + b|, entries of A scaled by 1 / (spread_j * d_in)
//   bump    y_i = amp * exp(-((i - center) / width)^2 / 2) with
//             center = d_out * (0.5 + 0.2 * tanh(z_0))
//             width  = d_out * (0.05 + 0.03 * sigmoid(z_1))
//             amp    = 1 + 0.5 * tanh(z_2)
//
// These formulas are part of the format contract: tests recompute them
// independently from the stored ground truth.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "vprd/data_model.hpp"
#include "vprd/matrix.hpp"
#include "vprd/preprocess.hpp"

namespace vprd {

enum class SynthMapping { Linear, Bump };

std::string to_string(SynthMapping m);
SynthMapping synth_mapping_from_string(const std::string& s);

struct SynthConfig {
  std::size_t n_samples = 2826;
  std::size_t d_in = 22;
  std::size_t d_out = 567;
  std::uint64_t seed = 42;
  SynthMapping mapping = SynthMapping::Bump;
  double noise_std = 0.02;        // additive label noise, 0 disables
  double jitter_std_px = 8.0;     // shot arrival jitter for images
  std::size_t image_rows = 48;    // energy rows when expanding to images
  double nominal_charge_pc = 200.0;
  double nominal_energy_mev = 875.0;
  double time_calibration_fs_per_px = 1.13;
  double energy_calibration_kev_per_px = 21.0;

  void validate() const;
};

struct GroundTruth {
  SynthMapping mapping = SynthMapping::Bump;
  std::vector<double> nominal;  // per-feature nominal reading
  std::vector<double> spread;   // per-feature draw std, 0.1 * |nominal|
  Matrix linear_a{0, 0};        // d_out x d_in, linear mapping only
  std::vector<double> linear_b;
  Matrix bump_proj{0, 0};       // 3 x d_in, bump mapping only
};

void save_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Noiseless label for one parameter vector; bit-identical to the value the
/// generator produced before noise was added.
std::vector<double> ground_truth_label(const GroundTruth& gt,
                                       const MachineParameters& params,
                                       std::size_t d_out);

/// Deterministic dataset: identical config gives identical samples. Each
/// sample draws from its own derived PRNG stream, so changing one sample's
/// index never shifts another's values.
std::pair<Dataset, GroundTruth> gen_dataset(const SynthConfig& cfg);

struct SynthImages {
  std::vector<PhaseImage> images;
  std::vector<long> shifts_px;  // jitter applied to each shot
};

/// Expands profiles into phase-space images with per-shot arrival jitter.
/// When `explicit_shifts` is non-null it overrides the random jitter (one
/// entry per profile). Throws if a shift moves the signal fully out of
/// frame.
SynthImages gen_phase_images(const SynthConfig& cfg,
                             const std::vector<PowerProfile>& profiles,
                             const std::vector<long>* explicit_shifts = nullptr);

}  // namespace vprd
