#pragma once

// Longitudinal phase-space images -> aligned, cropped temporal power
// profiles. Conventions, all of which are pinned by tests:
//   - smoothing kernel: discrete Gaussian, sigma = radius_px, truncated at
//     +-3 sigma, renormalized to sum 1, half-sample reflection at the edges
//   - peak: argmax, ties broken toward the lowest index
//   - median of an even count: lower of the two middle values
//   - shifts are whole bins, vacated bins zero-filled
//   - Otsu runs per profile on the raw (unsmoothed) aligned values; a bin
//     counts as signal when value >= threshold; the crop window is the union
//     of signal bins across all profiles plus the padding, clamped

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vprd/data_model.hpp"
#include "vprd/matrix.hpp"

namespace vprd {

struct PhaseImage {
  Matrix charge;                    // rows = energy, cols = time, entries >= 0
  std::vector<double> energy_axis;  // MeV per row, length == charge.rows
  double time_calibration_fs_per_px = 1.0;
  double energy_calibration_kev_per_px = 0.0;
};

struct AlignmentReport {
  std::vector<std::size_t> peak_index;  // smoothed peak per profile (pre-shift)
  std::size_t median_peak = 0;
  std::vector<long> shift;              // applied shift per profile
  std::pair<std::size_t, std::size_t> crop_window{0, 0};  // inclusive columns
  std::size_t padding = 0;
  int smooth_radius_px = 10;
};

/// power[c] = sum_rows charge[r][c] * energy_axis[r]
PowerProfile energy_weighted_projection(const PhaseImage& image);

std::vector<double> gaussian_smooth(std::span<const double> profile,
                                    int radius_px = 10);

/// Argmax with ties toward the lowest index. The caller smooths first when
/// peak-finding on raw profiles.
std::size_t peak_location(std::span<const double> profile);

/// Whole-bin shift, zero-filling vacated bins. |shift| >= length loses the
/// entire signal and is rejected.
std::vector<double> shift_profile(std::span<const double> profile, long shift);

/// Aligns every profile's smoothed peak to the median peak location.
std::pair<std::vector<PowerProfile>, AlignmentReport> dejitter(
    const std::vector<PowerProfile>& profiles, int radius_px = 10);

/// Histogram Otsu threshold: n_bins equal-width bins over [min, max], returns
/// the interior bin edge maximizing inter-class variance, ties toward the
/// lower edge. Requires at least two distinct values.
double otsu_threshold(std::span<const double> values, int n_bins = 256);

/// Crops all profiles to the union of per-profile Otsu signal windows plus
/// padding. Returns the cropped profiles and the inclusive column window.
std::pair<std::vector<PowerProfile>, std::pair<std::size_t, std::size_t>>
crop_to_signal(const std::vector<PowerProfile>& profiles, int padding_px = 10,
               int n_bins = 256);

}  // namespace vprd
