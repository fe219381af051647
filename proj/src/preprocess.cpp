#include "vprd/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vprd {

PowerProfile energy_weighted_projection(const PhaseImage& image) {
  if (image.charge.rows == 0 || image.charge.cols == 0)
    throw std::invalid_argument("energy_weighted_projection: empty image");
  if (image.energy_axis.size() != image.charge.rows)
    throw std::invalid_argument(
        "energy_weighted_projection: energy_axis length " +
        std::to_string(image.energy_axis.size()) + " != rows " +
        std::to_string(image.charge.rows));

  PowerProfile out;
  out.time_bin_fs = image.time_calibration_fs_per_px;
  out.power.assign(image.charge.cols, 0.0);
  for (std::size_t r = 0; r < image.charge.rows; ++r) {
    const double e = image.energy_axis[r];
    const double* row = image.charge.row(r);
    for (std::size_t c = 0; c < image.charge.cols; ++c) out.power[c] += row[c] * e;
  }
  return out;
}

namespace {

// Half-sample reflection: ... c b a | a b c ... | c b a
std::size_t reflect_index(long i, std::size_t n) {
  const long len = static_cast<long>(n);
  while (i < 0 || i >= len) {
    if (i < 0) i = -i - 1;
    if (i >= len) i = 2 * len - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<double> gaussian_smooth(std::span<const double> profile, int radius_px) {
  if (radius_px < 1)
    throw std::invalid_argument("gaussian_smooth: radius_px must be >= 1");
  if (profile.empty())
    throw std::invalid_argument("gaussian_smooth: empty profile");

  const double sigma = static_cast<double>(radius_px);
  const int halfw = 3 * radius_px;  // +-3 sigma truncation
  std::vector<double> kernel(2 * halfw + 1);
  double sum = 0.0;
  for (int k = -halfw; k <= halfw; ++k) {
    const double w = std::exp(-0.5 * (k / sigma) * (k / sigma));
    kernel[k + halfw] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const std::size_t n = profile.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -halfw; k <= halfw; ++k)
      acc += kernel[k + halfw] * profile[reflect_index(static_cast<long>(i) + k, n)];
    out[i] = acc;
  }
  return out;
}

std::size_t peak_location(std::span<const double> profile) {
  if (profile.empty())
    throw std::invalid_argument("peak_location: empty profile");
  std::size_t best = 0;
  for (std::size_t i = 1; i < profile.size(); ++i)
    if (profile[i] > profile[best]) best = i;
  return best;
}

std::vector<double> shift_profile(std::span<const double> profile, long shift) {
  const long n = static_cast<long>(profile.size());
  if (std::labs(shift) >= n)
    throw std::invalid_argument("shift_profile: shift " + std::to_string(shift) +
                                " loses the entire signal (length " +
                                std::to_string(n) + ")");
  std::vector<double> out(profile.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    const long src = i - shift;
    if (src >= 0 && src < n) out[i] = profile[src];
  }
  return out;
}

std::pair<std::vector<PowerProfile>, AlignmentReport> dejitter(
    const std::vector<PowerProfile>& profiles, int radius_px) {
  if (profiles.empty())
    throw std::invalid_argument("dejitter: no profiles");
  const std::size_t len = profiles[0].power.size();
  for (const PowerProfile& p : profiles)
    if (p.power.size() != len)
      throw std::invalid_argument("dejitter: profiles must have equal length");

  AlignmentReport report;
  report.smooth_radius_px = radius_px;
  report.peak_index.reserve(profiles.size());
  for (const PowerProfile& p : profiles)
    report.peak_index.push_back(peak_location(gaussian_smooth(p.power, radius_px)));

  // integer median: lower of the two middle values for an even count
  std::vector<std::size_t> sorted = report.peak_index;
  std::sort(sorted.begin(), sorted.end());
  report.median_peak = sorted[(sorted.size() - 1) / 2];

  std::vector<PowerProfile> aligned;
  aligned.reserve(profiles.size());
  report.shift.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const long shift = static_cast<long>(report.median_peak) -
                       static_cast<long>(report.peak_index[i]);
    report.shift.push_back(shift);
    PowerProfile p;
    p.time_bin_fs = profiles[i].time_bin_fs;
    p.power = shift_profile(profiles[i].power, shift);
    aligned.push_back(std::move(p));
  }
  return {std::move(aligned), std::move(report)};
}

double otsu_threshold(std::span<const double> values, int n_bins) {
  if (n_bins < 2)
    throw std::invalid_argument("otsu_threshold: n_bins must be >= 2");
  if (values.size() < 2)
    throw std::invalid_argument("otsu_threshold: need at least 2 values");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo))
    throw std::invalid_argument("otsu_threshold: constant input has no two classes");

  const std::size_t nb = static_cast<std::size_t>(n_bins);
  const double width = (hi - lo) / static_cast<double>(nb);
  std::vector<std::size_t> count(nb, 0);
  std::vector<double> value_sum(nb, 0.0);
  for (double v : values) {
    std::size_t b = static_cast<std::size_t>((v - lo) / width);
    if (b >= nb) b = nb - 1;  // v == max
    ++count[b];
    value_sum[b] += v;
  }

  const double total = static_cast<double>(values.size());
  double grand_sum = 0.0;
  for (double s : value_sum) grand_sum += s;

  // candidate thresholds are the interior bin edges; class 0 = bins [0, k)
  double best_var = -1.0;
  std::size_t best_k = 1;
  double n0 = 0.0, sum0 = 0.0;
  for (std::size_t k = 1; k < nb; ++k) {
    n0 += static_cast<double>(count[k - 1]);
    sum0 += value_sum[k - 1];
    const double n1 = total - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double mu0 = sum0 / n0;
    const double mu1 = (grand_sum - sum0) / n1;
    const double w0 = n0 / total;
    const double w1 = n1 / total;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best_var) {
      best_var = between;
      best_k = k;
    }
  }
  return lo + static_cast<double>(best_k) * width;
}

std::pair<std::vector<PowerProfile>, std::pair<std::size_t, std::size_t>>
crop_to_signal(const std::vector<PowerProfile>& profiles, int padding_px,
               int n_bins) {
  if (profiles.empty())
    throw std::invalid_argument("crop_to_signal: no profiles");
  if (padding_px < 0)
    throw std::invalid_argument("crop_to_signal: negative padding");
  const std::size_t len = profiles[0].power.size();
  for (const PowerProfile& p : profiles)
    if (p.power.size() != len)
      throw std::invalid_argument("crop_to_signal: profiles must have equal length");

  std::vector<bool> signal(len, false);
  for (const PowerProfile& p : profiles) {
    const double t = otsu_threshold(p.power, n_bins);
    for (std::size_t i = 0; i < len; ++i)
      if (p.power[i] >= t) signal[i] = true;
  }

  std::size_t first = len, last = 0;
  for (std::size_t i = 0; i < len; ++i)
    if (signal[i]) {
      if (first == len) first = i;
      last = i;
    }
  if (first == len)
    throw std::invalid_argument("crop_to_signal: no profile has any signal bin");

  const std::size_t pad = static_cast<std::size_t>(padding_px);
  const std::size_t start = first > pad ? first - pad : 0;
  const std::size_t end = std::min(last + pad, len - 1);

  std::vector<PowerProfile> cropped;
  cropped.reserve(profiles.size());
  for (const PowerProfile& p : profiles) {
    PowerProfile c;
    c.time_bin_fs = p.time_bin_fs;
    c.power.assign(p.power.begin() + static_cast<long>(start),
                   p.power.begin() + static_cast<long>(end) + 1);
    cropped.push_back(std::move(c));
  }
  return {std::move(cropped), {start, end}};
}

}  // namespace vprd
