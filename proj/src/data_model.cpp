#include "vprd/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vprd/prng.hpp"

namespace vprd {

void Dataset::validate() const {
  const std::size_t width = d_in();
  if (!param_names.empty() && param_names.size() != width)
    throw std::invalid_argument("dataset: param_names width " +
                                std::to_string(param_names.size()) +
                                " does not match d_in " + std::to_string(width));
  const std::size_t depth = d_out();
  std::int64_t last_shot = -1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.params.values.size() != width)
      throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                  " has " + std::to_string(s.params.values.size()) +
                                  " parameters, expected " + std::to_string(width));
    if (s.profile.power.size() != depth)
      throw std::invalid_argument("dataset: sample " + std::to_string(i) +
                                  " has profile length " +
                                  std::to_string(s.profile.power.size()) +
                                  ", expected " + std::to_string(depth));
    for (double v : s.params.values)
      if (!std::isfinite(v))
        throw std::invalid_argument("dataset: non-finite parameter in sample " +
                                    std::to_string(i));
    for (double v : s.profile.power)
      if (!std::isfinite(v))
        throw std::invalid_argument("dataset: non-finite profile value in sample " +
                                    std::to_string(i));
    if (i > 0 && s.shot_index <= last_shot)
      throw std::invalid_argument("dataset: shot_index not strictly increasing at sample " +
                                  std::to_string(i));
    last_shot = s.shot_index;
  }
  if (standardization) {
    if (standardization->mean.size() != width || standardization->stddev.size() != width)
      throw std::invalid_argument("dataset: standardization width mismatch");
    for (double s : standardization->stddev)
      if (!(s > 0.0))
        throw std::invalid_argument("dataset: standardization std must be > 0");
  }
}

SplitIndices split_dataset(std::size_t n, const SplitFractions& fractions,
                           std::uint64_t seed) {
  const double f[3] = {fractions.train, fractions.val, fractions.test};
  for (double v : f)
    if (!(v > 0.0))
      throw std::invalid_argument("split_dataset: fractions must be positive");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  if (n < 3)
    throw std::invalid_argument("split_dataset: need at least 3 samples, got " +
                                std::to_string(n));

  // floor sizes, remainder distributed one by one starting at train
  std::size_t sizes[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(f[i] * static_cast<double>(n)));
    assigned += sizes[i];
  }
  std::size_t remainder = n - assigned;
  for (int i = 0; remainder > 0; i = (i + 1) % 3) {
    ++sizes[i];
    --remainder;
  }
  for (int i = 0; i < 3; ++i)
    if (sizes[i] == 0)
      throw std::invalid_argument(
          "split_dataset: n=" + std::to_string(n) +
          " too small to give every split at least one sample");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, RngStream::kSplitShuffle));
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(perm[i], perm[j]);
  }

  SplitIndices out;
  out.seed = seed;
  out.train.assign(perm.begin(), perm.begin() + sizes[0]);
  out.val.assign(perm.begin() + sizes[0], perm.begin() + sizes[0] + sizes[1]);
  out.test.assign(perm.begin() + sizes[0] + sizes[1], perm.end());
  return out;
}

Standardization standardize_fit(const std::vector<Sample>& train_samples,
                                const std::vector<std::string>& names) {
  if (train_samples.size() < 2)
    throw std::invalid_argument("standardize_fit: need at least 2 samples");
  const std::size_t width = train_samples[0].params.values.size();
  const double n = static_cast<double>(train_samples.size());

  Standardization s;
  s.mean.assign(width, 0.0);
  s.stddev.assign(width, 0.0);
  for (const Sample& smp : train_samples) {
    if (smp.params.values.size() != width)
      throw std::invalid_argument("standardize_fit: inconsistent parameter width");
    for (std::size_t j = 0; j < width; ++j) s.mean[j] += smp.params.values[j];
  }
  for (std::size_t j = 0; j < width; ++j) s.mean[j] /= n;
  for (const Sample& smp : train_samples)
    for (std::size_t j = 0; j < width; ++j) {
      const double d = smp.params.values[j] - s.mean[j];
      s.stddev[j] += d * d;
    }
  for (std::size_t j = 0; j < width; ++j) {
    s.stddev[j] = std::sqrt(s.stddev[j] / n);
    if (!(s.stddev[j] > 0.0)) {
      const std::string name =
          j < names.size() ? names[j] : "feature " + std::to_string(j);
      throw std::invalid_argument("standardize_fit: zero variance in " + name);
    }
  }
  return s;
}

MachineParameters standardize_apply(const MachineParameters& params,
                                    const Standardization& s) {
  if (params.values.size() != s.mean.size())
    throw std::invalid_argument("standardize_apply: width mismatch");
  MachineParameters out;
  out.values.resize(params.values.size());
  for (std::size_t j = 0; j < params.values.size(); ++j)
    out.values[j] = (params.values[j] - s.mean[j]) / s.stddev[j];
  return out;
}

MachineParameters standardize_invert(const MachineParameters& params,
                                     const Standardization& s) {
  if (params.values.size() != s.mean.size())
    throw std::invalid_argument("standardize_invert: width mismatch");
  MachineParameters out;
  out.values.resize(params.values.size());
  for (std::size_t j = 0; j < params.values.size(); ++j)
    out.values[j] = params.values[j] * s.stddev[j] + s.mean[j];
  return out;
}

std::vector<double> label_mean(const std::vector<Sample>& samples) {
  if (samples.empty())
    throw std::invalid_argument("label_mean: no samples");
  const std::size_t depth = samples[0].profile.power.size();
  std::vector<double> mean(depth, 0.0);
  for (const Sample& s : samples) {
    if (s.profile.power.size() != depth)
      throw std::invalid_argument("label_mean: inconsistent profile length");
    for (std::size_t i = 0; i < depth; ++i) mean[i] += s.profile.power[i];
  }
  const double n = static_cast<double>(samples.size());
  for (double& v : mean) v /= n;
  return mean;
}

}  // namespace vprd
