#pragma once

// Shot-level data types shared by the whole pipeline, plus deterministic
// dataset splitting and input standardization.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vprd {

/// One shot's machine readings (detector counts, ns, pC, MeV, mm - units are
/// heterogeneous, which is why training standardizes them).
struct MachineParameters {
  std::vector<double> values;
};

/// Energy-weighted charge vs time bin, arbitrary units.
struct PowerProfile {
  std::vector<double> power;
  double time_bin_fs = 1.0;
};

struct Sample {
  MachineParameters params;
  PowerProfile profile;
  std::int64_t shot_index = 0;  // acquisition order, unique and monotone
};

/// Per-feature z-scoring statistics, fitted on the training split only.
/// Convention: population standard deviation (divide by N).
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> param_names;  // column names, width d_in
  double time_bin_fs = 1.0;
  std::optional<Standardization> standardization;

  std::size_t size() const { return samples.size(); }
  std::size_t d_in() const { return samples.empty() ? param_names.size() : samples[0].params.values.size(); }
  std::size_t d_out() const { return samples.empty() ? 0 : samples[0].profile.power.size(); }

  /// Throws if any sample has the wrong width, a non-finite entry, or a
  /// non-monotone shot index.
  void validate() const;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Deterministic train/val/test split. Sizes are floor(fraction * n) with the
/// remainder handed out one by one starting at the train split; the
/// permutation is a Fisher-Yates shuffle driven by the fixed PRNG (stream
/// kSplitShuffle). Identical (n, fractions, seed) give identical indices on
/// every platform.
SplitIndices split_dataset(std::size_t n, const SplitFractions& fractions,
                           std::uint64_t seed);

/// Per-feature mean / population std over the given samples. `names`, when
/// non-empty, is used to identify a zero-variance feature in the error.
Standardization standardize_fit(const std::vector<Sample>& train_samples,
                                const std::vector<std::string>& names = {});

MachineParameters standardize_apply(const MachineParameters& params,
                                    const Standardization& s);

MachineParameters standardize_invert(const MachineParameters& params,
                                     const Standardization& s);

/// Element-wise mean profile of the given samples.
std::vector<double> label_mean(const std::vector<Sample>& samples);

}  // namespace vprd
