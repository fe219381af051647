#pragma once

// Test-split evaluation: per-sample errors for the model and two baselines
// (mean training label, neighboring shot), quartile summaries, and paired
// Wilcoxon signed-rank tests with Bonferroni correction.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vprd/data_model.hpp"
#include "vprd/matrix.hpp"
#include "vprd/mlp.hpp"

namespace vprd {

/// Row-wise mean squared difference between two equally shaped matrices.
std::vector<double> per_sample_mse(const Matrix& predictions,
                                   const Matrix& measurements);

/// Errors of the constant mean-label predictor.
std::vector<double> baseline_mean(const Matrix& measurements,
                                  std::span<const double> mean_label);

/// Errors of the neighboring-shot predictor: entry i compares consecutive
/// rows i and i+1 (rows must be in acquisition order), giving n-1 values.
std::vector<double> baseline_neighbor(const Matrix& measurements);

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::size_t n = 0;
};

/// Median and quartiles with linear interpolation between order statistics
/// (position (n - 1) * p).
BoxStats box_stats(std::span<const double> values);

struct WilcoxonResult {
  double w = 0.0;            // min of signed-rank sums
  std::size_t n_effective = 0;  // pairs left after discarding zero differences
  double p = 0.0;            // two-sided
  std::string method;        // "exact" or "normal-approximation"
};

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are
/// discarded; tied magnitudes get average ranks. n_effective <= 20 uses the
/// exact permutation distribution, larger samples the tie-corrected normal
/// approximation with continuity correction. Throws when fewer than 5
/// nonzero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b);

/// min(1, m * p) for m comparisons.
double bonferroni(double p, std::size_t m);

enum class NeighborAlignment { Lower, Upper };

std::string to_string(NeighborAlignment a);
NeighborAlignment neighbor_alignment_from_string(const std::string& s);

struct PairedTest {
  std::optional<WilcoxonResult> test;
  double p_bonferroni = 1.0;
  std::string status;  // "ok" or "indistinguishable"
};

struct EvalReport {
  std::vector<std::int64_t> test_shots;  // acquisition order
  std::vector<double> prediction_mse;
  std::vector<double> mean_mse;
  std::vector<double> neighbor_mse;
  BoxStats prediction_box;
  BoxStats mean_box;
  BoxStats neighbor_box;
  PairedTest pred_vs_mean;
  PairedTest pred_vs_neighbor;       // at the configured alignment
  PairedTest pred_vs_neighbor_alt;   // the other alignment, for reference
  NeighborAlignment alignment = NeighborAlignment::Lower;
};

struct EvalOptions {
  NeighborAlignment alignment = NeighborAlignment::Lower;
  std::size_t bonferroni_m = 2;
};

/// Runs the model on the test split (sorted by shot index), computes the
/// three error populations and the paired tests. `mean_label` must be the
/// training-split label mean stored with the model.
EvalReport evaluate(const MlpModel& model, const Dataset& dataset,
                    const std::vector<std::size_t>& test_indices,
                    std::span<const double> mean_label,
                    const std::optional<Standardization>& standardization,
                    const EvalOptions& options = {});

}  // namespace vprd
