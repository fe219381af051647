#include "vprd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vprd {

std::vector<double> per_sample_mse(const Matrix& predictions,
                                   const Matrix& measurements) {
  if (!predictions.same_shape(measurements))
    throw std::invalid_argument("per_sample_mse: shape mismatch");
  if (predictions.rows == 0 || predictions.cols == 0)
    throw std::invalid_argument("per_sample_mse: empty matrices");
  std::vector<double> out(predictions.rows);
  for (std::size_t r = 0; r < predictions.rows; ++r) {
    double s = 0.0;
    const double* p = predictions.row(r);
    const double* m = measurements.row(r);
    for (std::size_t c = 0; c < predictions.cols; ++c) {
      const double d = p[c] - m[c];
      s += d * d;
    }
    out[r] = s / static_cast<double>(predictions.cols);
  }
  return out;
}

std::vector<double> baseline_mean(const Matrix& measurements,
                                  std::span<const double> mean_label) {
  if (mean_label.size() != measurements.cols)
    throw std::invalid_argument("baseline_mean: label width mismatch");
  if (measurements.rows == 0 || measurements.cols == 0)
    throw std::invalid_argument("baseline_mean: empty measurements");
  std::vector<double> out(measurements.rows);
  for (std::size_t r = 0; r < measurements.rows; ++r) {
    double s = 0.0;
    const double* m = measurements.row(r);
    for (std::size_t c = 0; c < measurements.cols; ++c) {
      const double d = mean_label[c] - m[c];
      s += d * d;
    }
    out[r] = s / static_cast<double>(measurements.cols);
  }
  return out;
}

std::vector<double> baseline_neighbor(const Matrix& measurements) {
  if (measurements.rows < 2)
    throw std::invalid_argument("baseline_neighbor: need at least 2 rows");
  if (measurements.cols == 0)
    throw std::invalid_argument("baseline_neighbor: empty rows");
  std::vector<double> out(measurements.rows - 1);
  for (std::size_t r = 0; r + 1 < measurements.rows; ++r) {
    double s = 0.0;
    const double* lo = measurements.row(r);
    const double* hi = measurements.row(r + 1);
    for (std::size_t c = 0; c < measurements.cols; ++c) {
      const double d = hi[c] - lo[c];
      s += d * d;
    }
    out[r] = s / static_cast<double>(measurements.cols);
  }
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const std::size_t n = v.size();
  const double h = static_cast<double>(n - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 < n) return v[lo] + frac * (v[lo + 1] - v[lo]);
  return v[lo];
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.n = v.size();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  return b;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("wilcoxon: length mismatch");
  std::vector<double> diff;
  diff.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw std::invalid_argument("wilcoxon: non-finite difference");
    if (d != 0.0) diff.push_back(d);
  }
  const std::size_t n = diff.size();
  if (n < 5)
    throw std::invalid_argument("wilcoxon: only " + std::to_string(n) +
                                " nonzero differences, need at least 5");

  // Ranks of |d| with ties averaged. Doubled ranks stay integral, which keeps
  // the exact branch in pure integer arithmetic.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(diff[i]) < std::abs(diff[j]);
  });
  std::vector<std::uint64_t> rank2(n);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t s = 0; s < n;) {
    std::size_t e = s;
    while (e + 1 < n && std::abs(diff[order[e + 1]]) == std::abs(diff[order[s]])) ++e;
    const std::uint64_t r2 = static_cast<std::uint64_t>(s + e + 2);  // 2 * average rank
    for (std::size_t k = s; k <= e; ++k) rank2[order[k]] = r2;
    tie_sizes.push_back(e - s + 1);
    s = e + 1;
  }

  std::uint64_t w2_plus = 0;
  std::uint64_t w2_minus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diff[i] > 0.0)
      w2_plus += rank2[i];
    else
      w2_minus += rank2[i];
  }
  const std::uint64_t w2 = std::min(w2_plus, w2_minus);

  WilcoxonResult res;
  res.n_effective = n;
  res.w = static_cast<double>(w2) / 2.0;

  if (n <= 20) {
    // Exact distribution of the signed-rank sum over all 2^n sign choices,
    // tabulated over doubled-rank sums.
    const std::uint64_t total2 = std::accumulate(rank2.begin(), rank2.end(),
                                                 std::uint64_t{0});
    std::vector<std::uint64_t> dp(total2 + 1, 0);
    dp[0] = 1;
    for (std::uint64_t r : rank2)
      for (std::uint64_t t = total2; t >= r; --t) dp[t] += dp[t - r];
    std::uint64_t count = 0;
    for (std::uint64_t t = 0; t <= total2; ++t)
      if (t <= w2 || total2 - t <= w2) count += dp[t];
    res.p = std::ldexp(static_cast<double>(count), -static_cast<int>(n));
    res.method = "exact";
  } else {
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    double tie_sum = 0.0;
    for (std::size_t t : tie_sizes) {
      const double td = static_cast<double>(t);
      tie_sum += td * td * td - td;
    }
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_sum / 48.0;
    if (!(var > 0.0))
      throw std::runtime_error("wilcoxon: degenerate rank variance");
    const double z = (res.w - mean + 0.5) / std::sqrt(var);
    res.p = std::min(1.0, 2.0 * phi(z));
    res.method = "normal-approximation";
  }
  return res;
}

double bonferroni(double p, std::size_t m) {
  if (m == 0) throw std::invalid_argument("bonferroni: zero comparisons");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("bonferroni: p outside [0, 1]");
  return std::min(1.0, static_cast<double>(m) * p);
}

std::string to_string(NeighborAlignment a) {
  return a == NeighborAlignment::Lower ? "lower" : "upper";
}

NeighborAlignment neighbor_alignment_from_string(const std::string& s) {
  if (s == "lower") return NeighborAlignment::Lower;
  if (s == "upper") return NeighborAlignment::Upper;
  throw std::invalid_argument("unknown neighbor alignment '" + s + "'");
}

namespace {

PairedTest run_paired_test(std::span<const double> a, std::span<const double> b,
                           std::size_t m) {
  PairedTest out;
  try {
    out.test = wilcoxon_signed_rank(a, b);
    out.p_bonferroni = bonferroni(out.test->p, m);
    out.status = "ok";
  } catch (const std::invalid_argument&) {
    // Populations too close to call: nearly all paired differences are zero.
    out.p_bonferroni = 1.0;
    out.status = "indistinguishable";
  }
  return out;
}

}  // namespace

EvalReport evaluate(const MlpModel& model, const Dataset& dataset,
                    const std::vector<std::size_t>& test_indices,
                    std::span<const double> mean_label,
                    const std::optional<Standardization>& standardization,
                    const EvalOptions& options) {
  dataset.validate();
  if (test_indices.size() < 2)
    throw std::invalid_argument("evaluate: need at least 2 test samples");
  for (std::size_t i : test_indices)
    if (i >= dataset.size())
      throw std::out_of_range("evaluate: test index out of range");
  if (mean_label.size() != dataset.d_out())
    throw std::invalid_argument("evaluate: mean label width mismatch");

  // Acquisition order; dataset validation guarantees shot indices increase
  // with position, so sorting positions sorts shots.
  std::vector<std::size_t> idx = test_indices;
  std::sort(idx.begin(), idx.end());

  const std::size_t n = idx.size();
  Matrix x(n, dataset.d_in());
  Matrix y(n, dataset.d_out());
  EvalReport report;
  report.alignment = options.alignment;
  report.test_shots.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const Sample& s = dataset.samples[idx[r]];
    report.test_shots[r] = s.shot_index;
    MachineParameters p = s.params;
    if (standardization) p = standardize_apply(p, *standardization);
    for (std::size_t c = 0; c < x.cols; ++c) x(r, c) = p.values[c];
    for (std::size_t c = 0; c < y.cols; ++c) y(r, c) = s.profile.power[c];
  }

  const Matrix pred = forward(model, x);
  report.prediction_mse = per_sample_mse(pred, y);
  report.mean_mse = baseline_mean(y, mean_label);
  report.neighbor_mse = baseline_neighbor(y);

  report.prediction_box = box_stats(report.prediction_mse);
  report.mean_box = box_stats(report.mean_mse);
  report.neighbor_box = box_stats(report.neighbor_mse);

  const std::size_t m = options.bonferroni_m;
  report.pred_vs_mean =
      run_paired_test(report.prediction_mse, report.mean_mse, m);

  // A neighbor error at position i can be paired with the prediction error of
  // the lower shot (i) or the upper shot (i + 1); report both.
  const std::size_t pairs = n - 1;
  std::span<const double> pred_lower(report.prediction_mse.data(), pairs);
  std::span<const double> pred_upper(report.prediction_mse.data() + 1, pairs);
  PairedTest lower = run_paired_test(pred_lower, report.neighbor_mse, m);
  PairedTest upper = run_paired_test(pred_upper, report.neighbor_mse, m);
  if (options.alignment == NeighborAlignment::Lower) {
    report.pred_vs_neighbor = std::move(lower);
    report.pred_vs_neighbor_alt = std::move(upper);
  } else {
    report.pred_vs_neighbor = std::move(upper);
    report.pred_vs_neighbor_alt = std::move(lower);
  }
  return report;
}

}  // namespace vprd
