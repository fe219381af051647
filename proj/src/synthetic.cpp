#include "vprd/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vprd/io.hpp"
#include "vprd/prng.hpp"

namespace vprd {

namespace {

using nlohmann::json;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r)
    rows.push_back(std::vector<double>(m.row(r), m.row(r) + m.cols));
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", rows}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const json& rows = j.at("data");
  if (rows.size() != m.rows) throw std::runtime_error("ground truth: bad matrix rows");
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != m.cols) throw std::runtime_error("ground truth: bad matrix cols");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = row[c];
  }
  return m;
}

}  // namespace

std::string to_string(SynthMapping m) {
  return m == SynthMapping::Linear ? "linear" : "bump";
}

SynthMapping synth_mapping_from_string(const std::string& s) {
  if (s == "linear") return SynthMapping::Linear;
  if (s == "bump") return SynthMapping::Bump;
  throw std::invalid_argument("unknown mapping '" + s + "'");
}

void SynthConfig::validate() const {
  if (n_samples == 0) throw std::invalid_argument("synth: n_samples must be positive");
  if (d_in == 0 || d_out == 0)
    throw std::invalid_argument("synth: d_in and d_out must be positive");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("synth: noise_std must be >= 0");
  if (!(jitter_std_px >= 0.0))
    throw std::invalid_argument("synth: jitter_std_px must be >= 0");
  if (image_rows == 0) throw std::invalid_argument("synth: image_rows must be positive");
  if (!(time_calibration_fs_per_px > 0.0) || !(energy_calibration_kev_per_px > 0.0))
    throw std::invalid_argument("synth: calibrations must be positive");
}

void save_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  json j;
  j["format_version"] = 1;
  j["mapping"] = to_string(gt.mapping);
  j["nominal"] = gt.nominal;
  j["spread"] = gt.spread;
  if (gt.mapping == SynthMapping::Linear) {
    j["linear_a"] = matrix_to_json(gt.linear_a);
    j["linear_b"] = gt.linear_b;
  } else {
    j["bump_proj"] = matrix_to_json(gt.bump_proj);
  }
  save_json(path, j);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  const json j = load_json(path);
  GroundTruth gt;
  gt.mapping = synth_mapping_from_string(j.at("mapping").get<std::string>());
  gt.nominal = j.at("nominal").get<std::vector<double>>();
  gt.spread = j.at("spread").get<std::vector<double>>();
  if (gt.mapping == SynthMapping::Linear) {
    gt.linear_a = matrix_from_json(j.at("linear_a"));
    gt.linear_b = j.at("linear_b").get<std::vector<double>>();
  } else {
    gt.bump_proj = matrix_from_json(j.at("bump_proj"));
  }
  return gt;
}

std::vector<double> ground_truth_label(const GroundTruth& gt,
                                       const MachineParameters& params,
                                       std::size_t d_out) {
  const std::size_t d_in = gt.nominal.size();
  if (params.values.size() != d_in)
    throw std::invalid_argument("ground truth: parameter width mismatch");
  std::vector<double> y(d_out, 0.0);

  if (gt.mapping == SynthMapping::Linear) {
    if (gt.linear_a.rows != d_out || gt.linear_a.cols != d_in ||
        gt.linear_b.size() != d_out)
      throw std::invalid_argument("ground truth: linear map shape mismatch");
    for (std::size_t i = 0; i < d_out; ++i) {
      double s = gt.linear_b[i];
      const double* row = gt.linear_a.row(i);
      for (std::size_t j = 0; j < d_in; ++j) s += row[j] * params.values[j];
      y[i] = std::abs(s);
    }
    return y;
  }

  if (gt.bump_proj.rows != 3 || gt.bump_proj.cols != d_in)
    throw std::invalid_argument("ground truth: bump projection shape mismatch");
  double z[3];
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0.0;
    const double* row = gt.bump_proj.row(k);
    for (std::size_t j = 0; j < d_in; ++j)
      s += row[j] * (params.values[j] - gt.nominal[j]);
    z[k] = s;
  }
  const double n = static_cast<double>(d_out);
  const double center = n * (0.5 + 0.2 * std::tanh(z[0]));
  const double width = n * (0.05 + 0.03 * sigmoid(z[1]));
  const double amp = 1.0 + 0.5 * std::tanh(z[2]);
  for (std::size_t i = 0; i < d_out; ++i) {
    const double u = (static_cast<double>(i) - center) / width;
    y[i] = amp * std::exp(-0.5 * u * u);
  }
  return y;
}

std::pair<Dataset, GroundTruth> gen_dataset(const SynthConfig& cfg) {
  cfg.validate();

  GroundTruth gt;
  gt.mapping = cfg.mapping;
  gt.nominal.resize(cfg.d_in);
  gt.spread.resize(cfg.d_in);
  for (std::size_t j = 0; j < cfg.d_in; ++j) {
    // Cycle through the kinds of readings a shot record carries: bunch
    // charge, beam energy, a normalized monitor, and an arrival time.
    switch (j % 4) {
      case 0: gt.nominal[j] = cfg.nominal_charge_pc; break;
      case 1: gt.nominal[j] = cfg.nominal_energy_mev; break;
      case 2: gt.nominal[j] = 1.0; break;
      default: gt.nominal[j] = 3.5; break;
    }
    gt.spread[j] = 0.1 * std::abs(gt.nominal[j]);
  }

  Rng model_rng(derive_seed(cfg.seed, RngStream::kSynthModel));
  if (cfg.mapping == SynthMapping::Linear) {
    gt.linear_a = Matrix(cfg.d_out, cfg.d_in);
    gt.linear_b.resize(cfg.d_out);
    for (std::size_t i = 0; i < cfg.d_out; ++i)
      for (std::size_t j = 0; j < cfg.d_in; ++j)
        gt.linear_a(i, j) = model_rng.next_uniform(-1.0, 1.0) /
                            (gt.spread[j] * static_cast<double>(cfg.d_in));
    for (std::size_t i = 0; i < cfg.d_out; ++i)
      gt.linear_b[i] = model_rng.next_uniform(1.0, 2.0);
  } else {
    gt.bump_proj = Matrix(3, cfg.d_in);
    const double scale = std::sqrt(static_cast<double>(cfg.d_in));
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < cfg.d_in; ++j)
        gt.bump_proj(k, j) =
            model_rng.next_uniform(-1.0, 1.0) / (gt.spread[j] * scale);
  }

  Dataset ds;
  ds.time_bin_fs = cfg.time_calibration_fs_per_px;
  ds.param_names.resize(cfg.d_in);
  for (std::size_t j = 0; j < cfg.d_in; ++j) {
    const char* kind = nullptr;
    switch (j % 4) {
      case 0: kind = "charge_pc"; break;
      case 1: kind = "energy_mev"; break;
      case 2: kind = "monitor"; break;
      default: kind = "arrival_ns"; break;
    }
    ds.param_names[j] = std::string(kind) + "_" + std::to_string(j / 4);
  }

  ds.samples.resize(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    Rng rng(derive_seed(cfg.seed, RngStream::kSynthSampleBase, i));
    Sample& s = ds.samples[i];
    s.shot_index = static_cast<std::int64_t>(i);
    s.params.values.resize(cfg.d_in);
    for (std::size_t j = 0; j < cfg.d_in; ++j)
      s.params.values[j] = gt.nominal[j] + gt.spread[j] * rng.next_normal();
    s.profile.power = ground_truth_label(gt, s.params, cfg.d_out);
    s.profile.time_bin_fs = ds.time_bin_fs;
    if (cfg.noise_std > 0.0)
      for (double& v : s.profile.power) v += cfg.noise_std * rng.next_normal();
  }
  ds.validate();
  return {std::move(ds), std::move(gt)};
}

SynthImages gen_phase_images(const SynthConfig& cfg,
                             const std::vector<PowerProfile>& profiles,
                             const std::vector<long>* explicit_shifts) {
  cfg.validate();
  if (profiles.empty()) throw std::invalid_argument("gen_phase_images: no profiles");
  if (explicit_shifts && explicit_shifts->size() != profiles.size())
    throw std::invalid_argument("gen_phase_images: one shift per profile required");

  const std::size_t rows = cfg.image_rows;
  const double step_mev = cfg.energy_calibration_kev_per_px / 1000.0;
  std::vector<double> axis(rows);
  for (std::size_t r = 0; r < rows; ++r)
    axis[r] = cfg.nominal_energy_mev +
              (static_cast<double>(r) - static_cast<double>(rows - 1) / 2.0) * step_mev;

  // Vertical charge distribution: a fixed Gaussian column profile normalized
  // so that sum_r scale[r] * axis[r] = 1, which makes the energy-weighted
  // projection of an unjittered image reproduce the input profile exactly.
  std::vector<double> scale(rows);
  const double mid = static_cast<double>(rows - 1) / 2.0;
  const double sigma = static_cast<double>(rows) / 6.0;
  double norm = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double u = (static_cast<double>(r) - mid) / sigma;
    scale[r] = std::exp(-0.5 * u * u);
    norm += scale[r] * axis[r];
  }
  for (double& v : scale) v /= norm;

  SynthImages out;
  out.images.reserve(profiles.size());
  out.shifts_px.resize(profiles.size(), 0);

  const std::size_t cols = profiles.front().power.size();
  if (cols == 0) throw std::invalid_argument("gen_phase_images: empty profile");

  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const PowerProfile& p = profiles[i];
    if (p.power.size() != cols)
      throw std::invalid_argument("gen_phase_images: profile lengths differ");

    long shift = 0;
    if (explicit_shifts) {
      shift = (*explicit_shifts)[i];
    } else if (cfg.jitter_std_px > 0.0) {
      Rng jitter_rng(derive_seed(cfg.seed, RngStream::kSynthJitterBase, i));
      shift = std::lround(cfg.jitter_std_px * jitter_rng.next_normal());
    }
    if (static_cast<std::size_t>(std::abs(shift)) >= cols)
      throw std::runtime_error("gen_phase_images: shot " + std::to_string(i) +
                               " jittered fully out of frame (shift " +
                               std::to_string(shift) + ", width " +
                               std::to_string(cols) + ")");
    out.shifts_px[i] = shift;

    PhaseImage img;
    img.energy_axis = axis;
    img.time_calibration_fs_per_px = cfg.time_calibration_fs_per_px;
    img.energy_calibration_kev_per_px = cfg.energy_calibration_kev_per_px;
    img.charge = Matrix(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
      const long src = static_cast<long>(c) - shift;
      double v = 0.0;
      if (src >= 0 && src < static_cast<long>(cols)) v = p.power[static_cast<std::size_t>(src)];
      if (v < 0.0) v = 0.0;  // charge cannot be negative; clips label noise
      for (std::size_t r = 0; r < rows; ++r) img.charge(r, c) = scale[r] * v;
    }
    out.images.push_back(std::move(img));
  }
  return out;
}

}  // namespace vprd
