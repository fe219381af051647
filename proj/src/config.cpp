#include "vprd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "vprd/io.hpp"

namespace vprd {

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::vector<std::string> Config::validate() const {
  std::vector<std::string> warnings;
  if (hidden == 0) throw std::invalid_argument("hidden must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(scheduler_factor > 0.0 && scheduler_factor <= 1.0))
    throw std::invalid_argument("scheduler-factor must lie in (0, 1]");
  if (max_steps == 0) throw std::invalid_argument("max-steps must be positive");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  loss_kind_from_string(loss);
  reduction_from_string(reduction);
  neighbor_alignment_from_string(neighbor_alignment);
  synth_mapping_from_string(synth_mapping);
  if (!(split.train > 0.0 && split.val > 0.0 && split.test > 0.0))
    throw std::invalid_argument("split fractions must be positive");
  const double total = split.train + split.val + split.test;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  if (smooth_radius_px == 0)
    throw std::invalid_argument("smooth-radius must be positive");
  if (synth_n == 0 || synth_d_in == 0 || synth_d_out == 0 || synth_image_rows == 0)
    throw std::invalid_argument("synthetic sizes must be positive");
  if (!(synth_noise_std >= 0.0) || !(synth_jitter_std_px >= 0.0))
    throw std::invalid_argument("synthetic noise and jitter must be non-negative");

  if (loss == "anti-mean" && alpha > 0.05)
    warnings.push_back("alpha " + format_double(alpha) +
                       " is above 0.05; penalties this large degraded test "
                       "accuracy, expect worse error");
  return warnings;
}

TrainConfig Config::train_config() const {
  TrainConfig t;
  t.seed = seed;
  t.hidden = hidden;
  t.dropout_p = dropout_p;
  t.lr = lr;
  t.scheduler_factor = scheduler_factor;
  t.scheduler_patience = scheduler_patience;
  t.early_stop_patience = early_stop_patience;
  t.max_steps = max_steps;
  t.loss_kind = loss_kind_from_string(loss);
  t.alpha = alpha;
  t.reduction = reduction_from_string(reduction);
  t.standardize = standardize;
  return t;
}

SynthConfig Config::synth_config() const {
  SynthConfig s;
  s.n_samples = synth_n;
  s.d_in = synth_d_in;
  s.d_out = synth_d_out;
  s.seed = seed;
  s.mapping = synth_mapping_from_string(synth_mapping);
  s.noise_std = synth_noise_std;
  s.jitter_std_px = synth_jitter_std_px;
  s.image_rows = synth_image_rows;
  return s;
}

EvalOptions Config::eval_options() const {
  EvalOptions e;
  e.alignment = neighbor_alignment_from_string(neighbor_alignment);
  return e;
}

json Config::to_json() const {
  json j;
  j["seed"] = seed;
  j["hidden"] = hidden;
  j["dropout"] = dropout_p;
  j["lr"] = lr;
  j["scheduler_factor"] = scheduler_factor;
  j["scheduler_patience"] = scheduler_patience;
  j["early_stop_patience"] = early_stop_patience;
  j["max_steps"] = max_steps;
  j["loss"] = loss;
  j["alpha"] = alpha;
  j["reduction"] = reduction;
  j["standardize"] = standardize;
  j["split_train"] = split.train;
  j["split_val"] = split.val;
  j["split_test"] = split.test;
  j["smooth_radius_px"] = smooth_radius_px;
  j["crop_padding_px"] = crop_padding_px;
  j["neighbor_alignment"] = neighbor_alignment;
  j["synth_n"] = synth_n;
  j["synth_d_in"] = synth_d_in;
  j["synth_d_out"] = synth_d_out;
  j["synth_mapping"] = synth_mapping;
  j["synth_noise_std"] = synth_noise_std;
  j["synth_jitter_std_px"] = synth_jitter_std_px;
  j["synth_image_rows"] = synth_image_rows;
  j["bench_runs"] = bench_runs;
  j["bench_warmup"] = bench_warmup;
  return j;
}

void apply_json(Config& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  static const char* known[] = {
      "seed", "hidden", "dropout", "lr", "scheduler_factor", "scheduler_patience",
      "early_stop_patience", "max_steps", "loss", "alpha", "reduction",
      "standardize", "split_train", "split_val", "split_test", "smooth_radius_px",
      "crop_padding_px", "neighbor_alignment", "synth_n", "synth_d_in",
      "synth_d_out", "synth_mapping", "synth_noise_std", "synth_jitter_std_px",
      "synth_image_rows", "bench_runs", "bench_warmup"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  read_key(j, "seed", c.seed);
  read_key(j, "hidden", c.hidden);
  read_key(j, "dropout", c.dropout_p);
  read_key(j, "lr", c.lr);
  read_key(j, "scheduler_factor", c.scheduler_factor);
  read_key(j, "scheduler_patience", c.scheduler_patience);
  read_key(j, "early_stop_patience", c.early_stop_patience);
  read_key(j, "max_steps", c.max_steps);
  read_key(j, "loss", c.loss);
  read_key(j, "alpha", c.alpha);
  read_key(j, "reduction", c.reduction);
  read_key(j, "standardize", c.standardize);
  read_key(j, "split_train", c.split.train);
  read_key(j, "split_val", c.split.val);
  read_key(j, "split_test", c.split.test);
  read_key(j, "smooth_radius_px", c.smooth_radius_px);
  read_key(j, "crop_padding_px", c.crop_padding_px);
  read_key(j, "neighbor_alignment", c.neighbor_alignment);
  read_key(j, "synth_n", c.synth_n);
  read_key(j, "synth_d_in", c.synth_d_in);
  read_key(j, "synth_d_out", c.synth_d_out);
  read_key(j, "synth_mapping", c.synth_mapping);
  read_key(j, "synth_noise_std", c.synth_noise_std);
  read_key(j, "synth_jitter_std_px", c.synth_jitter_std_px);
  read_key(j, "synth_image_rows", c.synth_image_rows);
  read_key(j, "bench_runs", c.bench_runs);
  read_key(j, "bench_warmup", c.bench_warmup);
}

Config load_config(const std::filesystem::path* config_file) {
  Config c;
  if (const char* env = std::getenv("VPRD_SEED")) {
    std::uint64_t v = 0;
    const std::string s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw std::invalid_argument("VPRD_SEED is not an unsigned integer: '" + s + "'");
    c.seed = v;
  }
  if (config_file) apply_json(c, load_json(*config_file));
  return c;
}

}  // namespace vprd
