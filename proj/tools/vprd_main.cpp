// vprd: virtual pulse reconstruction pipeline.
//
// Subcommands cover the full diagnostic chain: synthesize or preprocess shot
// data, train the lasing-off surrogate, evaluate it against the mean and
// neighbor baselines, predict profiles, reconstruct photon power, and
// benchmark single-shot inference.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vprd/commands.hpp"
#include "vprd/config.hpp"
#include "vprd/version.hpp"

namespace {

using vprd::Config;

// Values come from four places, weakest first: built-in defaults, VPRD_SEED,
// --config file, explicit flags. Flags land in optionals so only the ones
// actually given override the file.
struct Overrides {
  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> hidden;
  std::optional<double> dropout;
  std::optional<double> lr;
  std::optional<double> scheduler_factor;
  std::optional<std::size_t> scheduler_patience;
  std::optional<std::size_t> early_stop_patience;
  std::optional<std::size_t> max_steps;
  std::optional<std::string> loss;
  std::optional<double> alpha;
  std::optional<std::string> reduction;
  bool no_standardize = false;
  std::optional<double> split_train;
  std::optional<double> split_val;
  std::optional<double> split_test;
  std::optional<std::size_t> smooth_radius;
  std::optional<std::size_t> padding;
  std::optional<std::string> alignment;
  std::optional<std::size_t> synth_n;
  std::optional<std::size_t> synth_d_in;
  std::optional<std::size_t> synth_d_out;
  std::optional<std::string> mapping;
  std::optional<double> noise_std;
  std::optional<double> jitter_std;
  std::optional<std::size_t> image_rows;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> warmup;

  Config resolve() const {
    std::filesystem::path path;
    const std::filesystem::path* path_ptr = nullptr;
    if (config_file) {
      path = *config_file;
      path_ptr = &path;
    }
    Config c = vprd::load_config(path_ptr);
    if (seed) c.seed = *seed;
    if (hidden) c.hidden = *hidden;
    if (dropout) c.dropout_p = *dropout;
    if (lr) c.lr = *lr;
    if (scheduler_factor) c.scheduler_factor = *scheduler_factor;
    if (scheduler_patience) c.scheduler_patience = *scheduler_patience;
    if (early_stop_patience) c.early_stop_patience = *early_stop_patience;
    if (max_steps) c.max_steps = *max_steps;
    if (loss) c.loss = *loss;
    if (alpha) c.alpha = *alpha;
    if (reduction) c.reduction = *reduction;
    if (no_standardize) c.standardize = false;
    if (split_train) c.split.train = *split_train;
    if (split_val) c.split.val = *split_val;
    if (split_test) c.split.test = *split_test;
    if (smooth_radius) c.smooth_radius_px = *smooth_radius;
    if (padding) c.crop_padding_px = *padding;
    if (alignment) c.neighbor_alignment = *alignment;
    if (synth_n) c.synth_n = *synth_n;
    if (synth_d_in) c.synth_d_in = *synth_d_in;
    if (synth_d_out) c.synth_d_out = *synth_d_out;
    if (mapping) c.synth_mapping = *mapping;
    if (noise_std) c.synth_noise_std = *noise_std;
    if (jitter_std) c.synth_jitter_std_px = *jitter_std;
    if (image_rows) c.synth_image_rows = *image_rows;
    if (runs) c.bench_runs = *runs;
    if (warmup) c.bench_warmup = *warmup;
    return c;
  }
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file,
                  "JSON config file; flags override its values");
  cmd->add_option("--seed", o.seed, "master seed (default 42, or VPRD_SEED)");
}

void add_train_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--hidden", o.hidden, "hidden layer width (default 294)");
  cmd->add_option("--dropout", o.dropout, "hidden dropout probability (default 0.45)");
  cmd->add_option("--lr", o.lr, "initial Adam learning rate (default 0.005)");
  cmd->add_option("--scheduler-factor", o.scheduler_factor,
                  "plateau lr multiplier (default 0.05)");
  cmd->add_option("--scheduler-patience", o.scheduler_patience,
                  "plateau patience in steps (default 238)");
  cmd->add_option("--early-stop-patience", o.early_stop_patience,
                  "early stopping patience in steps (default 1225)");
  cmd->add_option("--max-steps", o.max_steps, "step cap (default 50000)");
  cmd->add_option("--loss", o.loss, "mse or anti-mean (default mse)");
  cmd->add_option("--alpha", o.alpha,
                  "mean-repulsion weight for anti-mean loss (default 0; "
                  "values above 0.05 degraded accuracy)");
  cmd->add_option("--reduction", o.reduction, "mean or sum (default mean)");
  cmd->add_flag("--no-standardize", o.no_standardize,
                "skip input standardization");
  cmd->add_option("--split-train", o.split_train, "train fraction (default 0.8)");
  cmd->add_option("--split-val", o.split_val, "validation fraction (default 0.1)");
  cmd->add_option("--split-test", o.split_test, "test fraction (default 0.1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual pulse reconstruction pipeline"};
  app.set_version_flag("--version", vprd::kVersion);
  app.require_subcommand(1);

  const std::vector<std::string> argv_copy(argv, argv + argc);

  Overrides o;
  int rc = 0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic shot dataset");
  vprd::SynthArgs synth_args;
  synth->add_option("--out", synth_args.out, "output dataset directory")->required();
  std::optional<std::string> images_out;
  synth->add_option("--images-out", images_out,
                    "also write jittered phase-space images here");
  add_config_options(synth, o);
  synth->add_option("--n", o.synth_n, "number of shots (default 2826)");
  synth->add_option("--d-in", o.synth_d_in, "machine parameters per shot (default 22)");
  synth->add_option("--d-out", o.synth_d_out, "profile length (default 567)");
  synth->add_option("--mapping", o.mapping, "ground truth: bump or linear");
  synth->add_option("--noise-std", o.noise_std, "label noise std (default 0.02)");
  synth->add_option("--jitter-std", o.jitter_std,
                    "arrival jitter std in pixels (default 8)");
  synth->add_option("--image-rows", o.image_rows, "energy rows (default 48)");
  synth->callback([&] {
    if (images_out) synth_args.images_out = *images_out;
    rc = vprd::cmd_synth(o.resolve(), synth_args, argv_copy);
  });

  auto* preprocess =
      app.add_subcommand("preprocess", "images -> de-jittered cropped profiles");
  vprd::PreprocessArgs pre_args;
  preprocess->add_option("--images", pre_args.images, "images directory")->required();
  preprocess->add_option("--out", pre_args.out, "output dataset directory")->required();
  add_config_options(preprocess, o);
  preprocess->add_option("--smooth-radius", o.smooth_radius,
                         "Gaussian radius in px for peak finding (default 10)");
  preprocess->add_option("--padding", o.padding, "crop padding in px (default 10)");
  preprocess->callback(
      [&] { rc = vprd::cmd_preprocess(o.resolve(), pre_args, argv_copy); });

  auto* train = app.add_subcommand("train", "fit the lasing-off surrogate");
  vprd::TrainArgs train_args;
  train->add_option("--data", train_args.data, "dataset directory")->required();
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_flag("--quiet", train_args.quiet, "suppress per-step progress");
  add_config_options(train, o);
  add_train_options(train, o);
  train->callback([&] { rc = vprd::cmd_train(o.resolve(), train_args, argv_copy); });

  auto* evaluate =
      app.add_subcommand("evaluate", "test-split errors, baselines and tests");
  vprd::EvaluateArgs eval_args;
  evaluate->add_option("--model", eval_args.model, "checkpoint file")->required();
  evaluate->add_option("--data", eval_args.data, "dataset directory")->required();
  evaluate->add_option("--out", eval_args.out, "output directory")->required();
  add_config_options(evaluate, o);
  evaluate->add_option("--alignment", o.alignment,
                       "neighbor pairing: lower or upper (default lower)");
  evaluate->callback(
      [&] { rc = vprd::cmd_evaluate(o.resolve(), eval_args, argv_copy); });

  auto* predict = app.add_subcommand("predict", "profiles for a params.csv");
  vprd::PredictArgs predict_args;
  predict->add_option("--model", predict_args.model, "checkpoint file")->required();
  predict->add_option("--params", predict_args.params, "params.csv input")->required();
  predict->add_option("--out", predict_args.out, "output directory")->required();
  add_config_options(predict, o);
  predict->callback(
      [&] { rc = vprd::cmd_predict(o.resolve(), predict_args, argv_copy); });

  auto* reconstruct = app.add_subcommand(
      "reconstruct", "photon power = lasing-on minus predicted lasing-off");
  vprd::ReconstructArgs rec_args;
  reconstruct->add_option("--model", rec_args.model, "checkpoint file")->required();
  reconstruct->add_option("--lasing-on", rec_args.lasing_on,
                          "lasing-on dataset directory")->required();
  reconstruct->add_option("--out", rec_args.out, "output directory")->required();
  add_config_options(reconstruct, o);
  reconstruct->callback(
      [&] { rc = vprd::cmd_reconstruct(o.resolve(), rec_args, argv_copy); });

  auto* bench = app.add_subcommand("bench", "single-shot inference latency");
  vprd::BenchArgs bench_args;
  bench->add_option("--model", bench_args.model, "checkpoint file")->required();
  std::optional<std::string> bench_out;
  bench->add_option("--out", bench_out, "also write bench.json here");
  add_config_options(bench, o);
  bench->add_option("--runs", o.runs, "timed iterations (default 10000, floor 1000)");
  bench->add_option("--warmup", o.warmup,
                    "warmup iterations (default 1000, floor 100)");
  bench->callback([&] {
    if (bench_out) bench_args.out = *bench_out;
    rc = vprd::cmd_bench(o.resolve(), bench_args, argv_copy);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
