#include "vprd/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "vprd/evaluation.hpp"
#include "vprd/io.hpp"
#include "vprd/manifest.hpp"
#include "vprd/preprocess.hpp"
#include "vprd/reconstruct.hpp"
#include "vprd/synthetic.hpp"
#include "vprd/training.hpp"
#include "vprd/version.hpp"

namespace vprd {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// Collects digests while the command runs; written last so the manifest can
// cover every output file.
struct RunContext {
  RunManifest manifest;
  std::chrono::steady_clock::time_point t0;

  RunContext(std::string command, const Config& cfg,
             const std::vector<std::string>& argv) {
    manifest.command = std::move(command);
    manifest.argv = argv;
    manifest.resolved_config = cfg.to_json();
    manifest.tool_version = kVersion;
    manifest.started_utc = utc_now();
    t0 = std::chrono::steady_clock::now();
  }

  void add_input(const fs::path& p) {
    manifest.inputs.emplace_back(p.string(), sha256_file(p));
  }

  void add_input_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) add_input(p);
  }

  void add_output(const fs::path& p) {
    manifest.outputs.emplace_back(p.string(), sha256_file(p));
  }

  void finish(const fs::path& manifest_path) {
    manifest.finished_utc = utc_now();
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(manifest_path, manifest);
  }
};

void write_resolved_config(RunContext& ctx, const Config& cfg, const fs::path& dir) {
  const fs::path p = dir / "config.resolved.json";
  save_json(p, cfg.to_json());
  ctx.add_output(p);
}

std::string checkpoint_id(const fs::path& ckpt_path) {
  return ckpt_path.filename().string() + "@" + sha256_file(ckpt_path).substr(0, 12);
}

json box_to_json(const BoxStats& b) {
  return json{{"median", b.median}, {"q1", b.q1}, {"q3", b.q3}, {"n", b.n}};
}

json paired_test_to_json(const PairedTest& t) {
  json j;
  j["status"] = t.status;
  j["p_bonferroni"] = t.p_bonferroni;
  if (t.test) {
    j["w"] = t.test->w;
    j["n_effective"] = t.test->n_effective;
    j["p"] = t.test->p;
    j["method"] = t.test->method;
  }
  return j;
}

}  // namespace

int cmd_synth(const Config& cfg, const SynthArgs& args,
              const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  RunContext ctx("synth", cfg, argv);

  auto [dataset, truth] = gen_dataset(cfg.synth_config());
  fs::create_directories(args.out);
  write_dataset(args.out, dataset, "synthetic");
  save_ground_truth(args.out / "ground_truth.json", truth);
  ctx.add_output(args.out / "params.csv");
  ctx.add_output(args.out / "profiles.bin");
  ctx.add_output(args.out / "meta.json");
  ctx.add_output(args.out / "ground_truth.json");

  if (args.images_out) {
    std::vector<PowerProfile> profiles;
    profiles.reserve(dataset.size());
    for (const auto& s : dataset.samples) profiles.push_back(s.profile);
    SynthImages imgs = gen_phase_images(cfg.synth_config(), profiles);

    ImagesBundle bundle;
    bundle.images = std::move(imgs.images);
    bundle.param_names = dataset.param_names;
    bundle.params = Matrix(dataset.size(), dataset.d_in());
    bundle.shot_indices.resize(dataset.size());
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      bundle.shot_indices[r] = dataset.samples[r].shot_index;
      for (std::size_t c = 0; c < bundle.params.cols; ++c)
        bundle.params(r, c) = dataset.samples[r].params.values[c];
    }
    fs::create_directories(*args.images_out);
    write_images_bundle(*args.images_out, bundle);
    save_json(*args.images_out / "shifts.json",
              json{{"shifts_px", imgs.shifts_px}});
    ctx.add_output(*args.images_out / "images.json");
    ctx.add_output(*args.images_out / "params.csv");
    ctx.add_output(*args.images_out / "shifts.json");
  }

  write_resolved_config(ctx, cfg, args.out);
  ctx.finish(args.out / "manifest.json");
  std::printf("synth: wrote %zu samples to %s\n", dataset.size(),
              args.out.string().c_str());
  return 0;
}

int cmd_preprocess(const Config& cfg, const PreprocessArgs& args,
                   const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  RunContext ctx("preprocess", cfg, argv);
  ctx.add_input_dir(args.images);

  ImagesBundle bundle = read_images_bundle(args.images);
  std::vector<PowerProfile> raw;
  raw.reserve(bundle.images.size());
  for (const auto& img : bundle.images) raw.push_back(energy_weighted_projection(img));

  auto [aligned, alignment] =
      dejitter(raw, static_cast<int>(cfg.smooth_radius_px));
  auto [cropped, window] =
      crop_to_signal(aligned, static_cast<int>(cfg.crop_padding_px));

  Dataset out;
  out.param_names = bundle.param_names;
  out.time_bin_fs = bundle.images.front().time_calibration_fs_per_px;
  out.samples.resize(cropped.size());
  for (std::size_t i = 0; i < cropped.size(); ++i) {
    Sample& s = out.samples[i];
    s.shot_index = bundle.shot_indices[i];
    s.params.values.assign(bundle.params.row(i),
                           bundle.params.row(i) + bundle.params.cols);
    s.profile = cropped[i];
    s.profile.time_bin_fs = out.time_bin_fs;
  }

  fs::create_directories(args.out);
  write_dataset(args.out, out, "preprocessed from " + args.images.string());

  json align_json;
  align_json["median_peak"] = alignment.median_peak;
  align_json["smooth_radius_px"] = alignment.smooth_radius_px;
  align_json["padding_px"] = cfg.crop_padding_px;
  align_json["crop_lo"] = window.first;
  align_json["crop_hi"] = window.second;
  json shots = json::array();
  for (std::size_t i = 0; i < cropped.size(); ++i)
    shots.push_back({{"shot_index", bundle.shot_indices[i]},
                     {"peak", alignment.peak_index[i]},
                     {"shift", alignment.shift[i]}});
  align_json["shots"] = shots;
  save_json(args.out / "alignment.json", align_json);

  ctx.add_output(args.out / "params.csv");
  ctx.add_output(args.out / "profiles.bin");
  ctx.add_output(args.out / "meta.json");
  ctx.add_output(args.out / "alignment.json");
  write_resolved_config(ctx, cfg, args.out);
  ctx.finish(args.out / "manifest.json");
  std::printf("preprocess: %zu shots, crop [%zu, %zu], median peak %zu\n",
              cropped.size(), window.first, window.second, alignment.median_peak);
  return 0;
}

int cmd_train(const Config& cfg, const TrainArgs& args,
              const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  RunContext ctx("train", cfg, argv);
  ctx.add_input(args.data / "params.csv");
  ctx.add_input(args.data / "profiles.bin");
  ctx.add_input(args.data / "meta.json");

  Dataset dataset = read_dataset(args.data);
  SplitIndices split = split_dataset(dataset.size(), cfg.split, cfg.seed);

  TrainConfig tc = cfg.train_config();
  if (!args.quiet) {
    tc.on_step = [&](std::size_t step, double tl, double vl, double lr) {
      if (step % 50 == 0 || step == 1)
        std::fprintf(stderr, "step %zu/%zu  train %.6g  val %.6g  lr %.3g\n",
                     step, tc.max_steps, tl, vl, lr);
    };
  }
  TrainResult result = train(dataset, split, tc);
  print_warnings(result.report.warnings);

  fs::create_directories(args.out);
  const fs::path ckpt_path = args.out / "model.ckpt";
  Checkpoint ckpt;
  ckpt.model = std::move(result.model);
  ckpt.standardization = result.standardization;
  ckpt.label_mean = result.label_mean;
  ckpt.time_bin_fs = dataset.time_bin_fs;
  ckpt.dropout_p = cfg.dropout_p;
  ckpt.train_meta = {{"seed", cfg.seed},
                     {"n_samples", dataset.size()},
                     {"split_train", cfg.split.train},
                     {"split_val", cfg.split.val},
                     {"split_test", cfg.split.test},
                     {"loss", cfg.loss},
                     {"alpha", cfg.alpha},
                     {"reduction", cfg.reduction},
                     {"lr", cfg.lr},
                     {"dropout", cfg.dropout_p},
                     {"steps_run", result.report.steps_run},
                     {"best_step", result.report.best_step},
                     {"best_val_loss", result.report.best_val_loss},
                     {"early_stopped", result.report.early_stopped}};
  write_checkpoint(ckpt_path, ckpt);

  json report;
  report["steps_run"] = result.report.steps_run;
  report["early_stopped"] = result.report.early_stopped;
  report["best_step"] = result.report.best_step;
  report["best_val_loss"] = result.report.best_val_loss;
  report["final_lr"] = result.report.lr_trace.empty()
                           ? cfg.lr
                           : result.report.lr_trace.back();
  report["split_sizes"] = {{"train", split.train.size()},
                           {"val", split.val.size()},
                           {"test", split.test.size()}};
  report["warnings"] = result.report.warnings;
  save_json(args.out / "train_report.json", report);

  {
    std::string csv = "step,train_loss,val_loss,lr\n";
    for (std::size_t i = 0; i < result.report.steps_run; ++i) {
      csv += std::to_string(i + 1);
      csv += ',';
      csv += format_double(result.report.train_loss[i]);
      csv += ',';
      csv += format_double(result.report.val_loss[i]);
      csv += ',';
      csv += format_double(result.report.lr_trace[i]);
      csv += '\n';
    }
    std::ofstream f(args.out / "loss_history.csv", std::ios::binary);
    f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!f) throw std::runtime_error("cannot write loss_history.csv");
  }

  ctx.add_output(ckpt_path);
  ctx.add_output(args.out / "train_report.json");
  ctx.add_output(args.out / "loss_history.csv");
  write_resolved_config(ctx, cfg, args.out);
  ctx.finish(args.out / "manifest.json");
  std::printf("train: %zu steps, best val %.6g at step %zu%s\n",
              result.report.steps_run, result.report.best_val_loss,
              result.report.best_step,
              result.report.early_stopped ? " (early stop)" : "");
  return 0;
}

namespace {

// The test split must be the one held out during training, so its identity
// comes from the checkpoint's recorded seed and fractions, not from the
// evaluation config.
SplitIndices split_from_checkpoint(const Checkpoint& ckpt, const Config& cfg,
                                   std::size_t n) {
  std::uint64_t seed = cfg.seed;
  SplitFractions fractions = cfg.split;
  const json& meta = ckpt.train_meta;
  if (meta.contains("seed")) seed = meta.at("seed").get<std::uint64_t>();
  if (meta.contains("split_train")) {
    fractions.train = meta.at("split_train").get<double>();
    fractions.val = meta.at("split_val").get<double>();
    fractions.test = meta.at("split_test").get<double>();
  }
  if (meta.contains("n_samples") &&
      meta.at("n_samples").get<std::size_t>() != n)
    throw std::runtime_error(
        "evaluate: dataset has " + std::to_string(n) +
        " samples but the model was trained on " +
        std::to_string(meta.at("n_samples").get<std::size_t>()) +
        "; the held-out split would not match");
  return split_dataset(n, fractions, seed);
}

}  // namespace

int cmd_evaluate(const Config& cfg, const EvaluateArgs& args,
                 const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  RunContext ctx("evaluate", cfg, argv);
  ctx.add_input(args.model);
  ctx.add_input(args.data / "params.csv");
  ctx.add_input(args.data / "profiles.bin");
  ctx.add_input(args.data / "meta.json");

  Checkpoint ckpt = read_checkpoint(args.model);
  Dataset dataset = read_dataset(args.data);
  SplitIndices split = split_from_checkpoint(ckpt, cfg, dataset.size());

  EvalReport report = evaluate(ckpt.model, dataset, split.test, ckpt.label_mean,
                               ckpt.standardization, cfg.eval_options());

  json j;
  j["n_test"] = report.test_shots.size();
  j["alignment"] = to_string(report.alignment);
  j["bonferroni_m"] = cfg.eval_options().bonferroni_m;
  j["boxes"] = {{"prediction", box_to_json(report.prediction_box)},
                {"mean", box_to_json(report.mean_box)},
                {"neighbor", box_to_json(report.neighbor_box)}};
  j["tests"] = {{"prediction_vs_mean", paired_test_to_json(report.pred_vs_mean)},
                {"prediction_vs_neighbor",
                 paired_test_to_json(report.pred_vs_neighbor)},
                {"prediction_vs_neighbor_alt",
                 paired_test_to_json(report.pred_vs_neighbor_alt)}};
  j["test_shots"] = report.test_shots;

  fs::create_directories(args.out);
  save_json(args.out / "eval_report.json", j);

  {
    std::string csv = "shot_index,prediction_mse,mean_mse,neighbor_mse\n";
    for (std::size_t i = 0; i < report.test_shots.size(); ++i) {
      csv += std::to_string(report.test_shots[i]);
      csv += ',';
      csv += format_double(report.prediction_mse[i]);
      csv += ',';
      csv += format_double(report.mean_mse[i]);
      csv += ',';
      csv += i < report.neighbor_mse.size() ? format_double(report.neighbor_mse[i])
                                            : std::string("nan");
      csv += '\n';
    }
    std::ofstream f(args.out / "errors.csv", std::ios::binary);
    f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!f) throw std::runtime_error("cannot write errors.csv");
  }

  ctx.add_output(args.out / "eval_report.json");
  ctx.add_output(args.out / "errors.csv");
  write_resolved_config(ctx, cfg, args.out);
  ctx.finish(args.out / "manifest.json");

  std::printf("evaluate: medians prediction %.6g, mean %.6g, neighbor %.6g\n",
              report.prediction_box.median, report.mean_box.median,
              report.neighbor_box.median);
  auto describe = [](const char* name, const PairedTest& t) {
    if (t.status == "ok")
      std::printf("  %s: W=%g n=%zu p=%.6g bonferroni=%.6g (%s)\n", name,
                  t.test->w, t.test->n_effective, t.test->p, t.p_bonferroni,
                  t.test->method.c_str());
    else
      std::printf("  %s: %s\n", name, t.status.c_str());
  };
  describe("prediction vs mean", report.pred_vs_mean);
  describe("prediction vs neighbor", report.pred_vs_neighbor);
  return 0;
}

int cmd_predict(const Config& cfg, const PredictArgs& args,
                const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  RunContext ctx("predict", cfg, argv);
  ctx.add_input(args.model);
  ctx.add_input(args.params);

  Checkpoint ckpt = read_checkpoint(args.model);
  ParamsCsv params = read_params_csv(args.params);
  if (params.values.cols != ckpt.model.d_in)
    throw std::runtime_error("predict: params.csv has " +
                             std::to_string(params.values.cols) +
                             " features, model expects " +
                             std::to_string(ckpt.model.d_in));

  Predictor predictor(ckpt.model, ckpt.standardization, ckpt.time_bin_fs);
  Matrix out(params.values.rows, ckpt.model.d_out);
  for (std::size_t r = 0; r < params.values.rows; ++r) {
    std::span<const double> row(params.values.row(r), params.values.cols);
    std::span<double> dst(out.row(r), out.cols);
    predictor.predict(row, dst);
  }

  fs::create_directories(args.out);
  write_matrix_file(args.out / "predictions.bin", out);
  save_json(args.out / "predictions_meta.json",
            json{{"checkpoint", checkpoint_id(args.model)},
                 {"time_bin_fs", ckpt.time_bin_fs},
                 {"shot_index", params.shot_indices}});

  ctx.add_output(args.out / "predictions.bin");
  ctx.add_output(args.out / "predictions_meta.json");
  write_resolved_config(ctx, cfg, args.out);
  ctx.finish(args.out / "manifest.json");
  std::printf("predict: %zu profiles -> %s\n", out.rows,
              (args.out / "predictions.bin").string().c_str());
  return 0;
}

int cmd_reconstruct(const Config& cfg, const ReconstructArgs& args,
                    const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  RunContext ctx("reconstruct", cfg, argv);
  ctx.add_input(args.model);
  ctx.add_input(args.lasing_on / "params.csv");
  ctx.add_input(args.lasing_on / "profiles.bin");
  ctx.add_input(args.lasing_on / "meta.json");

  Checkpoint ckpt = read_checkpoint(args.model);
  Dataset lasing_on = read_dataset(args.lasing_on);
  if (lasing_on.d_in() != ckpt.model.d_in)
    throw std::runtime_error("reconstruct: parameter width mismatch");
  if (lasing_on.d_out() != ckpt.model.d_out)
    throw std::runtime_error("reconstruct: profile length mismatch");

  const std::string id = checkpoint_id(args.model);
  Predictor predictor(ckpt.model, ckpt.standardization, ckpt.time_bin_fs);
  Matrix photon(lasing_on.size(), lasing_on.d_out());
  std::vector<std::int64_t> shots(lasing_on.size());
  for (std::size_t r = 0; r < lasing_on.size(); ++r) {
    const Sample& s = lasing_on.samples[r];
    shots[r] = s.shot_index;
    PowerProfile predicted = predictor.predict(s.params);
    PhotonPower p = photon_power(s.profile, predicted, id, s.shot_index);
    for (std::size_t c = 0; c < photon.cols; ++c) photon(r, c) = p.power[c];
  }

  fs::create_directories(args.out);
  write_matrix_file(args.out / "photon.bin", photon);
  save_json(args.out / "photon_meta.json",
            json{{"checkpoint", id},
                 {"time_bin_fs", lasing_on.time_bin_fs},
                 {"shot_index", shots}});

  ctx.add_output(args.out / "photon.bin");
  ctx.add_output(args.out / "photon_meta.json");
  write_resolved_config(ctx, cfg, args.out);
  ctx.finish(args.out / "manifest.json");
  std::printf("reconstruct: %zu photon profiles -> %s\n", photon.rows,
              (args.out / "photon.bin").string().c_str());
  return 0;
}

int cmd_bench(const Config& cfg, const BenchArgs& args,
              const std::vector<std::string>& argv) {
  print_warnings(cfg.validate());
  Checkpoint ckpt = read_checkpoint(args.model);
  Predictor predictor(ckpt.model, ckpt.standardization, ckpt.time_bin_fs);
  LatencyReport report =
      bench_inference(predictor, cfg.bench_runs, cfg.bench_warmup);

  std::printf("bench: %.2f +- %.2f us per shot (%zu runs, %zu warmup, "
              "%d thread, %s)\n",
              report.mean_us, report.std_us, report.n_runs, report.warmup_runs,
              report.threads, report.cpu_model.c_str());

  if (args.out) {
    RunContext ctx("bench", cfg, argv);
    ctx.add_input(args.model);
    fs::create_directories(*args.out);
    save_json(*args.out / "bench.json",
              json{{"mean_us", report.mean_us},
                   {"std_us", report.std_us},
                   {"n_runs", report.n_runs},
                   {"warmup_runs", report.warmup_runs},
                   {"threads", report.threads},
                   {"cpu_model", report.cpu_model},
                   {"checkpoint", checkpoint_id(args.model)}});
    ctx.add_output(*args.out / "bench.json");
    write_resolved_config(ctx, cfg, *args.out);
    ctx.finish(*args.out / "manifest.json");
  }
  return 0;
}

}  // namespace vprd
