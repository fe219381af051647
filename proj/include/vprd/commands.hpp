#pragma once

// Subcommand implementations shared by the CLI binary and the end-to-end
// tests. Each command validates its configuration, does the work, writes its
// outputs plus config.resolved.json, and finishes with a manifest.json
// listing SHA-256 digests of everything read and written. Manifests are the
// only outputs carrying wall-clock data; all other files are byte-identical
// across reruns with the same inputs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vprd/config.hpp"

namespace vprd {

struct SynthArgs {
  std::filesystem::path out;
  std::optional<std::filesystem::path> images_out;
};

struct PreprocessArgs {
  std::filesystem::path images;
  std::filesystem::path out;
};

struct TrainArgs {
  std::filesystem::path data;
  std::filesystem::path out;
  bool quiet = false;
};

struct EvaluateArgs {
  std::filesystem::path model;
  std::filesystem::path data;
  std::filesystem::path out;
};

struct PredictArgs {
  std::filesystem::path model;
  std::filesystem::path params;
  std::filesystem::path out;
};

struct ReconstructArgs {
  std::filesystem::path model;
  std::filesystem::path lasing_on;
  std::filesystem::path out;
};

struct BenchArgs {
  std::filesystem::path model;
  std::optional<std::filesystem::path> out;
};

int cmd_synth(const Config& cfg, const SynthArgs& args,
              const std::vector<std::string>& argv);
int cmd_preprocess(const Config& cfg, const PreprocessArgs& args,
                   const std::vector<std::string>& argv);
int cmd_train(const Config& cfg, const TrainArgs& args,
              const std::vector<std::string>& argv);
int cmd_evaluate(const Config& cfg, const EvaluateArgs& args,
                 const std::vector<std::string>& argv);
int cmd_predict(const Config& cfg, const PredictArgs& args,
                const std::vector<std::string>& argv);
int cmd_reconstruct(const Config& cfg, const ReconstructArgs& args,
                    const std::vector<std::string>& argv);
int cmd_bench(const Config& cfg, const BenchArgs& args,
              const std::vector<std::string>& argv);

}  // namespace vprd
