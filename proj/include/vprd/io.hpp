#pragma once

// On-disk formats. Everything is little-endian and written so that a
// re-run with the same inputs produces byte-identical files.
//
//   matrix file   16-byte header (u64 rows, u64 cols) + row-major f64 payload
//   dataset dir   params.csv + profiles.bin + meta.json
//   images dir    images.json + params.csv + one matrix file per shot
//   checkpoint    "VPRDCKP1" magic, u64 JSON length, JSON header, then the
//                 W1, b1, W2, b2 blobs, each in the matrix file layout
//
// CSV and JSON doubles use shortest round-trip formatting, so parsing a file
// back recovers bit-identical values.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprd/data_model.hpp"
#include "vprd/matrix.hpp"
#include "vprd/mlp.hpp"
#include "vprd/preprocess.hpp"

namespace vprd {

/// Shortest decimal form that parses back to the same bits.
std::string format_double(double v);
double parse_double(const std::string& s);

void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

/// Dataset directory. params.csv carries a leading shot_index column followed
/// by one column per machine parameter; profiles.bin holds the n x d_out
/// profile matrix; meta.json records widths, time binning and provenance.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds,
                   const std::string& provenance);
Dataset read_dataset(const std::filesystem::path& dir);

struct ImagesBundle {
  std::vector<PhaseImage> images;
  std::vector<std::int64_t> shot_indices;
  std::vector<std::string> param_names;
  Matrix params{0, 0};  // one row per shot, aligned with images
};

void write_images_bundle(const std::filesystem::path& dir, const ImagesBundle& b);
ImagesBundle read_images_bundle(const std::filesystem::path& dir);

struct Checkpoint {
  MlpModel model;
  std::optional<Standardization> standardization;
  std::vector<double> label_mean;
  double time_bin_fs = 1.0;
  double dropout_p = 0.0;
  nlohmann::json train_meta;  // seed, steps, losses; informational only
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// params.csv reader/writer shared by dataset and images bundles.
void write_params_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& names,
                      const std::vector<std::int64_t>& shot_indices,
                      const Matrix& values);
struct ParamsCsv {
  std::vector<std::string> names;
  std::vector<std::int64_t> shot_indices;
  Matrix values{0, 0};
};
ParamsCsv read_params_csv(const std::filesystem::path& path);

}  // namespace vprd
