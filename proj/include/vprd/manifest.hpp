#pragma once

// Run manifests: what command ran, with which resolved configuration, over
// which input files, producing which outputs, with SHA-256 digests for all
// of them. Manifests carry wall-clock timestamps and are therefore the one
// output class that differs between otherwise identical runs.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vprd {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Hex SHA-256 of a byte string.
std::string sha256_bytes(const std::string& bytes);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json resolved_config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
  std::string started_utc;
  std::string finished_utc;
  double duration_seconds = 0.0;
  std::string tool_version;
};

/// ISO-8601 UTC timestamp for the current moment.
std::string utc_now();

void write_manifest(const std::filesystem::path& path, const RunManifest& m);

}  // namespace vprd
