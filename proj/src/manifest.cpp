#include "vprd/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "vprd/io.hpp"

namespace vprd {

namespace {

struct DigestCtx {
  EVP_MD_CTX* ctx;
  DigestCtx() : ctx(EVP_MD_CTX_new()) {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: cannot initialize digest");
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  DigestCtx(const DigestCtx&) = delete;
  DigestCtx& operator=(const DigestCtx&) = delete;

  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1)
      throw std::runtime_error("sha256: finalize failed");
    static const char hex[] = "0123456789abcdef";
    std::string out(2 * len, '0');
    for (unsigned int i = 0; i < len; ++i) {
      out[2 * i] = hex[md[i] >> 4];
      out[2 * i + 1] = hex[md[i] & 0xf];
    }
    return out;
  }
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("sha256: cannot open " + path.string());
  DigestCtx d;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize got = f.gcount();
    if (got > 0 && EVP_DigestUpdate(d.ctx, buf, static_cast<std::size_t>(got)) != 1)
      throw std::runtime_error("sha256: update failed");
  }
  return d.finish();
}

std::string sha256_bytes(const std::string& bytes) {
  DigestCtx d;
  if (!bytes.empty() && EVP_DigestUpdate(d.ctx, bytes.data(), bytes.size()) != 1)
    throw std::runtime_error("sha256: update failed");
  return d.finish();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["resolved_config"] = m.resolved_config;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [p, h] : m.inputs)
    inputs.push_back({{"path", p}, {"sha256", h}});
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& [p, h] : m.outputs)
    outputs.push_back({{"path", p}, {"sha256", h}});
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  j["duration_seconds"] = m.duration_seconds;
  j["tool_version"] = m.tool_version;
  save_json(path, j);
}

}  // namespace vprd
