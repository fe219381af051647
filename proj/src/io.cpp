#include "vprd/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace vprd {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are unsupported");

namespace {

using nlohmann::json;

void put_u64(std::ostream& f, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  f.write(b, 8);
}

std::uint64_t get_u64(std::istream& f, const std::string& what) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  if (f.gcount() != 8)
    throw std::runtime_error(what + ": truncated while reading header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_matrix_payload(std::ostream& f, const Matrix& m) {
  put_u64(f, m.rows);
  put_u64(f, m.cols);
  f.write(reinterpret_cast<const char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

Matrix read_matrix_payload(std::istream& f, const std::string& what) {
  const std::uint64_t rows = get_u64(f, what);
  const std::uint64_t cols = get_u64(f, what);
  if (rows != 0 && cols > (SIZE_MAX / sizeof(double)) / rows)
    throw std::runtime_error(what + ": header implies an implausible size");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  const std::streamsize want =
      static_cast<std::streamsize>(m.data.size() * sizeof(double));
  f.read(reinterpret_cast<char*>(m.data.data()), want);
  if (f.gcount() != want)
    throw std::runtime_error(what + ": truncated payload, expected " +
                             std::to_string(want) + " bytes, found " +
                             std::to_string(f.gcount()));
  return m;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return f;
}

void finish_write(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t parse_i64(const std::string& s) {
  std::int64_t v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw std::invalid_argument("bad integer token '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw std::invalid_argument("bad number token '" + s + "'");
  return v;
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  auto f = open_out(path);
  write_matrix_payload(f, m);
  finish_write(f, path);
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  auto f = open_in(path);
  Matrix m = read_matrix_payload(f, path.string());
  char extra;
  if (f.read(&extra, 1), f.gcount() != 0)
    throw std::runtime_error(path.string() + ": trailing bytes after payload");
  return m;
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto f = open_out(path);
  const std::string text = j.dump(2);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.put('\n');
  finish_write(f, path);
}

nlohmann::json load_json(const std::filesystem::path& path) {
  auto f = open_in(path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return j;
}

void write_params_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& names,
                      const std::vector<std::int64_t>& shot_indices,
                      const Matrix& values) {
  if (values.rows != shot_indices.size())
    throw std::invalid_argument("params csv: row count mismatch");
  if (values.cols != names.size())
    throw std::invalid_argument("params csv: name count mismatch");
  auto f = open_out(path);
  std::string line = "shot_index";
  for (const auto& n : names) {
    if (n.find(',') != std::string::npos || n.find('\n') != std::string::npos)
      throw std::invalid_argument("params csv: name '" + n + "' contains a delimiter");
    line += ',';
    line += n;
  }
  line += '\n';
  f.write(line.data(), static_cast<std::streamsize>(line.size()));
  for (std::size_t r = 0; r < values.rows; ++r) {
    line = std::to_string(shot_indices[r]);
    for (std::size_t c = 0; c < values.cols; ++c) {
      line += ',';
      line += format_double(values(r, c));
    }
    line += '\n';
    f.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  finish_write(f, path);
}

ParamsCsv read_params_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error(path.string() + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "shot_index")
    throw std::runtime_error(path.string() + ": first column must be shot_index");
  ParamsCsv out;
  out.names.assign(header.begin() + 1, header.end());
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path.string() + ": row " + std::to_string(rows + 1) +
                               " has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(header.size()));
    out.shot_indices.push_back(parse_i64(cells[0]));
    for (std::size_t c = 1; c < cells.size(); ++c) flat.push_back(parse_double(cells[c]));
    ++rows;
  }
  out.values = Matrix(rows, out.names.size());
  out.values.data = std::move(flat);
  return out;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds,
                   const std::string& provenance) {
  ds.validate();
  std::filesystem::create_directories(dir);

  Matrix params(ds.size(), ds.d_in());
  Matrix profiles(ds.size(), ds.d_out());
  std::vector<std::int64_t> shots(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const Sample& s = ds.samples[r];
    shots[r] = s.shot_index;
    for (std::size_t c = 0; c < params.cols; ++c) params(r, c) = s.params.values[c];
    for (std::size_t c = 0; c < profiles.cols; ++c) profiles(r, c) = s.profile.power[c];
  }
  write_params_csv(dir / "params.csv", ds.param_names, shots, params);
  write_matrix_file(dir / "profiles.bin", profiles);

  json meta;
  meta["format_version"] = 1;
  meta["d_in"] = ds.d_in();
  meta["d_out"] = ds.d_out();
  meta["n_samples"] = ds.size();
  meta["time_bin_fs"] = ds.time_bin_fs;
  meta["provenance"] = provenance;
  save_json(dir / "meta.json", meta);
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const json meta = load_json(dir / "meta.json");
  ParamsCsv params = read_params_csv(dir / "params.csv");
  Matrix profiles = read_matrix_file(dir / "profiles.bin");

  if (profiles.rows != params.values.rows)
    throw std::runtime_error(dir.string() + ": params.csv has " +
                             std::to_string(params.values.rows) +
                             " rows but profiles.bin has " +
                             std::to_string(profiles.rows));
  if (meta.at("d_in").get<std::size_t>() != params.values.cols)
    throw std::runtime_error(dir.string() + ": meta d_in disagrees with params.csv");
  if (meta.at("d_out").get<std::size_t>() != profiles.cols)
    throw std::runtime_error(dir.string() + ": meta d_out disagrees with profiles.bin");

  Dataset ds;
  ds.param_names = params.names;
  ds.time_bin_fs = meta.at("time_bin_fs").get<double>();
  ds.samples.resize(profiles.rows);
  for (std::size_t r = 0; r < profiles.rows; ++r) {
    Sample& s = ds.samples[r];
    s.shot_index = params.shot_indices[r];
    s.params.values.assign(params.values.row(r), params.values.row(r) + params.values.cols);
    s.profile.power.assign(profiles.row(r), profiles.row(r) + profiles.cols);
    s.profile.time_bin_fs = ds.time_bin_fs;
  }
  ds.validate();
  return ds;
}

void write_images_bundle(const std::filesystem::path& dir, const ImagesBundle& b) {
  if (b.images.empty()) throw std::invalid_argument("images bundle: no images");
  if (b.shot_indices.size() != b.images.size() || b.params.rows != b.images.size())
    throw std::invalid_argument("images bundle: per-shot arrays disagree in length");
  std::filesystem::create_directories(dir);

  const PhaseImage& first = b.images.front();
  json index;
  index["format_version"] = 1;
  index["time_calibration_fs_per_px"] = first.time_calibration_fs_per_px;
  index["energy_calibration_kev_per_px"] = first.energy_calibration_kev_per_px;
  index["energy_axis"] = first.energy_axis;
  json shots = json::array();
  for (std::size_t i = 0; i < b.images.size(); ++i) {
    const PhaseImage& img = b.images[i];
    if (img.energy_axis != first.energy_axis ||
        img.time_calibration_fs_per_px != first.time_calibration_fs_per_px ||
        img.energy_calibration_kev_per_px != first.energy_calibration_kev_per_px)
      throw std::invalid_argument("images bundle: shots must share axis and calibration");
    char name[32];
    std::snprintf(name, sizeof(name), "shot_%06zu.bin", i);
    write_matrix_file(dir / name, img.charge);
    shots.push_back({{"shot_index", b.shot_indices[i]}, {"file", name}});
  }
  index["shots"] = shots;
  save_json(dir / "images.json", index);
  write_params_csv(dir / "params.csv", b.param_names, b.shot_indices, b.params);
}

ImagesBundle read_images_bundle(const std::filesystem::path& dir) {
  const json index = load_json(dir / "images.json");
  ParamsCsv params = read_params_csv(dir / "params.csv");

  ImagesBundle b;
  b.param_names = params.names;
  b.params = std::move(params.values);

  const auto axis = index.at("energy_axis").get<std::vector<double>>();
  const double fs_per_px = index.at("time_calibration_fs_per_px").get<double>();
  const double kev_per_px = index.at("energy_calibration_kev_per_px").get<double>();

  const json& shots = index.at("shots");
  if (shots.size() != b.params.rows)
    throw std::runtime_error(dir.string() + ": images.json lists " +
                             std::to_string(shots.size()) + " shots but params.csv has " +
                             std::to_string(b.params.rows) + " rows");
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const json& entry = shots[i];
    const auto declared = entry.at("shot_index").get<std::int64_t>();
    if (declared != params.shot_indices[i])
      throw std::runtime_error(dir.string() + ": shot_index mismatch at entry " +
                               std::to_string(i));
    PhaseImage img;
    img.charge = read_matrix_file(dir / entry.at("file").get<std::string>());
    img.energy_axis = axis;
    img.time_calibration_fs_per_px = fs_per_px;
    img.energy_calibration_kev_per_px = kev_per_px;
    b.images.push_back(std::move(img));
  }
  b.shot_indices = std::move(params.shot_indices);
  return b;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const MlpModel& m = ckpt.model;
  if (!m.finite()) throw std::invalid_argument("checkpoint: non-finite weights");
  if (ckpt.label_mean.size() != m.d_out)
    throw std::invalid_argument("checkpoint: label mean width mismatch");

  json header;
  header["format_version"] = 1;
  header["d_in"] = m.d_in;
  header["hidden"] = m.hidden;
  header["d_out"] = m.d_out;
  header["activation"] = to_string(m.activation);
  header["dropout_p"] = ckpt.dropout_p;
  header["time_bin_fs"] = ckpt.time_bin_fs;
  header["label_mean"] = ckpt.label_mean;
  if (ckpt.standardization) {
    header["standardization"] = {{"mean", ckpt.standardization->mean},
                                 {"stddev", ckpt.standardization->stddev}};
  } else {
    header["standardization"] = nullptr;
  }
  header["train"] = ckpt.train_meta.is_null() ? json::object() : ckpt.train_meta;

  const std::string text = header.dump(2);
  auto f = open_out(path);
  f.write("VPRDCKP1", 8);
  put_u64(f, text.size());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  Matrix b1(1, m.hidden);
  b1.data = m.b1;
  Matrix b2(1, m.d_out);
  b2.data = m.b2;
  write_matrix_payload(f, m.w1);
  write_matrix_payload(f, b1);
  write_matrix_payload(f, m.w2);
  write_matrix_payload(f, b2);
  finish_write(f, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  auto f = open_in(path);
  char magic[8];
  f.read(magic, 8);
  if (f.gcount() != 8 || std::memcmp(magic, "VPRDCKP1", 8) != 0)
    throw std::runtime_error(path.string() + ": not a checkpoint file (bad magic)");
  const std::uint64_t len = get_u64(f, path.string());
  if (len > (1u << 30))
    throw std::runtime_error(path.string() + ": implausible header length");
  std::string text(len, '\0');
  f.read(text.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint64_t>(f.gcount()) != len)
    throw std::runtime_error(path.string() + ": truncated JSON header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }

  Checkpoint ckpt;
  MlpModel& m = ckpt.model;
  m.d_in = header.at("d_in").get<std::size_t>();
  m.hidden = header.at("hidden").get<std::size_t>();
  m.d_out = header.at("d_out").get<std::size_t>();
  m.activation = activation_from_string(header.at("activation").get<std::string>());
  ckpt.dropout_p = header.at("dropout_p").get<double>();
  ckpt.time_bin_fs = header.at("time_bin_fs").get<double>();
  ckpt.label_mean = header.at("label_mean").get<std::vector<double>>();
  if (!header.at("standardization").is_null()) {
    Standardization st;
    st.mean = header["standardization"].at("mean").get<std::vector<double>>();
    st.stddev = header["standardization"].at("stddev").get<std::vector<double>>();
    if (st.mean.size() != m.d_in || st.stddev.size() != m.d_in)
      throw std::runtime_error(path.string() + ": standardization width mismatch");
    ckpt.standardization = std::move(st);
  }
  ckpt.train_meta = header.value("train", json::object());

  m.w1 = read_matrix_payload(f, path.string() + " (w1)");
  Matrix b1 = read_matrix_payload(f, path.string() + " (b1)");
  m.w2 = read_matrix_payload(f, path.string() + " (w2)");
  Matrix b2 = read_matrix_payload(f, path.string() + " (b2)");
  char extra;
  if (f.read(&extra, 1), f.gcount() != 0)
    throw std::runtime_error(path.string() + ": trailing bytes after weights");

  if (m.w1.rows != m.hidden || m.w1.cols != m.d_in || b1.cols != m.hidden ||
      m.w2.rows != m.d_out || m.w2.cols != m.hidden || b2.cols != m.d_out ||
      b1.rows != 1 || b2.rows != 1)
    throw std::runtime_error(path.string() + ": weight shapes disagree with header");
  m.b1 = std::move(b1.data);
  m.b2 = std::move(b2.data);
  if (ckpt.label_mean.size() != m.d_out)
    throw std::runtime_error(path.string() + ": label mean width mismatch");
  if (!m.finite())
    throw std::runtime_error(path.string() + ": non-finite weights");
  return ckpt;
}

}  // namespace vprd
