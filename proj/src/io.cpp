#include "zkline/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "zkline/error.hpp"

namespace zkline {

namespace {

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  ensure_parent(path);
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("csv has no column '" + name + "'");
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw ConfigError("csv header is empty");
}

void CsvWriter::add_row(std::span<const double> row) {
  if (row.size() != header_.size()) throw ConfigError("csv row width differs from the header");
  rows_.emplace_back(row.begin(), row.end());
}

std::string CsvWriter::str() const {
  std::string s;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) s += ',';
    s += header_[i];
  }
  s += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_number(row[i]);
    }
    s += '\n';
  }
  return s;
}

void CsvWriter::write(const fs::path& path) const {
  auto out = open_out(path);
  out << str();
  if (!out) throw Error("write failed: " + path.string());
}

CsvTable read_csv(const fs::path& path) {
  auto in = open_in(path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty csv: " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw ConfigError("ragged csv row in " + path.string());
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw ConfigError("non-numeric csv cell '" + c + "' in " + path.string());
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_raster(const fs::path& stem, const Field2D& f, const nlohmann::json& meta) {
  fs::path bin = stem;
  bin += ".bin";
  fs::path side = stem;
  side += ".json";
  {
    auto out = open_out(bin, std::ios::out | std::ios::binary);
    std::vector<char> buf(8 * f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::uint64_t w = to_little_endian(std::bit_cast<std::uint64_t>(f[i]));
      std::memcpy(buf.data() + 8 * i, &w, 8);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("write failed: " + bin.string());
  }
  nlohmann::json j = f.grid().to_json();
  j["format"] = "float64-le-row-major";
  for (auto it = meta.begin(); it != meta.end(); ++it) j[it.key()] = it.value();
  write_json(side, j);
}

Raster read_raster(const fs::path& stem) {
  fs::path bin = stem;
  bin += ".bin";
  fs::path side = stem;
  side += ".json";
  Raster r;
  r.meta = read_json(side);
  const Grid2D g = Grid2D::from_json(r.meta);
  auto in = open_in(bin, std::ios::in | std::ios::binary);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() != 8 * g.size()) throw ConfigError("raster size disagrees with its sidecar: " + bin.string());
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t w = 0;
    std::memcpy(&w, buf.data() + 8 * i, 8);
    v[i] = std::bit_cast<double>(to_little_endian(w));
  }
  r.field = Field2D(g, std::move(v));
  return r;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const nlohmann::json& config,
                    const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["program"] = "zkline";
  j["subcommand"] = subcommand;
  j["config"] = config;
  j["outputs"] = outputs;
  write_json(dir / "manifest.json", j);
}

}  // namespace zkline
