#pragma once

// Output formats: CSV with a header row, JSON records, float64 rasters with a
// JSON sidecar, and run manifests.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zkline/grid2d.hpp"

namespace zkline {

namespace fs = std::filesystem;

// %.{digits}g
std::string format_number(double v, int digits = 17);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a named column; ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

// Buffers rows and writes them in one go; every row must match the header.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(std::span<const double> row);
  void add_row(std::initializer_list<double> row) { add_row(std::span<const double>(row.begin(), row.size())); }
  std::string str() const;
  void write(const fs::path& path) const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

CsvTable read_csv(const fs::path& path);

// Pretty-printed with a trailing newline; parent directories are created.
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

// <stem>.bin: row-major little-endian float64, values[ix * ny + iy].
// <stem>.json: {Lx, nx, ny} merged with meta.
void write_raster(const fs::path& stem, const Field2D& f, const nlohmann::json& meta = nlohmann::json::object());

struct Raster {
  Field2D field;
  nlohmann::json meta;
};

// Throws ConfigError on a missing file or a size that disagrees with the sidecar.
Raster read_raster(const fs::path& stem);

// manifest.json: {program, subcommand, config, outputs}.  Contains no
// timestamps or host data, so identical runs write identical manifests.
void write_manifest(const fs::path& dir, const std::string& subcommand, const nlohmann::json& config,
                    const std::vector<std::string>& outputs);

}  // namespace zkline
