#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

#include "zkline/error.hpp"
#include "zkline/io.hpp"

using namespace zkline;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("zkline_test_io_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(0.1, 6) == "0.1");
  CHECK(format_number(-13.99228, 6) == "-13.9923");
  CHECK(std::stod(format_number(std::nextafter(1.0, 2.0))) == std::nextafter(1.0, 2.0));
}

TEST_CASE("csv round trip") {
  const fs::path d = scratch_dir("csv");
  CsvWriter w({"t", "value"});
  w.add_row({0.0, 1.0 / 3.0});
  w.add_row({0.5, -2.5e-300});
  CHECK(w.rows() == 2);
  CHECK_THROWS_AS(w.add_row({1.0}), ConfigError);
  CHECK(w.str().substr(0, 8) == "t,value\n");
  w.write(d / "sub" / "a.csv");
  const CsvTable t = read_csv(d / "sub" / "a.csv");
  CHECK(t.header == std::vector<std::string>{"t", "value"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == 1.0 / 3.0);
  CHECK(t.rows[1][1] == -2.5e-300);
  CHECK(t.column("value") == 1);
  CHECK_THROWS_AS(t.column("missing"), ConfigError);
  CHECK_THROWS_AS(CsvWriter({}), ConfigError);

  std::ofstream(d / "bad.csv") << "a,b\n1,x\n";
  CHECK_THROWS_AS(read_csv(d / "bad.csv"), ConfigError);
  std::ofstream(d / "ragged.csv") << "a,b\n1\n";
  CHECK_THROWS_AS(read_csv(d / "ragged.csv"), ConfigError);
  CHECK_THROWS_AS(read_csv(d / "none.csv"), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("json round trip and determinism") {
  const fs::path d = scratch_dir("json");
  const nlohmann::json j = {{"gamma", -13.99228}, {"n", 4001}, {"x", 0.1}};
  write_json(d / "a.json", j);
  write_json(d / "b.json", j);
  CHECK(read_json(d / "a.json") == j);
  CHECK(read_json(d / "a.json").at("x").get<double>() == 0.1);
  CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
  std::ofstream(d / "bad.json") << "{ not json";
  CHECK_THROWS_AS(read_json(d / "bad.json"), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("raster layout and round trip") {
  const fs::path d = scratch_dir("raster");
  const Grid2D g(200.0, 8, 4);
  const Field2D f = Field2D::sample(g, [](double x, double y) { return x + 1000.0 * y; });
  write_raster(d / "u", f, {{"c", 0.21}});
  CHECK(fs::file_size(d / "u.bin") == 8 * g.size());

  // first value is u(x0, y0) = -100, second is u(x0, y1): row-major in x
  const std::string raw = slurp(d / "u.bin");
  const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());
  std::uint64_t w = 0;
  for (int i = 7; i >= 0; --i) w = (w << 8) | p[8 + i];
  CHECK(std::bit_cast<double>(w) == f.at(0, 1));

  const Raster r = read_raster(d / "u");
  CHECK(r.field.grid() == g);
  CHECK((r.field - f).max_abs() == 0.0);
  CHECK(r.meta.at("c").get<double>() == 0.21);
  CHECK(r.meta.at("nx").get<std::size_t>() == 8);

  fs::resize_file(d / "u.bin", 8);
  CHECK_THROWS_AS(read_raster(d / "u"), ConfigError);
  CHECK_THROWS_AS(read_raster(d / "missing"), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("manifest") {
  const fs::path d = scratch_dir("manifest");
  write_manifest(d, "simulate", {{"dt", 0.02}}, {"diagnostics.csv"});
  const auto m = read_json(d / "manifest.json");
  CHECK(m.at("subcommand") == "simulate");
  CHECK(m.at("config").at("dt").get<double>() == 0.02);
  CHECK(m.at("outputs").size() == 1);
  fs::remove_all(d);
}
