#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "zkline/io.hpp"

using namespace zkline;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("zkline_test_cli_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  const Result none = run({});
  CHECK(none.code == cli::kConfigError);
  const Result bad = run({"coeffs", "--bogus", "1"});
  CHECK(bad.code == cli::kConfigError);
  CHECK(bad.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).code == cli::kConfigError);
  CHECK(run({"coeffs", "--n", "abc"}).code == cli::kConfigError);
  CHECK(run({"verify-all", "--only", "12"}).code == cli::kConfigError);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("coeffs record, manifest and determinism") {
  const fs::path a = scratch("coeffs_a");
  const fs::path b = scratch("coeffs_b");
  const Result r = run({"coeffs", "--out", a.string()});
  REQUIRE(r.code == cli::kOk);
  const auto rec = nlohmann::json::parse(r.out);
  CHECK(rec.at("gamma").get<double>() < 0.0);
  CHECK(read_json(a / "coeffs.json") == rec);

  const auto manifest = read_json(a / "manifest.json");
  CHECK(manifest.at("subcommand") == "coeffs");
  const auto& cfg = manifest.at("config");
  CHECK(cfg.at("L").get<double>() == 50.0);
  CHECK(cfg.at("n").get<int>() == 4001);
  CHECK(cfg.at("accuracy") == "second_order");
  CHECK(cfg.at("dump-fields") == false);
  CHECK(read_json(a / "config.json") == cfg);

  // rerun from the echoed config reproduces every file
  REQUIRE(run({"coeffs", "--config", (a / "config.json").string(), "--out", b.string()}).code == cli::kOk);
  for (const char* f : {"coeffs.json", "config.json", "manifest.json"}) CHECK(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config file: flags win, unknown keys are rejected") {
  const fs::path d = scratch("config");
  write_json(d / "cfg.json", {{"L", 30.0}, {"n", 1001}, {"dump-fields", true}});
  REQUIRE(run({"coeffs", "--config", (d / "cfg.json").string(), "--n", "801", "--out", (d / "o").string()}).code ==
          cli::kOk);
  const auto cfg = read_json(d / "o" / "config.json");
  CHECK(cfg.at("L").get<double>() == 30.0);
  CHECK(cfg.at("n").get<int>() == 801);
  CHECK(cfg.at("dump-fields") == true);
  CHECK(read_json(d / "o" / "coeffs.json").at("grid").at("n").get<int>() == 801);
  const CsvTable w0 = read_csv(d / "o" / "w0.csv");
  CHECK(w0.rows.size() == 801);

  write_json(d / "bad.json", {{"L", 30.0}, {"nn", 1001}});
  const Result bad = run({"coeffs", "--config", (d / "bad.json").string(), "--out", (d / "p").string()});
  CHECK(bad.code == cli::kConfigError);
  CHECK(bad.err.find("nn") != std::string::npos);
  CHECK(run({"coeffs", "--config", (d / "missing.json").string()}).code == cli::kConfigError);
  fs::remove_all(d);
}

TEST_CASE("spectrum below threshold") {
  const fs::path d = scratch("spectrum");
  const Result r = run({"spectrum", "--k", "1", "--c", "0.15", "--out", d.string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("no unstable eigenvalue") != std::string::npos);
  const CsvTable t = read_csv(d / "spectrum.csv");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][t.column("unstable")] == 0.0);
  CHECK(read_json(d / "summary.json").at("threshold_estimate").is_null());
  CHECK(run({"spectrum", "--tolerance", "1e-3", "--out", d.string()}).code == cli::kConfigError);
  fs::remove_all(d);
}

TEST_CASE("spectrum sweep brackets the threshold") {
  const fs::path d = scratch("sweep");
  const Result r = run({"spectrum", "--c", "0.19", "0.21", "--out", d.string()});
  REQUIRE(r.code == cli::kOk);
  const auto s = read_json(d / "summary.json");
  CHECK(std::abs(s.at("threshold_estimate").get<double>() - 0.2) <= 1e-3);
  fs::remove_all(d);
}

TEST_CASE("wave raster and branch table") {
  const fs::path d = scratch("wave");
  const Result r = run({"wave", "--c", "0.21", "--nx", "512", "--ny", "16", "--branch", "0.205", "--out", d.string()});
  REQUIRE(r.code == cli::kOk);
  const Raster w = read_raster(d / "wave");
  CHECK(w.field.grid() == Grid2D(200.0, 512, 16));
  for (const char* key : {"Lx", "nx", "ny", "c", "b_extracted", "residual"}) CHECK(w.meta.contains(key));
  CHECK(w.meta.at("residual").get<double>() <= 1e-10);
  const CsvTable t = read_csv(d / "branch.csv");
  CHECK(t.header == std::vector<std::string>{"c", "b", "residual"});
  CHECK(t.rows.size() == 2);
  CHECK(run({"wave", "--c", "-1", "--out", d.string()}).code == cli::kConfigError);
  fs::remove_all(d);
}

TEST_CASE("simulate then compare") {
  const fs::path sim = scratch("simulate");
  const fs::path cmp = scratch("compare");
  const Result s = run({"simulate", "--c0", "0.21", "--eps", "0.03", "--nx", "512", "--ny", "8", "--dt", "0.02",
                        "--t-end", "20", "--stride", "50", "--co-moving", "--sponge-width", "30", "--sponge-rate",
                        "0.5", "--out", sim.string()});
  REQUIRE(s.code == cli::kOk);
  const CsvTable diag = read_csv(sim / "diagnostics.csv");
  CHECK(diag.header == std::vector<std::string>{"t", "E", "Q", "mode1"});
  REQUIRE(diag.rows.size() == 21);
  CHECK(diag.rows.back()[0] == doctest::Approx(20.0));
  const Raster first = read_raster(sim / "snapshots" / "u_000000");
  CHECK(first.meta.at("frame_velocity").get<double>() == doctest::Approx(0.84));
  const auto manifest = read_json(sim / "manifest.json");
  CHECK(manifest.at("config").at("co-moving") == true);
  CHECK(manifest.at("config").at("dt").get<double>() == 0.02);

  const Result c =
      run({"compare", "--dir", sim.string(), "--epsilon", "0.03", "--half-width", "30", "--out", cmp.string()});
  REQUIRE(c.code == cli::kOk);
  const CsvTable track = read_csv(cmp / "track.csv");
  CHECK(track.rows.size() == 21);
  CHECK(track.rows[0][track.column("re_b")] == doctest::Approx(0.03).epsilon(1e-6));
  CHECK(read_csv(cmp / "nf.csv").rows.size() == 21);
  const auto rep = read_json(cmp / "report.json");
  for (const char* key : {"max_normalized_deviation", "saturation_ratio", "pde_rate", "nf_rate", "h_dot_ratio",
                          "closure_spread", "drift_ratio", "window_sensitivity", "options"}) {
    CHECK(rep.contains(key));
  }
  CHECK(rep.at("window_sensitivity").at("relative_change_b").get<double>() <= 1e-4);

  CHECK(run({"compare", "--dir", (sim / "nothing").string(), "--out", cmp.string()}).code == cli::kConfigError);
  CHECK(run({"simulate", "--dt", "1.0", "--out", sim.string()}).code == cli::kConfigError);
  fs::remove_all(sim);
  fs::remove_all(cmp);
}

TEST_CASE("verify-all on a fast criterion") {
  const Result r = run({"verify-all", "--only", "2"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("[PASS] 2 sign certificates") != std::string::npos);
}
