#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "zkline/acceptance.hpp"
#include "zkline/coeffs.hpp"
#include "zkline/error.hpp"
#include "zkline/io.hpp"
#include "zkline/reduction.hpp"
#include "zkline/spectral.hpp"
#include "zkline/waves2d.hpp"
#include "zkline/zk_sim.hpp"

namespace zkline::cli {

namespace {

using nlohmann::json;

// Options that are not parameters of the run.
const std::set<std::string> kNotEchoed{"help", "config", "out"};

std::string h6(double v) { return format_number(v, 6); }

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

std::string long_name(const CLI::Option* opt) {
  const auto& names = opt->get_lnames();
  return names.empty() ? std::string() : names.front();
}

// Fills options not given on the command line from a flat JSON object whose
// keys are long option names.  Unknown keys are a ConfigError.
void apply_config(CLI::App* sub, const std::string& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    CLI::Option* opt = kNotEchoed.contains(it.key()) ? nullptr : sub->get_option_no_throw("--" + it.key());
    if (opt == nullptr) throw ConfigError("unknown config key '" + it.key() + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    std::vector<json> values = it->is_array() ? it->get<std::vector<json>>() : std::vector<json>{*it};
    for (const json& v : values) {
      if (v.is_string()) {
        opt->add_result(v.get<std::string>());
      } else if (v.is_boolean()) {
        opt->add_result(v.get<bool>() ? "true" : "false");
      } else if (v.is_number_integer()) {
        opt->add_result(std::to_string(v.get<long long>()));
      } else if (v.is_number()) {
        opt->add_result(format_number(v.get<double>()));
      } else {
        throw ConfigError("config key '" + it.key() + "' has an unsupported value");
      }
    }
    opt->run_callback();
  }
}

json typed(const std::string& s) {
  const json j = json::parse(s, nullptr, false);
  if (!j.is_discarded() && (j.is_number() || j.is_boolean())) return j;
  return s;
}

// Every run parameter keyed by its long option name; feeding the result back
// through --config reproduces the run.
json echo_options(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = long_name(opt);
    if (name.empty() || kNotEchoed.contains(name)) continue;
    if (opt->get_expected_max() > 1) {
      json arr = json::array();
      for (const auto& r : opt->results()) arr.push_back(typed(r));
      j[name] = arr;
    } else if (opt->count() > 0) {
      j[name] = typed(opt->results().back());
    } else if (opt->get_expected_min() == 0) {
      j[name] = false;
    } else {
      j[name] = typed(opt->get_default_str());
    }
  }
  return j;
}

void finish_run(const fs::path& dir, const std::string& name, const CLI::App* sub,
                const std::vector<std::string>& outputs) {
  const json cfg = echo_options(sub);
  write_json(dir / "config.json", cfg);
  std::vector<std::string> all = outputs;
  all.push_back("config.json");
  write_manifest(dir, name, cfg, all);
}

// ---- coeffs ----------------------------------------------------------------

struct CoeffsArgs {
  double L = 50.0;
  std::size_t n = 4001;
  std::string accuracy = "second_order";
  bool dump = false;
};

int cmd_coeffs(const CoeffsArgs& a, const fs::path& dir, const CLI::App* sub, std::ostream& out) {
  const Grid1D grid(a.L, a.n);
  const SolveAccuracy acc = a.accuracy == "richardson" ? SolveAccuracy::richardson : SolveAccuracy::second_order;
  const NormalFormCoeffs k = compute_coefficients(grid, acc);
  std::vector<std::string> outputs{"coeffs.json"};
  write_json(dir / "coeffs.json", k.to_json());
  if (a.dump) {
    write_text(dir / "w0.csv", solve_w0(grid, acc).to_csv());
    write_text(dir / "w2.csv", solve_w2(grid, acc).to_csv());
    write_text(dir / "w2tilde.csv", solve_w2tilde(grid, acc).to_csv());
    outputs.insert(outputs.end(), {"w0.csv", "w2.csv", "w2tilde.csv"});
  }
  finish_run(dir, "coeffs", sub, outputs);
  out << k.to_json().dump(2) << '\n';
  return kOk;
}

// ---- spectrum --------------------------------------------------------------

struct SpectrumArgs {
  int k = 1;
  std::vector<double> c;
  double c_min = 0.0;
  double c_max = 0.0;
  int c_steps = 0;
  double L = 1600.0;
  std::size_t n = 32001;
  double mu = 0.0;
  double tolerance = 1e-6;
};

int cmd_spectrum(const SpectrumArgs& a, const fs::path& dir, const CLI::App* sub, std::ostream& out) {
  SpectralConfig base;
  base.grid = Grid1D(a.L, a.n);
  base.k = a.k;
  base.mu = a.mu;
  base.tolerance = a.tolerance;
  base.validate();

  std::vector<double> speeds = a.c;
  if (speeds.empty()) {
    const double ck = threshold_speed(a.k);
    const double lo = a.c_steps > 0 ? a.c_min : ck - 0.01;
    const double hi = a.c_steps > 0 ? a.c_max : ck + 0.03;
    const int m = a.c_steps > 0 ? a.c_steps : 5;
    if (m < 2 || !(hi > lo)) throw ConfigError("c range needs c-max > c-min and at least 2 steps");
    for (int i = 0; i < m; ++i) speeds.push_back(lo + (hi - lo) * i / (m - 1));
  }
  std::sort(speeds.begin(), speeds.end());

  CsvWriter csv({"c", "unstable", "lambda", "residual"});
  std::vector<bool> unstable;
  for (double c : speeds) {
    SpectralConfig cfg = base;
    cfg.c = c;
    const SpectralResult r = unstable_eigenvalue(cfg);
    const bool u = r.unstable.has_value();
    unstable.push_back(u);
    csv.add_row({c, u ? 1.0 : 0.0, u ? r.unstable->lambda : 0.0, u ? r.unstable->residual : 0.0});
    if (u) {
      out << "c = " << h6(c) << ": lambda = " << h6(r.unstable->lambda) << ", residual " << h6(r.unstable->residual)
          << '\n';
    } else {
      out << "c = " << h6(c) << ": no unstable eigenvalue\n";
    }
  }
  csv.write(dir / "spectrum.csv");

  json summary = {{"k", a.k}, {"c_k", threshold_speed(a.k)}, {"points", speeds.size()},
                  {"unstable_points", std::count(unstable.begin(), unstable.end(), true)},
                  {"threshold_estimate", nullptr}};
  for (std::size_t i = 1; i < speeds.size(); ++i) {
    if (!unstable[i - 1] && unstable[i]) {
      const ThresholdBracket br = threshold_bisection(base, speeds[i - 1], speeds[i], 1e-4);
      summary["threshold_estimate"] = br.estimate();
      summary["threshold_bracket"] = {br.stable, br.unstable};
      out << "threshold estimate " << h6(br.estimate()) << " (c_k = " << h6(threshold_speed(a.k)) << ")\n";
      break;
    }
  }
  write_json(dir / "summary.json", summary);
  finish_run(dir, "spectrum", sub, {"spectrum.csv", "summary.json"});
  return kOk;
}

// ---- wave ------------------------------------------------------------------

struct WaveArgs {
  double c = 0.21;
  double Lx = 200.0;
  std::size_t nx = 1024;
  std::size_t ny = 32;
  double guess = 0.0;
  std::vector<double> branch;
  double tolerance = 1e-10;
};

int cmd_wave(const WaveArgs& a, const fs::path& dir, const CLI::App* sub, std::ostream& out) {
  const Grid2D grid(a.Lx, a.nx, a.ny);
  const NormalFormCoeffs k = compute_coefficients();
  WaveSolverOptions opts;
  opts.tolerance = a.tolerance;
  const double b0 = a.guess > 0.0 ? a.guess : predicted_amplitude(a.c, k);
  const ModulatedWave w = solve_modulated_wave(a.c, wave_guess(grid, b0), opts);
  write_raster(dir / "wave", w.field, {{"c", w.c}, {"b_extracted", w.b_extracted}, {"residual", w.residual_norm}});

  CsvWriter csv({"c", "b", "residual"});
  csv.add_row({w.c, w.b_extracted, w.residual_norm});
  out << "c " << h6(w.c) << "  b " << h6(w.b_extracted) << "  residual " << h6(w.residual_norm) << "  newton "
      << w.newton_iters << (w.branch_lost ? "  (line soliton)" : "") << '\n';
  if (!a.branch.empty()) {
    for (const ModulatedWave& p : compute_branch(a.branch, grid, k, opts)) {
      csv.add_row({p.c, p.b_extracted, p.residual_norm});
      out << "c " << h6(p.c) << "  b " << h6(p.b_extracted) << "  residual " << h6(p.residual_norm) << '\n';
    }
  }
  csv.write(dir / "branch.csv");
  finish_run(dir, "wave", sub, {"wave.bin", "wave.json", "branch.csv"});
  return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  double c0 = 0.21;
  double eps = 0.03;
  double Lx = 200.0;
  std::size_t nx = 1024;
  std::size_t ny = 32;
  double dt = 5e-4;
  double t_end = 10.0;
  std::size_t stride = 0;
  bool co_moving = false;
  bool filter = false;
  bool no_dealias = false;
  std::string integrator = "etd_rk4";
  double sponge_width = 0.0;
  double sponge_rate = 0.0;
};

int cmd_simulate(const SimulateArgs& a, const fs::path& dir, const CLI::App* sub, std::ostream& out) {
  SimConfig cfg;
  cfg.grid = Grid2D(a.Lx, a.nx, a.ny);
  cfg.dt = a.dt;
  cfg.t_end = a.t_end;
  cfg.snapshot_stride = a.stride;
  cfg.integrator = parse_integrator(a.integrator);
  cfg.frame_velocity = a.co_moving ? 4.0 * a.c0 : 0.0;
  cfg.filter = a.filter;
  cfg.dealias = !a.no_dealias;
  cfg.sponge_width = a.sponge_width;
  cfg.sponge_rate = a.sponge_rate;
  cfg.validate();

  Simulator sim(cfg);
  sim.reset(init_perturbed_soliton(a.c0, a.eps, cfg.grid).u);
  CsvWriter diag({"t", "E", "Q", "mode1"});
  std::size_t count = 0;
  auto on_snapshot = [&](const SimState& s) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "u_%06zu", count++);
    write_raster(dir / "snapshots" / stem, s.u,
                 {{"t", s.t}, {"step", s.step}, {"energy", s.energy}, {"momentum", s.momentum}, {"c0", a.c0},
                  {"eps", a.eps}, {"frame_velocity", cfg.frame_velocity}});
    diag.add_row({s.t, s.energy, s.momentum, transverse_mode_norm(s.u, 1)});
  };
  std::string failure;
  try {
    sim.run(on_snapshot);
  } catch (const Error& e) {
    failure = e.what();
  }
  diag.write(dir / "diagnostics.csv");
  write_json(dir / "simulation.json", cfg.to_json());
  finish_run(dir, "simulate", sub, {"snapshots", "diagnostics.csv", "simulation.json"});
  out << count << " snapshots, " << sim.step_count() << " steps, t = " << h6(sim.time()) << '\n';
  if (!failure.empty()) throw Error("simulation aborted at t = " + h6(sim.time()) + ": " + failure);
  return kOk;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
  std::string dir;
  double epsilon = 0.0;
  double transient = 10.0;
  double half_width = 50.0;
  double tail_fraction = 0.1;
  double fit_fraction = 0.25;
};

int cmd_compare(const CompareArgs& a, const fs::path& dir, const CLI::App* sub, std::ostream& out) {
  const fs::path snaps = fs::path(a.dir) / "snapshots";
  if (!fs::is_directory(snaps)) throw ConfigError("no snapshots directory in " + a.dir);
  std::vector<fs::path> stems;
  for (const auto& e : fs::directory_iterator(snaps)) {
    if (e.path().extension() == ".json") stems.push_back(e.path().parent_path() / e.path().stem());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw ConfigError("no snapshots in " + snaps.string());

  DecomposeOptions dopts;
  dopts.half_width = a.half_width;
  const double velocity = read_json(fs::path(stems.front()) += ".json").at("frame_velocity").get<double>();
  Tracker tracker(velocity, dopts);
  std::vector<double> momenta;
  Field2D last;
  double t_last = 0.0;
  for (const auto& stem : stems) {
    Raster r = read_raster(stem);
    const double t = r.meta.at("t").get<double>();
    if (!tracker.add(t, r.field)) break;
    momenta.push_back(r.meta.at("momentum").get<double>());
    last = std::move(r.field);
    t_last = t;
  }
  const ModulationTrack track = tracker.finish();

  CompareOptions copts;
  copts.epsilon = a.epsilon;
  copts.transient = a.transient;
  copts.tail_fraction = a.tail_fraction;
  copts.fit_fraction = a.fit_fraction;
  const NormalFormCoeffs k = compute_coefficients();
  const CompareReport rep = compare(track, k, momenta, copts);

  CsvWriter tcsv({"t", "a", "c", "re_b", "im_b", "v_norm", "r1", "r2", "r3", "r4"});
  CsvWriter ncsv({"t", "re_b", "im_b", "abs_b"});
  for (std::size_t j = 0; j < track.size(); ++j) {
    const ModulationFrame& f = track.frames[j];
    const auto& res = f.constraint_residuals;
    tcsv.add_row({f.t, f.a, f.c, f.b.real(), f.b.imag(), f.v_norm, res[0], res[1], res[2], res[3]});
    const auto b = rep.nf.b[j];
    ncsv.add_row({f.t, b.real(), b.imag(), std::abs(b)});
  }
  tcsv.write(dir / "track.csv");
  ncsv.write(dir / "nf.csv");

  // projection-window sensitivity on the last tracked frame
  DecomposeOptions wide = dopts;
  wide.half_width = std::min(2.0 * a.half_width, 0.5 * last.grid().lx());
  const ModulationFrame fw = decompose_frame(last, t_last, velocity, track.frames.back(), wide);
  const double bref = std::abs(track.frames.back().b);
  const double window_change = bref > 0.0 ? std::abs(std::abs(fw.b) - bref) / bref : std::abs(fw.b);

  json report = rep.to_json();
  report["track"] = track.summary();
  report["window_sensitivity"] = {{"half_width", wide.half_width}, {"relative_change_b", window_change}};
  report["options"] = {{"epsilon", copts.epsilon},         {"transient", copts.transient},
                       {"tail_fraction", copts.tail_fraction}, {"fit_fraction", copts.fit_fraction},
                       {"saturation_margin", copts.saturation_margin}, {"half_width", dopts.half_width},
                       {"decompose_tolerance", dopts.tolerance}};
  report["source"] = a.dir;
  write_json(dir / "report.json", report);
  finish_run(dir, "compare", sub, {"track.csv", "nf.csv", "report.json"});

  out << "frames                 " << track.size() << (track.truncated ? " (truncated)" : "") << '\n'
      << "c+ - c*                " << h6(rep.params.c_plus - rep.params.c_star) << '\n'
      << "max dev / eps^2        " << h6(rep.max_normalized_deviation) << '\n'
      << "saturation ratio       " << h6(rep.saturation_ratio) << (rep.saturated ? "" : " (not saturated)") << '\n'
      << "rates PDE / NF         " << h6(rep.pde_rate) << " / " << h6(rep.nf_rate) << '\n'
      << "h-dot / |b|^2          " << h6(rep.h_dot_ratio) << '\n'
      << "closure spread         " << h6(rep.closure_spread) << " (full " << h6(rep.closure_spread_full) << ")\n"
      << "drift ratio            " << h6(rep.drift_ratio) << '\n'
      << "max phase              " << h6(rep.max_phase) << '\n';
  return kOk;
}

// ---- verify-all ------------------------------------------------------------

int cmd_verify(const std::vector<int>& only, std::ostream& out) {
  const auto results = run_acceptance(out, std::set<int>(only.begin(), only.end()));
  int failed = 0;
  out << "\ncriterion  result  seconds\n";
  for (const auto& r : results) {
    char line[96];
    std::snprintf(line, sizeof line, "%9d  %-6s  %7.1f\n", r.id, r.pass ? "PASS" : "FAIL", r.seconds);
    out << line;
    failed += r.pass ? 0 : 1;
  }
  return failed == 0 ? kOk : kModuleError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for transverse instability of ZK line solitons", "zkline"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string config, out_dir = "zkline_out";
  auto common = [&](CLI::App* s) {
    s->add_option("--config", config, "JSON file of option values (command-line flags win)");
    s->add_option("--out", out_dir, "output directory");
  };

  CoeffsArgs ca;
  CLI::App* coeffs = app.add_subcommand("coeffs", "normal-form coefficients");
  common(coeffs);
  coeffs->add_option("--L", ca.L, "half-width of the xi grid");
  coeffs->add_option("--n", ca.n, "grid nodes (odd)");
  coeffs->add_option("--accuracy", ca.accuracy)->check(CLI::IsMember({"second_order", "richardson"}));
  coeffs->add_flag("--dump-fields", ca.dump, "write w0, w2, w2tilde as CSV");

  SpectrumArgs sa;
  CLI::App* spectrum = app.add_subcommand("spectrum", "unstable eigenvalue of the transverse linearization");
  common(spectrum);
  spectrum->add_option("--k", sa.k, "transverse wavenumber");
  spectrum->add_option("--c", sa.c, "speeds (repeatable)")->expected(1, 1000);
  spectrum->add_option("--c-min", sa.c_min);
  spectrum->add_option("--c-max", sa.c_max);
  spectrum->add_option("--c-steps", sa.c_steps);
  spectrum->add_option("--L", sa.L);
  spectrum->add_option("--n", sa.n);
  spectrum->add_option("--mu", sa.mu, "exponential weight");
  spectrum->add_option("--tolerance", sa.tolerance);

  WaveArgs wa;
  CLI::App* wave = app.add_subcommand("wave", "modulated line wave by Newton iteration");
  common(wave);
  wave->add_option("--c", wa.c, "wave speed");
  wave->add_option("--Lx", wa.Lx);
  wave->add_option("--nx", wa.nx);
  wave->add_option("--ny", wa.ny);
  wave->add_option("--guess", wa.guess, "initial amplitude b0 (0: predicted)");
  wave->add_option("--branch", wa.branch, "additional speeds for the branch table")->expected(1, 1000);
  wave->add_option("--tolerance", wa.tolerance);

  SimulateArgs ma;
  CLI::App* simulate = app.add_subcommand("simulate", "time integration from a perturbed line soliton");
  common(simulate);
  simulate->add_option("--c0", ma.c0);
  simulate->add_option("--eps", ma.eps);
  simulate->add_option("--Lx", ma.Lx);
  simulate->add_option("--nx", ma.nx);
  simulate->add_option("--ny", ma.ny);
  simulate->add_option("--dt", ma.dt);
  simulate->add_option("--t-end", ma.t_end);
  simulate->add_option("--stride", ma.stride, "steps between snapshots (0: first and last)");
  simulate->add_flag("--co-moving", ma.co_moving, "frame moving at 4 c0");
  simulate->add_flag("--filter", ma.filter, "exponential filter on the top 5% of modes");
  simulate->add_flag("--no-dealias", ma.no_dealias);
  simulate->add_option("--integrator", ma.integrator)->check(CLI::IsMember({"etd_rk4", "if_rk4"}));
  simulate->add_option("--sponge-width", ma.sponge_width);
  simulate->add_option("--sponge-rate", ma.sponge_rate);

  CompareArgs pa;
  CLI::App* cmp = app.add_subcommand("compare", "modulation track of a simulation against the normal form");
  common(cmp);
  cmp->add_option("--dir", pa.dir, "simulation output directory")->required();
  cmp->add_option("--epsilon", pa.epsilon, "normalization (0: initial |b|)");
  cmp->add_option("--transient", pa.transient);
  cmp->add_option("--half-width", pa.half_width, "projection window");
  cmp->add_option("--tail-fraction", pa.tail_fraction);
  cmp->add_option("--fit-fraction", pa.fit_fraction);

  std::vector<int> only;
  CLI::App* verify = app.add_subcommand("verify-all", "acceptance checks, one line per criterion");
  verify->add_option("--only", only, "criterion ids")->expected(1, 9)->check(CLI::Range(1, 9));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    CLI::App* sub = app.get_subcommands().front();
    if (!config.empty()) apply_config(sub, config);
    const fs::path dir = out_dir;
    if (sub == coeffs) return cmd_coeffs(ca, dir, sub, out);
    if (sub == spectrum) return cmd_spectrum(sa, dir, sub, out);
    if (sub == wave) return cmd_wave(wa, dir, sub, out);
    if (sub == simulate) return cmd_simulate(ma, dir, sub, out);
    if (sub == cmp) return cmd_compare(pa, dir, sub, out);
    return cmd_verify(only, out);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kModuleError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kModuleError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace zkline::cli
