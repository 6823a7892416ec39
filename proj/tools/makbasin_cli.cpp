#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "makbasin/makbasin.hpp"

namespace fs = std::filesystem;
using namespace makbasin;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kInapplicable = 4 };

struct Failure {
  int exit_code;
  ErrorCode code;
  std::string message;
};

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kStepMisalignment: return kUsage;
    case ErrorCode::kNoSaddle:
    case ErrorCode::kSideAssignmentConflict:
    case ErrorCode::kSaddleNotOnCurve:
    case ErrorCode::kEmptyLevelSet:
    case ErrorCode::kAllExcluded: return kInapplicable;
    default: return kData;
  }
}

std::string json_escape(const std::string& s) { return io::Json(s).dump(); }

int report_failure(const std::string& command, const Failure& f) {
  std::cerr << "{\"command\":" << json_escape(command) << ",\"error\":" << json_escape(std::string(to_string(f.code)))
            << ",\"exit\":" << f.exit_code << ",\"message\":" << json_escape(f.message) << "}\n";
  return f.exit_code;
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

/// Loads and validates the config; every failure here is a usage error.
RunConfig load(const Common& c) {
  try {
    if (!fs::exists(c.config)) throw Error(ErrorCode::kConfig, "config file not found: " + c.config);
    RunConfig cfg = load_config(c.config);
    if (!c.out.empty()) cfg.output = c.out;
    if (c.seed) cfg.seed = *c.seed;
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    throw Failure{kUsage, e.code(), e.what()};
  } catch (const std::exception& e) {
    throw Failure{kUsage, ErrorCode::kConfig, e.what()};
  }
}

void echo_config(const RunConfig& cfg) { io::write_text(cfg.output / "config.json", io::dump(to_json(cfg))); }

std::string complex_text(Complex z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f%+.6fi", z.real(), z.imag());
  return buf;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto net = cfg.network();
  const auto snaps = generate_snapshots(net, cfg.n_runs, cfg.points_per_run, cfg.dt, cfg.integrator(), cfg.seed, cfg.design);
  echo_config(cfg);
  io::write_snapshots(cfg.output / "snapshots.csv", snaps);
  // Reduced states imply x3 = 1 - x1 - x2, so drift shows as x1 + x2 > 1.
  double drift = 0.0;
  for (const auto* m : {&snaps.x, &snaps.y}) {
    for (Eigen::Index p = 0; p < m->cols(); ++p) {
      const double total = m->col(p).sum();
      drift = std::max(drift, net.species_count() == 2 ? std::max(0.0, total - 1.0) : std::abs(1.0 - total));
    }
  }
  std::printf("pairs: %ld\n", static_cast<long>(snaps.size()));
  std::printf("simplex drift (max): %.3e\n", drift);
  std::printf("wrote: %s\n", (cfg.output / "snapshots.csv").generic_string().c_str());
  return kOk;
}

int cmd_fit(const RunConfig& cfg, const std::string& snapshots_file) {
  const fs::path path = snapshots_file.empty() ? cfg.output / "snapshots.csv" : fs::path(snapshots_file);
  const auto snaps = io::read_snapshots(path);
  const auto dict = cfg.make_dictionary(static_cast<int>(snaps.state_dim()));
  FitOptions opts;
  opts.solver = cfg.solver;
  const auto model = fit(snaps, dict, opts);
  echo_config(cfg);
  io::write_model(cfg.output / "model.json", model);
  std::printf("N_k: %ld\n", static_cast<long>(dict.size()));
  std::printf("rank: %ld%s\n", static_cast<long>(model.diagnostics.gram_rank),
              model.diagnostics.rank_deficient ? " (rank deficient)" : "");
  std::printf("top eigenvalues:");
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(5, model.size()); ++k) {
    std::printf(" %s", complex_text(model.eigenvalues(k)).c_str());
  }
  std::printf("\nwrote: %s\n", (cfg.output / "model.json").generic_string().c_str());
  return kOk;
}

int cmd_basin(const RunConfig& cfg, const std::string& model_file) {
  const fs::path path = model_file.empty() ? cfg.output / "model.json" : fs::path(model_file);
  const auto model = io::read_model(path);
  const auto net = cfg.network();
  const BasinConfig bc = cfg.basin();
  const auto report = run_basin_pipeline(model, net, bc);
  echo_config(cfg);
  io::write_text(cfg.output / "basin_report.json", io::dump(io::to_json(report)));
  io::write_text(cfg.output / "boundary.csv", io::polyline_csv(report.boundary.boundary));
  for (std::size_t k = 0; k < report.boundary.auxiliary.size(); ++k) {
    io::write_text(cfg.output / ("boundary_aux_" + std::to_string(k) + ".csv"),
                   io::polyline_csv(report.boundary.auxiliary[k]));
  }
  io::write_text(cfg.output / "eigenfunction_grid.csv",
                 io::eigenfunction_grid_csv(model.dictionary, report.main.function, bc.level_set));
  io::write_text(cfg.output / "classified_ics.csv", io::classified_ics_csv(report));
  std::printf("equilibria: %zu (saddle %zu, designated stable %zu)\n", report.equilibria.size(), report.saddle,
              report.designated);
  for (const auto& e : report.equilibria) {
    std::printf("  (%.6f, %.6f) %s\n", e.location(0), e.location(1), to_string(e.cls).c_str());
  }
  std::printf("main eigenvalue: %s\n", complex_text(report.main.function.eigenvalue).c_str());
  std::printf("margin: %.6f\n", report.margin);
  std::printf("agreement: %.4f (%d/%zu, unresolved %d)\n", report.classified.agreement_rate, report.classified.agreements,
              report.classified.entries.size(), report.classified.unresolved);
  std::printf("boundary sharpness: %.4f\n", report.theorem_check.sharpness);
  return kOk;
}

int cmd_bifurcation(const RunConfig& cfg) {
  ReplicatorParams p = cfg.replicator;
  const auto sweep = bifurcation_sweep(p, cfg.g_min, cfg.g_max, cfg.steps);
  echo_config(cfg);
  io::write_text(cfg.output / "bifurcation.csv", io::sweep_csv(sweep));
  io::write_text(cfg.output / "bifurcation.json", io::dump(io::to_json(sweep)));
  std::printf("rows: %zu\n", sweep.rows.size());
  if (sweep.existence_lo) std::printf("nontrivial branches appear at g = %.9f\n", *sweep.existence_lo);
  if (sweep.existence_hi) std::printf("nontrivial branches vanish at g = %.9f\n", *sweep.existence_hi);
  for (const auto& h : sweep.hopf) {
    std::printf("hopf crossing on branch %d at g = %.9f (frequency %.6f)\n", h.branch, h.g, h.frequency);
  }
  return kOk;
}

std::string summary(const RunConfig& cfg) {
  const fs::path dir = cfg.output;
  for (const char* name : {"model.json", "basin_report.json"}) {
    if (!fs::exists(dir / name)) throw Failure{kUsage, ErrorCode::kIo, "missing artifact " + (dir / name).generic_string()};
  }
  const auto model = io::read_json(dir / "model.json");
  const auto basin = io::read_json(dir / "basin_report.json");
  std::ostringstream out;
  char buf[256];

  out << "== Parameters\n";
  std::snprintf(buf, sizeof buf, "k1 = %.6g, k2 = %.6g, g = %.6g\n", cfg.replicator.k1, cfg.replicator.k2, cfg.replicator.g);
  out << buf;
  std::snprintf(buf, sizeof buf, "runs = %d x %d points, dt = %.6g, step = %.6g, seed = %llu, design = %s\n", cfg.n_runs,
                cfg.points_per_run, cfg.dt, cfg.step, static_cast<unsigned long long>(cfg.seed),
                to_string(cfg.design).c_str());
  out << buf;
  out << "dictionary = " << cfg.dictionary << " degree " << cfg.degree << ", solver = " << to_string(cfg.solver) << "\n\n";

  out << "== Equilibria\n";
  out << "  #  x1          x2          class           role     polish_dist\n";
  std::size_t k = 0;
  for (const auto& e : basin.at("equilibria")) {
    std::snprintf(buf, sizeof buf, "  %-2zu %-11.6f %-11.6f %-15s %-8s %.3e\n", k++, e.at("location")[0].get<double>(),
                  e.at("location")[1].get<double>(), e.at("class").get<std::string>().c_str(),
                  e.at("role").get<std::string>().c_str(), e.at("polish_distance").get<double>());
    out << buf;
  }
  out << "\n== Eigenvalues\n";
  const auto& re = model.at("eigenvalues").at("re");
  const auto& im = model.at("eigenvalues").at("im");
  for (std::size_t i = 0; i < re.size(); ++i) {
    const double r = re[i].get<double>();
    const double m = im[i].get<double>();
    std::snprintf(buf, sizeof buf, "  %-3zu %+.8f %+.8fi  |mu| = %.8f\n", i, r, m, std::hypot(r, m));
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  main eigenfunction: index %ld\n",
                basin.at("main_eigenfunction").at("index").get<long>());
  out << buf;

  out << "\n== Basin\n";
  const auto& c = basin.at("classification");
  std::snprintf(buf, sizeof buf, "margin = %.6f\nagreement = %.4f (%d of %d, unresolved %d)\nmisclassification = %.4f\n",
                basin.at("margin").get<double>(), c.at("agreement_rate").get<double>(), c.at("agreements").get<int>(),
                c.at("total").get<int>(), c.at("unresolved").get<int>(), c.at("misclassification_rate").get<double>());
  out << buf;
  std::snprintf(buf, sizeof buf, "saddle to curve = %.6f (cell %.6f)\n",
                basin.at("boundary").at("saddle_distance").get<double>(),
                basin.at("boundary").at("cell_size").get<double>());
  out << buf;

  out << "\n== Theorem check\n";
  const auto& t = basin.at("theorem_check");
  std::snprintf(buf, sizeof buf, "sampled = %d, skipped = %d\nsharpness = %.4f\nstable-manifold evidence = %.4f\n",
                t.at("sampled").get<int>(), t.at("skipped").get<int>(), t.at("sharpness").get<double>(),
                t.at("manifold_evidence").get<double>());
  out << buf;

  out << "\n== Files\n";
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "report.txt") files.push_back(entry.path().filename().string());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::snprintf(buf, sizeof buf, "  %-28s %10ju bytes\n", f.c_str(), static_cast<std::uintmax_t>(fs::file_size(dir / f)));
    out << buf;
  }
  return out.str();
}

int cmd_report(const RunConfig& cfg) {
  const std::string text = summary(cfg);
  io::write_text(cfg.output / "report.txt", text);
  std::fputs(text.c_str(), stdout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attraction regions of mass-action systems from Koopman eigenfunctions"};
  app.require_subcommand(1);
  Common common;
  std::string snapshots_file;
  std::string model_file;
  std::optional<double> g_min;
  std::optional<double> g_max;
  std::optional<int> steps;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", common.out, "Output directory (overrides the config)");
    sub->add_option("--seed", common.seed, "Seed (overrides the config)");
  };
  auto* simulate = app.add_subcommand("simulate", "Integrate trajectories and write snapshot pairs");
  auto* fit_cmd = app.add_subcommand("fit", "Fit the Koopman model from snapshots");
  auto* basin = app.add_subcommand("basin", "Locate equilibria and extract the attraction-region boundary");
  auto* bif = app.add_subcommand("bifurcation", "Sweep equilibria and their linearization over g");
  auto* report = app.add_subcommand("report", "Summarize the artifacts of a run");
  for (auto* sub : {simulate, fit_cmd, basin, bif, report}) add_common(sub);
  fit_cmd->add_option("--snapshots", snapshots_file, "Snapshot CSV (default: <out>/snapshots.csv)");
  basin->add_option("--model", model_file, "Model file (default: <out>/model.json)");
  bif->add_option("--g-min", g_min, "Lower end of the g range");
  bif->add_option("--g-max", g_max, "Upper end of the g range");
  bif->add_option("--steps", steps, "Number of grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = load(common);
    if (command == "bifurcation") {
      if (g_min) cfg.g_min = *g_min;
      if (g_max) cfg.g_max = *g_max;
      if (steps) cfg.steps = *steps;
      if (!(cfg.g_min > 0.0) || !(cfg.g_max > cfg.g_min) || cfg.steps < 2) {
        throw Failure{kUsage, ErrorCode::kConfig, "bifurcation range needs 0 < g_min < g_max and steps >= 2"};
      }
    }
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "fit") return cmd_fit(cfg, snapshots_file);
    if (command == "basin") return cmd_basin(cfg, model_file);
    if (command == "bifurcation") return cmd_bifurcation(cfg);
    return cmd_report(cfg);
  } catch (const Failure& f) {
    return report_failure(command, f);
  } catch (const Error& e) {
    return report_failure(command, Failure{exit_for(e.code()), e.code(), e.what()});
  } catch (const std::exception& e) {
    return report_failure(command, Failure{kData, ErrorCode::kIo, e.what()});
  }
}
