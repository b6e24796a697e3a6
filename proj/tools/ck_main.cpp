#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ck/errors.hpp"
#include "ck/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string hash_hex(const std::string& s) {
  std::ostringstream os;
  os << std::hex << std::hash<std::string>{}(s);
  return os.str();
}

// Written before any other output lands in the directory.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& config, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  fs::create_directories(out_dir);
  json m;
  m["command"] = command;
  m["config"] = config;
  m["config_hash"] = hash_hex(config.dump());
  m["seed"] = seed;
  m["versions"] = {{"ck", kVersion}};
  m["outputs"] = outputs;
  m["timestamp"] = timestamp_utc();
  std::ofstream f(fs::path(out_dir) / "manifest.json");
  if (!f) throw ck::ConfigError("cannot write manifest in " + out_dir);
  f << m.dump(1) << "\n";
}

std::vector<ck::SparseDataset> load_datasets(
    const std::vector<std::string>& paths) {
  std::vector<ck::SparseDataset> out;
  for (const auto& p : paths) out.push_back(ck::load_dataset_json(p));
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ck::ConfigError("cannot read " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ck::ConfigError(path + ": " + e.what());
  }
  return j;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // per column
};

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ck::ConfigError("cannot read " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw ck::ConfigError(path + ": empty file");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  t.data.resize(t.columns.size());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= t.columns.size())
        throw ck::ConfigError(path + ": ragged row");
      t.data[c++].push_back(std::stod(cell));
    }
    if (c != t.columns.size()) throw ck::ConfigError(path + ": ragged row");
  }
  return t;
}

int cmd_generate_data(const std::string& case_id, int fine_n,
                      int points_per_slice, const std::string& out_dir,
                      std::uint64_t seed) {
  const ck::CaseSpec& c = ck::find_case(case_id);
  if (points_per_slice <= 0) points_per_slice = c.counts.n_data_slice;
  const std::string file = "dataset_" + c.id + ".json";
  write_manifest(out_dir, "generate-data",
                 {{"case", c.id},
                  {"fine_n", fine_n},
                  {"points_per_slice", points_per_slice}},
                 seed, {file});
  const auto ds = ck::generate_training_data(c, fine_n, points_per_slice,
                                             seed);
  ck::save_dataset_json(ds, (fs::path(out_dir) / file).string());
  std::cout << "wrote " << (fs::path(out_dir) / file).string() << " ("
            << ds.points.size() << " points)\n";
  return 0;
}

int cmd_train(const json& cfg_json,
              const std::vector<std::string>& dataset_paths,
              const std::string& out_dir, bool baseline) {
  ck::TrainConfig cfg = ck::train_config_from_json(cfg_json);
  const auto datasets = load_datasets(dataset_paths);
  if (baseline) {
    write_manifest(out_dir, "train-baseline", cfg_json, cfg.seed,
                   {"baseline_net2.json", "train_report.json"});
    ck::TrainReport report;
    const ck::DenseNet net = ck::train_data_driven_baseline(cfg, datasets,
                                                            &report);
    ck::save_net_json(net, (fs::path(out_dir) / "baseline_net2.json").string());
    std::ofstream rep(fs::path(out_dir) / "train_report.json");
    rep << report.to_json().dump(1) << "\n";
    std::cout << "baseline final data loss " << report.final_loss.data << "\n";
    return 0;
  }
  write_manifest(out_dir, "train", cfg_json, cfg.seed,
                 {"net2.json", "train_report.json", "loss_log.csv"});
  const auto res = ck::train_constructor(cfg, datasets, out_dir);
  std::cout << "final total loss " << res.report.final_loss.total
            << ", closure rel L2 " << res.report.closure_l2 << "\n";
  return 0;
}

int cmd_solve(const std::string& case_id, const std::string& closure_spec,
              int order, int nx, int ny, double t_end, double cfl,
              double fixed_dt, int snapshots, const std::string& out_dir,
              std::uint64_t seed) {
  const ck::CaseSpec& c = ck::find_case(case_id);
  if (c.system == ck::SystemKind::Toy)
    throw ck::ConfigError("solve: use the trainer for toy cases");
  if (order != 3 && order != 5)
    throw ck::ConfigError("solve: order must be 3 or 5");

  ck::SolverConfig cfg = ck::solver_config_for(c);
  cfg.weno_order = order;
  cfg.cfl = cfl;
  cfg.fixed_dt = fixed_dt;
  if (t_end > 0.0) cfg.t_end = t_end;
  if (nx <= 0) nx = c.default_nx;
  if (ny <= 0) ny = c.system == ck::SystemKind::Euler2D ? nx : 1;

  const std::string spec =
      closure_spec.empty() ? c.target_closure : closure_spec;
  const auto closure = ck::parse_closure_spec(spec);

  write_manifest(out_dir, "solve",
                 {{"case", c.id}, {"closure", spec}, {"order", order},
                  {"nx", nx}, {"ny", ny}, {"t_end", cfg.t_end},
                  {"cfl", cfl}, {"fixed_dt", fixed_dt}},
                 seed, {"conservation.csv"});

  auto grid = ck::build_initial_state(c, nx, ny, cfg.ghost_width());
  std::vector<double> times;
  for (int k = 1; k <= snapshots; ++k)
    times.push_back(cfg.t_end * k / snapshots);
  const auto result = ck::run_solver(std::move(grid), cfg, *closure, times);

  for (const auto& snap : result.snapshots) {
    std::ostringstream name;
    name << "snapshot_t" << snap.t << ".csv";
    ck::write_snapshot_csv(snap, (fs::path(out_dir) / name.str()).string());
  }
  ck::write_conservation_csv(result.conservation,
                             (fs::path(out_dir) / "conservation.csv").string());
  std::cout << "steps " << result.steps << ", pressure clamps "
            << result.diagnostics.pressure_clamps << ", sound fallbacks "
            << result.diagnostics.sound_fallbacks << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& truth_spec,
                 int grid_n, const std::vector<std::string>& compare) {
  std::cout.precision(12);
  if (!compare.empty()) {
    if (compare.size() != 2)
      throw ck::ConfigError("evaluate: --compare needs exactly two files");
    const CsvTable a = read_csv(compare[0]);
    const CsvTable b = read_csv(compare[1]);
    if (a.columns != b.columns)
      throw ck::ConfigError("evaluate: column sets differ");
    std::cout << "field,l1,l2,linf,rel_l2\n";
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
      const auto m = ck::error_metrics(a.data[c], b.data[c]);
      std::cout << a.columns[c] << ',' << m.l1 << ',' << m.l2 << ','
                << m.linf << ',' << m.rel_l2 << "\n";
    }
    return 0;
  }

  if (model_path.empty() || truth_spec.empty())
    throw ck::ConfigError("evaluate: need --model and --truth, or --compare");
  const ck::DenseNet net = ck::load_net_json(model_path);
  const auto truth = ck::parse_closure_spec(truth_spec);
  double l2;
  if (net.input_width() == 1) {
    double lo = -1.0, hi = 1.0;
    if (net.meta.contains("envelope")) {
      lo = net.meta["envelope"].value("u1_min", lo);
      hi = net.meta["envelope"].value("u1_max", hi);
    }
    l2 = ck::closure_l2_vs_truth_toy(net, lo, hi, grid_n);
  } else {
    if (!net.meta.contains("envelope"))
      throw ck::ConfigError("evaluate: model carries no envelope metadata");
    ck::StateEnvelope env;
    env.rho_min = net.meta["envelope"].at("rho_min").get<double>();
    env.rho_max = net.meta["envelope"].at("rho_max").get<double>();
    env.e_min = net.meta["envelope"].at("e_min").get<double>();
    env.e_max = net.meta["envelope"].at("e_max").get<double>();
    l2 = ck::closure_l2_vs_truth_euler(net, *truth, env, grid_n);
  }
  std::cout << "metric,value\nrel_l2," << l2 << "\n";
  return 0;
}

int cmd_list_cases() {
  for (const auto& c : ck::case_registry()) {
    std::cout << c.id;
    switch (c.system) {
      case ck::SystemKind::Toy:
        std::cout << "  toy c0=" << c.toy_c0 << " t=[" << c.t0 << ","
                  << c.t_end << "]";
        break;
      case ck::SystemKind::Euler1D:
        std::cout << "  1d " << c.ic_id << " x=[" << c.x0 << "," << c.x1
                  << "] T=" << c.t_end << " " << c.target_closure;
        break;
      case ck::SystemKind::Euler2D:
        std::cout << "  2d " << c.ic_id << " T=" << c.t_end << " "
                  << c.target_closure;
        break;
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closure learning and finite-difference flow toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "random seed (default 0)");
  app.add_option("--threads", threads, "worker cap (currently single-core)");

  auto* gen = app.add_subcommand("generate-data",
                                 "reference solve + sparse subsampling");
  std::string g_case, g_out = "out";
  int g_fine_n = 4000;
  gen->add_option("--case", g_case, "case id")->required();
  gen->add_option("--fine-n", g_fine_n, "reference grid resolution");
  int g_pps = 0;
  gen->add_option("--points-per-slice", g_pps,
                  "observations per time slice (default: case setting)");
  gen->add_option("--out", g_out, "output directory");

  auto* train = app.add_subcommand("train", "fit state nets + closure net");
  std::string t_config, t_out = "out";
  std::vector<std::string> t_datasets;
  train->add_option("--config", t_config, "train config JSON")->required();
  train->add_option("--dataset", t_datasets, "dataset file per flow case");
  train->add_option("--out", t_out, "output directory");

  auto* trainb = app.add_subcommand("train-baseline",
                                    "supervised closure fit on data only");
  std::string b_config, b_out = "out";
  std::vector<std::string> b_datasets;
  trainb->add_option("--config", b_config, "train config JSON")->required();
  trainb->add_option("--dataset", b_datasets, "dataset files")->required();
  trainb->add_option("--out", b_out, "output directory");

  auto* solve = app.add_subcommand("solve", "finite-difference solve");
  std::string s_case, s_closure, s_out = "out";
  int s_order = 5, s_nx = 0, s_ny = 0, s_snapshots = 1;
  double s_tend = 0.0, s_cfl = 0.5, s_fixed_dt = 0.0;
  solve->add_option("--case", s_case, "case id")->required();
  solve->add_option("--closure", s_closure,
                    "closure spec (default: case target)");
  solve->add_option("--order", s_order, "reconstruction order, 3 or 5");
  solve->add_option("--nx", s_nx, "cells in x (default: case)");
  solve->add_option("--ny", s_ny, "cells in y (2D)");
  solve->add_option("--t-end", s_tend, "final time (default: case)");
  solve->add_option("--cfl", s_cfl, "CFL number");
  solve->add_option("--fixed-dt", s_fixed_dt, "fixed step, overrides CFL");
  solve->add_option("--snapshots", s_snapshots, "evenly spaced snapshots");
  solve->add_option("--out", s_out, "output directory");

  auto* eval = app.add_subcommand("evaluate", "closure or field errors");
  std::string e_model, e_truth;
  int e_grid = 101;
  std::vector<std::string> e_compare;
  eval->add_option("--model", e_model, "closure model file");
  eval->add_option("--truth", e_truth, "truth closure spec");
  eval->add_option("--grid", e_grid, "evaluation points per axis");
  eval->add_option("--compare", e_compare, "two snapshot CSVs")
      ->expected(0, 2);

  auto* list = app.add_subcommand("list-cases", "print the case registry");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate_data(g_case, g_fine_n, g_pps, g_out, seed);
    if (train->parsed() || trainb->parsed()) {
      const bool baseline = trainb->parsed();
      auto cfg = read_json_file(baseline ? b_config : t_config);
      // a seed in the config file wins over --seed
      if (!cfg.contains("seed")) cfg["seed"] = seed;
      return cmd_train(cfg, baseline ? b_datasets : t_datasets,
                       baseline ? b_out : t_out, baseline);
    }
    if (solve->parsed())
      return cmd_solve(s_case, s_closure, s_order, s_nx, s_ny, s_tend, s_cfl,
                       s_fixed_dt, s_snapshots, s_out, seed);
    if (eval->parsed()) return cmd_evaluate(e_model, e_truth, e_grid,
                                            e_compare);
    if (list->parsed()) return cmd_list_cases();
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ck::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ck::TrainError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const ck::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 4;
  } catch (const ck::DomainError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
