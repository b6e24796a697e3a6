#include "ck/cases.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "ck/errors.hpp"

namespace ck {

namespace {

constexpr double kPi = std::numbers::pi;

double param(const CaseSpec& c, const std::string& key) {
  auto it = c.ic_params.find(key);
  if (it == c.ic_params.end())
    throw ConfigError("case " + c.id + ": missing IC parameter " + key);
  return it->second;
}

}  // namespace

PrimState initial_condition(const CaseSpec& c, double x, double y) {
  PrimState s;
  if (c.ic_id == "advect-sine") {
    const double sx = std::sin(kPi * x);
    s.rho = param(c, "rho0") + param(c, "rho1") * sx;
    s.u = param(c, "u0");
    s.p = param(c, "p0") + param(c, "p1") * sx + param(c, "p2") * sx * sx;
  } else if (c.ic_id == "cos-pulse") {
    const double w = 1.0 - std::cos(kPi * x);
    s.rho = param(c, "rho0") + param(c, "rho1") * w;
    s.u = param(c, "uc") * w;
    s.p = param(c, "p0") + param(c, "p1") * w;
  } else if (c.ic_id == "cos-mixed") {
    const double w = 1.0 - std::cos(kPi * x);
    s.rho = param(c, "rho0") + param(c, "rho1") * w;
    s.u = param(c, "uc") * w;
    s.p = param(c, "pc0") + param(c, "pcos") * std::cos(kPi * x) +
          param(c, "psin") * std::sin(kPi * x) +
          param(c, "psin2") * std::sin(2.0 * kPi * x);
  } else if (c.ic_id == "gaussian") {
    const double g = std::exp(-param(c, "k") * x * x);
    s.rho = param(c, "rho0") + param(c, "rho1") * g;
    s.u = 0.0;
    s.p = param(c, "p0") + param(c, "p1") * g;
  } else if (c.ic_id == "acoustic") {
    // gamma_ic is a pure formula constant, independent of the EOS gamma
    const double gi = param(c, "gamma_ic");
    const double L = param(c, "L");
    const double cs = std::sqrt(gi) / param(c, "eps");
    s.u = param(c, "amp") * std::sin(2.0 * kPi * x / L);
    s.rho = std::pow(1.0 + (gi - 1.0) * s.u / (2.0 * cs), 2.0 / (gi - 1.0));
    s.p = std::pow(s.rho, gi);
  } else if (c.ic_id == "sod") {
    if (x <= param(c, "xsplit")) {
      s.rho = param(c, "rhoL");
      s.u = param(c, "uL");
      s.p = param(c, "pL");
    } else {
      s.rho = param(c, "rhoR");
      s.u = param(c, "uR");
      s.p = param(c, "pR");
    }
  } else if (c.ic_id == "periodic2d") {
    s.rho = param(c, "rho");
    s.u = param(c, "amp") * std::sin(2.0 * kPi * x);
    s.v = param(c, "amp") * std::sin(2.0 * kPi * y);
    s.p = param(c, "p");
  } else if (c.ic_id == "riemann2d") {
    const char* q = x <= 0.5 ? (y <= 0.5 ? "ll" : "ul")
                             : (y <= 0.5 ? "lr" : "ur");
    s.rho = param(c, std::string("rho_") + q);
    s.u = param(c, std::string("u_") + q);
    s.v = param(c, std::string("v_") + q);
    s.p = param(c, std::string("p_") + q);
  } else {
    throw ConfigError("unknown IC formula: " + c.ic_id);
  }
  return s;
}

namespace {

AnalyticEos target_eos(const CaseSpec& c) {
  auto closure = parse_closure_spec(c.target_closure);
  auto* eos = dynamic_cast<AnalyticEos*>(closure.get());
  if (!eos)
    throw ConfigError("case " + c.id + ": target closure is not an EOS");
  return *eos;
}

std::vector<int> hidden(int layers, int width) {
  return std::vector<int>(layers, width);
}

std::vector<CaseSpec> build_registry() {
  std::vector<CaseSpec> reg;
  const double s14 = std::sqrt(1.4);

  auto toy = [&](const std::string& id, double c0, double t0, double t1,
                 int n_data) {
    CaseSpec c;
    c.id = id;
    c.system = SystemKind::Toy;
    c.t0 = t0;
    c.t_end = t1;
    c.toy_c0 = c0;
    c.n_data = n_data;
    c.net1_hidden = hidden(5, 15);
    c.target_closure = "toy";
    c.counts.n_pde = 400;
    c.counts.n_con = 0;
    c.counts.n_bd = 0;
    reg.push_back(c);
  };
  toy("toy-train-c0-0.5", 0.5, 2.0, 5.0, 31);
  toy("toy-train-c0-1", 1.0, 0.5, 3.0, 51);
  toy("toy-train-c0-2", 2.0, 1.0, 4.0, 31);
  {
    CaseSpec c;
    c.id = "toy-test";
    c.system = SystemKind::Toy;
    c.t0 = 0.0;
    c.t_end = 2.0;
    c.toy_c0 = 3.0;
    c.toy_u0 = 0.6;
    c.net1_hidden = hidden(5, 10);
    c.target_closure = "toy";
    c.counts.n_pde = 400;
    c.counts.n_con = 0;
    c.counts.n_bd = 0;
    reg.push_back(c);
  }

  auto euler_train = [&](const std::string& id, const std::string& target,
                         double t_end, const std::string& ic,
                         std::map<std::string, double> params, int n1_layers,
                         int n_con) {
    CaseSpec c;
    c.id = id;
    c.system = SystemKind::Euler1D;
    c.x0 = -1.0;
    c.x1 = 1.0;
    c.t_end = t_end;
    c.bc = BoundaryKind::Periodic;
    c.ic_id = ic;
    c.ic_params = std::move(params);
    c.default_nx = 400;
    c.default_order = 5;
    c.counts.n_pde = 8000;
    c.counts.n_con = n_con;
    c.net1_hidden = hidden(n1_layers, 50);
    c.target_closure = target;
    reg.push_back(c);
  };

  const std::string ideal = "ideal:gamma=1.4";
  const std::string na = "noble-abel:gamma=1.4,b=0.075";

  euler_train("ideal-train-1", ideal, 0.5, "advect-sine",
              {{"rho0", 0.35}, {"rho1", 0.25}, {"u0", 1.0},
               {"p0", 0.154}, {"p1", -0.03}, {"p2", -0.1}}, 8, 300);
  euler_train("ideal-train-2", ideal, 0.5, "cos-pulse",
              {{"rho0", 0.75}, {"rho1", 0.5}, {"uc", 0.5 * s14},
               {"p0", 0.825}, {"p1", 0.55}}, 8, 400);
  euler_train("ideal-train-3", ideal, 0.5, "cos-pulse",
              {{"rho0", 0.6}, {"rho1", 0.5}, {"uc", -0.5 * s14},
               {"p0", 0.348}, {"p1", 0.29}}, 8, 300);
  euler_train("ideal-train-4", ideal, 0.5, "cos-mixed",
              {{"rho0", 0.75}, {"rho1", 0.5}, {"uc", 0.3 * s14},
               {"pc0", 0.3275}, {"pcos", -0.131}, {"psin", -0.1},
               {"psin2", 0.02}}, 7, 300);
  euler_train("ideal-train-5", ideal, 0.4, "gaussian",
              {{"rho0", 0.1}, {"rho1", 1.0}, {"k", 5.0},
               {"p0", 0.1}, {"p1", 0.75}}, 8, 300);

  euler_train("na-train-1", na, 0.47, "advect-sine",
              {{"rho0", 0.35}, {"rho1", 0.25}, {"u0", 1.0},
               {"p0", 0.154}, {"p1", -0.03}, {"p2", -0.1}}, 10, 300);
  euler_train("na-train-2", na, 0.345, "cos-pulse",
              {{"rho0", 0.75}, {"rho1", 0.5}, {"uc", 0.5 * s14},
               {"p0", 0.6}, {"p1", 0.4}}, 10, 300);
  euler_train("na-train-3", na, 0.5, "cos-pulse",
              {{"rho0", 0.65}, {"rho1", 0.5}, {"uc", 0.35 * s14},
               {"p0", 0.26}, {"p1", 0.2}}, 10, 300);
  euler_train("na-train-4", na, 0.45, "cos-mixed",
              {{"rho0", 0.7}, {"rho1", 0.5}, {"uc", 0.3 * s14},
               {"pc0", 0.216}, {"pcos", -0.09}, {"psin", -0.072},
               {"psin2", 0.015}}, 10, 300);
  euler_train("na-train-5", na, 0.3, "cos-pulse",
              {{"rho0", 0.15}, {"rho1", 0.5}, {"uc", 0.25 * s14},
               {"p0", 0.126}, {"p1", 0.42}}, 10, 300);

  auto test_1d = [&](const std::string& id, const std::string& target,
                     double x0, double x1, double t_end, const std::string& ic,
                     std::map<std::string, double> params, int nx, int order,
                     BoundaryKind bc) {
    CaseSpec c;
    c.id = id;
    c.system = SystemKind::Euler1D;
    c.x0 = x0;
    c.x1 = x1;
    c.t_end = t_end;
    c.bc = bc;
    c.ic_id = ic;
    c.ic_params = std::move(params);
    c.default_nx = nx;
    c.default_order = order;
    c.target_closure = target;
    reg.push_back(c);
  };

  const std::map<std::string, double> sod_params = {
      {"rhoL", 1.0}, {"uL", 0.0}, {"pL", 1.0},
      {"rhoR", 0.125}, {"uR", 0.0}, {"pR", 0.1}, {"xsplit", 0.5}};

  test_1d("ideal-test-1", ideal, -2.5, 2.5, 0.3, "acoustic",
          {{"amp", 1.0}, {"L", 5.0}, {"gamma_ic", 2.0}, {"eps", 0.3}}, 1000, 5,
          BoundaryKind::Periodic);
  test_1d("ideal-test-2", ideal, 0.0, 1.0, 0.2, "sod", sod_params, 200, 5,
          BoundaryKind::Extrapolation);
  test_1d("na-test-1", na, -2.5, 2.5, 0.3, "acoustic",
          {{"amp", 0.3}, {"L", 5.0}, {"gamma_ic", 2.0}, {"eps", 1.0}}, 1000, 5,
          BoundaryKind::Periodic);
  test_1d("na-test-2", na, 0.0, 1.0, 0.2, "sod", sod_params, 200, 3,
          BoundaryKind::Extrapolation);

  auto test_2d = [&](const std::string& id, const std::string& target,
                     double t_end, const std::string& ic,
                     std::map<std::string, double> params, int order,
                     BoundaryKind bc) {
    CaseSpec c;
    c.id = id;
    c.system = SystemKind::Euler2D;
    c.x0 = 0.0;
    c.x1 = 1.0;
    c.y0 = 0.0;
    c.y1 = 1.0;
    c.t_end = t_end;
    c.bc = bc;
    c.ic_id = ic;
    c.ic_params = std::move(params);
    c.default_nx = 400;
    c.default_order = order;
    c.target_closure = target;
    reg.push_back(c);
  };

  const std::map<std::string, double> p2d = {
      {"rho", 0.5}, {"amp", 0.3}, {"p", 0.5}};
  const std::map<std::string, double> r2d = {
      {"rho_ll", 0.5}, {"u_ll", -0.5}, {"v_ll", 0.35}, {"p_ll", 0.5},
      {"rho_ul", 1.0}, {"u_ul", 0.5}, {"v_ul", 0.35}, {"p_ul", 0.5},
      {"rho_lr", 1.5}, {"u_lr", -0.5}, {"v_lr", -0.35}, {"p_lr", 0.5},
      {"rho_ur", 0.5}, {"u_ur", 0.5}, {"v_ur", -0.35}, {"p_ur", 0.5}};

  test_2d("ideal-test-3", ideal, 0.1, "periodic2d", p2d, 5,
          BoundaryKind::Periodic);
  test_2d("ideal-test-4", ideal, 0.2, "riemann2d", r2d, 3,
          BoundaryKind::Extrapolation);
  test_2d("na-test-3", na, 0.1, "periodic2d", p2d, 5, BoundaryKind::Periodic);
  test_2d("na-test-4", na, 0.2, "riemann2d", r2d, 3,
          BoundaryKind::Extrapolation);

  return reg;
}

}  // namespace

const std::vector<CaseSpec>& case_registry() {
  static const std::vector<CaseSpec> reg = build_registry();
  return reg;
}

const CaseSpec& find_case(const std::string& id) {
  std::string key = id;
  if (key == "sod") key = "ideal-test-2";
  for (const auto& c : case_registry())
    if (c.id == key) return c;
  throw ConfigError("unknown case id: " + id);
}

std::vector<std::string> case_ids() {
  std::vector<std::string> ids;
  for (const auto& c : case_registry()) ids.push_back(c.id);
  return ids;
}

ConservedStateGrid build_initial_state(const CaseSpec& c, int nx, int ny,
                                       int ghost) {
  if (c.system == SystemKind::Toy)
    throw ConfigError("build_initial_state: toy cases have no grid state");
  const AnalyticEos eos = target_eos(c);

  ConservedStateGrid grid =
      c.system == SystemKind::Euler2D
          ? ConservedStateGrid::make_2d(nx, ny, c.x0, c.x1, c.y0, ghost)
          : ConservedStateGrid::make_1d(nx, c.x0, c.x1, ghost);

  for (int j = 0; j < (grid.dims == 2 ? ny : 1); ++j) {
    for (int i = 0; i < nx; ++i) {
      const PrimState s =
          initial_condition(c, grid.x_center(i), grid.y_center(j));
      const double e = eos.energy_from_pressure(s.rho, s.p);
      const int k = grid.idx(i, j);
      grid.rho[k] = s.rho;
      grid.mx[k] = s.rho * s.u;
      if (grid.dims == 2) grid.my[k] = s.rho * s.v;
      grid.E[k] = s.rho * e + 0.5 * s.rho * (s.u * s.u + s.v * s.v);
    }
  }
  return grid;
}

SolverConfig solver_config_for(const CaseSpec& c) {
  SolverConfig cfg;
  cfg.weno_order = c.default_order;
  cfg.t_end = c.t_end;
  cfg.bc_x = c.bc;
  cfg.bc_y = c.bc;
  return cfg;
}

void StateEnvelope::absorb(double rho, double e) {
  if (rho_max == 0.0 && rho_min == 0.0 && e_min == 0.0 && e_max == 0.0) {
    rho_min = rho_max = rho;
    e_min = e_max = e;
    return;
  }
  rho_min = std::min(rho_min, rho);
  rho_max = std::max(rho_max, rho);
  e_min = std::min(e_min, e);
  e_max = std::max(e_max, e);
}

void StateEnvelope::merge(const StateEnvelope& o) {
  absorb(o.rho_min, o.e_min);
  absorb(o.rho_max, o.e_max);
}

SparseDataset generate_training_data(const CaseSpec& c, int fine_n,
                                     int points_per_slice,
                                     std::uint64_t seed) {
  if (c.system != SystemKind::Euler1D)
    throw ConfigError("generate_training_data: 1D Euler training cases only");

  SparseDataset ds;
  ds.case_id = c.id;
  ds.fine_n = fine_n;
  ds.seed = seed;

  SolverConfig cfg = solver_config_for(c);
  cfg.weno_order = 5;
  ConservedStateGrid grid =
      build_initial_state(c, fine_n, 1, cfg.ghost_width());
  const auto closure = parse_closure_spec(c.target_closure);

  const Snapshot initial = take_snapshot(grid, *closure, cfg.p_floor);

  // Intermediate snapshots feed the (rho, e) envelope only.
  std::vector<double> times;
  const int n_env = 20;
  for (int k = 1; k <= n_env; ++k) times.push_back(c.t_end * k / n_env);
  const SolveResult result = run_solver(std::move(grid), cfg, *closure, times);

  for (std::size_t k = 0; k < initial.rho.size(); ++k)
    ds.envelope.absorb(initial.rho[k], initial.e[k]);
  for (const auto& snap : result.snapshots)
    for (std::size_t k = 0; k < snap.rho.size(); ++k)
      ds.envelope.absorb(snap.rho[k], snap.e[k]);

  const Snapshot& final_snap = result.snapshots.back();

  std::mt19937_64 rng(seed);
  auto subsample = [&](const Snapshot& snap, double t, unsigned mask) {
    std::vector<int> all(snap.rho.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    std::vector<int> pick;
    std::sample(all.begin(), all.end(), std::back_inserter(pick),
                points_per_slice, rng);
    for (int i : pick) {
      SparsePoint pt;
      pt.t = t;
      pt.x = snap.x[i];
      pt.mask = mask;
      pt.rho = snap.rho[i];
      pt.u = snap.u[i];
      pt.e = snap.e[i];
      pt.p = snap.p[i];
      ds.points.push_back(pt);
    }
  };

  subsample(initial, 0.0, kMaskRho | kMaskU | kMaskE | kMaskP);
  subsample(final_snap, c.t_end, kMaskRho | kMaskU);
  return ds;
}

void save_dataset_json(const SparseDataset& ds, const std::string& path) {
  nlohmann::json j;
  j["case"] = ds.case_id;
  j["provenance"] = {
      {"fine_n", ds.fine_n},
      {"seed", ds.seed},
      {"rho_min", ds.envelope.rho_min},
      {"rho_max", ds.envelope.rho_max},
      {"e_min", ds.envelope.e_min},
      {"e_max", ds.envelope.e_max},
  };
  j["points"] = nlohmann::json::array();
  static const char* names[4] = {"rho", "u", "e", "p"};
  for (const auto& pt : ds.points) {
    nlohmann::json mask = nlohmann::json::array();
    nlohmann::json values = nlohmann::json::array();
    const double comp[4] = {pt.rho, pt.u, pt.e, pt.p};
    for (int b = 0; b < 4; ++b) {
      if (pt.mask & (1u << b)) {
        mask.push_back(names[b]);
        values.push_back(comp[b]);
      }
    }
    j["points"].push_back(
        {{"t", pt.t}, {"x", pt.x}, {"mask", mask}, {"values", values}});
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write dataset: " + path);
  f << j.dump(1) << "\n";
}

SparseDataset load_dataset_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read dataset: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset parse: ") + e.what());
  }
  SparseDataset ds;
  try {
    ds.case_id = j.at("case").get<std::string>();
    const auto& prov = j.at("provenance");
    ds.fine_n = prov.at("fine_n").get<int>();
    ds.seed = prov.at("seed").get<std::uint64_t>();
    ds.envelope.rho_min = prov.at("rho_min").get<double>();
    ds.envelope.rho_max = prov.at("rho_max").get<double>();
    ds.envelope.e_min = prov.at("e_min").get<double>();
    ds.envelope.e_max = prov.at("e_max").get<double>();
    for (const auto& p : j.at("points")) {
      SparsePoint pt;
      pt.t = p.at("t").get<double>();
      pt.x = p.at("x").get<double>();
      const auto& mask = p.at("mask");
      const auto& values = p.at("values");
      for (std::size_t i = 0; i < mask.size(); ++i) {
        const std::string name = mask[i].get<std::string>();
        const double v = values[i].get<double>();
        if (name == "rho") { pt.mask |= kMaskRho; pt.rho = v; }
        else if (name == "u") { pt.mask |= kMaskU; pt.u = v; }
        else if (name == "e") { pt.mask |= kMaskE; pt.e = v; }
        else if (name == "p") { pt.mask |= kMaskP; pt.p = v; }
        else throw ConfigError("dataset: unknown component " + name);
      }
      ds.points.push_back(pt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset schema: ") + e.what());
  }
  return ds;
}

ErrorMetrics error_metrics(std::span<const double> numeric,
                           std::span<const double> reference) {
  if (numeric.size() != reference.size() || numeric.empty())
    throw ConfigError("error_metrics: field shape mismatch");
  ErrorMetrics m;
  double sum2 = 0.0, ref2 = 0.0, sum1 = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double d = numeric[i] - reference[i];
    sum1 += std::abs(d);
    sum2 += d * d;
    ref2 += reference[i] * reference[i];
    m.linf = std::max(m.linf, std::abs(d));
  }
  const double n = static_cast<double>(numeric.size());
  m.l1 = sum1 / n;
  m.l2 = std::sqrt(sum2 / n);
  m.rel_l2 = ref2 > 0.0 ? std::sqrt(sum2 / ref2) : std::sqrt(sum2);
  return m;
}

std::vector<double> restrict_nearest(std::span<const double> fine,
                                     int coarse_n) {
  const double ratio = static_cast<double>(fine.size()) / coarse_n;
  std::vector<double> out(coarse_n);
  for (int i = 0; i < coarse_n; ++i) {
    long j = std::lround((i + 0.5) * ratio - 0.5);
    j = std::clamp<long>(j, 0, static_cast<long>(fine.size()) - 1);
    out[i] = fine[j];
  }
  return out;
}

}  // namespace ck
