#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ck/cases.hpp"
#include "ck/errors.hpp"

using namespace ck;

TEST_CASE("weno-z reproduces constant and linear data exactly") {
  for (int r : {2, 3}) {
    std::vector<double> c(2 * r - 1, 3.7);
    CHECK(weno_z_reconstruct(c, r) == doctest::Approx(3.7).epsilon(1e-14));

    std::vector<double> lin(2 * r - 1);
    for (int i = 0; i < 2 * r - 1; ++i) lin[i] = 1.0 + 0.5 * i;
    // interface value half a cell right of the stencil center
    const double expect = 1.0 + 0.5 * (r - 1 + 0.5);
    CHECK(weno_z_reconstruct(lin, r) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("weno-z stays essentially non-oscillatory at a jump") {
  for (int r : {2, 3}) {
    std::vector<double> v(2 * r - 1);
    for (int i = 0; i < 2 * r - 1; ++i) v[i] = i < r ? 1.0 : 0.0;
    const double rec = weno_z_reconstruct(v, r);
    CHECK(rec <= 1.0 + 1e-10);
    CHECK(rec >= -1e-10);
  }
}

TEST_CASE("global lax-friedrichs split recombines to the flux") {
  const std::vector<double> f = {1.0, -2.0, 0.5};
  const std::vector<double> u = {0.3, 0.6, 0.9};
  std::vector<double> p(3), m(3);
  global_lf_split(f, u, 2.5, p, m);
  for (int i = 0; i < 3; ++i) {
    CHECK(p[i] + m[i] == doctest::Approx(f[i]).epsilon(1e-14));
    CHECK(p[i] - m[i] == doctest::Approx(2.5 * u[i]).epsilon(1e-14));
  }
}

TEST_CASE("compute_dt follows the cfl rule") {
  const auto& c = find_case("ideal-test-2");  // sod
  SolverConfig cfg = solver_config_for(c);
  auto grid = build_initial_state(c, 100, 1, cfg.ghost_width());
  auto eos = parse_closure_spec("ideal:gamma=1.4");
  StepDiagnostics diag;
  const double dt = compute_dt(grid, *eos, cfg, diag);
  // fastest signal at t=0 is the left state: |u| + c = sqrt(1.4)
  CHECK(dt == doctest::Approx(0.5 * grid.dx / std::sqrt(1.4)).epsilon(1e-12));

  cfg.fixed_dt = 1e-4;
  CHECK(compute_dt(grid, *eos, cfg, diag) == doctest::Approx(1e-4));
}

TEST_CASE("exact riemann solver reproduces sod star values") {
  const RiemannState l{1.0, 0.0, 1.0};
  const RiemannState r{0.125, 0.0, 0.1};
  // star region sampled between the contact and the shock
  const auto mid = exact_riemann_solver(l, r, 1.4, 1.4);
  CHECK(mid.p == doctest::Approx(0.30313).epsilon(2e-5));
  CHECK(mid.u == doctest::Approx(0.92745).epsilon(2e-5));
  // left of the rarefaction: unchanged state
  const auto far_l = exact_riemann_solver(l, r, 1.4, -2.0);
  CHECK(far_l.rho == doctest::Approx(1.0));
  CHECK(far_l.p == doctest::Approx(1.0));
  // right of the shock: unchanged state
  const auto far_r = exact_riemann_solver(l, r, 1.4, 2.0);
  CHECK(far_r.rho == doctest::Approx(0.125));

  // mirrored problem gives the mirrored solution
  const auto ml = exact_riemann_solver({0.125, 0.0, 0.1}, {1.0, 0.0, 1.0},
                                       1.4, -1.4);
  CHECK(ml.p == doctest::Approx(mid.p).epsilon(1e-10));
  CHECK(ml.u == doctest::Approx(-mid.u).epsilon(1e-10));

  // symmetric expansion keeps u* = 0
  const auto sym = exact_riemann_solver({1.0, -0.5, 1.0}, {1.0, 0.5, 1.0},
                                        1.4, 0.0);
  CHECK(sym.u == doctest::Approx(0.0).epsilon(1e-10));

  CHECK_THROWS_AS(exact_riemann_solver({1.0, -15.0, 0.4}, {1.0, 15.0, 0.4},
                                       1.4, 0.0),
                  SolverError);
}

TEST_CASE("sod shock tube error against the exact solution") {
  const auto& c = find_case("sod");
  SolverConfig cfg = solver_config_for(c);
  cfg.weno_order = 3;
  auto grid = build_initial_state(c, 200, 1, cfg.ghost_width());
  auto eos = parse_closure_spec(c.target_closure);
  const auto res = run_solver(std::move(grid), cfg, *eos, {});
  const auto& snap = res.snapshots.back();
  CHECK(snap.t == doctest::Approx(0.2));

  std::vector<double> exact(snap.nx);
  for (int i = 0; i < snap.nx; ++i) {
    const auto s = exact_riemann_solver({1.0, 0.0, 1.0}, {0.125, 0.0, 0.1},
                                        1.4, (snap.x[i] - 0.5) / 0.2);
    exact[i] = s.rho;
  }
  const auto m = error_metrics(snap.rho, exact);
  CHECK(m.l1 <= 1e-2);
  CHECK(m.l1 >= 1e-3);
  CHECK(res.diagnostics.pressure_clamps == 0);
}

TEST_CASE("periodic 1d run conserves the discrete invariants") {
  const auto& c = find_case("ideal-train-1");
  SolverConfig cfg = solver_config_for(c);
  cfg.t_end = 0.1;
  auto grid = build_initial_state(c, 100, 1, cfg.ghost_width());
  auto eos = parse_closure_spec(c.target_closure);
  const auto res = run_solver(std::move(grid), cfg, *eos, {});
  REQUIRE(res.conservation.size() >= 2);
  const auto& first = res.conservation.front();
  const auto& last = res.conservation.back();
  const double steps = static_cast<double>(res.steps);
  CHECK(std::abs(last.mass - first.mass) / (std::abs(first.mass) * steps) <=
        1e-12);
  CHECK(std::abs(last.energy - first.energy) /
            (std::abs(first.energy) * steps) <=
        1e-12);
  CHECK(std::abs(last.mom_x - first.mom_x) /
            ((std::abs(first.mom_x) + 1.0) * steps) <=
        1e-12);
}

TEST_CASE("2d smooth periodic run conserves and completes") {
  const auto& c = find_case("ideal-test-3");
  SolverConfig cfg = solver_config_for(c);
  cfg.t_end = 0.02;
  auto grid = build_initial_state(c, 50, 50, cfg.ghost_width());
  auto eos = parse_closure_spec(c.target_closure);
  const auto res = run_solver(std::move(grid), cfg, *eos, {});
  const auto& first = res.conservation.front();
  const auto& last = res.conservation.back();
  const double steps = static_cast<double>(res.steps);
  CHECK(std::abs(last.mass - first.mass) / (std::abs(first.mass) * steps) <=
        1e-12);
  CHECK(std::abs(last.energy - first.energy) /
            (std::abs(first.energy) * steps) <=
        1e-12);
  CHECK(res.snapshots.back().t == doctest::Approx(0.02));
}

TEST_CASE("positivity failure raises a located solver error") {
  auto grid = ConservedStateGrid::make_1d(10, 0.0, 1.0, 2);
  for (int i = 0; i < 10; ++i) {
    const int k = grid.idx(i);
    grid.rho[k] = i == 4 ? -0.1 : 1.0;
    grid.mx[k] = 0.0;
    grid.E[k] = 2.5;
  }
  auto eos = parse_closure_spec("ideal:gamma=1.4");
  SolverConfig cfg;
  cfg.weno_order = 3;
  cfg.t_end = 0.1;
  try {
    run_solver(std::move(grid), cfg, *eos, {});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("cell") != std::string::npos);
  }
}

TEST_CASE("toy rk4 integration tracks the analytic trajectory") {
  ToyClosure toy;
  const double c0 = 3.0;
  const auto traj = ode_integrate_toy(toy, toy_solution(c0, 0.0), 0.0, 2.0,
                                      1e-3);
  CHECK(traj.t.back() == doctest::Approx(2.0));
  double max_err = 0.0;
  for (std::size_t i = 0; i < traj.t.size(); ++i)
    max_err = std::max(max_err,
                       std::abs(traj.u1[i] - toy_solution(c0, traj.t[i])));
  CHECK(max_err < 1e-9);
}

TEST_CASE("snapshot csv output") {
  const auto& c = find_case("sod");
  SolverConfig cfg = solver_config_for(c);
  auto grid = build_initial_state(c, 20, 1, cfg.ghost_width());
  auto eos = parse_closure_spec(c.target_closure);
  const auto snap = take_snapshot(grid, *eos, cfg.p_floor);
  const auto path =
      (std::filesystem::temp_directory_path() / "ck_snap.csv").string();
  write_snapshot_csv(snap, path);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "x,rho,u,e,p");
  int rows = 0;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 20);
  std::filesystem::remove(path);
}
