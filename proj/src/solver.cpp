#include "ck/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ck/errors.hpp"

namespace ck {

ConservedStateGrid ConservedStateGrid::make_1d(int nx, double x0, double x1,
                                               int ghost) {
  ConservedStateGrid g;
  g.dims = 1;
  g.nx = nx;
  g.ny = 1;
  g.x0 = x0;
  g.dx = (x1 - x0) / nx;
  g.ghost = ghost;
  g.rho.assign(g.cells(), 0.0);
  g.mx.assign(g.cells(), 0.0);
  g.E.assign(g.cells(), 0.0);
  return g;
}

ConservedStateGrid ConservedStateGrid::make_2d(int nx, int ny, double x0,
                                               double x1, double y0,
                                               int ghost) {
  ConservedStateGrid g;
  g.dims = 2;
  g.nx = nx;
  g.ny = ny;
  g.x0 = x0;
  g.y0 = y0;
  g.dx = (x1 - x0) / nx;
  g.ghost = ghost;
  g.rho.assign(g.cells(), 0.0);
  g.mx.assign(g.cells(), 0.0);
  g.my.assign(g.cells(), 0.0);
  g.E.assign(g.cells(), 0.0);
  return g;
}

namespace {

void fill_ghosts_line(double* a, int n, int g, BoundaryKind bc, int stride) {
  for (int k = 0; k < g; ++k) {
    if (bc == BoundaryKind::Periodic) {
      a[(g - 1 - k) * stride] = a[(g + n - 1 - k) * stride];
      a[(g + n + k) * stride] = a[(g + k) * stride];
    } else {
      a[(g - 1 - k) * stride] = a[g * stride];
      a[(g + n + k) * stride] = a[(g + n - 1) * stride];
    }
  }
}

}  // namespace

void fill_ghosts(ConservedStateGrid& grid, const SolverConfig& config) {
  const int g = grid.ghost;
  const int s = grid.stride();
  auto fields = grid.dims == 2
                    ? std::vector<std::vector<double>*>{&grid.rho, &grid.mx,
                                                        &grid.my, &grid.E}
                    : std::vector<std::vector<double>*>{&grid.rho, &grid.mx,
                                                        &grid.E};
  const int jrows = grid.rows();
  for (auto* f : fields) {
    // x direction, every row (including y ghosts once those are filled)
    for (int j = 0; j < jrows; ++j)
      fill_ghosts_line(f->data() + static_cast<std::size_t>(j) * s, grid.nx, g,
                       config.bc_x, 1);
    if (grid.dims == 2)
      for (int i = 0; i < s; ++i)
        fill_ghosts_line(f->data() + i, grid.ny, g, config.bc_y, s);
  }
}

void primitives_from_conserved(const ConservedStateGrid& grid,
                               const ClosureModel& closure, double p_floor,
                               PrimitiveField& prim, StepDiagnostics& diag) {
  const std::size_t n = grid.cells();
  prim.rho.resize(n);
  prim.u.resize(n);
  prim.v.assign(n, 0.0);
  prim.e.resize(n);
  prim.p.resize(n);
  prim.c.resize(n);

  const int g = grid.ghost;
  const int s = grid.stride();
  auto interior = [&](std::size_t k) {
    const int i = static_cast<int>(k) % s;
    const int j = static_cast<int>(k) / s;
    if (i < g || i >= g + grid.nx) return false;
    return grid.dims != 2 || (j >= g && j < g + grid.ny);
  };

  // Ghost cells may be unfilled (rho = 0) before the first boundary
  // exchange; they get placeholder primitives and are never consumed.
  std::vector<char> skip(n, 0);
  std::vector<double> u1(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double rho = grid.rho[k];
    if (rho <= 0.0) {
      if (interior(k)) {
        const int i = static_cast<int>(k) % s - g;
        const int j = static_cast<int>(k) / s - g;
        throw SolverError("positivity failure: rho <= 0 at cell (" +
                          std::to_string(i) + "," + std::to_string(j) +
                          "), t = " + std::to_string(grid.t));
      }
      skip[k] = 1;
      prim.rho[k] = prim.u[k] = prim.v[k] = prim.e[k] = 0.0;
      u1[2 * k] = 1.0;
      u1[2 * k + 1] = 1.0;
      continue;
    }
    const double u = grid.mx[k] / rho;
    const double v = grid.dims == 2 ? grid.my[k] / rho : 0.0;
    const double e = grid.E[k] / rho - 0.5 * (u * u + v * v);
    prim.rho[k] = rho;
    prim.u[k] = u;
    prim.v[k] = v;
    prim.e[k] = e;
    u1[2 * k] = rho;
    u1[2 * k + 1] = e;
  }

  std::vector<double> p(n), dp(2 * n);
  closure.eval_many(u1, p, dp);
  for (std::size_t k = 0; k < n; ++k) {
    if (skip[k]) {
      prim.p[k] = p_floor;
      prim.c[k] = 0.0;
      continue;
    }
    double pk = p[k];
    if (pk < p_floor) {
      pk = p_floor;
      ++diag.pressure_clamps;
    }
    prim.p[k] = pk;
    const double rho = prim.rho[k];
    const double radicand = dp[2 * k] + pk / (rho * rho) * dp[2 * k + 1];
    if (radicand > 0.0) {
      prim.c[k] = std::sqrt(radicand);
    } else {
      prim.c[k] = std::sqrt(kGammaRef * std::max(pk, kPressureFloor) / rho);
      ++diag.sound_fallbacks;
    }
  }
}

namespace {

inline double weno3_left(double vm1, double v0, double vp1) {
  constexpr double eps = 1e-40;
  const double b0 = (v0 - vm1) * (v0 - vm1);
  const double b1 = (vp1 - v0) * (vp1 - v0);
  const double tau = std::abs(b0 - b1);
  double a0 = (1.0 / 3.0) * (1.0 + (tau / (b0 + eps)) * (tau / (b0 + eps)));
  double a1 = (2.0 / 3.0) * (1.0 + (tau / (b1 + eps)) * (tau / (b1 + eps)));
  const double inv = 1.0 / (a0 + a1);
  a0 *= inv;
  a1 *= inv;
  return a0 * (1.5 * v0 - 0.5 * vm1) + a1 * (0.5 * v0 + 0.5 * vp1);
}

inline double weno5_left(double vm2, double vm1, double v0, double vp1,
                         double vp2) {
  constexpr double eps = 1e-40;
  const double b0 = (13.0 / 12.0) * (vm2 - 2.0 * vm1 + v0) * (vm2 - 2.0 * vm1 + v0) +
                    0.25 * (vm2 - 4.0 * vm1 + 3.0 * v0) * (vm2 - 4.0 * vm1 + 3.0 * v0);
  const double b1 = (13.0 / 12.0) * (vm1 - 2.0 * v0 + vp1) * (vm1 - 2.0 * v0 + vp1) +
                    0.25 * (vm1 - vp1) * (vm1 - vp1);
  const double b2 = (13.0 / 12.0) * (v0 - 2.0 * vp1 + vp2) * (v0 - 2.0 * vp1 + vp2) +
                    0.25 * (3.0 * v0 - 4.0 * vp1 + vp2) * (3.0 * v0 - 4.0 * vp1 + vp2);
  const double tau = std::abs(b0 - b2);
  double a0 = 0.1 * (1.0 + (tau / (b0 + eps)) * (tau / (b0 + eps)));
  double a1 = 0.6 * (1.0 + (tau / (b1 + eps)) * (tau / (b1 + eps)));
  double a2 = 0.3 * (1.0 + (tau / (b2 + eps)) * (tau / (b2 + eps)));
  const double inv = 1.0 / (a0 + a1 + a2);
  a0 *= inv;
  a1 *= inv;
  a2 *= inv;
  const double s0 = (2.0 * vm2 - 7.0 * vm1 + 11.0 * v0) / 6.0;
  const double s1 = (-vm1 + 5.0 * v0 + 2.0 * vp1) / 6.0;
  const double s2 = (2.0 * v0 + 5.0 * vp1 - vp2) / 6.0;
  return a0 * s0 + a1 * s1 + a2 * s2;
}

}  // namespace

double weno_z_reconstruct(std::span<const double> stencil, int r) {
  if (r == 2) {
    if (stencil.size() != 3)
      throw ConfigError("weno_z_reconstruct: r=2 needs 3 cells");
    return weno3_left(stencil[0], stencil[1], stencil[2]);
  }
  if (r == 3) {
    if (stencil.size() != 5)
      throw ConfigError("weno_z_reconstruct: r=3 needs 5 cells");
    return weno5_left(stencil[0], stencil[1], stencil[2], stencil[3],
                      stencil[4]);
  }
  throw ConfigError("weno_z_reconstruct: r must be 2 or 3");
}

void global_lf_split(std::span<const double> flux, std::span<const double> u,
                     double alpha, std::span<double> plus,
                     std::span<double> minus) {
  if (!std::isfinite(alpha))
    throw SolverError("global_lf_split: non-finite alpha");
  for (std::size_t k = 0; k < flux.size(); ++k) {
    plus[k] = 0.5 * (flux[k] + alpha * u[k]);
    minus[k] = 0.5 * (flux[k] - alpha * u[k]);
  }
}

namespace {

struct RhsWorkspace {
  PrimitiveField prim;
  std::vector<double> rhs_rho, rhs_mx, rhs_my, rhs_E;
  // per-line scratch
  std::vector<double> fp, fm, fhat;
};

// Reconstructs the interface fluxes of one split pair along a line and
// accumulates the conservative difference into rhs. fp/fm are the
// split fluxes on the full padded line (stride-1 layout).
void line_flux_update(const double* fp, const double* fm, int n, int g, int r,
                      double inv_dx, double* rhs, int rhs_stride,
                      std::vector<double>& fhat) {
  fhat.resize(n + 1);
  for (int i = g - 1; i < g + n; ++i) {
    double left, right;
    if (r == 2) {
      left = weno3_left(fp[i - 1], fp[i], fp[i + 1]);
      right = weno3_left(fm[i + 2], fm[i + 1], fm[i]);
    } else {
      left = weno5_left(fp[i - 2], fp[i - 1], fp[i], fp[i + 1], fp[i + 2]);
      right = weno5_left(fm[i + 3], fm[i + 2], fm[i + 1], fm[i], fm[i - 1]);
    }
    fhat[i - (g - 1)] = left + right;
  }
  for (int i = 0; i < n; ++i)
    rhs[static_cast<std::size_t>(i) * rhs_stride] -=
        (fhat[i + 1] - fhat[i]) * inv_dx;
}

}  // namespace

double compute_dt(const ConservedStateGrid& grid, const ClosureModel& closure,
                  const SolverConfig& config, StepDiagnostics& diag) {
  if (config.fixed_dt > 0.0) return config.fixed_dt;
  PrimitiveField prim;
  primitives_from_conserved(grid, closure, config.p_floor, prim, diag);
  double ax = 0.0, ay = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const int k = grid.idx(i, j);
      ax = std::max(ax, std::abs(prim.u[k]) + prim.c[k]);
      if (grid.dims == 2)
        ay = std::max(ay, std::abs(prim.v[k]) + prim.c[k]);
    }
  }
  const double speed = ax + ay;
  if (speed <= 0.0) return config.cfl * grid.dx / 1e-8;
  return config.cfl * grid.dx / speed;
}

namespace {

void euler_rhs(ConservedStateGrid& grid, const SolverConfig& config,
               const ClosureModel& closure, RhsWorkspace& ws,
               StepDiagnostics& diag) {
  fill_ghosts(grid, config);
  primitives_from_conserved(grid, closure, config.p_floor, ws.prim, diag);

  const int g = grid.ghost;
  const int s = grid.stride();
  const int r = config.weno_order == 3 ? 2 : 3;
  const double inv_dx = 1.0 / grid.dx;
  const std::size_t n = grid.cells();

  ws.rhs_rho.assign(n, 0.0);
  ws.rhs_mx.assign(n, 0.0);
  ws.rhs_my.assign(n, 0.0);
  ws.rhs_E.assign(n, 0.0);

  // Global maximum wave speeds, one per direction.
  double ax = 0.0, ay = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ax = std::max(ax, std::abs(ws.prim.u[k]) + ws.prim.c[k]);
    if (grid.dims == 2) ay = std::max(ay, std::abs(ws.prim.v[k]) + ws.prim.c[k]);
  }
  if (!std::isfinite(ax) || (grid.dims == 2 && !std::isfinite(ay)))
    throw SolverError("non-finite wave speed at t = " + std::to_string(grid.t));

  const int ncomp = grid.dims == 2 ? 4 : 3;
  const int line = s;
  ws.fp.resize(static_cast<std::size_t>(ncomp) * line);
  ws.fm.resize(static_cast<std::size_t>(ncomp) * line);

  // x sweeps
  for (int j = 0; j < grid.rows(); ++j) {
    if (grid.dims == 2 && (j < g || j >= g + grid.ny)) continue;
    const std::size_t row = static_cast<std::size_t>(j) * s;
    for (int i = 0; i < line; ++i) {
      const std::size_t k = row + i;
      const double rho = ws.prim.rho[k], u = ws.prim.u[k], v = ws.prim.v[k];
      const double p = ws.prim.p[k], E = grid.E[k];
      const double f0 = rho * u;
      const double f1 = rho * u * u + p;
      const double f3 = u * (E + p);
      ws.fp[0 * line + i] = 0.5 * (f0 + ax * rho);
      ws.fm[0 * line + i] = 0.5 * (f0 - ax * rho);
      ws.fp[1 * line + i] = 0.5 * (f1 + ax * grid.mx[k]);
      ws.fm[1 * line + i] = 0.5 * (f1 - ax * grid.mx[k]);
      if (grid.dims == 2) {
        const double f2 = rho * u * v;
        ws.fp[2 * line + i] = 0.5 * (f2 + ax * grid.my[k]);
        ws.fm[2 * line + i] = 0.5 * (f2 - ax * grid.my[k]);
      }
      ws.fp[(ncomp - 1) * line + i] = 0.5 * (f3 + ax * E);
      ws.fm[(ncomp - 1) * line + i] = 0.5 * (f3 - ax * E);
    }
    double* dst[4] = {ws.rhs_rho.data() + row + g, ws.rhs_mx.data() + row + g,
                      grid.dims == 2 ? ws.rhs_my.data() + row + g
                                     : ws.rhs_E.data() + row + g,
                      ws.rhs_E.data() + row + g};
    for (int m = 0; m < ncomp; ++m)
      line_flux_update(&ws.fp[static_cast<std::size_t>(m) * line],
                       &ws.fm[static_cast<std::size_t>(m) * line], grid.nx, g,
                       r, inv_dx, dst[m], 1, ws.fhat);
  }

  // y sweeps
  if (grid.dims == 2) {
    const int nyline = grid.rows();
    std::vector<double>& fp = ws.fp;
    std::vector<double>& fm = ws.fm;
    fp.resize(static_cast<std::size_t>(ncomp) * nyline);
    fm.resize(static_cast<std::size_t>(ncomp) * nyline);
    for (int i = g; i < g + grid.nx; ++i) {
      for (int j = 0; j < nyline; ++j) {
        const std::size_t k = static_cast<std::size_t>(j) * s + i;
        const double rho = ws.prim.rho[k], u = ws.prim.u[k], v = ws.prim.v[k];
        const double p = ws.prim.p[k], E = grid.E[k];
        const double f0 = rho * v;
        const double f1 = rho * u * v;
        const double f2 = rho * v * v + p;
        const double f3 = v * (E + p);
        fp[0 * nyline + j] = 0.5 * (f0 + ay * rho);
        fm[0 * nyline + j] = 0.5 * (f0 - ay * rho);
        fp[1 * nyline + j] = 0.5 * (f1 + ay * grid.mx[k]);
        fm[1 * nyline + j] = 0.5 * (f1 - ay * grid.mx[k]);
        fp[2 * nyline + j] = 0.5 * (f2 + ay * grid.my[k]);
        fm[2 * nyline + j] = 0.5 * (f2 - ay * grid.my[k]);
        fp[3 * nyline + j] = 0.5 * (f3 + ay * E);
        fm[3 * nyline + j] = 0.5 * (f3 - ay * E);
      }
      double* rhs4[4] = {ws.rhs_rho.data(), ws.rhs_mx.data(), ws.rhs_my.data(),
                         ws.rhs_E.data()};
      for (int m = 0; m < 4; ++m)
        line_flux_update(&fp[static_cast<std::size_t>(m) * nyline],
                         &fm[static_cast<std::size_t>(m) * nyline], grid.ny, g,
                         r, inv_dx,
                         rhs4[m] + static_cast<std::size_t>(g) * s + i, s,
                         ws.fhat);
    }
  }
}

}  // namespace

void rk3_step(ConservedStateGrid& grid, const SolverConfig& config,
              const ClosureModel& closure, double dt, StepDiagnostics& diag) {
  RhsWorkspace ws;
  const std::size_t n = grid.cells();
  const bool two_d = grid.dims == 2;

  std::vector<double> rho0 = grid.rho, mx0 = grid.mx, my0 = grid.my,
                      E0 = grid.E;
  const double t0 = grid.t;

  auto apply = [&](double c_old, double c_cur, double c_dt) {
    for (std::size_t k = 0; k < n; ++k) {
      grid.rho[k] = c_old * rho0[k] + c_cur * grid.rho[k] + c_dt * dt * ws.rhs_rho[k];
      grid.mx[k] = c_old * mx0[k] + c_cur * grid.mx[k] + c_dt * dt * ws.rhs_mx[k];
      if (two_d)
        grid.my[k] = c_old * my0[k] + c_cur * grid.my[k] + c_dt * dt * ws.rhs_my[k];
      grid.E[k] = c_old * E0[k] + c_cur * grid.E[k] + c_dt * dt * ws.rhs_E[k];
    }
  };

  euler_rhs(grid, config, closure, ws, diag);
  apply(0.0, 1.0, 1.0);
  grid.t = t0 + dt;

  euler_rhs(grid, config, closure, ws, diag);
  apply(0.75, 0.25, 0.25);
  grid.t = t0 + 0.5 * dt;

  euler_rhs(grid, config, closure, ws, diag);
  apply(1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0);
  grid.t = t0 + dt;
}

Snapshot take_snapshot(const ConservedStateGrid& grid,
                       const ClosureModel& closure, double p_floor) {
  Snapshot snap;
  snap.t = grid.t;
  snap.nx = grid.nx;
  snap.ny = grid.dims == 2 ? grid.ny : 1;

  StepDiagnostics scratch;
  PrimitiveField prim;
  primitives_from_conserved(grid, closure, p_floor, prim, scratch);

  for (int j = 0; j < (grid.dims == 2 ? grid.ny : 1); ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const int k = grid.idx(i, j);
      snap.x.push_back(grid.x_center(i));
      if (grid.dims == 2) snap.y.push_back(grid.y_center(j));
      snap.rho.push_back(prim.rho[k]);
      snap.u.push_back(prim.u[k]);
      if (grid.dims == 2) snap.v.push_back(prim.v[k]);
      snap.e.push_back(prim.e[k]);
      snap.p.push_back(prim.p[k]);
    }
  }
  return snap;
}

SolveResult run_solver(ConservedStateGrid grid, const SolverConfig& config,
                       const ClosureModel& closure,
                       std::span<const double> snapshot_times) {
  SolveResult result;
  std::vector<double> targets(snapshot_times.begin(), snapshot_times.end());
  std::sort(targets.begin(), targets.end());
  targets.erase(std::remove_if(targets.begin(), targets.end(),
                               [&](double t) {
                                 return t <= grid.t ||
                                        t > config.t_end + 1e-14;
                               }),
                targets.end());
  if (targets.empty() || std::abs(targets.back() - config.t_end) > 1e-12)
    targets.push_back(config.t_end);

  const double area = grid.dims == 2 ? grid.dx * grid.dx : grid.dx;
  auto record = [&](int step, double dt) {
    ConservationRecord rec{};
    rec.step = step;
    rec.t = grid.t;
    rec.dt = dt;
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const int k = grid.idx(i, j);
        rec.mass += grid.rho[k] * area;
        rec.mom_x += grid.mx[k] * area;
        if (grid.dims == 2) rec.mom_y += grid.my[k] * area;
        rec.energy += grid.E[k] * area;
      }
    }
    result.conservation.push_back(rec);
  };

  record(0, 0.0);
  std::size_t next_target = 0;
  int step = 0;
  while (grid.t < config.t_end - 1e-14) {
    double dt = compute_dt(grid, closure, config, result.diagnostics);
    const double target = targets[next_target];
    if (grid.t + dt > target) dt = target - grid.t;
    rk3_step(grid, config, closure, dt, result.diagnostics);
    ++step;
    record(step, dt);
    if (grid.t >= target - 1e-14) {
      grid.t = target;
      result.snapshots.push_back(
          take_snapshot(grid, closure, config.p_floor));
      ++next_target;
      if (next_target >= targets.size()) break;
    }
  }
  result.steps = step;
  return result;
}

// ---------------------------------------------------------------------------
// Exact Riemann solver (ideal gas)

namespace {

struct WaveFn {
  double gamma, rho, p, c;

  // f(p*) and f'(p*) for one side (shock or rarefaction branch).
  std::pair<double, double> operator()(double ps) const {
    if (ps > p) {
      const double A = 2.0 / ((gamma + 1.0) * rho);
      const double B = (gamma - 1.0) / (gamma + 1.0) * p;
      const double sq = std::sqrt(A / (ps + B));
      const double f = (ps - p) * sq;
      const double df = sq * (1.0 - 0.5 * (ps - p) / (ps + B));
      return {f, df};
    }
    const double pr = ps / p;
    const double ex = (gamma - 1.0) / (2.0 * gamma);
    const double f = 2.0 * c / (gamma - 1.0) * (std::pow(pr, ex) - 1.0);
    const double df = std::pow(pr, -(gamma + 1.0) / (2.0 * gamma)) / (rho * c);
    return {f, df};
  }
};

}  // namespace

RiemannState exact_riemann_solver(const RiemannState& left,
                                  const RiemannState& right, double gamma,
                                  double xi) {
  if (left.rho <= 0.0 || right.rho <= 0.0 || left.p <= 0.0 || right.p <= 0.0)
    throw SolverError("exact_riemann_solver: nonpositive input state");

  const double cl = std::sqrt(gamma * left.p / left.rho);
  const double cr = std::sqrt(gamma * right.p / right.rho);
  const double du = right.u - left.u;

  // vacuum check
  if (2.0 * cl / (gamma - 1.0) + 2.0 * cr / (gamma - 1.0) <= du)
    throw SolverError("exact_riemann_solver: vacuum formation");

  WaveFn fl{gamma, left.rho, left.p, cl};
  WaveFn fr{gamma, right.rho, right.p, cr};

  // two-rarefaction initial guess
  const double ex = (gamma - 1.0) / (2.0 * gamma);
  double ps = std::pow(
      (cl + cr - 0.5 * (gamma - 1.0) * du) /
          (cl / std::pow(left.p, ex) + cr / std::pow(right.p, ex)),
      1.0 / ex);
  ps = std::max(ps, 1e-14);

  for (int it = 0; it < 100; ++it) {
    const auto [f1, d1] = fl(ps);
    const auto [f2, d2] = fr(ps);
    const double f = f1 + f2 + du;
    const double step = f / (d1 + d2);
    double next = ps - step;
    if (next <= 0.0) next = 0.5 * ps;
    if (std::abs(next - ps) <= 1e-12 * std::max(1.0, ps)) {
      ps = next;
      break;
    }
    ps = next;
  }
  const double us =
      0.5 * (left.u + right.u) + 0.5 * (fr(ps).first - fl(ps).first);

  // sample at xi
  auto sample_side = [&](const RiemannState& s, double cs, int sign)
      -> RiemannState {
    // sign = +1 for left-of-contact logic mirrored for the right side
    const double u = sign * s.u;
    const double usn = sign * us;
    const double x = sign * xi;
    if (ps > s.p) {
      // shock
      const double sp = u - cs * std::sqrt((gamma + 1.0) / (2.0 * gamma) * ps / s.p +
                                           (gamma - 1.0) / (2.0 * gamma));
      if (x < sp) return {s.rho, sign * u, s.p};
      const double gr = (gamma - 1.0) / (gamma + 1.0);
      const double rho = s.rho * (ps / s.p + gr) / (gr * ps / s.p + 1.0);
      return {rho, sign * usn, ps};
    }
    // rarefaction
    const double cs_star = cs * std::pow(ps / s.p, (gamma - 1.0) / (2.0 * gamma));
    const double head = u - cs;
    const double tail = usn - cs_star;
    if (x < head) return {s.rho, sign * u, s.p};
    if (x > tail) {
      const double rho = s.rho * std::pow(ps / s.p, 1.0 / gamma);
      return {rho, sign * usn, ps};
    }
    const double c_fan = (2.0 / (gamma + 1.0)) * (cs + 0.5 * (gamma - 1.0) * (u - x));
    const double uf = (2.0 / (gamma + 1.0)) * (cs + 0.5 * (gamma - 1.0) * u + x);
    const double rho = s.rho * std::pow(c_fan / cs, 2.0 / (gamma - 1.0));
    const double p = s.p * std::pow(c_fan / cs, 2.0 * gamma / (gamma - 1.0));
    return {rho, sign * uf, p};
  };

  if (xi < us) return sample_side(left, cl, +1);
  return sample_side(right, cr, -1);
}

ToyTrajectory ode_integrate_toy(const ClosureModel& closure, double u0,
                                double t0, double t1, double dt) {
  if (std::abs(u0) > 1.0)
    throw DomainError("ode_integrate_toy: |u0| > 1");
  ToyTrajectory traj;
  auto rhs = [&](double u) {
    const double x[1] = {u};
    return -closure.value(std::span<const double>(x, 1));
  };
  double t = t0, u = u0;
  traj.t.push_back(t);
  traj.u1.push_back(u);
  while (t < t1 - 1e-14) {
    const double h = std::min(dt, t1 - t);
    const double k1 = rhs(u);
    const double k2 = rhs(u + 0.5 * h * k1);
    const double k3 = rhs(u + 0.5 * h * k2);
    const double k4 = rhs(u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    traj.t.push_back(t);
    traj.u1.push_back(u);
  }
  return traj;
}

void write_snapshot_csv(const Snapshot& snap, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write snapshot: " + path);
  const bool two_d = !snap.v.empty();
  std::fprintf(f, two_d ? "x,y,rho,u,v,e,p\n" : "x,rho,u,e,p\n");
  for (std::size_t k = 0; k < snap.rho.size(); ++k) {
    if (two_d)
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", snap.x[k],
                   snap.y[k], snap.rho[k], snap.u[k], snap.v[k], snap.e[k],
                   snap.p[k]);
    else
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", snap.x[k],
                   snap.rho[k], snap.u[k], snap.e[k], snap.p[k]);
  }
  std::fclose(f);
}

void write_conservation_csv(std::span<const ConservationRecord> recs,
                            const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write conservation log: " + path);
  std::fprintf(f, "step,t,dt,mass,mom_x,mom_y,energy\n");
  for (const auto& r : recs)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.t,
                 r.dt, r.mass, r.mom_x, r.mom_y, r.energy);
  std::fclose(f);
}

}  // namespace ck
