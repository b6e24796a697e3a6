#pragma once

#include <span>
#include <string>
#include <vector>

#include "ck/closures.hpp"

namespace ck {

enum class BoundaryKind { Periodic, Extrapolation };

// rho, rho*u, (rho*v), E on a uniform grid with ghost cells.
struct ConservedStateGrid {
  int dims = 1;
  int nx = 0, ny = 1;
  double x0 = 0.0, y0 = 0.0;
  double dx = 0.0;  // dy == dx in 2D
  int ghost = 3;
  double t = 0.0;
  std::vector<double> rho, mx, my, E;  // padded arrays, row-major

  int stride() const { return nx + 2 * ghost; }
  int rows() const { return dims == 2 ? ny + 2 * ghost : 1; }
  std::size_t cells() const {
    return static_cast<std::size_t>(stride()) * rows();
  }
  int idx(int i, int j = 0) const {
    return (dims == 2 ? j + ghost : 0) * stride() + i + ghost;
  }
  double x_center(int i) const { return x0 + (i + 0.5) * dx; }
  double y_center(int j) const { return y0 + (j + 0.5) * dx; }

  static ConservedStateGrid make_1d(int nx, double x0, double x1, int ghost);
  static ConservedStateGrid make_2d(int nx, int ny, double x0, double x1,
                                    double y0, int ghost);
};

struct SolverConfig {
  int weno_order = 5;  // 3 or 5
  double cfl = 0.5;
  double t_end = 0.0;
  BoundaryKind bc_x = BoundaryKind::Periodic;
  BoundaryKind bc_y = BoundaryKind::Periodic;
  double p_floor = 1e-8;
  double fixed_dt = 0.0;  // > 0 overrides the CFL rule (convergence studies)

  int ghost_width() const { return weno_order == 3 ? 2 : 3; }
};

struct PrimitiveField {
  std::vector<double> rho, u, v, e, p, c;
};

struct StepDiagnostics {
  long pressure_clamps = 0;
  long sound_fallbacks = 0;
};

struct ConservationRecord {
  int step;
  double t, dt;
  double mass, mom_x, mom_y, energy;
};

struct Snapshot {
  double t;
  int nx, ny;
  std::vector<double> x, y;            // cell centers (y empty in 1D)
  std::vector<double> rho, u, v, e, p; // v empty in 1D
};

struct SolveResult {
  std::vector<Snapshot> snapshots;
  std::vector<ConservationRecord> conservation;
  StepDiagnostics diagnostics;
  int steps = 0;
};

// u = m/rho, e = E/rho - |u|^2/2, p = closure(rho, e) clamped to p_floor.
// Fills interior and ghost cells; diag accumulates clamp/fallback counts.
void primitives_from_conserved(const ConservedStateGrid& grid,
                               const ClosureModel& closure, double p_floor,
                               PrimitiveField& prim, StepDiagnostics& diag);

// Left-biased WENO-Z interface value from a 2r-1 stencil (r = 2 or 3).
double weno_z_reconstruct(std::span<const double> stencil, int r);

// F_pm = (F +- alpha*U)/2 elementwise.
void global_lf_split(std::span<const double> flux, std::span<const double> u,
                     double alpha, std::span<double> plus,
                     std::span<double> minus);

double compute_dt(const ConservedStateGrid& grid, const ClosureModel& closure,
                  const SolverConfig& config, StepDiagnostics& diag);

// One SSP (Shu-Osher) RK3 step of the semi-discrete conservative update.
void rk3_step(ConservedStateGrid& grid, const SolverConfig& config,
              const ClosureModel& closure, double dt, StepDiagnostics& diag);

void fill_ghosts(ConservedStateGrid& grid, const SolverConfig& config);

Snapshot take_snapshot(const ConservedStateGrid& grid,
                       const ClosureModel& closure, double p_floor);

// Time loop to config.t_end; snapshots at the requested times (always
// including t_end) plus per-step conservation records.
SolveResult run_solver(ConservedStateGrid grid, const SolverConfig& config,
                       const ClosureModel& closure,
                       std::span<const double> snapshot_times = {});

struct RiemannState {
  double rho, u, p;
};

// Exact solution of the 1D ideal-gas Riemann problem sampled at
// similarity coordinate xi = x/t. Newton iteration on the star pressure
// to 1e-12.
RiemannState exact_riemann_solver(const RiemannState& left,
                                  const RiemannState& right, double gamma,
                                  double xi);

struct ToyTrajectory {
  std::vector<double> t;
  std::vector<double> u1;
};

// Classical RK4 on du1/dt = -closure(u1).
ToyTrajectory ode_integrate_toy(const ClosureModel& closure, double u0,
                                double t0, double t1, double dt);

void write_snapshot_csv(const Snapshot& snap, const std::string& path);
void write_conservation_csv(std::span<const ConservationRecord> recs,
                            const std::string& path);

}  // namespace ck
