#pragma once

#include <map>
#include <string>
#include <vector>

#include "ck/solver.hpp"

namespace ck {

enum class SystemKind { Toy, Euler1D, Euler2D };

struct SamplingCounts {
  int n_pde = 8000;       // residual points, shared with the RH loss
  int n_con = 300;        // conservation points per time slice
  int n_bd = 200;         // boundary samples for the conservation loss
  int n_data_slice = 100; // observed points per data slice
};

// Registry entry for one training or test configuration.
struct CaseSpec {
  std::string id;
  SystemKind system = SystemKind::Euler1D;
  double x0 = -1.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
  double t0 = 0.0;
  double t_end = 0.5;
  BoundaryKind bc = BoundaryKind::Periodic;
  std::string ic_id;
  std::map<std::string, double> ic_params;
  int default_nx = 200;
  int default_order = 5;
  SamplingCounts counts;
  std::vector<int> net1_hidden;  // hidden layer widths
  std::string target_closure;    // closure spec of the generating truth

  double toy_c0 = 0.0;  // analytic-solution family constant (toy cases)
  double toy_u0 = 0.0;  // initial value of the toy test case
  int n_data = 0;       // uniformly sampled observations (toy cases)

  double domain_length() const { return x1 - x0; }
};

struct PrimState {
  double rho = 0.0, u = 0.0, v = 0.0, p = 0.0;
};

const std::vector<CaseSpec>& case_registry();
const CaseSpec& find_case(const std::string& id);
std::vector<std::string> case_ids();

// Pointwise initial condition in primitive variables.
PrimState initial_condition(const CaseSpec& c, double x, double y = 0.0);

// Cell-center evaluation; conserved variables assembled with the case's
// target analytic EOS (pressure converted to internal energy).
ConservedStateGrid build_initial_state(const CaseSpec& c, int nx, int ny,
                                       int ghost);

SolverConfig solver_config_for(const CaseSpec& c);

// (rho, e) box visited by a reference solution; the training envelope.
struct StateEnvelope {
  double rho_min = 0.0, rho_max = 0.0;
  double e_min = 0.0, e_max = 0.0;
  void absorb(double rho, double e);
  void merge(const StateEnvelope& o);
};

// Component bits for sparse observations.
inline constexpr unsigned kMaskRho = 1u;
inline constexpr unsigned kMaskU = 2u;
inline constexpr unsigned kMaskE = 4u;
inline constexpr unsigned kMaskP = 8u;

struct SparsePoint {
  double t = 0.0, x = 0.0;
  unsigned mask = 0;
  double rho = 0.0, u = 0.0, e = 0.0, p = 0.0;  // valid where masked
};

struct SparseDataset {
  std::string case_id;
  int fine_n = 0;
  std::uint64_t seed = 0;
  StateEnvelope envelope;
  std::vector<SparsePoint> points;
};

// Fine-grid reference solve with the target analytic EOS, subsampled at
// the initial and final time slices. Deterministic per seed.
SparseDataset generate_training_data(const CaseSpec& c, int fine_n,
                                     int points_per_slice,
                                     std::uint64_t seed);

void save_dataset_json(const SparseDataset& ds, const std::string& path);
SparseDataset load_dataset_json(const std::string& path);

struct ErrorMetrics {
  double l1 = 0.0, l2 = 0.0, linf = 0.0, rel_l2 = 0.0;
};

ErrorMetrics error_metrics(std::span<const double> numeric,
                           std::span<const double> reference);

// Nearest-cell-center restriction of a finer 1D cell-average field.
std::vector<double> restrict_nearest(std::span<const double> fine, int coarse_n);

}  // namespace ck
