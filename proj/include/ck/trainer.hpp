#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "ck/losses.hpp"

namespace ck {

struct TrainConfig {
  std::vector<std::string> case_ids;
  std::vector<int> net2_hidden = {20};
  std::vector<int> net1_hidden;  // empty = per-case registry default
  Activation activation = Activation::Tanh;
  long iterations = 20000;
  double lr = 2e-3;
  double lr_decay = 0.99;
  long lr_decay_every = 200;
  double ema_decay = 0.999;  // Polyak average of the closure net; 0 = off
  int batch_pde = 256;  // residual points per case per iteration
  int batch_con = 300;  // conservation slice points; >= pool size = use all
  int batch_bd = 200;   // boundary time samples; >= pool size = use all
  long log_every = 100;
  long checkpoint_every = 0;  // 0 = final only
  std::uint64_t seed = 0;
  LossWeights weights;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

struct TrainReport {
  long iterations = 0;
  double wall_seconds = 0.0;
  LossBreakdown final_loss;
  double closure_l2 = -1.0;  // relative L2 vs the generating law, if known
  nlohmann::json to_json() const;
};

struct ConstructorResult {
  DenseNet net2;
  std::vector<DenseNet> net1s;  // one per training case
  TrainReport report;
};

// Adam with bias correction.
struct AdamState {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad, double lr);
};

// Fixed collocation pools for one case, drawn uniformly over the
// space-time box. Deterministic per rng state.
ResidualPointSets sample_points(const CaseSpec& c, std::mt19937_64& rng);

// Joint fit of the per-case state nets and the shared closure net.
// `datasets` aligns with cfg.case_ids for flow cases; toy cases draw
// their observations from the analytic trajectory. Writes loss_log.csv
// plus model checkpoints under out_dir when it is nonempty. Aborts with
// TrainError on a non-finite loss.
ConstructorResult train_constructor(const TrainConfig& cfg,
                                    std::span<const SparseDataset> datasets,
                                    const std::string& out_dir);

// Relative L2 of the learned p(rho, e) over an evaluation grid covering
// the envelope shrunk 5 percent per side.
double closure_l2_vs_truth_euler(const DenseNet& net2,
                                 const ClosureModel& truth,
                                 const StateEnvelope& env, int n = 101,
                                 double shrink = 0.05);

// Relative L2 of the learned u2(u1) over [u1_lo, u1_hi].
double closure_l2_vs_truth_toy(const DenseNet& net2, double u1_lo,
                               double u1_hi, int n = 201);

// Plain supervised fit of the same closure architecture on the
// (rho, e) -> p triples visible in the initial data slices. Refuses to
// run with fewer than 10 complete triples.
DenseNet train_data_driven_baseline(const TrainConfig& cfg,
                                    std::span<const SparseDataset> datasets,
                                    TrainReport* report = nullptr);

// Forward solve of a new case with the closure net frozen: a fresh
// state net is trained against the residual and the initial value only.
// Returns the state net; the trajectory is its t |-> u1 restriction.
DenseNet solve_new_case_pinn_forward(const CaseSpec& c, const DenseNet& net2,
                                     const TrainConfig& cfg,
                                     const std::string& out_dir);

}  // namespace ck
