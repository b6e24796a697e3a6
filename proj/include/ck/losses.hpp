#pragma once

#include <span>
#include <string>

#include "ck/cases.hpp"
#include "ck/net.hpp"

namespace ck {

struct LossWeights {
  double w_pde = 1.0;
  double w_ibcs = 10.0;
  double w_data = 10.0;
  double w_rh = 1.0;
  double w_cons = 1.0;
  double lambda_reg = 1e-6;  // on the shared closure net weights
  double k_lambda = 0.2;     // compression-sensing weight steepness
  double eps_dp = 0.1;       // RH discontinuity gate on |p - p_L|
  double eps_du = 0.1;       // RH discontinuity gate on |u - u_L|
  double dx_rh_frac = 0.01;  // RH pair separation, fraction of domain
};

struct LossBreakdown {
  double total = 0.0;
  double pde = 0.0, ibcs = 0.0, data = 0.0, rh = 0.0, cons = 0.0, reg = 0.0;
  void add(const LossBreakdown& o);
};

// Collocation samples consumed by one loss recording.
struct ResidualPointSets {
  std::vector<double> pde_t, pde_x;  // interior points, also the RH pairs
  std::vector<double> con_x;         // conservation slice abscissae
  std::vector<double> bd_t;          // boundary-flux time samples
};

// Gas-dynamics weight 1 / (k (|du/dx| - du/dx) + 1): near 1 in smooth
// and expansion regions, small inside compressions.
double lambda_weight(double du_dx, double k);

// Jump-condition residuals between a state and a nearby reference, and
// the gating weight that switches the penalty on across strong jumps.
double rh_f1(double rho_l, double u_l, double p_l, double rho, double u,
             double p);
double rh_f2(double rho_l, double e_l, double p_l, double rho, double e,
             double p);
double rh_lambda2(double dp, double du, double eps_dp, double eps_du);

// Records the weighted loss of one flow case on the tape: the governing
// residual with the compression weight, initial-slice and late-slice
// data mismatches, the jump-condition penalty across close pairs, and
// the integral balance over the space-time box. Returns the weighted
// sum; raw per-term means are accumulated into `bd`.
Var record_euler_case_loss(Tape& tape, const CaseSpec& c,
                           const DenseNet& net1, const TapedNet& s1,
                           const DenseNet& net2, const TapedNet& s2,
                           std::span<const SparsePoint> data,
                           const ResidualPointSets& pts,
                           const LossWeights& w, LossBreakdown& bd);

// Same contract for the scalar toy problem: residual du1/dt + u2(u1),
// observed u1 values, and the initial value u1(t0) = u0.
Var record_toy_case_loss(Tape& tape, const CaseSpec& c, const DenseNet& net1,
                         const TapedNet& s1, const DenseNet& net2,
                         const TapedNet& s2, std::span<const double> obs_t,
                         std::span<const double> obs_u1, double u0,
                         const ResidualPointSets& pts, const LossWeights& w,
                         LossBreakdown& bd);

// lambda_reg * sum of squared closure-net weights (biases excluded).
Var record_reg_loss(Tape& tape, const DenseNet& net2, const TapedNet& s2,
                    double lambda_reg, LossBreakdown& bd);

std::string loss_csv_header();
std::string format_loss_csv(long iteration, const LossBreakdown& bd);

}  // namespace ck
