#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ck/losses.hpp"

using namespace ck;

TEST_CASE("compression weight hand values") {
  CHECK(lambda_weight(0.0, 0.2) == doctest::Approx(1.0));
  CHECK(lambda_weight(5.0, 0.2) == doctest::Approx(1.0));
  CHECK(lambda_weight(-5.0, 0.2) == doctest::Approx(1.0 / 3.0));
  double prev = 1.0;
  for (double d = 0.0; d > -50.0; d -= 0.5) {
    const double l = lambda_weight(d, 0.2);
    CHECK(l > 0.0);
    CHECK(l <= prev + 1e-15);
    prev = l;
  }
}

TEST_CASE("jump-condition residual hand values") {
  // identical states vanish
  CHECK(rh_f1(1.0, 0.3, 0.7, 1.0, 0.3, 0.7) == 0.0);
  CHECK(rh_f2(1.0, 2.5, 0.7, 1.0, 2.5, 0.7) == 0.0);

  // sod jump states with zero velocity jump: gate closed
  CHECK(rh_lambda2(0.1 - 1.0, 0.0, 0.1, 0.1) == 0.0);

  // same jump with a 0.5 velocity difference
  const double f1 = rh_f1(1.0, 0.0, 1.0, 0.125, 0.5, 0.1);
  CHECK(f1 == doctest::Approx(-0.75625).epsilon(1e-12));
  CHECK(rh_lambda2(0.1 - 1.0, 0.5, 0.1, 0.1) ==
        doctest::Approx(0.45).epsilon(1e-12));
}

namespace {

// Constant-output net: zero weights, the output shift carries the state.
DenseNet const_net(int n_in, std::vector<double> out) {
  std::vector<int> widths = {n_in, 1, static_cast<int>(out.size())};
  DenseNet net = init_net(widths, Activation::Tanh, 0);
  for (auto& l : net.layers) std::fill(l.w.begin(), l.w.end(), 0.0);
  net.out_shift = std::move(out);
  return net;
}

ResidualPointSets small_points(const CaseSpec& c, int n_pde) {
  ResidualPointSets p;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ut(c.t0, c.t_end);
  std::uniform_real_distribution<double> ux(c.x0, c.x1);
  for (int i = 0; i < n_pde; ++i) {
    p.pde_t.push_back(ut(rng));
    p.pde_x.push_back(ux(rng));
  }
  for (int i = 0; i < 8; ++i) p.con_x.push_back(ux(rng));
  for (int i = 0; i < 6; ++i) p.bd_t.push_back(ut(rng));
  return p;
}

}  // namespace

TEST_CASE("constant state yields zero residual, balance, and jump losses") {
  const auto& c = find_case("ideal-train-1");
  const double rho0 = 0.5, u0 = 0.8, e0 = 1.2, p0 = 0.24;
  DenseNet net1 = const_net(2, {rho0, u0, e0});
  DenseNet net2 = const_net(2, {p0});

  std::vector<SparsePoint> data;
  SparsePoint pt;
  pt.t = 0.0;
  pt.x = 0.2;
  pt.mask = kMaskRho | kMaskU | kMaskE | kMaskP;
  pt.rho = rho0;
  pt.u = u0;
  pt.e = e0;
  pt.p = p0;
  data.push_back(pt);
  pt.t = c.t_end;
  pt.mask = kMaskRho | kMaskU;
  data.push_back(pt);

  const auto pts = small_points(c, 12);
  LossWeights w;
  LossBreakdown bd;
  Tape tape;
  const TapedNet s2 = bind_params(tape, net2);
  const TapedNet s1 = bind_params(tape, net1);
  const Var loss = record_euler_case_loss(tape, c, net1, s1, net2, s2, data,
                                          pts, w, bd);
  CHECK(tape.value(loss) == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(bd.pde == doctest::Approx(0.0));
  CHECK(bd.rh == 0.0);
  CHECK(bd.cons == doctest::Approx(0.0).epsilon(1e-24));
  CHECK(bd.ibcs == doctest::Approx(0.0));
  CHECK(bd.data == doctest::Approx(0.0));
}

TEST_CASE("toy residual trivial cases") {
  const auto& c = find_case("toy-train-c0-1");
  ResidualPointSets pts;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ut(c.t0, c.t_end);
  for (int i = 0; i < 20; ++i) pts.pde_t.push_back(ut(rng));
  LossWeights w;

  // constant state net, zero closure -> zero residual
  {
    DenseNet net1 = const_net(1, {0.4});
    DenseNet net2 = const_net(1, {0.0});
    Tape tape;
    const TapedNet s2 = bind_params(tape, net2);
    const TapedNet s1 = bind_params(tape, net1);
    LossBreakdown bd;
    record_toy_case_loss(tape, c, net1, s1, net2, s2, {}, {}, 0.4, pts, w,
                         bd);
    CHECK(bd.pde == doctest::Approx(0.0));
    CHECK(bd.ibcs == doctest::Approx(0.0));
  }

  // u1(t) = t with zero closure -> residual 1 at every point
  {
    DenseNet net1 = init_net(std::vector<int>{1, 1, 1},
                             Activation::Identity, 0);
    for (auto& l : net1.layers) std::fill(l.w.begin(), l.w.end(), 1.0);
    DenseNet net2 = const_net(1, {0.0});
    Tape tape;
    const TapedNet s2 = bind_params(tape, net2);
    const TapedNet s1 = bind_params(tape, net1);
    LossBreakdown bd;
    record_toy_case_loss(tape, c, net1, s1, net2, s2, {}, {}, 0.0, pts, w,
                         bd);
    CHECK(bd.pde == doctest::Approx(1.0).epsilon(1e-10));
  }
}

namespace {

double euler_loss_value(const CaseSpec& c, const DenseNet& net1,
                        const DenseNet& net2,
                        std::span<const SparsePoint> data,
                        const ResidualPointSets& pts, const LossWeights& w) {
  Tape tape;
  const TapedNet s2 = bind_params(tape, net2);
  const TapedNet s1 = bind_params(tape, net1);
  LossBreakdown bd;
  Var loss = record_euler_case_loss(tape, c, net1, s1, net2, s2, data, pts,
                                    w, bd);
  loss = tape.add(loss, record_reg_loss(tape, net2, s2, w.lambda_reg, bd));
  return tape.value(loss);
}

}  // namespace

TEST_CASE("full case loss parameter gradients match finite differences") {
  const auto& c = find_case("ideal-train-1");
  DenseNet net1 = init_net(std::vector<int>{2, 6, 3}, Activation::Tanh, 21);
  net1.out_shift = {0.6, 0.5, 1.0};
  net1.out_scale = {0.3, 0.5, 0.5};
  DenseNet net2 = init_net(std::vector<int>{2, 5, 1}, Activation::Tanh, 22);
  net2.out_shift = {0.3};

  std::vector<SparsePoint> data;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(c.x0, c.x1);
  for (int i = 0; i < 6; ++i) {
    SparsePoint pt;
    pt.t = i < 3 ? 0.0 : c.t_end;
    pt.x = ux(rng);
    pt.mask = i < 3 ? (kMaskRho | kMaskU | kMaskE | kMaskP)
                    : (kMaskRho | kMaskU);
    pt.rho = 0.5;
    pt.u = 0.4;
    pt.e = 1.1;
    pt.p = 0.2;
    data.push_back(pt);
  }
  const auto pts = small_points(c, 10);
  LossWeights w;
  // the compression and jump weights are held constant during a step,
  // so the finite-difference oracle freezes them too
  w.k_lambda = 0.0;
  w.eps_dp = 1e9;

  Tape tape;
  const TapedNet s2 = bind_params(tape, net2);
  const TapedNet s1 = bind_params(tape, net1);
  LossBreakdown bd;
  Var loss = record_euler_case_loss(tape, c, net1, s1, net2, s2, data, pts,
                                    w, bd);
  loss = tape.add(loss, record_reg_loss(tape, net2, s2, w.lambda_reg, bd));
  tape.backward(loss);

  std::vector<double> g1(net1.param_count(), 0.0);
  std::vector<double> g2(net2.param_count(), 0.0);
  accumulate_param_grads(tape, net1, s1, g1);
  accumulate_param_grads(tape, net2, s2, g2);

  const double h = 1e-6;
  auto check_grads = [&](DenseNet& net, const std::vector<double>& g) {
    std::vector<double> params(net.param_count());
    net.copy_params(params);
    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::vector<double> p = params;
      p[i] += h;
      net.set_params(p);
      const double fp = euler_loss_value(c, net1, net2, data, pts, w);
      p[i] -= 2 * h;
      net.set_params(p);
      const double fm = euler_loss_value(c, net1, net2, data, pts, w);
      net.set_params(params);
      const double fd = (fp - fm) / (2 * h);
      const double denom = std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, std::abs(fd - g[i]) / denom);
    }
    CHECK(max_rel < 1e-5);
  };
  check_grads(net1, g1);
  check_grads(net2, g2);
}

TEST_CASE("parallel branches have independent state-net gradients") {
  const auto& c = find_case("ideal-train-1");
  DenseNet net1a = init_net(std::vector<int>{2, 5, 3}, Activation::Tanh, 31);
  DenseNet net1b = init_net(std::vector<int>{2, 5, 3}, Activation::Tanh, 32);
  DenseNet net2 = init_net(std::vector<int>{2, 4, 1}, Activation::Tanh, 33);
  const auto pts = small_points(c, 8);
  LossWeights w;

  Tape tape;
  const TapedNet s2 = bind_params(tape, net2);
  const TapedNet sa = bind_params(tape, net1a);
  const TapedNet sb = bind_params(tape, net1b);  // bound, never used
  LossBreakdown bd;
  const Var loss = record_euler_case_loss(tape, c, net1a, sa, net2, s2, {},
                                          pts, w, bd);
  tape.backward(loss);

  std::vector<double> gb(net1b.param_count(), 0.0);
  accumulate_param_grads(tape, net1b, sb, gb);
  for (double g : gb) CHECK(g == 0.0);

  std::vector<double> ga(net1a.param_count(), 0.0);
  accumulate_param_grads(tape, net1a, sa, ga);
  double norm = 0.0;
  for (double g : ga) norm += g * g;
  CHECK(norm > 0.0);
}

TEST_CASE("breakdown recombines to the weighted total") {
  const auto& c = find_case("ideal-train-2");
  DenseNet net1 = init_net(std::vector<int>{2, 6, 3}, Activation::Tanh, 41);
  net1.out_shift = {0.8, 0.2, 1.5};
  DenseNet net2 = init_net(std::vector<int>{2, 5, 1}, Activation::Tanh, 42);
  const auto pts = small_points(c, 10);
  LossWeights w;
  w.w_pde = 1.0;
  w.w_ibcs = 10.0;
  w.w_data = 10.0;
  w.w_rh = 1.0;
  w.w_cons = 1.0;

  std::vector<SparsePoint> data;
  SparsePoint pt;
  pt.t = 0.0;
  pt.x = -0.4;
  pt.mask = kMaskRho | kMaskP;
  pt.rho = 0.9;
  pt.p = 0.7;
  data.push_back(pt);

  Tape tape;
  const TapedNet s2 = bind_params(tape, net2);
  const TapedNet s1 = bind_params(tape, net1);
  LossBreakdown bd;
  Var loss = record_euler_case_loss(tape, c, net1, s1, net2, s2, data, pts,
                                    w, bd);
  loss = tape.add(loss, record_reg_loss(tape, net2, s2, w.lambda_reg, bd));
  const double expect = w.w_pde * bd.pde + w.w_ibcs * bd.ibcs +
                        w.w_data * bd.data + w.w_rh * bd.rh +
                        w.w_cons * bd.cons + bd.reg;
  CHECK(tape.value(loss) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(bd.total == doctest::Approx(tape.value(loss)).epsilon(1e-12));
}

TEST_CASE("loss csv line format") {
  CHECK(loss_csv_header() ==
        "iteration,total,L_PDE,L_IBCs,L_data,L_RH,L_CONs,reg");
  LossBreakdown bd;
  bd.total = 1.5;
  bd.pde = 0.25;
  const auto line = format_loss_csv(42, bd);
  CHECK(line.substr(0, 3) == "42,");
  CHECK(line.find(",0.25,") != std::string::npos);
}
