#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ck/errors.hpp"
#include "ck/trainer.hpp"

using namespace ck;
namespace fs = std::filesystem;

TEST_CASE("adam minimizes a quadratic") {
  std::vector<double> x = {5.0, -3.0};
  AdamState adam(2);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> g = {2.0 * x[0], 2.0 * x[1]};
    adam.step(x, g, 0.05);
  }
  CHECK(std::abs(x[0]) < 1e-3);
  CHECK(std::abs(x[1]) < 1e-3);
}

TEST_CASE("train config json round trip and validation") {
  TrainConfig cfg;
  cfg.case_ids = {"toy-train-c0-1"};
  cfg.net2_hidden = {15, 15};
  cfg.iterations = 123;
  cfg.lr = 5e-3;
  cfg.seed = 9;
  cfg.weights.lambda_reg = 2e-6;
  const auto j = train_config_to_json(cfg);
  const TrainConfig back = train_config_from_json(j);
  CHECK(back.case_ids == cfg.case_ids);
  CHECK(back.net2_hidden == cfg.net2_hidden);
  CHECK(back.iterations == 123);
  CHECK(back.lr == doctest::Approx(5e-3));
  CHECK(back.seed == 9);
  CHECK(back.weights.lambda_reg == doctest::Approx(2e-6));

  nlohmann::json bad = j;
  bad["iterations"] = 0;
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  bad = j;
  bad["lr"] = -1.0;
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
}

TEST_CASE("collocation sampling respects counts and the box") {
  const auto& c = find_case("ideal-train-1");
  std::mt19937_64 rng(4);
  const auto pts = sample_points(c, rng);
  CHECK(pts.pde_t.size() == 8000);
  CHECK(pts.con_x.size() == 300);
  CHECK(pts.bd_t.size() == 200);
  for (std::size_t i = 0; i < pts.pde_t.size(); ++i) {
    CHECK(pts.pde_t[i] >= c.t0);
    CHECK(pts.pde_t[i] <= c.t_end);
    CHECK(pts.pde_x[i] >= c.x0);
    CHECK(pts.pde_x[i] <= c.x1);
  }
  std::mt19937_64 rng2(4);
  const auto again = sample_points(c, rng2);
  CHECK(again.pde_t == pts.pde_t);
}

TEST_CASE("baseline refuses sparse data below ten triples") {
  SparseDataset ds;
  ds.case_id = "ideal-train-1";
  ds.envelope = {0.1, 1.0, 0.3, 3.0};
  for (int i = 0; i < 9; ++i) {
    SparsePoint pt;
    pt.mask = kMaskRho | kMaskE | kMaskP;
    pt.rho = 0.5;
    pt.e = 1.0;
    pt.p = 0.2;
    ds.points.push_back(pt);
  }
  TrainConfig cfg;
  cfg.iterations = 10;
  const SparseDataset dss[1] = {ds};
  CHECK_THROWS_AS(train_data_driven_baseline(cfg, dss, nullptr), ConfigError);
}

TEST_CASE("baseline fits an ideal-gas pressure table") {
  AnalyticEos eos{IdealGas{1.4}};
  SparseDataset ds;
  ds.case_id = "ideal-train-1";
  ds.envelope = {0.2, 1.2, 0.5, 2.5};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.2, 1.2), ue(0.5, 2.5);
  for (int i = 0; i < 80; ++i) {
    SparsePoint pt;
    pt.mask = kMaskRho | kMaskE | kMaskP;
    pt.rho = ur(rng);
    pt.e = ue(rng);
    pt.p = eos.pressure(pt.rho, pt.e);
    ds.points.push_back(pt);
  }
  TrainConfig cfg;
  cfg.net2_hidden = {12};
  cfg.iterations = 1500;
  cfg.lr = 5e-3;
  TrainReport report;
  const SparseDataset dss[1] = {ds};
  const DenseNet net = train_data_driven_baseline(cfg, dss, &report);
  CHECK(report.final_loss.data < 1e-3);
  const double in[2] = {0.7, 1.5};
  CHECK(net_forward(net, in)[0] ==
        doctest::Approx(eos.pressure(0.7, 1.5)).epsilon(0.2));
}

TEST_CASE("toy constructor run decreases the loss and writes artifacts") {
  TrainConfig cfg;
  cfg.case_ids = {"toy-train-c0-1"};
  cfg.net2_hidden = {8};
  cfg.net1_hidden = {8, 8};
  cfg.iterations = 400;
  cfg.batch_pde = 64;
  cfg.lr = 5e-3;
  cfg.log_every = 100;
  cfg.seed = 1;

  const auto out = (fs::temp_directory_path() / "ck_toy_train").string();
  fs::remove_all(out);
  const auto res = train_constructor(cfg, {}, out);

  CHECK(std::isfinite(res.report.final_loss.total));
  CHECK(res.report.closure_l2 >= 0.0);
  CHECK(res.net1s.size() == 1);
  CHECK(fs::exists(fs::path(out) / "net2.json"));
  CHECK(fs::exists(fs::path(out) / "net1_toy-train-c0-1.json"));
  CHECK(fs::exists(fs::path(out) / "loss_log.csv"));
  CHECK(fs::exists(fs::path(out) / "train_report.json"));

  // same seed reproduces the run exactly
  const auto res2 = train_constructor(cfg, {}, "");
  std::vector<double> a(res.net2.param_count()), b(res2.net2.param_count());
  res.net2.copy_params(a);
  res2.net2.copy_params(b);
  CHECK(a == b);
  fs::remove_all(out);
}

TEST_CASE("constructor rejects inconsistent inputs") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train_constructor(cfg, {}, ""), ConfigError);
  cfg.case_ids = {"toy-train-c0-1", "ideal-train-1"};
  CHECK_THROWS_AS(train_constructor(cfg, {}, ""), ConfigError);
  cfg.case_ids = {"ideal-train-1"};
  CHECK_THROWS_AS(train_constructor(cfg, {}, ""), ConfigError);  // no dataset
}

TEST_CASE("closure evaluation grids") {
  AnalyticEos eos{IdealGas{1.4}};
  // a perfect ideal-gas surrogate is impossible; compare truth to itself
  // through a wrapper net that reproduces p = 0 and check the norm scale
  DenseNet zero = init_net(std::vector<int>{2, 1, 1}, Activation::Tanh, 0);
  for (auto& l : zero.layers) std::fill(l.w.begin(), l.w.end(), 0.0);
  StateEnvelope env{0.5, 1.0, 1.0, 2.0};
  const double l2 = closure_l2_vs_truth_euler(zero, eos, env, 21);
  CHECK(l2 == doctest::Approx(1.0).epsilon(1e-10));  // zero net -> rel err 1

  DenseNet toyz = init_net(std::vector<int>{1, 1, 1}, Activation::Tanh, 0);
  for (auto& l : toyz.layers) std::fill(l.w.begin(), l.w.end(), 0.0);
  CHECK(closure_l2_vs_truth_toy(toyz, 0.1, 0.9, 51) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("pinn forward solve runs on the toy test case") {
  // closure net pre-fit to the true source on the relevant range
  TrainConfig fit;
  fit.net2_hidden = {10};
  fit.iterations = 600;
  fit.lr = 5e-3;
  fit.seed = 2;
  DenseNet net2 = init_net(std::vector<int>{1, 10, 1}, Activation::Tanh, 2);
  {
    Tape tape;
    std::vector<double> grad(net2.param_count());
    AdamState adam(grad.size());
    for (int iter = 0; iter < 600; ++iter) {
      tape.reset();
      const TapedNet s2 = bind_params(tape, net2);
      Var sum = kNoVar;
      for (int i = 0; i <= 40; ++i) {
        const double u1 = 0.6 * i / 40.0;
        TDual in;
        in.v = tape.leaf(u1);
        const TDual ins[1] = {in};
        const Var y = record_forward(tape, net2, s2, ins, 0)[0].v;
        const Var sq = tape.square(tape.add_c(y, -toy_source(u1)));
        sum = sum == kNoVar ? sq : tape.add(sum, sq);
      }
      const Var loss = tape.mul_c(sum, 1.0 / 41.0);
      tape.backward(loss);
      std::fill(grad.begin(), grad.end(), 0.0);
      accumulate_param_grads(tape, net2, s2, grad);
      std::vector<double> p(net2.param_count());
      net2.copy_params(p);
      adam.step(p, grad, 5e-3);
      net2.set_params(p);
    }
  }

  TrainConfig cfg;
  cfg.net1_hidden = {10, 10};
  cfg.iterations = 800;
  cfg.batch_pde = 64;
  cfg.lr = 5e-3;
  cfg.seed = 3;
  const auto& c = find_case("toy-test");
  const DenseNet net1 = solve_new_case_pinn_forward(c, net2, cfg, "");

  // compare against the analytic trajectory (c0 = 3 passes through u0 = 0.6)
  double max_err = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double t = 2.0 * i / 20.0;
    const double in[1] = {t};
    max_err = std::max(max_err,
                       std::abs(net_forward(net1, in)[0] -
                                toy_solution(3.0, t)));
  }
  CHECK(max_err < 0.05);  // loose bound; the acceptance run tightens it
}
