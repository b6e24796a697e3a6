#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ck/cases.hpp"
#include "ck/errors.hpp"

using namespace ck;

TEST_CASE("registry covers every configured id") {
  const std::vector<std::string> expected = {
      "toy-train-c0-0.5", "toy-train-c0-1", "toy-train-c0-2", "toy-test",
      "ideal-train-1", "ideal-train-2", "ideal-train-3", "ideal-train-4",
      "ideal-train-5", "ideal-test-1", "ideal-test-2", "ideal-test-3",
      "ideal-test-4", "na-train-1", "na-train-2", "na-train-3", "na-train-4",
      "na-train-5", "na-test-1", "na-test-2", "na-test-3", "na-test-4"};
  const auto ids = case_ids();
  for (const auto& id : expected) {
    CAPTURE(id);
    CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
    CHECK_NOTHROW(find_case(id));
  }
  CHECK(&find_case("sod") == &find_case("ideal-test-2"));
  CHECK_THROWS_AS(find_case("no-such-case"), ConfigError);
}

TEST_CASE("sod initial condition golden values") {
  const auto& c = find_case("sod");
  const auto l = initial_condition(c, 0.25);
  CHECK(l.rho == doctest::Approx(1.0));
  CHECK(l.u == doctest::Approx(0.0));
  CHECK(l.p == doctest::Approx(1.0));
  const auto r = initial_condition(c, 0.75);
  CHECK(r.rho == doctest::Approx(0.125));
  CHECK(r.p == doctest::Approx(0.1));
}

TEST_CASE("smooth training initial conditions at sampled points") {
  {
    const auto& c = find_case("ideal-train-1");
    const auto s0 = initial_condition(c, 0.0);
    CHECK(s0.rho == doctest::Approx(0.35));
    CHECK(s0.u == doctest::Approx(1.0));
    CHECK(s0.p == doctest::Approx(0.154));
    const auto s1 = initial_condition(c, 0.5);
    CHECK(s1.rho == doctest::Approx(0.6));
    CHECK(s1.p == doctest::Approx(0.154 - 0.03 - 0.1));
  }
  {
    const auto& c = find_case("ideal-train-5");
    const auto s = initial_condition(c, 0.0);
    CHECK(s.rho == doctest::Approx(1.1));
    CHECK(s.u == doctest::Approx(0.0));
    CHECK(s.p == doctest::Approx(0.85));
  }
  {
    const auto& c = find_case("na-train-3");
    const auto s = initial_condition(c, 1.0);  // 1 - cos(pi) = 2
    CHECK(s.rho == doctest::Approx(0.65 + 0.5 * 2.0));
    CHECK(s.u == doctest::Approx(0.35 * std::sqrt(1.4) * 2.0));
    CHECK(s.p == doctest::Approx(0.26 + 0.2 * 2.0));
  }
}

TEST_CASE("acoustic initial condition is an isentropic simple wave") {
  const auto& c = find_case("ideal-test-1");
  const auto mid = initial_condition(c, 0.0);
  CHECK(mid.rho == doctest::Approx(1.0));
  CHECK(mid.u == doctest::Approx(0.0));
  CHECK(mid.p == doctest::Approx(1.0));

  const auto crest = initial_condition(c, 1.25);  // sin(2 pi x / 5) = 1
  CHECK(crest.u == doctest::Approx(1.0));
  // p = rho^gamma_ic along the wave
  CHECK(crest.p == doctest::Approx(std::pow(crest.rho, 2.0)).epsilon(1e-12));

  const auto& na = find_case("na-test-1");
  const auto nc = initial_condition(na, 1.25);
  CHECK(nc.u == doctest::Approx(0.3));
}

TEST_CASE("2d riemann quadrants golden value") {
  const auto& c = find_case("ideal-test-4");
  const auto ur = initial_condition(c, 0.75, 0.75);
  CHECK(ur.rho == doctest::Approx(0.5));
  CHECK(ur.u == doctest::Approx(0.5));
  CHECK(ur.v == doctest::Approx(-0.35));
  CHECK(ur.p == doctest::Approx(0.5));
  const auto lr = initial_condition(c, 0.75, 0.25);
  CHECK(lr.rho == doctest::Approx(1.5));
  CHECK(lr.u == doctest::Approx(-0.5));
}

TEST_CASE("conserved assembly uses the target analytic law") {
  const auto& c = find_case("na-test-2");  // sod states, noble-abel closure
  auto grid = build_initial_state(c, 4, 1, 2);
  const int k = grid.idx(0);
  CHECK(grid.rho[k] == doctest::Approx(1.0));
  CHECK(grid.mx[k] == doctest::Approx(0.0));
  // e = p (1 - b rho) / (rho (gamma - 1)) with p = 1
  CHECK(grid.E[k] == doctest::Approx(0.925 / 0.4).epsilon(1e-12));

  const auto& ci = find_case("sod");
  auto gi = build_initial_state(ci, 4, 1, 2);
  CHECK(gi.E[gi.idx(0)] == doctest::Approx(2.5));
}

TEST_CASE("error metrics") {
  const std::vector<double> a = {1.0, 1.0, 1.0, 1.0};
  CHECK(error_metrics(a, a).l2 == 0.0);
  CHECK(error_metrics(a, a).linf == 0.0);

  std::vector<double> b = a;
  for (double& v : b) v += 0.01;
  const auto m = error_metrics(b, a);
  CHECK(m.linf == doctest::Approx(0.01));
  CHECK(m.l1 == doctest::Approx(0.01));
  CHECK(m.rel_l2 == doctest::Approx(0.01).epsilon(1e-10));

  const std::vector<double> c = {1.0, 2.0};
  CHECK_THROWS_AS(error_metrics(a, c), ConfigError);
}

TEST_CASE("nearest-center restriction hits coincident centers at 3x nesting") {
  std::vector<double> fine(15);
  for (int j = 0; j < 15; ++j) fine[j] = 10.0 * j;
  const auto coarse = restrict_nearest(fine, 5);
  REQUIRE(coarse.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(coarse[i] == doctest::Approx(fine[3 * i + 1]));
}

TEST_CASE("training data generation is deterministic and well-formed") {
  const auto& c = find_case("ideal-train-1");
  const auto a = generate_training_data(c, 200, 40, 7);
  const auto b = generate_training_data(c, 200, 40, 7);
  const auto d = generate_training_data(c, 200, 40, 8);

  CHECK(a.points.size() == 80);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].rho == b.points[i].rho);
  }
  bool differs = d.points.size() != a.points.size();
  for (std::size_t i = 0; !differs && i < a.points.size(); ++i)
    differs = a.points[i].x != d.points[i].x;
  CHECK(differs);

  CHECK(a.envelope.rho_min > 0.0);
  CHECK(a.envelope.rho_max > a.envelope.rho_min);
  CHECK(a.envelope.e_max > a.envelope.e_min);
  for (const auto& pt : a.points) {
    if (pt.t == 0.0)
      CHECK(pt.mask == (kMaskRho | kMaskU | kMaskE | kMaskP));
    else {
      CHECK(pt.t == doctest::Approx(c.t_end));
      CHECK(pt.mask == (kMaskRho | kMaskU));
    }
  }
}

TEST_CASE("dataset json round trip") {
  const auto& c = find_case("ideal-train-1");
  const auto ds = generate_training_data(c, 200, 20, 3);
  const auto path =
      (std::filesystem::temp_directory_path() / "ck_ds.json").string();
  save_dataset_json(ds, path);
  const auto back = load_dataset_json(path);
  std::filesystem::remove(path);

  CHECK(back.case_id == ds.case_id);
  CHECK(back.seed == ds.seed);
  CHECK(back.envelope.rho_min == doctest::Approx(ds.envelope.rho_min));
  REQUIRE(back.points.size() == ds.points.size());
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    CHECK(back.points[i].mask == ds.points[i].mask);
    CHECK(back.points[i].x == doctest::Approx(ds.points[i].x));
    CHECK(back.points[i].rho == doctest::Approx(ds.points[i].rho));
  }
  CHECK_THROWS_AS(load_dataset_json("/no/such/dataset.json"), ConfigError);
}

TEST_CASE("toy case configuration") {
  const auto& c = find_case("toy-test");
  CHECK(c.system == SystemKind::Toy);
  CHECK(c.toy_c0 == doctest::Approx(3.0));
  CHECK(c.toy_u0 == doctest::Approx(0.6));
  CHECK(c.t_end == doctest::Approx(2.0));
  CHECK_THROWS_AS(build_initial_state(c, 10, 1, 2), ConfigError);
  CHECK_THROWS_AS(generate_training_data(c, 100, 10, 0), ConfigError);
}
