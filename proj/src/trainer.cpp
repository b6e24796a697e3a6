#include "ck/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ck/errors.hpp"

namespace ck {

namespace fs = std::filesystem;

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    if (j.contains("case_ids"))
      c.case_ids = j["case_ids"].get<std::vector<std::string>>();
    if (j.contains("net2_hidden"))
      c.net2_hidden = j["net2_hidden"].get<std::vector<int>>();
    if (j.contains("net1_hidden"))
      c.net1_hidden = j["net1_hidden"].get<std::vector<int>>();
    if (j.contains("activation"))
      c.activation = activation_from_name(j["activation"].get<std::string>());
    if (j.contains("iterations")) c.iterations = j["iterations"].get<long>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("lr_decay")) c.lr_decay = j["lr_decay"].get<double>();
    if (j.contains("lr_decay_every"))
      c.lr_decay_every = j["lr_decay_every"].get<long>();
    if (j.contains("ema_decay")) c.ema_decay = j["ema_decay"].get<double>();
    if (j.contains("batch_pde")) c.batch_pde = j["batch_pde"].get<int>();
    if (j.contains("batch_con")) c.batch_con = j["batch_con"].get<int>();
    if (j.contains("batch_bd")) c.batch_bd = j["batch_bd"].get<int>();
    if (j.contains("log_every")) c.log_every = j["log_every"].get<long>();
    if (j.contains("checkpoint_every"))
      c.checkpoint_every = j["checkpoint_every"].get<long>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      if (w.contains("pde")) c.weights.w_pde = w["pde"].get<double>();
      if (w.contains("ibcs")) c.weights.w_ibcs = w["ibcs"].get<double>();
      if (w.contains("data")) c.weights.w_data = w["data"].get<double>();
      if (w.contains("rh")) c.weights.w_rh = w["rh"].get<double>();
      if (w.contains("cons")) c.weights.w_cons = w["cons"].get<double>();
      if (w.contains("lambda_reg"))
        c.weights.lambda_reg = w["lambda_reg"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (c.iterations < 1) throw ConfigError("train config: iterations < 1");
  if (c.lr <= 0.0) throw ConfigError("train config: lr must be positive");
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["case_ids"] = c.case_ids;
  j["net2_hidden"] = c.net2_hidden;
  j["net1_hidden"] = c.net1_hidden;
  j["activation"] = activation_name(c.activation);
  j["iterations"] = c.iterations;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["lr_decay_every"] = c.lr_decay_every;
  j["ema_decay"] = c.ema_decay;
  j["batch_pde"] = c.batch_pde;
  j["batch_con"] = c.batch_con;
  j["batch_bd"] = c.batch_bd;
  j["log_every"] = c.log_every;
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  j["weights"] = {{"pde", c.weights.w_pde},   {"ibcs", c.weights.w_ibcs},
                  {"data", c.weights.w_data}, {"rh", c.weights.w_rh},
                  {"cons", c.weights.w_cons},
                  {"lambda_reg", c.weights.lambda_reg}};
  return j;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["wall_seconds"] = wall_seconds;
  j["final_loss"] = {{"total", final_loss.total}, {"pde", final_loss.pde},
                     {"ibcs", final_loss.ibcs},   {"data", final_loss.data},
                     {"rh", final_loss.rh},       {"cons", final_loss.cons},
                     {"reg", final_loss.reg}};
  if (closure_l2 >= 0.0) j["closure_l2"] = closure_l2;
  return j;
}

void AdamState::step(std::span<double> params, std::span<const double> grad,
                     double lr) {
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

ResidualPointSets sample_points(const CaseSpec& c, std::mt19937_64& rng) {
  ResidualPointSets p;
  std::uniform_real_distribution<double> ut(c.t0, c.t_end);
  std::uniform_real_distribution<double> ux(c.x0, c.x1);
  p.pde_t.resize(c.counts.n_pde);
  p.pde_x.resize(c.counts.n_pde);
  for (int i = 0; i < c.counts.n_pde; ++i) {
    p.pde_t[i] = ut(rng);
    p.pde_x[i] = c.system == SystemKind::Toy ? 0.0 : ux(rng);
  }
  p.con_x.resize(c.counts.n_con);
  for (double& x : p.con_x) x = ux(rng);
  p.bd_t.resize(c.counts.n_bd);
  for (double& t : p.bd_t) t = ut(rng);
  return p;
}

namespace {

struct Range {
  double lo = 0.0, hi = 0.0;
  bool seen = false;
  void absorb(double v) {
    if (!seen) { lo = hi = v; seen = true; return; }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double mid() const { return 0.5 * (lo + hi); }
  double half() const { return std::max(0.5 * (hi - lo), 1e-6); }
};

void set_in_norm(DenseNet& net, int j, const Range& r) {
  net.in_shift[j] = r.mid();
  net.in_scale[j] = r.half();
}

void set_out_norm(DenseNet& net, int j, const Range& r) {
  net.out_shift[j] = r.mid();
  net.out_scale[j] = r.half();
}

std::vector<int> widths_with(int in, std::span<const int> hidden, int out) {
  std::vector<int> w;
  w.push_back(in);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

struct MiniBatch {
  ResidualPointSets pts;
};

MiniBatch draw_batch(const ResidualPointSets& pool, const TrainConfig& cfg,
                     std::mt19937_64& rng) {
  MiniBatch b;
  auto pick = [&](const std::vector<double>& src_a,
                  const std::vector<double>& src_b, int count,
                  std::vector<double>& dst_a, std::vector<double>& dst_b) {
    if (src_a.empty() || count <= 0) return;
    if (count >= static_cast<int>(src_a.size())) {
      // batch covers the pool: use it verbatim so mean-based terms
      // (the integral balances) see no resampling noise
      dst_a = src_a;
      dst_b = src_b;
      return;
    }
    const int n = count;
    std::uniform_int_distribution<std::size_t> ui(0, src_a.size() - 1);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = ui(rng);
      dst_a.push_back(src_a[k]);
      if (!src_b.empty()) dst_b.push_back(src_b[k]);
    }
  };
  std::vector<double> none;
  pick(pool.pde_t, pool.pde_x, cfg.batch_pde, b.pts.pde_t, b.pts.pde_x);
  pick(pool.con_x, none, cfg.batch_con, b.pts.con_x, none);
  pick(pool.bd_t, none, cfg.batch_bd, b.pts.bd_t, none);
  return b;
}

struct ToyObs {
  std::vector<double> t, u1;
};

ToyObs toy_observations(const CaseSpec& c) {
  ToyObs o;
  const int n = std::max(c.n_data, 2);
  for (int i = 0; i < n; ++i) {
    const double t = c.t0 + (c.t_end - c.t0) * i / (n - 1);
    o.t.push_back(t);
    o.u1.push_back(toy_solution(c.toy_c0, t));
  }
  return o;
}

void maybe_warn_divergence(double total, double& best, long iter,
                           bool& warned) {
  if (std::isfinite(total) && (total < best || best < 0.0)) best = total;
  if (!warned && best >= 0.0 && iter > 500 && total > 100.0 * best + 1e-12) {
    std::cerr << "warning: loss diverging at iteration " << iter << " (total "
              << total << ", best " << best << ")\n";
    warned = true;
  }
}

}  // namespace

ConstructorResult train_constructor(const TrainConfig& cfg,
                                    std::span<const SparseDataset> datasets,
                                    const std::string& out_dir) {
  if (cfg.case_ids.empty())
    throw ConfigError("train: no training cases given");

  std::vector<const CaseSpec*> cases;
  for (const auto& id : cfg.case_ids) cases.push_back(&find_case(id));
  const bool toy = cases.front()->system == SystemKind::Toy;
  for (const auto* c : cases) {
    if ((c->system == SystemKind::Toy) != toy)
      throw ConfigError("train: cannot mix toy and flow cases");
    if (!toy && c->system != SystemKind::Euler1D)
      throw ConfigError("train: 2D cases are test-only");
  }
  if (!toy && datasets.size() != cases.size())
    throw ConfigError("train: one dataset per flow case required");

  std::mt19937_64 rng(cfg.seed);
  auto t_start = std::chrono::steady_clock::now();

  // shared closure net with envelope normalizers
  const int n2_in = toy ? 1 : 2;
  DenseNet net2 = init_net(widths_with(n2_in, cfg.net2_hidden, 1),
                           cfg.activation, rng());
  net2.meta["role"] = toy ? "toy-closure" : "eos-closure";

  StateEnvelope env{};
  Range p_range, u_range, u1_range;
  std::vector<ToyObs> toy_obs;
  if (toy) {
    for (const auto* c : cases) {
      toy_obs.push_back(toy_observations(*c));
      for (double v : toy_obs.back().u1) u1_range.absorb(v);
    }
    Range r;
    r.lo = u1_range.lo;
    r.hi = u1_range.hi;
    r.seen = true;
    set_in_norm(net2, 0, r);
  } else {
    for (std::size_t k = 0; k < datasets.size(); ++k) {
      if (k == 0) env = datasets[k].envelope;
      else env.merge(datasets[k].envelope);
      for (const auto& pt : datasets[k].points) {
        if (pt.mask & kMaskP) p_range.absorb(pt.p);
        if (pt.mask & kMaskU) u_range.absorb(pt.u);
      }
    }
    Range rr{env.rho_min, env.rho_max, true};
    Range re{env.e_min, env.e_max, true};
    set_in_norm(net2, 0, rr);
    set_in_norm(net2, 1, re);
    if (p_range.seen) set_out_norm(net2, 0, p_range);
  }
  net2.meta["envelope"] = {{"rho_min", env.rho_min}, {"rho_max", env.rho_max},
                           {"e_min", env.e_min},     {"e_max", env.e_max}};
  if (toy)
    net2.meta["envelope"] = {{"u1_min", u1_range.lo},
                             {"u1_max", u1_range.hi}};

  // per-case state nets with box normalizers
  std::vector<DenseNet> net1s;
  std::vector<ResidualPointSets> pools;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const CaseSpec& c = *cases[k];
    const auto& hidden = cfg.net1_hidden.empty() ? c.net1_hidden
                                                 : cfg.net1_hidden;
    const int n1_in = toy ? 1 : 2;
    const int n1_out = toy ? 1 : 3;
    DenseNet n1 = init_net(widths_with(n1_in, hidden, n1_out),
                           cfg.activation, rng());
    n1.meta["role"] = "state";
    n1.meta["case"] = c.id;
    Range rt{c.t0, c.t_end, true};
    set_in_norm(n1, 0, rt);
    if (!toy) {
      Range rx{c.x0, c.x1, true};
      set_in_norm(n1, 1, rx);
      Range rr{env.rho_min, env.rho_max, true};
      Range re{env.e_min, env.e_max, true};
      set_out_norm(n1, 0, rr);
      if (u_range.seen) set_out_norm(n1, 1, u_range);
      set_out_norm(n1, 2, re);
    }
    net1s.push_back(std::move(n1));
    pools.push_back(sample_points(c, rng));
  }

  // optimizer state, one flat vector per net
  std::vector<double> g2(net2.param_count());
  AdamState adam2(g2.size());
  std::vector<std::vector<double>> g1(cases.size());
  std::vector<AdamState> adam1;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    g1[k].resize(net1s[k].param_count());
    adam1.emplace_back(g1[k].size());
  }

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(fs::path(out_dir) / "loss_log.csv");
    log << loss_csv_header() << "\n";
  }

  Tape tape;
  LossBreakdown last_bd;
  double best = -1.0;
  bool warned = false;

  // Polyak average of the closure parameters: the final Adam iterates
  // bounce inside a noise ball, and the averaged net sits near its center
  std::vector<double> ema(net2.param_count());
  net2.copy_params(ema);

  for (long iter = 0; iter < cfg.iterations; ++iter) {
    const double lr =
        cfg.lr * std::pow(cfg.lr_decay,
                          static_cast<double>(iter / cfg.lr_decay_every));
    std::fill(g2.begin(), g2.end(), 0.0);
    LossBreakdown bd;

    for (std::size_t k = 0; k < cases.size(); ++k) {
      const CaseSpec& c = *cases[k];
      std::fill(g1[k].begin(), g1[k].end(), 0.0);
      const MiniBatch b = draw_batch(pools[k], cfg, rng);

      tape.reset();
      const TapedNet s2 = bind_params(tape, net2);
      const TapedNet s1 = bind_params(tape, net1s[k]);
      Var loss;
      if (toy) {
        loss = record_toy_case_loss(tape, c, net1s[k], s1, net2, s2,
                                    toy_obs[k].t, toy_obs[k].u1,
                                    toy_solution(c.toy_c0, c.t0), b.pts,
                                    cfg.weights, bd);
      } else {
        loss = record_euler_case_loss(tape, c, net1s[k], s1, net2, s2,
                                      datasets[k].points, b.pts, cfg.weights,
                                      bd);
      }
      if (k == 0)
        loss = tape.add(loss, record_reg_loss(tape, net2, s2,
                                              cfg.weights.lambda_reg, bd));
      tape.backward(loss);
      accumulate_param_grads(tape, net2, s2, g2);
      accumulate_param_grads(tape, net1s[k], s1, g1[k]);
    }

    if (!std::isfinite(bd.total))
      throw TrainError("non-finite loss at iteration " +
                       std::to_string(iter));
    maybe_warn_divergence(bd.total, best, iter, warned);

    std::vector<double> p2(net2.param_count());
    net2.copy_params(p2);
    adam2.step(p2, g2, lr);
    net2.set_params(p2);
    if (cfg.ema_decay > 0.0)
      for (std::size_t i = 0; i < ema.size(); ++i)
        ema[i] = cfg.ema_decay * ema[i] + (1.0 - cfg.ema_decay) * p2[i];
    for (std::size_t k = 0; k < cases.size(); ++k) {
      std::vector<double> p1(net1s[k].param_count());
      net1s[k].copy_params(p1);
      adam1[k].step(p1, g1[k], lr);
      net1s[k].set_params(p1);
    }

    last_bd = bd;
    if (log && (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations))
      log << format_loss_csv(iter, bd) << "\n";
    if (!out_dir.empty() && cfg.checkpoint_every > 0 &&
        iter % cfg.checkpoint_every == 0 && iter > 0) {
      save_net_json(net2, (fs::path(out_dir) /
                           ("checkpoint_" + std::to_string(iter) + "_net2.json"))
                              .string());
    }
  }

  if (cfg.ema_decay > 0.0) net2.set_params(ema);

  ConstructorResult res;
  res.net2 = std::move(net2);
  res.net1s = std::move(net1s);
  res.report.iterations = cfg.iterations;
  res.report.final_loss = last_bd;
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  const auto truth = parse_closure_spec(cases.front()->target_closure);
  if (toy) {
    res.report.closure_l2 =
        closure_l2_vs_truth_toy(res.net2, u1_range.lo, u1_range.hi);
  } else {
    res.report.closure_l2 = closure_l2_vs_truth_euler(res.net2, *truth, env);
  }

  if (!out_dir.empty()) {
    save_net_json(res.net2, (fs::path(out_dir) / "net2.json").string());
    for (std::size_t k = 0; k < cases.size(); ++k)
      save_net_json(res.net1s[k],
                    (fs::path(out_dir) / ("net1_" + cases[k]->id + ".json"))
                        .string());
    std::ofstream rep(fs::path(out_dir) / "train_report.json");
    rep << res.report.to_json().dump(1) << "\n";
  }
  return res;
}

double closure_l2_vs_truth_euler(const DenseNet& net2,
                                 const ClosureModel& truth,
                                 const StateEnvelope& env, int n,
                                 double shrink) {
  const double dr = env.rho_max - env.rho_min;
  const double de = env.e_max - env.e_min;
  const double r0 = env.rho_min + shrink * dr, r1 = env.rho_max - shrink * dr;
  const double e0 = env.e_min + shrink * de, e1 = env.e_max - shrink * de;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double rho = r0 + (r1 - r0) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double e = e0 + (e1 - e0) * j / (n - 1);
      const double in[2] = {rho, e};
      const double p_hat = net_forward(net2, in)[0];
      const double p = truth.value(in);
      num += (p_hat - p) * (p_hat - p);
      den += p * p;
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double closure_l2_vs_truth_toy(const DenseNet& net2, double u1_lo,
                               double u1_hi, int n) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u1 = u1_lo + (u1_hi - u1_lo) * i / (n - 1);
    const double in[1] = {u1};
    const double u2_hat = net_forward(net2, in)[0];
    const double u2 = toy_source(u1);
    num += (u2_hat - u2) * (u2_hat - u2);
    den += u2 * u2;
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

DenseNet train_data_driven_baseline(const TrainConfig& cfg,
                                    std::span<const SparseDataset> datasets,
                                    TrainReport* report) {
  struct Triple {
    double rho, e, p;
  };
  std::vector<Triple> triples;
  StateEnvelope env{};
  bool first = true;
  Range p_range;
  for (const auto& ds : datasets) {
    if (first) { env = ds.envelope; first = false; }
    else env.merge(ds.envelope);
    for (const auto& pt : ds.points) {
      const unsigned need = kMaskRho | kMaskE | kMaskP;
      if ((pt.mask & need) == need) {
        triples.push_back({pt.rho, pt.e, pt.p});
        p_range.absorb(pt.p);
      }
    }
  }
  if (triples.size() < 10)
    throw ConfigError("baseline: need at least 10 complete (rho, e, p) "
                      "observations, got " +
                      std::to_string(triples.size()));

  std::mt19937_64 rng(cfg.seed);
  auto t_start = std::chrono::steady_clock::now();
  DenseNet net2 = init_net(widths_with(2, cfg.net2_hidden, 1),
                           cfg.activation, rng());
  net2.meta["role"] = "eos-baseline";
  Range rr{env.rho_min, env.rho_max, true};
  Range re{env.e_min, env.e_max, true};
  set_in_norm(net2, 0, rr);
  set_in_norm(net2, 1, re);
  if (p_range.seen) set_out_norm(net2, 0, p_range);

  std::vector<double> grad(net2.param_count());
  AdamState adam(grad.size());
  Tape tape;
  LossBreakdown last_bd;

  for (long iter = 0; iter < cfg.iterations; ++iter) {
    const double lr =
        cfg.lr * std::pow(cfg.lr_decay,
                          static_cast<double>(iter / cfg.lr_decay_every));
    tape.reset();
    const TapedNet s2 = bind_params(tape, net2);
    Var sum = kNoVar;
    for (const auto& tr : triples) {
      TDual rho, e;
      rho.v = tape.leaf(tr.rho);
      e.v = tape.leaf(tr.e);
      const TDual in[2] = {rho, e};
      const Var p = record_forward(tape, net2, s2, in, 0)[0].v;
      const Var sq = tape.square(tape.add_c(p, -tr.p));
      sum = sum == kNoVar ? sq : tape.add(sum, sq);
    }
    Var loss = tape.mul_c(sum, 1.0 / static_cast<double>(triples.size()));
    LossBreakdown bd;
    bd.data = tape.value(loss);
    loss = tape.add(loss, record_reg_loss(tape, net2, s2,
                                          cfg.weights.lambda_reg, bd));
    bd.total = tape.value(loss);
    if (!std::isfinite(bd.total))
      throw TrainError("baseline: non-finite loss at iteration " +
                       std::to_string(iter));
    tape.backward(loss);
    std::fill(grad.begin(), grad.end(), 0.0);
    accumulate_param_grads(tape, net2, s2, grad);
    std::vector<double> params(net2.param_count());
    net2.copy_params(params);
    adam.step(params, grad, lr);
    net2.set_params(params);
    last_bd = bd;
  }

  if (report) {
    report->iterations = cfg.iterations;
    report->final_loss = last_bd;
    report->wall_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
  }
  return net2;
}

DenseNet solve_new_case_pinn_forward(const CaseSpec& c, const DenseNet& net2,
                                     const TrainConfig& cfg,
                                     const std::string& out_dir) {
  if (c.system != SystemKind::Toy)
    throw ConfigError("pinn forward solve supports the toy system only");

  std::mt19937_64 rng(cfg.seed);
  const auto& hidden = cfg.net1_hidden.empty() ? c.net1_hidden
                                               : cfg.net1_hidden;
  DenseNet net1 = init_net(widths_with(1, hidden, 1), cfg.activation, rng());
  net1.meta["role"] = "state";
  net1.meta["case"] = c.id;
  Range rt{c.t0, c.t_end, true};
  set_in_norm(net1, 0, rt);

  ResidualPointSets pool = sample_points(c, rng);

  std::vector<double> grad(net1.param_count());
  AdamState adam(grad.size());
  Tape tape;
  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(fs::path(out_dir) / "loss_log.csv");
    log << loss_csv_header() << "\n";
  }

  const std::vector<double> no_obs;
  for (long iter = 0; iter < cfg.iterations; ++iter) {
    const double lr =
        cfg.lr * std::pow(cfg.lr_decay,
                          static_cast<double>(iter / cfg.lr_decay_every));
    const MiniBatch b = draw_batch(pool, cfg, rng);
    tape.reset();
    const TapedNet s2 = bind_params(tape, net2);
    const TapedNet s1 = bind_params(tape, net1);
    LossBreakdown bd;
    // closure net params stay frozen: their gradient is never applied
    const Var loss =
        record_toy_case_loss(tape, c, net1, s1, net2, s2, no_obs, no_obs,
                             c.toy_u0, b.pts, cfg.weights, bd);
    if (!std::isfinite(bd.total))
      throw TrainError("forward solve: non-finite loss at iteration " +
                       std::to_string(iter));
    tape.backward(loss);
    std::fill(grad.begin(), grad.end(), 0.0);
    accumulate_param_grads(tape, net1, s1, grad);
    std::vector<double> params(net1.param_count());
    net1.copy_params(params);
    adam.step(params, grad, lr);
    net1.set_params(params);
    if (log && (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations))
      log << format_loss_csv(iter, bd) << "\n";
  }

  if (!out_dir.empty())
    save_net_json(net1, (fs::path(out_dir) / ("net1_" + c.id + ".json"))
                            .string());
  return net1;
}

}  // namespace ck
