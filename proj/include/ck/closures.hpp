#pragma once

#include <memory>
#include <span>
#include <string>

#include "ck/net.hpp"

namespace ck {

// Uniform closure interface: value of the unknown component and its
// partial derivatives w.r.t. the known components.
class ClosureModel {
public:
  virtual ~ClosureModel() = default;
  virtual int input_dim() const = 0;
  // du must have input_dim() entries.
  virtual double eval(std::span<const double> u1, std::span<double> du) const = 0;
  virtual std::string describe() const = 0;

  // Batched evaluation over points stored interleaved in u1_flat
  // (input_dim() entries per point). Overridden where per-point calls
  // would dominate (neural closure inside the solver loop).
  virtual void eval_many(std::span<const double> u1_flat,
                         std::span<double> u2, std::span<double> du_flat) const;

  double value(std::span<const double> u1) const;
};

struct IdealGas {
  double gamma = 1.4;
};

struct NobleAbel {
  double gamma = 1.4;
  double b = 0.075;  // covolume
};

// p(rho, e) for either analytic law; inputs are (rho, e).
class AnalyticEos : public ClosureModel {
public:
  explicit AnalyticEos(IdealGas g);
  explicit AnalyticEos(NobleAbel g);

  int input_dim() const override { return 2; }
  double eval(std::span<const double> u1, std::span<double> du) const override;
  std::string describe() const override;

  double pressure(double rho, double e) const;
  // Converts an initial-condition pressure to specific internal energy.
  double energy_from_pressure(double rho, double p) const;
  double gamma() const { return gamma_; }
  double covolume() const { return b_; }

private:
  double gamma_;
  double b_;  // 0 for ideal gas
};

// Fixed toy law u2(u1) = u1 * sqrt(1 - u1^2), defined on |u1| <= 1.
class ToyClosure : public ClosureModel {
public:
  int input_dim() const override { return 1; }
  double eval(std::span<const double> u1, std::span<double> du) const override;
  std::string describe() const override { return "toy"; }
};

double toy_source(double u1);
// Analytic solution u1(t) = 2 c0 e^t / (c0^2 e^{2t} + 1), c0 > 0.
double toy_solution(double c0, double t);

// Neural closure: value via forward pass, partials via the forward-mode
// input jacobian.
class NeuralClosure : public ClosureModel {
public:
  explicit NeuralClosure(DenseNet net);

  int input_dim() const override { return net_.input_width(); }
  double eval(std::span<const double> u1, std::span<double> du) const override;
  void eval_many(std::span<const double> u1_flat, std::span<double> u2,
                 std::span<double> du_flat) const override;
  std::string describe() const override;

  const DenseNet& net() const { return net_; }

private:
  DenseNet net_;
};

struct SoundSpeed {
  double c = 0.0;
  bool fallback = false;  // radicand was nonpositive
};

// c = sqrt(dp/drho|_e + (p/rho^2) dp/de|_rho). A nonpositive radicand
// (possible for an imperfect neural closure off its training envelope)
// falls back to sqrt(gamma_ref * max(p, p_floor) / rho).
SoundSpeed sound_speed(const ClosureModel& eos, double rho, double e, double p);

inline constexpr double kPressureFloor = 1e-8;
inline constexpr double kGammaRef = 1.4;

// "ideal:gamma=1.4" | "noble-abel:gamma=1.4,b=0.075" | "toy" |
// "neural:<model-file>"
std::unique_ptr<ClosureModel> parse_closure_spec(const std::string& spec);

}  // namespace ck
