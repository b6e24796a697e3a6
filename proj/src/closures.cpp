#include "ck/closures.hpp"

#include <cmath>
#include <vector>

#include "ck/errors.hpp"

namespace ck {

double ClosureModel::value(std::span<const double> u1) const {
  std::vector<double> du(input_dim());
  return eval(u1, du);
}

void ClosureModel::eval_many(std::span<const double> u1_flat,
                             std::span<double> u2,
                             std::span<double> du_flat) const {
  const int d = input_dim();
  const std::size_t n = u2.size();
  for (std::size_t k = 0; k < n; ++k)
    u2[k] = eval(u1_flat.subspan(k * d, d), du_flat.subspan(k * d, d));
}

AnalyticEos::AnalyticEos(IdealGas g) : gamma_(g.gamma), b_(0.0) {
  if (gamma_ <= 1.0) throw ConfigError("ideal gas requires gamma > 1");
}

AnalyticEos::AnalyticEos(NobleAbel g) : gamma_(g.gamma), b_(g.b) {
  if (gamma_ <= 1.0) throw ConfigError("noble-abel requires gamma > 1");
  if (b_ < 0.0) throw ConfigError("noble-abel requires b >= 0");
}

double AnalyticEos::pressure(double rho, double e) const {
  if (rho <= 0.0) throw DomainError("eos: nonpositive density");
  const double cov = 1.0 - b_ * rho;
  if (cov <= 0.0) throw DomainError("eos: covolume limit b*rho >= 1");
  return e * rho * (gamma_ - 1.0) / cov;
}

double AnalyticEos::energy_from_pressure(double rho, double p) const {
  if (rho <= 0.0) throw DomainError("eos: nonpositive density");
  const double cov = 1.0 - b_ * rho;
  if (cov <= 0.0) throw DomainError("eos: covolume limit b*rho >= 1");
  return p * cov / (rho * (gamma_ - 1.0));
}

double AnalyticEos::eval(std::span<const double> u1,
                         std::span<double> du) const {
  const double rho = u1[0], e = u1[1];
  const double p = pressure(rho, e);
  const double cov = 1.0 - b_ * rho;
  // dp/drho|_e = e (gamma-1) / cov^2,  dp/de|_rho = rho (gamma-1) / cov
  du[0] = e * (gamma_ - 1.0) / (cov * cov);
  du[1] = rho * (gamma_ - 1.0) / cov;
  return p;
}

std::string AnalyticEos::describe() const {
  if (b_ == 0.0) return "ideal:gamma=" + std::to_string(gamma_);
  return "noble-abel:gamma=" + std::to_string(gamma_) +
         ",b=" + std::to_string(b_);
}

double toy_source(double u1) {
  if (std::abs(u1) > 1.0)
    throw DomainError("toy_source: |u1| > 1");
  return u1 * std::sqrt(1.0 - u1 * u1);
}

double toy_solution(double c0, double t) {
  const double et = std::exp(t);
  return 2.0 * c0 * et / (c0 * c0 * et * et + 1.0);
}

double ToyClosure::eval(std::span<const double> u1,
                        std::span<double> du) const {
  const double u = u1[0];
  if (std::abs(u) > 1.0) throw DomainError("toy closure: |u1| > 1");
  const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
  du[0] = s > 0.0 ? s - u * u / s : 0.0;
  return u * s;
}

NeuralClosure::NeuralClosure(DenseNet net) : net_(std::move(net)) {}

double NeuralClosure::eval(std::span<const double> u1,
                           std::span<double> du) const {
  if (static_cast<int>(u1.size()) != net_.input_width())
    throw ConfigError("neural closure: input dimension mismatch");
  const auto fj = net_forward_jacobian(net_, u1);
  for (std::size_t k = 0; k < du.size(); ++k) du[k] = fj.jac[k];
  return fj.y[0];
}

void NeuralClosure::eval_many(std::span<const double> u1_flat,
                              std::span<double> u2,
                              std::span<double> du_flat) const {
  const int d = net_.input_width();
  const std::size_t npts = u2.size();
  const int width = 1 + d;  // value plus one tangent per input

  int maxw = 0;
  for (int w : net_.layer_widths) maxw = std::max(maxw, w);
  std::vector<double> a(static_cast<std::size_t>(maxw) * width);
  std::vector<double> z(static_cast<std::size_t>(maxw) * width);

  for (std::size_t pt = 0; pt < npts; ++pt) {
    const double* x = &u1_flat[pt * d];
    for (int j = 0; j < d; ++j) {
      a[j * width] = (x[j] - net_.in_shift[j]) / net_.in_scale[j];
      for (int k = 0; k < d; ++k)
        a[j * width + 1 + k] = (j == k) ? 1.0 / net_.in_scale[j] : 0.0;
    }
    for (std::size_t l = 0; l < net_.layers.size(); ++l) {
      const int n_in = net_.layer_widths[l];
      const int n_out = net_.layer_widths[l + 1];
      const DenseLayer& layer = net_.layers[l];
      for (int i = 0; i < n_out; ++i) {
        double s0 = layer.b[i];
        double sd[4] = {0, 0, 0, 0};
        for (int j = 0; j < n_in; ++j) {
          const double w = layer.w[i * n_in + j];
          s0 += w * a[j * width];
          for (int k = 0; k < d; ++k) sd[k] += w * a[j * width + 1 + k];
        }
        if (l + 1 < net_.layers.size()) {
          const double y = activation_value(net_.activation, s0);
          const double d1 = activation_d1(net_.activation, s0, y);
          s0 = y;
          for (int k = 0; k < d; ++k) sd[k] *= d1;
        }
        z[i * width] = s0;
        for (int k = 0; k < d; ++k) z[i * width + 1 + k] = sd[k];
      }
      std::swap(a, z);
    }
    u2[pt] = a[0] * net_.out_scale[0] + net_.out_shift[0];
    for (int k = 0; k < d; ++k)
      du_flat[pt * d + k] = a[1 + k] * net_.out_scale[0];
  }
}

std::string NeuralClosure::describe() const {
  std::string role = "net";
  if (net_.meta.contains("role")) role = net_.meta["role"].get<std::string>();
  return "neural:" + role;
}

SoundSpeed sound_speed(const ClosureModel& eos, double rho, double e,
                       double p) {
  if (rho <= 0.0) throw DomainError("sound_speed: nonpositive density");
  std::array<double, 2> dp{};
  const double u1[2] = {rho, e};
  eos.eval(std::span<const double>(u1, 2), dp);
  const double radicand = dp[0] + p / (rho * rho) * dp[1];
  if (radicand > 0.0) return {std::sqrt(radicand), false};
  return {std::sqrt(kGammaRef * std::max(p, kPressureFloor) / rho), true};
}

namespace {

// key=value,key=value
double parse_kv(const std::string& args, const std::string& key,
                double fallback, bool required) {
  std::size_t pos = 0;
  while (pos < args.size()) {
    std::size_t end = args.find(',', pos);
    if (end == std::string::npos) end = args.size();
    const std::string item = args.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq != std::string::npos && item.substr(0, eq) == key)
      return std::stod(item.substr(eq + 1));
    pos = end + 1;
  }
  if (required) throw ConfigError("closure spec: missing parameter " + key);
  return fallback;
}

}  // namespace

std::unique_ptr<ClosureModel> parse_closure_spec(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args =
      colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (kind == "toy") return std::make_unique<ToyClosure>();
  if (kind == "ideal")
    return std::make_unique<AnalyticEos>(
        IdealGas{parse_kv(args, "gamma", 1.4, true)});
  if (kind == "noble-abel")
    return std::make_unique<AnalyticEos>(
        NobleAbel{parse_kv(args, "gamma", 1.4, true),
                  parse_kv(args, "b", 0.0, true)});
  if (kind == "neural") {
    if (args.empty()) throw ConfigError("closure spec: neural needs a file");
    return std::make_unique<NeuralClosure>(load_net_json(args));
  }
  throw ConfigError("unknown closure spec: " + spec);
}

}  // namespace ck
