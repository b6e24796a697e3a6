#include "ck/net.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "ck/errors.hpp"

namespace ck {

std::size_t DenseNet::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

void DenseNet::copy_params(std::span<double> flat) const {
  std::size_t k = 0;
  for (const auto& l : layers) {
    for (double v : l.w) flat[k++] = v;
    for (double v : l.b) flat[k++] = v;
  }
}

void DenseNet::set_params(std::span<const double> flat) {
  std::size_t k = 0;
  for (auto& l : layers) {
    for (double& v : l.w) v = flat[k++];
    for (double& v : l.b) v = flat[k++];
  }
}

DenseNet init_net(std::span<const int> layer_widths, Activation act,
                  std::uint64_t seed) {
  if (layer_widths.size() < 2)
    throw ConfigError("init_net: need at least input and output layer");
  for (int w : layer_widths)
    if (w < 1) throw ConfigError("init_net: layer widths must be positive");

  DenseNet net;
  net.layer_widths.assign(layer_widths.begin(), layer_widths.end());
  net.activation = act;

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    const int fan_in = layer_widths[l];
    const int fan_out = layer_widths[l + 1];
    const double r = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-r, r);
    DenseLayer layer;
    layer.w.resize(static_cast<std::size_t>(fan_in) * fan_out);
    layer.b.assign(fan_out, 0.0);
    for (double& v : layer.w) v = dist(rng);
    net.layers.push_back(std::move(layer));
  }

  net.in_shift.assign(net.input_width(), 0.0);
  net.in_scale.assign(net.input_width(), 1.0);
  net.out_shift.assign(net.output_width(), 0.0);
  net.out_scale.assign(net.output_width(), 1.0);
  return net;
}

std::vector<double> net_forward(const DenseNet& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_width())
    throw ConfigError("net_forward: input dimension mismatch");

  std::vector<double> a(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    a[j] = (x[j] - net.in_shift[j]) / net.in_scale[j];

  std::vector<double> z;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int n_in = net.layer_widths[l];
    const int n_out = net.layer_widths[l + 1];
    const DenseLayer& layer = net.layers[l];
    z.assign(n_out, 0.0);
    for (int i = 0; i < n_out; ++i) {
      double s = layer.b[i];
      for (int j = 0; j < n_in; ++j) s += layer.w[i * n_in + j] * a[j];
      z[i] = s;
    }
    if (l + 1 < net.layers.size())
      for (double& v : z) v = activation_value(net.activation, v);
    a = z;
  }

  for (int i = 0; i < net.output_width(); ++i)
    a[i] = a[i] * net.out_scale[i] + net.out_shift[i];
  return a;
}

ForwardJacobian net_forward_jacobian(const DenseNet& net,
                                     std::span<const double> x) {
  const int n_in0 = net.input_width();
  if (static_cast<int>(x.size()) != n_in0)
    throw ConfigError("net_forward_jacobian: input dimension mismatch");

  std::vector<DualValue> a(n_in0);
  for (int j = 0; j < n_in0; ++j) {
    a[j].v = (x[j] - net.in_shift[j]) / net.in_scale[j];
    a[j].d[j] = 1.0 / net.in_scale[j];
  }

  std::vector<DualValue> z;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int n_in = net.layer_widths[l];
    const int n_out = net.layer_widths[l + 1];
    const DenseLayer& layer = net.layers[l];
    z.assign(n_out, DualValue{});
    for (int i = 0; i < n_out; ++i) {
      DualValue s;
      s.v = layer.b[i];
      for (int j = 0; j < n_in; ++j) {
        const double w = layer.w[i * n_in + j];
        s.v += w * a[j].v;
        for (int k = 0; k < n_in0; ++k) s.d[k] += w * a[j].d[k];
      }
      z[i] = s;
    }
    if (l + 1 < net.layers.size()) {
      for (auto& d : z) {
        const double y = activation_value(net.activation, d.v);
        const double d1 = activation_d1(net.activation, d.v, y);
        d.v = y;
        for (int k = 0; k < n_in0; ++k) d.d[k] *= d1;
      }
    }
    a = z;
  }

  ForwardJacobian out;
  const int n_out = net.output_width();
  out.y.resize(n_out);
  out.jac.assign(static_cast<std::size_t>(n_out) * n_in0, 0.0);
  for (int i = 0; i < n_out; ++i) {
    out.y[i] = a[i].v * net.out_scale[i] + net.out_shift[i];
    for (int k = 0; k < n_in0; ++k)
      out.jac[i * n_in0 + k] = a[i].d[k] * net.out_scale[i];
  }
  return out;
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    case Activation::Identity: return "identity";
  }
  return "tanh";
}

Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation: " + s);
}

nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json j;
  j["layer_widths"] = net.layer_widths;
  j["activation"] = activation_name(net.activation);
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  for (const auto& l : net.layers) {
    j["weights"].push_back(l.w);
    j["biases"].push_back(l.b);
  }
  j["in_shift"] = net.in_shift;
  j["in_scale"] = net.in_scale;
  j["out_shift"] = net.out_shift;
  j["out_scale"] = net.out_scale;
  j["meta"] = net.meta;
  return j;
}

DenseNet net_from_json(const nlohmann::json& j) {
  DenseNet net;
  try {
    net.layer_widths = j.at("layer_widths").get<std::vector<int>>();
    net.activation = activation_from_name(j.at("activation").get<std::string>());
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() + 1 != net.layer_widths.size() || bs.size() != ws.size())
      throw ConfigError("model file: layer count mismatch");
    for (std::size_t l = 0; l < ws.size(); ++l) {
      DenseLayer layer;
      layer.w = ws[l].get<std::vector<double>>();
      layer.b = bs[l].get<std::vector<double>>();
      const std::size_t n_in = net.layer_widths[l];
      const std::size_t n_out = net.layer_widths[l + 1];
      if (layer.w.size() != n_in * n_out || layer.b.size() != n_out)
        throw ConfigError("model file: weight shape mismatch");
      net.layers.push_back(std::move(layer));
    }
    net.in_shift = j.at("in_shift").get<std::vector<double>>();
    net.in_scale = j.at("in_scale").get<std::vector<double>>();
    net.out_shift = j.at("out_shift").get<std::vector<double>>();
    net.out_scale = j.at("out_scale").get<std::vector<double>>();
    if (j.contains("meta")) net.meta = j.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  for (double s : net.in_scale)
    if (s <= 0.0) throw ConfigError("model file: nonpositive in_scale");
  for (double s : net.out_scale)
    if (s <= 0.0) throw ConfigError("model file: nonpositive out_scale");
  return net;
}

void save_net_json(const DenseNet& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write model file: " + path);
  f << net_to_json(net).dump(1) << "\n";
}

DenseNet load_net_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read model file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file parse: ") + e.what());
  }
  return net_from_json(j);
}

TapedNet bind_params(Tape& tape, const DenseNet& net) {
  TapedNet slots;
  for (const auto& l : net.layers) {
    slots.w_base.push_back(tape.leaf_block(l.w));
    slots.b_base.push_back(tape.leaf_block(l.b));
  }
  return slots;
}

std::vector<TDual> record_forward(Tape& tape, const DenseNet& net,
                                  const TapedNet& slots,
                                  std::span<const TDual> x, int ndir) {
  const int n_in0 = net.input_width();
  if (static_cast<int>(x.size()) != n_in0)
    throw ConfigError("record_forward: input dimension mismatch");

  std::vector<Var> in(n_in0);
  std::vector<Var> in_dot(static_cast<std::size_t>(ndir) * n_in0);
  for (int j = 0; j < n_in0; ++j) {
    const double inv = 1.0 / net.in_scale[j];
    in[j] = tape.mul_c(tape.add_c(x[j].v, -net.in_shift[j]), inv);
    for (int k = 0; k < ndir; ++k)
      in_dot[static_cast<std::size_t>(k) * n_in0 + j] =
          tape.mul_c(x[j].d[k], inv);
  }

  Var cur = kNoVar;
  int cur_n = n_in0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int n_out = net.layer_widths[l + 1];
    if (l == 0) {
      cur = tape.affine_dual(slots.w_base[l], slots.b_base[l], cur_n, n_out,
                             ndir, in, in_dot);
    } else {
      std::vector<Var> a(cur_n);
      std::vector<Var> a_dot(static_cast<std::size_t>(ndir) * cur_n);
      for (int j = 0; j < cur_n; ++j) a[j] = cur + j;
      for (int k = 0; k < ndir; ++k)
        for (int j = 0; j < cur_n; ++j)
          a_dot[static_cast<std::size_t>(k) * cur_n + j] =
              cur + static_cast<Var>((1 + k) * cur_n + j);
      cur = tape.affine_dual(slots.w_base[l], slots.b_base[l], cur_n, n_out,
                             ndir, a, a_dot);
    }
    if (l + 1 < net.layers.size())
      cur = tape.act_dual(net.activation, cur, n_out, ndir);
    cur_n = n_out;
  }

  std::vector<TDual> y(net.output_width());
  for (int i = 0; i < net.output_width(); ++i) {
    y[i].v = tape.add_c(tape.mul_c(cur + i, net.out_scale[i]),
                        net.out_shift[i]);
    for (int k = 0; k < ndir; ++k)
      y[i].d[k] = tape.mul_c(cur + static_cast<Var>((1 + k) * cur_n + i),
                             net.out_scale[i]);
  }
  return y;
}

void accumulate_param_grads(const Tape& tape, const DenseNet& net,
                            const TapedNet& slots, std::span<double> flat) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t i = 0; i < net.layers[l].w.size(); ++i)
      flat[k++] += tape.adjoint(slots.w_base[l] + static_cast<Var>(i));
    for (std::size_t i = 0; i < net.layers[l].b.size(); ++i)
      flat[k++] += tape.adjoint(slots.b_base[l] + static_cast<Var>(i));
  }
}

}  // namespace ck
