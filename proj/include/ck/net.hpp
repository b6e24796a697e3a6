#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ck/autodiff.hpp"

namespace ck {

struct DenseLayer {
  std::vector<double> w;  // row-major, rows = output neurons
  std::vector<double> b;
};

// Fully connected network with per-component affine input/output
// normalizers. The activation applies to hidden layers; the output
// layer is linear.
struct DenseNet {
  std::vector<int> layer_widths;
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Tanh;
  std::vector<double> in_shift, in_scale;
  std::vector<double> out_shift, out_scale;
  nlohmann::json meta = nlohmann::json::object();

  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  std::size_t param_count() const;
  void copy_params(std::span<double> flat) const;
  void set_params(std::span<const double> flat);
};

// Glorot-uniform weights, zero biases, identity normalizers.
// Deterministic per seed.
DenseNet init_net(std::span<const int> layer_widths, Activation act,
                  std::uint64_t seed);

std::vector<double> net_forward(const DenseNet& net, std::span<const double> x);

struct ForwardJacobian {
  std::vector<double> y;
  std::vector<double> jac;  // row-major, output_width x input_width
};

// Forward-mode propagation of one tangent per input component.
ForwardJacobian net_forward_jacobian(const DenseNet& net,
                                     std::span<const double> x);

void save_net_json(const DenseNet& net, const std::string& path);
nlohmann::json net_to_json(const DenseNet& net);
DenseNet net_from_json(const nlohmann::json& j);
DenseNet load_net_json(const std::string& path);

// Parameter slots of one network on a tape, one (W, b) block pair per
// layer. Rebinding is cheap; refresh_params overwrites values in place
// after an optimizer step when the tape is re-recorded.
struct TapedNet {
  std::vector<Var> w_base;
  std::vector<Var> b_base;
};

TapedNet bind_params(Tape& tape, const DenseNet& net);

// Records the full normalized forward pass with ndir input tangent
// directions; the result carries the network outputs and their input
// derivatives as tape slots.
std::vector<TDual> record_forward(Tape& tape, const DenseNet& net,
                                  const TapedNet& slots,
                                  std::span<const TDual> x, int ndir);

// Reads d(loss)/d(param) for every parameter into flat (same layout as
// DenseNet::copy_params), accumulating.
void accumulate_param_grads(const Tape& tape, const DenseNet& net,
                            const TapedNet& slots, std::span<double> flat);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& s);

}  // namespace ck
