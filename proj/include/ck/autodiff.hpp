#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ck {

// Slot index on a Tape. Slots hold values during recording and adjoints
// during the backward sweep.
using Var = std::uint32_t;
inline constexpr Var kNoVar = 0xffffffffu;

enum class Activation { Tanh, Softplus, Identity };

double activation_value(Activation a, double z);
// First derivative; y is the precomputed activation value at z.
double activation_d1(Activation a, double z, double y);
double activation_d2(Activation a, double z, double y);

// Scalar value carried on the tape together with up to two forward-mode
// tangent components (e.g. d/dt and d/dx). Tangent slots beyond the
// tracked direction count are kNoVar.
struct TDual {
  Var v = kNoVar;
  std::array<Var, 2> d{kNoVar, kNoVar};
};

// Reverse-mode gradient tape. Records scalar arithmetic plus fused
// dense-layer operations whose forward pass also propagates input
// tangents, so a recorded loss may contain network input derivatives
// and still be differentiated w.r.t. every parameter slot.
class Tape {
public:
  // Leaf slot (parameter, input, or constant). No node is recorded.
  Var leaf(double v);
  // Contiguous block of leaf slots; returns the base slot index.
  Var leaf_block(std::span<const double> vals);
  // Overwrite the values of an existing leaf block (parameter refresh).
  void set_block(Var base, std::span<const double> vals);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var tanh_(Var a);
  Var sqrt_(Var a);
  Var abs_(Var a);
  Var square(Var a);
  Var add_c(Var a, double c);
  Var mul_c(Var a, double c);

  // Fused affine layer with tangent propagation:
  //   y = W a + b,  y_dot[k] = W a_dot[k]   (k < ndir)
  // W is an n_out x n_in row-major leaf block at w_base, b a leaf block
  // at b_base. Input slots may be scattered; outputs are allocated
  // contiguously: n_out primal slots followed by ndir blocks of n_out
  // tangent slots. Returns the output base slot.
  Var affine_dual(Var w_base, Var b_base, int n_in, int n_out, int ndir,
                  std::span<const Var> in, std::span<const Var> in_dot);

  // Fused elementwise activation with tangent propagation:
  //   y = act(z),  y_dot[k] = act'(z) z_dot[k]
  // operating on the contiguous output block of affine_dual. Returns the
  // output base slot (same layout).
  Var act_dual(Activation act, Var in_base, int n, int ndir);

  double value(Var v) const { return val_[v]; }

  // Reverse sweep seeding d(loss)/d(loss) = 1. Adjoints of all slots,
  // including leaf blocks, are available afterwards.
  void backward(Var loss);
  double adjoint(Var v) const { return adj_[v]; }
  void read_adjoints(Var base, std::span<double> out) const;

  std::size_t num_slots() const { return val_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Discard all nodes and slots, keeping allocated capacity.
  void reset();

private:
  enum class Op : std::uint8_t {
    Add, Sub, Mul, Div, Neg, Tanh, Sqrt, Abs, Square, AddC, MulC,
    Affine, Act
  };
  struct Node {
    Op op;
    Var out;
    Var a;
    Var b;      // second operand, or fused-record index
    double c;   // constant operand
  };
  struct AffineRec {
    Var w_base, b_base, out_base;
    // contiguous inputs (layer chaining): base slot of the input block.
    // scattered inputs: offset into ipool_ (n_in primal + ndir*n_in tangents)
    std::uint32_t in_off;
    std::uint16_t n_in, n_out;
    std::uint8_t ndir;
    std::uint8_t contig;
  };
  struct ActRec {
    Var in_base, out_base;
    std::uint16_t n;
    std::uint8_t ndir;
    Activation act;
  };

  Var push(Op op, double v, Var a, Var b = kNoVar, double c = 0.0);
  Var alloc(double v);

  std::vector<double> val_;
  std::vector<double> adj_;
  std::vector<Node> nodes_;
  std::vector<AffineRec> affine_;
  std::vector<ActRec> act_;
  std::vector<Var> ipool_;
};

// Tape-level dual arithmetic (chain rule per tangent direction).
TDual td_const(Tape& t, double c, int ndir);
TDual td_add(Tape& t, const TDual& a, const TDual& b, int ndir);
TDual td_sub(Tape& t, const TDual& a, const TDual& b, int ndir);
TDual td_mul(Tape& t, const TDual& a, const TDual& b, int ndir);
TDual td_mul_c(Tape& t, const TDual& a, double c, int ndir);
TDual td_add_c(Tape& t, const TDual& a, double c, int ndir);

// Plain forward-mode scalar: primal plus a small vector of tangents,
// one per tracked input direction. Used outside the tape (solver-side
// closure partials, finite-difference-free jacobians).
struct DualValue {
  double v = 0.0;
  std::array<double, 4> d{};
};

}  // namespace ck
