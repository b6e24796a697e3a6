#include "ck/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace ck {

double activation_value(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Softplus:
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case Activation::Identity: return z;
  }
  return z;
}

// First derivative; y is the already-computed activation value.
double activation_d1(Activation a, double z, double y) {
  switch (a) {
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Softplus: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

double activation_d2(Activation a, double z, double y) {
  switch (a) {
    case Activation::Tanh: {
      const double s = 1.0 - y * y;
      return -2.0 * y * s;
    }
    case Activation::Softplus: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case Activation::Identity: return 0.0;
  }
  return 0.0;
}

Var Tape::alloc(double v) {
  val_.push_back(v);
  return static_cast<Var>(val_.size() - 1);
}

Var Tape::leaf(double v) { return alloc(v); }

Var Tape::leaf_block(std::span<const double> vals) {
  const Var base = static_cast<Var>(val_.size());
  val_.insert(val_.end(), vals.begin(), vals.end());
  return base;
}

void Tape::set_block(Var base, std::span<const double> vals) {
  assert(base + vals.size() <= val_.size());
  for (std::size_t i = 0; i < vals.size(); ++i) val_[base + i] = vals[i];
}

Var Tape::push(Op op, double v, Var a, Var b, double c) {
  const Var out = alloc(v);
  nodes_.push_back(Node{op, out, a, b, c});
  return out;
}

Var Tape::add(Var a, Var b) { return push(Op::Add, val_[a] + val_[b], a, b); }
Var Tape::sub(Var a, Var b) { return push(Op::Sub, val_[a] - val_[b], a, b); }
Var Tape::mul(Var a, Var b) { return push(Op::Mul, val_[a] * val_[b], a, b); }
Var Tape::div(Var a, Var b) { return push(Op::Div, val_[a] / val_[b], a, b); }
Var Tape::neg(Var a) { return push(Op::Neg, -val_[a], a); }
Var Tape::tanh_(Var a) { return push(Op::Tanh, std::tanh(val_[a]), a); }
Var Tape::sqrt_(Var a) { return push(Op::Sqrt, std::sqrt(val_[a]), a); }
Var Tape::abs_(Var a) { return push(Op::Abs, std::abs(val_[a]), a); }
Var Tape::square(Var a) { return push(Op::Square, val_[a] * val_[a], a); }
Var Tape::add_c(Var a, double c) { return push(Op::AddC, val_[a] + c, a, kNoVar, c); }
Var Tape::mul_c(Var a, double c) { return push(Op::MulC, val_[a] * c, a, kNoVar, c); }

Var Tape::affine_dual(Var w_base, Var b_base, int n_in, int n_out, int ndir,
                      std::span<const Var> in, std::span<const Var> in_dot) {
  assert(static_cast<int>(in.size()) == n_in);
  assert(static_cast<int>(in_dot.size()) == ndir * n_in);

  // layer chaining hands us the previous block verbatim: value slots
  // followed by one tangent block per direction. That layout needs no
  // index pool and lets the dot products run over contiguous memory.
  bool contig = true;
  for (int j = 0; contig && j < n_in; ++j)
    contig = in[j] == in[0] + static_cast<Var>(j);
  for (int k = 0; contig && k < ndir; ++k)
    for (int j = 0; contig && j < n_in; ++j)
      contig = in_dot[static_cast<std::size_t>(k) * n_in + j] ==
               in[0] + static_cast<Var>((1 + k) * n_in + j);

  std::uint32_t in_off;
  if (contig) {
    in_off = in[0];
  } else {
    in_off = static_cast<std::uint32_t>(ipool_.size());
    ipool_.insert(ipool_.end(), in.begin(), in.end());
    ipool_.insert(ipool_.end(), in_dot.begin(), in_dot.end());
  }

  const Var out_base = static_cast<Var>(val_.size());
  val_.resize(val_.size() + static_cast<std::size_t>(n_out) * (1 + ndir));

  const double* w = &val_[w_base];
  const double* b = &val_[b_base];
  if (contig) {
    for (int k = 0; k <= ndir; ++k) {
      const double* x = &val_[in[0] + static_cast<std::size_t>(k) * n_in];
      double* z = &val_[out_base + static_cast<std::size_t>(k) * n_out];
      for (int i = 0; i < n_out; ++i) {
        double s = k == 0 ? b[i] : 0.0;
        const double* wi = w + static_cast<std::size_t>(i) * n_in;
        for (int j = 0; j < n_in; ++j) s += wi[j] * x[j];
        z[i] = s;
      }
    }
  } else {
    for (int i = 0; i < n_out; ++i) {
      double z = b[i];
      for (int j = 0; j < n_in; ++j) z += w[i * n_in + j] * val_[in[j]];
      val_[out_base + i] = z;
    }
    for (int k = 0; k < ndir; ++k) {
      const Var* xd = &in_dot[static_cast<std::size_t>(k) * n_in];
      double* zd = &val_[out_base + static_cast<std::size_t>(1 + k) * n_out];
      for (int i = 0; i < n_out; ++i) {
        double z = 0.0;
        for (int j = 0; j < n_in; ++j) z += w[i * n_in + j] * val_[xd[j]];
        zd[i] = z;
      }
    }
  }

  affine_.push_back(AffineRec{w_base, b_base, out_base, in_off,
                              static_cast<std::uint16_t>(n_in),
                              static_cast<std::uint16_t>(n_out),
                              static_cast<std::uint8_t>(ndir),
                              static_cast<std::uint8_t>(contig ? 1 : 0)});
  nodes_.push_back(Node{Op::Affine, out_base, kNoVar,
                        static_cast<Var>(affine_.size() - 1), 0.0});
  return out_base;
}

Var Tape::act_dual(Activation act, Var in_base, int n, int ndir) {
  const Var out_base = static_cast<Var>(val_.size());
  val_.resize(val_.size() + static_cast<std::size_t>(n) * (1 + ndir));

  for (int i = 0; i < n; ++i)
    val_[out_base + i] = activation_value(act, val_[in_base + i]);
  for (int k = 0; k < ndir; ++k) {
    for (int i = 0; i < n; ++i) {
      const double z = val_[in_base + i];
      const double y = val_[out_base + i];
      const double zd = val_[in_base + static_cast<std::size_t>(1 + k) * n + i];
      val_[out_base + static_cast<std::size_t>(1 + k) * n + i] =
          activation_d1(act, z, y) * zd;
    }
  }

  act_.push_back(ActRec{in_base, out_base, static_cast<std::uint16_t>(n),
                        static_cast<std::uint8_t>(ndir), act});
  nodes_.push_back(Node{Op::Act, out_base, kNoVar,
                        static_cast<Var>(act_.size() - 1), 0.0});
  return out_base;
}

void Tape::backward(Var loss) {
  adj_.assign(val_.size(), 0.0);
  adj_[loss] = 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const Node& nd = *it;
    const double g = adj_[nd.out];
    switch (nd.op) {
      case Op::Add:
        adj_[nd.a] += g;
        adj_[nd.b] += g;
        break;
      case Op::Sub:
        adj_[nd.a] += g;
        adj_[nd.b] -= g;
        break;
      case Op::Mul:
        adj_[nd.a] += g * val_[nd.b];
        adj_[nd.b] += g * val_[nd.a];
        break;
      case Op::Div:
        adj_[nd.a] += g / val_[nd.b];
        adj_[nd.b] -= g * val_[nd.out] / val_[nd.b];
        break;
      case Op::Neg:
        adj_[nd.a] -= g;
        break;
      case Op::Tanh: {
        const double y = val_[nd.out];
        adj_[nd.a] += g * (1.0 - y * y);
        break;
      }
      case Op::Sqrt:
        adj_[nd.a] += g * 0.5 / val_[nd.out];
        break;
      case Op::Abs: {
        const double x = val_[nd.a];
        adj_[nd.a] += x > 0.0 ? g : (x < 0.0 ? -g : 0.0);
        break;
      }
      case Op::Square:
        adj_[nd.a] += 2.0 * val_[nd.a] * g;
        break;
      case Op::AddC:
        adj_[nd.a] += g;
        break;
      case Op::MulC:
        adj_[nd.a] += g * nd.c;
        break;
      case Op::Affine: {
        const AffineRec& r = affine_[nd.b];
        const int n_in = r.n_in, n_out = r.n_out, ndir = r.ndir;
        const double* w = &val_[r.w_base];
        if (r.contig) {
          double* gw = &adj_[r.w_base];
          double* gb = &adj_[r.b_base];
          for (int k = 0; k <= ndir; ++k) {
            const double* x = &val_[r.in_off + static_cast<std::size_t>(k) * n_in];
            double* gx = &adj_[r.in_off + static_cast<std::size_t>(k) * n_in];
            const double* gy =
                &adj_[r.out_base + static_cast<std::size_t>(k) * n_out];
            for (int i = 0; i < n_out; ++i) {
              const double gyi = gy[i];
              if (gyi == 0.0) continue;
              if (k == 0) gb[i] += gyi;
              const double* wi = w + static_cast<std::size_t>(i) * n_in;
              double* gwi = gw + static_cast<std::size_t>(i) * n_in;
              for (int j = 0; j < n_in; ++j) {
                gwi[j] += gyi * x[j];
                gx[j] += wi[j] * gyi;
              }
            }
          }
          break;
        }
        const Var* in = &ipool_[r.in_off];
        for (int i = 0; i < n_out; ++i) {
          const double gy = adj_[r.out_base + i];
          if (gy != 0.0) {
            adj_[r.b_base + i] += gy;
            for (int j = 0; j < n_in; ++j) {
              adj_[r.w_base + i * n_in + j] += gy * val_[in[j]];
              adj_[in[j]] += w[i * n_in + j] * gy;
            }
          }
          for (int k = 0; k < ndir; ++k) {
            const double gyd =
                adj_[r.out_base + static_cast<std::size_t>(1 + k) * n_out + i];
            if (gyd == 0.0) continue;
            const Var* xd = in + static_cast<std::size_t>(1 + k) * n_in;
            for (int j = 0; j < n_in; ++j) {
              adj_[r.w_base + i * n_in + j] += gyd * val_[xd[j]];
              adj_[xd[j]] += w[i * n_in + j] * gyd;
            }
          }
        }
        break;
      }
      case Op::Act: {
        const ActRec& r = act_[nd.b];
        const int n = r.n, ndir = r.ndir;
        for (int i = 0; i < n; ++i) {
          const double z = val_[r.in_base + i];
          const double y = val_[r.out_base + i];
          const double d1 = activation_d1(r.act, z, y);
          double gz = d1 * adj_[r.out_base + i];
          if (ndir > 0) {
            const double d2 = activation_d2(r.act, z, y);
            for (int k = 0; k < ndir; ++k) {
              const std::size_t off = static_cast<std::size_t>(1 + k) * n + i;
              const double gyd = adj_[r.out_base + off];
              gz += d2 * val_[r.in_base + off] * gyd;
              adj_[r.in_base + off] += d1 * gyd;
            }
          }
          adj_[r.in_base + i] += gz;
        }
        break;
      }
    }
  }
}

void Tape::read_adjoints(Var base, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = adj_[base + i];
}

void Tape::reset() {
  val_.clear();
  adj_.clear();
  nodes_.clear();
  affine_.clear();
  act_.clear();
  ipool_.clear();
}

TDual td_const(Tape& t, double c, int ndir) {
  TDual r;
  r.v = t.leaf(c);
  for (int k = 0; k < ndir; ++k) r.d[k] = t.leaf(0.0);
  return r;
}

TDual td_add(Tape& t, const TDual& a, const TDual& b, int ndir) {
  TDual r;
  r.v = t.add(a.v, b.v);
  for (int k = 0; k < ndir; ++k) r.d[k] = t.add(a.d[k], b.d[k]);
  return r;
}

TDual td_sub(Tape& t, const TDual& a, const TDual& b, int ndir) {
  TDual r;
  r.v = t.sub(a.v, b.v);
  for (int k = 0; k < ndir; ++k) r.d[k] = t.sub(a.d[k], b.d[k]);
  return r;
}

TDual td_mul(Tape& t, const TDual& a, const TDual& b, int ndir) {
  TDual r;
  r.v = t.mul(a.v, b.v);
  for (int k = 0; k < ndir; ++k)
    r.d[k] = t.add(t.mul(a.d[k], b.v), t.mul(a.v, b.d[k]));
  return r;
}

TDual td_mul_c(Tape& t, const TDual& a, double c, int ndir) {
  TDual r;
  r.v = t.mul_c(a.v, c);
  for (int k = 0; k < ndir; ++k) r.d[k] = t.mul_c(a.d[k], c);
  return r;
}

TDual td_add_c(Tape& t, const TDual& a, double c, int ndir) {
  TDual r;
  r.v = t.add_c(a.v, c);
  r.d = a.d;
  return r;
}

}  // namespace ck
