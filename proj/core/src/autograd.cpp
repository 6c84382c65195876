#include "cognate/autograd.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cognate::ag {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + what);
}

void require_same_shape(Var a, Var b, const char* op) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

std::vector<double> copy_of(Var v) { return {v.value().begin(), v.value().end()}; }

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

const Shape& Var::shape() const { return tape_->shape_of(id_); }

int Var::dim(int axis) const {
  const auto& s = shape();
  const int rank = static_cast<int>(s.size());
  return s[static_cast<std::size_t>(axis < 0 ? rank + axis : axis)];
}

std::span<const double> Var::value() const { return tape_->value_of(id_); }

std::span<const double> Var::grad() const { return tape_->grad_of(id_); }

Var Tape::constant(Shape shape, std::vector<double> data) {
  if (data.size() != numel(shape)) throw std::invalid_argument("constant: data does not match shape");
  nodes_.push_back(Node{std::move(shape), std::move(data), {}, false, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Shape shape, std::span<const double> data) {
  if (data.size() != numel(shape)) throw std::invalid_argument("leaf: data does not match shape");
  nodes_.push_back(Node{std::move(shape), {data.begin(), data.end()}, {}, record_, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Shape shape, std::vector<double> value, std::vector<Var> inputs, Adjoint adjoint) {
  assert(value.size() == numel(shape));
  bool needs = false;
  if (record_)
    for (const auto& v : inputs) needs = needs || nodes_[v.id()].requires_grad;
  nodes_.push_back(Node{std::move(shape), std::move(value), {}, needs, needs ? std::move(adjoint) : Adjoint{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

std::vector<double>& Tape::grad_of(int id) {
  auto& node = nodes_[id];
  if (node.grad.size() != node.value.size()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("backward on a tape that does not record");
  if (loss.value().size() != 1) throw std::invalid_argument("backward: loss must have one element");
  grad_of(loss.id())[0] += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    auto& node = nodes_[id];
    if (node.requires_grad && node.adjoint && !node.grad.empty()) node.adjoint(*this, id);
  }
}

// ---------------------------------------------------------------------------
// element-wise

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  std::vector<double> out = copy_of(a);
  const auto bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.shape(), std::move(out), {a, b}, [ia, ib](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    for (int id : {ia, ib}) {
      if (!t.needs_grad(id)) continue;
      auto& gi = t.grad_of(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out = copy_of(a);
  const auto bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.shape(), std::move(out), {a, b}, [ia, ib](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& va = t.value_of(ia);
    const auto& vb = t.value_of(ib);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad_of(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad_of(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Var a, double factor) {
  std::vector<double> out = copy_of(a);
  for (auto& x : out) x *= factor;
  const int ia = a.id();
  return a.tape()->push(a.shape(), std::move(out), {a}, [ia, factor](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    auto& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var sigmoid(Var a) {
  std::vector<double> out = copy_of(a);
  for (auto& x : out) x = 1.0 / (1.0 + std::exp(-x));
  const int ia = a.id();
  return a.tape()->push(a.shape(), std::move(out), {a}, [ia](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& y = t.value_of(o);
    auto& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var gelu(Var a) {
  std::vector<double> out = copy_of(a);
  for (auto& x : out) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  const int ia = a.id();
  return a.tape()->push(a.shape(), std::move(out), {a}, [ia](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& x = t.value_of(ia);
    auto& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x[i] * x[i]);
      ga[i] += g[i] * (cdf + x[i] * pdf);
    }
  });
}

// ---------------------------------------------------------------------------
// dense layers

Var linear(Var x, Var w, Var b) {
  require(w.shape().size() == 2, "linear", "weight must be 2-D");
  const int in = w.dim(0), out_dim = w.dim(1);
  require(x.dim(-1) == in, "linear", "input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  if (b.valid()) require(b.shape() == Shape{out_dim}, "linear", "bias shape");
  const std::size_t rows = numel(x.shape()) / static_cast<std::size_t>(in);
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;

  const auto xv = x.value();
  const auto wv = w.value();
  std::vector<double> out(rows * static_cast<std::size_t>(out_dim), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* y = &out[r * out_dim];
    if (b.valid()) {
      const auto bv = b.value();
      for (int j = 0; j < out_dim; ++j) y[j] = bv[j];
    }
    const double* xr = &xv[r * in];
    for (int k = 0; k < in; ++k) {
      const double xk = xr[k];
      if (xk == 0.0) continue;
      const double* wk = &wv[static_cast<std::size_t>(k) * out_dim];
      for (int j = 0; j < out_dim; ++j) y[j] += xk * wk[j];
    }
  }
  std::vector<Var> inputs{x, w};
  if (b.valid()) inputs.push_back(b);
  const int ix = x.id(), iw = w.id(), ib = b.valid() ? b.id() : -1;
  return x.tape()->push(out_shape, std::move(out), std::move(inputs),
                        [ix, iw, ib, rows, in, out_dim](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& xv = t.value_of(ix);
    const auto& wv = t.value_of(iw);
    if (t.needs_grad(ix)) {
      auto& gx = t.grad_of(ix);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = &g[r * out_dim];
        double* gxr = &gx[r * in];
        for (int k = 0; k < in; ++k) {
          const double* wk = &wv[static_cast<std::size_t>(k) * out_dim];
          double acc = 0.0;
          for (int j = 0; j < out_dim; ++j) acc += gr[j] * wk[j];
          gxr[k] += acc;
        }
      }
    }
    if (t.needs_grad(iw)) {
      auto& gw = t.grad_of(iw);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = &g[r * out_dim];
        const double* xr = &xv[r * in];
        for (int k = 0; k < in; ++k) {
          const double xk = xr[k];
          if (xk == 0.0) continue;
          double* gwk = &gw[static_cast<std::size_t>(k) * out_dim];
          for (int j = 0; j < out_dim; ++j) gwk[j] += xk * gr[j];
        }
      }
    }
    if (ib >= 0 && t.needs_grad(ib)) {
      auto& gb = t.grad_of(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < out_dim; ++j) gb[j] += g[r * out_dim + j];
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const int d = x.dim(-1);
  require(gamma.shape() == Shape{d} && beta.shape() == Shape{d}, "layer_norm", "scale/offset shape");
  const std::size_t rows = numel(x.shape()) / static_cast<std::size_t>(d);
  const auto xv = x.value();
  const auto gv = gamma.value();
  const auto bv = beta.value();
  std::vector<double> out(xv.size());
  // Saved for the adjoint: normalized input and 1/sigma per row.
  std::vector<double> xhat(xv.size()), inv_sigma(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &xv[r * d];
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += xr[i];
    mean /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (int i = 0; i < d; ++i) {
      const double h = (xr[i] - mean) * is;
      xhat[r * d + i] = h;
      out[r * d + i] = gv[i] * h + bv[i];
    }
  }
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape()->push(x.shape(), std::move(out), {x, gamma, beta},
                        [ix, ig, ib, rows, d, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& gv = t.value_of(ig);
    if (t.needs_grad(ig) || t.needs_grad(ib)) {
      auto& gg = t.grad_of(ig);
      auto& gb = t.grad_of(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (int i = 0; i < d; ++i) {
          gg[i] += g[r * d + i] * xhat[r * d + i];
          gb[i] += g[r * d + i];
        }
    }
    if (t.needs_grad(ix)) {
      auto& gx = t.grad_of(ix);
      for (std::size_t r = 0; r < rows; ++r) {
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (int i = 0; i < d; ++i) {
          const double dh = g[r * d + i] * gv[i];
          mean_dh += dh;
          mean_dh_h += dh * xhat[r * d + i];
        }
        mean_dh /= d;
        mean_dh_h /= d;
        for (int i = 0; i < d; ++i) {
          const double dh = g[r * d + i] * gv[i];
          gx[r * d + i] += inv_sigma[r] * (dh - mean_dh - xhat[r * d + i] * mean_dh_h);
        }
      }
    }
  });
}

Var embedding(Var table, std::span<const std::int32_t> ids, Shape out_prefix) {
  require(table.shape().size() == 2, "embedding", "table must be 2-D");
  require(numel(out_prefix) == ids.size(), "embedding", "prefix does not match id count");
  const int vocab = table.dim(0), d = table.dim(1);
  const auto tv = table.value();
  std::vector<double> out(ids.size() * static_cast<std::size_t>(d));
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    require(ids[n] >= 0 && ids[n] < vocab, "embedding", "id " + std::to_string(ids[n]) + " out of range");
    std::copy_n(&tv[static_cast<std::size_t>(ids[n]) * d], d, &out[n * d]);
  }
  Shape shape = std::move(out_prefix);
  shape.push_back(d);
  const int it = table.id();
  return table.tape()->push(shape, std::move(out), {table}, [it, d, saved = std::move(saved)](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    auto& gt = t.grad_of(it);
    for (std::size_t n = 0; n < saved.size(); ++n) {
      double* row = &gt[static_cast<std::size_t>(saved[n]) * d];
      for (int i = 0; i < d; ++i) row[i] += g[n * d + i];
    }
  });
}

Var mask_vectors(Var x, std::span<const std::uint8_t> mask) {
  const int d = x.dim(-1);
  const std::size_t rows = numel(x.shape()) / static_cast<std::size_t>(d);
  require(mask.size() == rows, "mask_vectors", "mask size " + std::to_string(mask.size()) +
                                                   " for " + std::to_string(rows) + " vectors");
  std::vector<double> out = copy_of(x);
  std::vector<std::uint8_t> saved(mask.begin(), mask.end());
  for (std::size_t r = 0; r < rows; ++r)
    if (!saved[r]) std::fill_n(&out[r * d], d, 0.0);
  const int ix = x.id();
  return x.tape()->push(x.shape(), std::move(out), {x}, [ix, d, saved = std::move(saved)](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    auto& gx = t.grad_of(ix);
    for (std::size_t r = 0; r < saved.size(); ++r)
      if (saved[r])
        for (int i = 0; i < d; ++i) gx[r * d + i] += g[r * d + i];
  });
}

// ---------------------------------------------------------------------------
// layout

namespace {

// Maps each output flat index to its input flat index.
std::vector<std::size_t> permutation_index(const Shape& in, const std::vector<int>& axes, Shape& out) {
  const std::size_t rank = in.size();
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * static_cast<std::size_t>(in[i]);
  out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) out[i] = in[static_cast<std::size_t>(axes[i])];
  const std::size_t n = numel(in);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> counter(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += counter[i] * in_stride[static_cast<std::size_t>(axes[i])];
    map[flat] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++counter[i] < static_cast<std::size_t>(out[i])) break;
      counter[i] = 0;
    }
  }
  return map;
}

}  // namespace

Var permute(Var x, const std::vector<int>& axes) {
  require(axes.size() == x.shape().size(), "permute", "axis count");
  Shape out_shape;
  auto map = permutation_index(x.shape(), axes, out_shape);
  const auto xv = x.value();
  std::vector<double> out(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = xv[map[i]];
  const int ix = x.id();
  return x.tape()->push(out_shape, std::move(out), {x}, [ix, map = std::move(map)](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    auto& gx = t.grad_of(ix);
    for (std::size_t i = 0; i < map.size(); ++i) gx[map[i]] += g[i];
  });
}

Var reshape(Var x, Shape shape) {
  require(numel(shape) == numel(x.shape()), "reshape", shape_str(x.shape()) + " to " + shape_str(shape));
  const int ix = x.id();
  return x.tape()->push(std::move(shape), copy_of(x), {x}, [ix](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    auto& gx = t.grad_of(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

// ---------------------------------------------------------------------------
// attention

Var attention(Var q, Var k, Var v, Var bias, std::span<const std::uint8_t> key_mask, int heads) {
  require(q.shape().size() == 3 && k.shape().size() == 3 && v.shape().size() == 3, "attention", "q/k/v must be 3-D");
  const int G = q.dim(0), N = q.dim(1), D = q.dim(2), M = k.dim(1);
  require(k.dim(0) == G && v.dim(0) == G && k.dim(2) == D && v.dim(2) == D && v.dim(1) == M, "attention",
          "q/k/v shapes disagree");
  require(heads >= 1 && D % heads == 0, "attention", "hidden size not divisible by heads");
  require(key_mask.size() == static_cast<std::size_t>(G) * M, "attention", "key mask size");
  if (bias.valid()) require(bias.shape() == Shape{heads, N, M}, "attention", "bias must be [H, N, M]");
  const int dh = D / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto qv = q.value(), kv = k.value(), vv = v.value();
  std::vector<double> out(static_cast<std::size_t>(G) * N * D, 0.0);
  // probs[g][h][n][m]
  std::vector<double> probs(static_cast<std::size_t>(G) * heads * N * M, 0.0);
  std::vector<std::uint8_t> mask(key_mask.begin(), key_mask.end());
  std::vector<double> scores(static_cast<std::size_t>(M));

  for (int g = 0; g < G; ++g) {
    for (int h = 0; h < heads; ++h) {
      for (int n = 0; n < N; ++n) {
        const double* qr = &qv[(static_cast<std::size_t>(g) * N + n) * D + h * dh];
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (int m = 0; m < M; ++m) {
          if (!mask[static_cast<std::size_t>(g) * M + m]) continue;
          const double* kr = &kv[(static_cast<std::size_t>(g) * M + m) * D + h * dh];
          double s = 0.0;
          for (int e = 0; e < dh; ++e) s += qr[e] * kr[e];
          s *= sc;
          if (bias.valid()) s += bias.value()[(static_cast<std::size_t>(h) * N + n) * M + m];
          scores[m] = s;
          mx = std::max(mx, s);
          any = true;
        }
        if (!any) continue;
        double z = 0.0;
        double* p = &probs[((static_cast<std::size_t>(g) * heads + h) * N + n) * M];
        for (int m = 0; m < M; ++m) {
          if (!mask[static_cast<std::size_t>(g) * M + m]) continue;
          p[m] = std::exp(scores[m] - mx);
          z += p[m];
        }
        double* orow = &out[(static_cast<std::size_t>(g) * N + n) * D + h * dh];
        for (int m = 0; m < M; ++m) {
          if (!mask[static_cast<std::size_t>(g) * M + m]) continue;
          p[m] /= z;
          const double* vr = &vv[(static_cast<std::size_t>(g) * M + m) * D + h * dh];
          for (int e = 0; e < dh; ++e) orow[e] += p[m] * vr[e];
        }
      }
    }
  }

  std::vector<Var> inputs{q, k, v};
  if (bias.valid()) inputs.push_back(bias);
  const int iq = q.id(), ik = k.id(), iv = v.id(), ib = bias.valid() ? bias.id() : -1;
  return q.tape()->push({G, N, D}, std::move(out), std::move(inputs),
                        [=, probs = std::move(probs), mask = std::move(mask)](Tape& t, int o) {
    const auto& gout = t.grad_of(o);
    const auto& qv = t.value_of(iq);
    const auto& kv = t.value_of(ik);
    const auto& vv = t.value_of(iv);
    std::vector<double> dummy;
    auto& gq = t.needs_grad(iq) ? t.grad_of(iq) : dummy;
    auto& gk = t.needs_grad(ik) ? t.grad_of(ik) : dummy;
    auto& gv = t.needs_grad(iv) ? t.grad_of(iv) : dummy;
    std::vector<double>* gb = (ib >= 0 && t.needs_grad(ib)) ? &t.grad_of(ib) : nullptr;
    std::vector<double> dp(static_cast<std::size_t>(M));
    for (int g = 0; g < G; ++g) {
      for (int h = 0; h < heads; ++h) {
        for (int n = 0; n < N; ++n) {
          const double* p = &probs[((static_cast<std::size_t>(g) * heads + h) * N + n) * M];
          const double* go = &gout[(static_cast<std::size_t>(g) * N + n) * D + h * dh];
          double dot = 0.0;
          for (int m = 0; m < M; ++m) {
            if (!mask[static_cast<std::size_t>(g) * M + m]) continue;
            const std::size_t kvrow = (static_cast<std::size_t>(g) * M + m) * D + h * dh;
            double s = 0.0;
            for (int e = 0; e < dh; ++e) s += go[e] * vv[kvrow + e];
            dp[m] = s;
            dot += p[m] * s;
            if (!gv.empty())
              for (int e = 0; e < dh; ++e) gv[kvrow + e] += p[m] * go[e];
          }
          const std::size_t qrow = (static_cast<std::size_t>(g) * N + n) * D + h * dh;
          for (int m = 0; m < M; ++m) {
            if (!mask[static_cast<std::size_t>(g) * M + m]) continue;
            const double ds = p[m] * (dp[m] - dot);
            if (gb) (*gb)[(static_cast<std::size_t>(h) * N + n) * M + m] += ds;
            const std::size_t kvrow = (static_cast<std::size_t>(g) * M + m) * D + h * dh;
            if (!gq.empty())
              for (int e = 0; e < dh; ++e) gq[qrow + e] += sc * ds * kv[kvrow + e];
            if (!gk.empty())
              for (int e = 0; e < dh; ++e) gk[kvrow + e] += sc * ds * qv[qrow + e];
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// pair ops

Var outer_product_mean(Var a, Var b, std::span<const std::uint8_t> mask) {
  require(a.shape().size() == 3 && a.shape() == b.shape(), "outer_product_mean", "a and b must be equal 3-D");
  const int r = a.dim(0), c = a.dim(1), p = a.dim(2);
  require(mask.size() == static_cast<std::size_t>(r) * c, "outer_product_mean", "mask size");
  const auto av = a.value(), bv = b.value();
  const std::size_t pp = static_cast<std::size_t>(p) * p;
  std::vector<double> out(static_cast<std::size_t>(r) * r * pp, 0.0);
  // 1 / shared column count, 0 when nothing is shared.
  std::vector<double> inv_count(static_cast<std::size_t>(r) * r, 0.0);
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      int shared = 0;
      for (int k = 0; k < c; ++k) shared += (m[i * c + k] && m[j * c + k]) ? 1 : 0;
      if (shared == 0) continue;
      const double w = 1.0 / shared;
      inv_count[static_cast<std::size_t>(i) * r + j] = w;
      double* o = &out[(static_cast<std::size_t>(i) * r + j) * pp];
      for (int k = 0; k < c; ++k) {
        if (!(m[i * c + k] && m[j * c + k])) continue;
        const double* ar = &av[(static_cast<std::size_t>(i) * c + k) * p];
        const double* br = &bv[(static_cast<std::size_t>(j) * c + k) * p];
        for (int x = 0; x < p; ++x)
          for (int y = 0; y < p; ++y) o[x * p + y] += w * ar[x] * br[y];
      }
    }
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->push({r, r, static_cast<int>(pp)}, std::move(out), {a, b},
                        [=, m = std::move(m), inv_count = std::move(inv_count)](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& av = t.value_of(ia);
    const auto& bv = t.value_of(ib);
    std::vector<double> dummy;
    auto& ga = t.needs_grad(ia) ? t.grad_of(ia) : dummy;
    auto& gb = t.needs_grad(ib) ? t.grad_of(ib) : dummy;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        const double w = inv_count[static_cast<std::size_t>(i) * r + j];
        if (w == 0.0) continue;
        const double* go = &g[(static_cast<std::size_t>(i) * r + j) * pp];
        for (int k = 0; k < c; ++k) {
          if (!(m[i * c + k] && m[j * c + k])) continue;
          const std::size_t ra = (static_cast<std::size_t>(i) * c + k) * p;
          const std::size_t rb = (static_cast<std::size_t>(j) * c + k) * p;
          for (int x = 0; x < p; ++x) {
            for (int y = 0; y < p; ++y) {
              const double gxy = w * go[x * p + y];
              if (!ga.empty()) ga[ra + x] += gxy * bv[rb + y];
              if (!gb.empty()) gb[rb + y] += gxy * av[ra + x];
            }
          }
        }
      }
    }
  });
}

Var triangle_product(Var left, Var right, TriangleDirection direction) {
  require(left.shape().size() == 3 && left.shape() == right.shape() && left.dim(0) == left.dim(1),
          "triangle_product", "inputs must be equal [r, r, p]");
  const int r = left.dim(0), p = left.dim(2);
  const bool outgoing = direction == TriangleDirection::outgoing;
  // Flat offset of the (i, k) operand of out[i, j] for each direction.
  auto at = [r, p](int a, int b) { return (static_cast<std::size_t>(a) * r + b) * p; };
  const auto lv = left.value(), rv = right.value();
  std::vector<double> out(static_cast<std::size_t>(r) * r * p, 0.0);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      double* o = &out[at(i, j)];
      for (int k = 0; k < r; ++k) {
        const double* l = &lv[outgoing ? at(i, k) : at(k, i)];
        const double* q = &rv[outgoing ? at(j, k) : at(k, j)];
        for (int e = 0; e < p; ++e) o[e] += l[e] * q[e];
      }
    }
  const int il = left.id(), ir = right.id();
  return left.tape()->push(left.shape(), std::move(out), {left, right}, [=](Tape& t, int o) {
    const auto& g = t.grad_of(o);
    const auto& lv = t.value_of(il);
    const auto& rv = t.value_of(ir);
    std::vector<double> dummy;
    auto& gl = t.needs_grad(il) ? t.grad_of(il) : dummy;
    auto& gr = t.needs_grad(ir) ? t.grad_of(ir) : dummy;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const double* go = &g[at(i, j)];
        for (int k = 0; k < r; ++k) {
          const std::size_t lo = outgoing ? at(i, k) : at(k, i);
          const std::size_t ro = outgoing ? at(j, k) : at(k, j);
          for (int e = 0; e < p; ++e) {
            if (!gl.empty()) gl[lo + e] += go[e] * rv[ro + e];
            if (!gr.empty()) gr[ro + e] += go[e] * lv[lo + e];
          }
        }
      }
  });
}

// ---------------------------------------------------------------------------
// loss

Var link_cross_entropy(Var logits, std::span<const std::int8_t> targets) {
  require(logits.shape().size() == 3 && logits.dim(2) == 2, "link_cross_entropy", "logits must be [r, r, 2]");
  const std::size_t n = static_cast<std::size_t>(logits.dim(0)) * logits.dim(1);
  require(targets.size() == n, "link_cross_entropy", "target count");
  const auto lv = logits.value();
  std::vector<std::int8_t> saved(targets.begin(), targets.end());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < n; ++e) {
    if (saved[e] < 0) continue;
    const double l0 = lv[2 * e], l1 = lv[2 * e + 1];
    const double mx = std::max(l0, l1);
    const double lse = mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
    total += lse - (saved[e] == 1 ? l1 : l0);
    ++count;
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  const int il = logits.id();
  return logits.tape()->push({1}, {loss}, {logits}, [il, count, saved = std::move(saved)](Tape& t, int o) {
    if (count == 0) return;
    const double g = t.grad_of(o)[0] / static_cast<double>(count);
    const auto& lv = t.value_of(il);
    auto& gl = t.grad_of(il);
    for (std::size_t e = 0; e < saved.size(); ++e) {
      if (saved[e] < 0) continue;
      const double l0 = lv[2 * e], l1 = lv[2 * e + 1];
      const double mx = std::max(l0, l1);
      const double e0 = std::exp(l0 - mx), e1 = std::exp(l1 - mx);
      const double p1 = e1 / (e0 + e1);
      const double p0 = 1.0 - p1;
      gl[2 * e] += g * (p0 - (saved[e] == 0 ? 1.0 : 0.0));
      gl[2 * e + 1] += g * (p1 - (saved[e] == 1 ? 1.0 : 0.0));
    }
  });
}

Var sum(std::span<const Var> scalars) {
  require(!scalars.empty(), "sum", "no inputs");
  double total = 0.0;
  std::vector<int> ids;
  for (const auto& s : scalars) {
    require(s.value().size() == 1, "sum", "inputs must have one element");
    total += s.item();
    ids.push_back(s.id());
  }
  return scalars.front().tape()->push({1}, {total}, {scalars.begin(), scalars.end()},
                                      [ids = std::move(ids)](Tape& t, int o) {
    const double g = t.grad_of(o)[0];
    for (int id : ids)
      if (t.needs_grad(id)) t.grad_of(id)[0] += g;
  });
}

}  // namespace cognate::ag
