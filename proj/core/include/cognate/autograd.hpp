#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Minimal reverse-mode automatic differentiation over dense row-major
// double tensors. A Tape records every op as it runs; backward() replays the
// records in reverse. Each op below is a fused kernel with a hand-written
// adjoint; the finite-difference gradient check in the tests is the oracle.
namespace cognate::ag {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);

class Tape;

// Handle to a tensor recorded on a tape. Cheap to copy; valid while the
// tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  const Shape& shape() const;
  int dim(int axis) const;
  std::span<const double> value() const;
  std::span<const double> grad() const;
  double item() const { return value()[0]; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // With record == false no adjoints are stored (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Shape shape, std::vector<double> data);
  // Differentiable input (a model parameter); data is copied.
  Var leaf(Shape shape, std::span<const double> data);

  // Seeds d(loss)/d(loss) = 1 for a one-element tensor and propagates.
  void backward(Var loss);

  // --- op-author interface ---
  // Called during backward() with the id of the node it belongs to.
  using Adjoint = std::function<void(Tape&, int out)>;
  Var push(Shape shape, std::vector<double> value, std::vector<Var> inputs, Adjoint adjoint);
  std::vector<double>& value_of(int id) { return nodes_[id].value; }
  std::vector<double>& grad_of(int id);
  bool needs_grad(int id) const { return nodes_[id].requires_grad; }
  const Shape& shape_of(int id) const { return nodes_[id].shape; }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    Adjoint adjoint;
  };
  std::vector<Node> nodes_;
  bool record_ = true;
};

// Element-wise ops on equal shapes.
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
// Exact (erf) GELU.
Var gelu(Var a);

// x[..., in] * w[in, out] + b[out]. Pass a default Var for no bias.
Var linear(Var x, Var w, Var b = {});

// Normalizes over the last axis.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Rows of table[V, d] selected by ids; output shape = out_prefix + {d}.
Var embedding(Var table, std::span<const std::int32_t> ids, Shape out_prefix);

// Multiplies every last-axis vector by a 0/1 flag; mask.size() must equal
// numel / last dim.
Var mask_vectors(Var x, std::span<const std::uint8_t> mask);

Var permute(Var x, const std::vector<int>& axes);
Var reshape(Var x, Shape shape);

// Multi-head attention batched over G independent groups.
//   q: [G, N, H*dh], k, v: [G, M, H*dh], bias (optional): [H, N, M] shared
//   over groups, key_mask: G*M flags. Scores are scaled by 1/sqrt(dh);
//   masked keys are excluded and the softmax renormalized over live keys.
//   A query with no live key outputs zeros.
Var attention(Var q, Var k, Var v, Var bias, std::span<const std::uint8_t> key_mask, int heads);

// a, b: [r, c, p]; mask: r*c. out[i, j, x*p + y] = mean over columns live in
// both rows of a[i, k, x] * b[j, k, y]; zero where no column is shared.
Var outer_product_mean(Var a, Var b, std::span<const std::uint8_t> mask);

enum class TriangleDirection { outgoing, incoming };

// left, right: [r, r, p].
//   outgoing: out[i, j] = sum_k left[i, k] * right[j, k]
//   incoming: out[i, j] = sum_k left[k, i] * right[k, j]
Var triangle_product(Var left, Var right, TriangleDirection direction);

// Mean cross-entropy of logits [r, r, 2] against targets in {0, 1, -1};
// -1 entries are ignored. Returns a one-element tensor, 0 when every entry
// is ignored.
Var link_cross_entropy(Var logits, std::span<const std::int8_t> targets);

// Sum of one-element tensors.
Var sum(std::span<const Var> scalars);

}  // namespace cognate::ag
