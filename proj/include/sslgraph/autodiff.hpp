#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "sslgraph/matrix.hpp"
#include "sslgraph/rng.hpp"
#include "sslgraph/sparse.hpp"

namespace sslgraph {

class Tape;

/// Handle to a matrix-valued node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const DenseMatrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode record of matrix-level operations.
///
/// Nodes are appended in evaluation order, so the record is topologically
/// sorted by construction. A tape belongs to one training run; it is not
/// safe to share one across threads.
class Tape {
 public:
  /// Gives the backward rule access to the output gradient, its inputs'
  /// values and their gradient accumulators (null when an input is constant).
  class BackwardContext {
   public:
    const DenseMatrix& out_grad() const { return *out_grad_; }
    const DenseMatrix& out_value() const { return *out_value_; }
    const DenseMatrix& input(std::size_t i) const;
    DenseMatrix* input_grad(std::size_t i);

   private:
    friend class Tape;
    Tape* tape_ = nullptr;
    std::span<const std::size_t> inputs_;
    const DenseMatrix* out_grad_ = nullptr;
    const DenseMatrix* out_value_ = nullptr;
  };
  using BackwardFn = std::function<void(BackwardContext&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Non-owning constant: `m` must outlive the tape.
  Var constant_ref(const DenseMatrix& m);
  Var constant(DenseMatrix m);
  /// Tracked leaf; its gradient is populated by `backward`.
  Var parameter(DenseMatrix m);

  /// Appends an operation. The backward rule is dropped when no input needs
  /// a gradient.
  Var record(DenseMatrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Propagates d(loss)/d(node) for every node reachable from `loss`.
  /// Throws when `loss` is not a 1×1 node of this tape.
  void backward(Var loss);

  /// Gradient of the last backward pass; a zero matrix for tracked
  /// parameters the loss does not depend on.
  const DenseMatrix& grad(Var v) const;

  const DenseMatrix& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  std::span<const std::size_t> parameters() const { return params_; }

 private:
  struct Node {
    DenseMatrix owned;
    const DenseMatrix* external = nullptr;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::vector<DenseMatrix> grads_;
  std::vector<std::size_t> params_;
};

/// Differentiable primitives. Shapes are validated eagerly; failures throw
/// std::invalid_argument naming both shapes.
namespace ad {

Var matmul(Var a, Var b);
/// Row i is Σ_j adj(i,j)·h_j. `adj` must outlive the tape.
Var spmm(const SparseAdjacency& adj, Var h);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1×c row vector to every row.
Var add_row(Var x, Var bias);
Var scale(Var a, double s);
Var relu(Var x);
Var elu(Var x, double alpha = 1.0);
Var leaky_relu(Var x, double slope);
Var softmax_rows(Var x);
/// Inverted dropout: kept entries are scaled by 1/(1-rate).
Var dropout(Var x, double rate, Rng& rng);
Var square(Var x);
/// 1×1 sum of all entries.
Var sum(Var x);
/// 1×1 mean of all entries.
Var mean(Var x);
/// 1×1 mean of squared difference against a constant target.
Var mse(Var prediction, const DenseMatrix& target);

/// 1×1 mean over rows with mask[i] of -log softmax(logits_i)[labels[i]].
/// Unmasked rows receive an exactly-zero gradient.
Var masked_cross_entropy(Var logits, std::span<const int> labels, std::span<const std::uint8_t> mask);

/// Single-head graph attention aggregation over `pattern` (which must
/// contain the self-loops): scores e_ij = LeakyReLU(a_srcᵀ z_i + a_dstᵀ z_j),
/// α = softmax over each row's pattern, row i = Σ_j α_ij z_j.
/// `att` is 1×2F with the first F entries applied to the receiving node.
/// When `alpha_out` is given it receives α in the pattern's CSR value order.
Var gat_aggregate(Var z, Var att, const SparseAdjacency& pattern, double slope,
                  std::vector<double>* alpha_out = nullptr);

}  // namespace ad

}  // namespace sslgraph
