#include "sslgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace sslgraph {

const DenseMatrix& Var::value() const {
  if (tape == nullptr) throw std::logic_error("Var: detached handle");
  return tape->value(id);
}

const DenseMatrix& Tape::BackwardContext::input(std::size_t i) const {
  return tape_->value(inputs_[i]);
}

DenseMatrix* Tape::BackwardContext::input_grad(std::size_t i) {
  const std::size_t id = inputs_[i];
  if (!tape_->nodes_[id].requires_grad) return nullptr;
  return &tape_->grads_[id];
}

const DenseMatrix& Tape::value(std::size_t id) const {
  const Node& node = nodes_.at(id);
  return node.external != nullptr ? *node.external : node.owned;
}

Var Tape::constant_ref(const DenseMatrix& m) {
  Node node;
  node.external = &m;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::constant(DenseMatrix m) {
  Node node;
  node.owned = std::move(m);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(DenseMatrix m) {
  Node node;
  node.owned = std::move(m);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  params_.push_back(nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::record(DenseMatrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw std::logic_error("Tape::record: input not on tape");
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this || loss.id >= nodes_.size()) {
    throw std::invalid_argument("Tape::backward: loss is not reachable from this tape");
  }
  const DenseMatrix& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be 1x1, got " + lv.shape());
  }
  grads_.assign(nodes_.size(), DenseMatrix());
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].requires_grad) {
      const DenseMatrix& v = value(id);
      grads_[id] = DenseMatrix(v.rows(), v.cols());
    }
  }
  if (!nodes_[loss.id].requires_grad) return;
  grads_[loss.id](0, 0) = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward) continue;
    BackwardContext ctx;
    ctx.tape_ = this;
    ctx.inputs_ = node.inputs;
    ctx.out_grad_ = &grads_[id];
    ctx.out_value_ = &value(id);
    node.backward(ctx);
  }
}

const DenseMatrix& Tape::grad(Var v) const {
  if (v.tape != this || v.id >= grads_.size()) {
    throw std::invalid_argument("Tape::grad: no gradient recorded for this handle");
  }
  return grads_[v.id];
}

namespace ad {

namespace {

void same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
  }
}

void same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape() + " vs " +
                                b.shape());
  }
}

template <typename F, typename G>
Var unary_elementwise(Var x, F forward, G derivative) {
  DenseMatrix out = x.value();
  for (double& v : out.data()) v = forward(v);
  return x.tape->record(std::move(out), {x.id}, [derivative](Tape::BackwardContext& ctx) {
    DenseMatrix* gx = ctx.input_grad(0);
    if (gx == nullptr) return;
    const auto& xv = ctx.input(0).data();
    const auto& yv = ctx.out_value().data();
    const auto& g = ctx.out_grad().data();
    auto& gd = gx->data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += g[i] * derivative(xv[i], yv[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  DenseMatrix out = sslgraph::matmul(a.value(), b.value());
  return a.tape->record(std::move(out), {a.id, b.id}, [](Tape::BackwardContext& ctx) {
    if (DenseMatrix* ga = ctx.input_grad(0)) axpy(*ga, 1.0, matmul_nt(ctx.out_grad(), ctx.input(1)));
    if (DenseMatrix* gb = ctx.input_grad(1)) axpy(*gb, 1.0, matmul_tn(ctx.input(0), ctx.out_grad()));
  });
}

Var spmm(const SparseAdjacency& adj, Var h) {
  DenseMatrix out = sslgraph::spmm(adj, h.value());
  const SparseAdjacency* a = &adj;
  return h.tape->record(std::move(out), {h.id}, [a](Tape::BackwardContext& ctx) {
    if (DenseMatrix* gh = ctx.input_grad(0)) axpy(*gh, 1.0, spmm_transposed(*a, ctx.out_grad()));
  });
}

Var add(Var a, Var b) {
  same_tape(a, b, "add");
  same_shape(a.value(), b.value(), "add");
  DenseMatrix out = sslgraph::add(a.value(), b.value());
  return a.tape->record(std::move(out), {a.id, b.id}, [](Tape::BackwardContext& ctx) {
    if (DenseMatrix* ga = ctx.input_grad(0)) axpy(*ga, 1.0, ctx.out_grad());
    if (DenseMatrix* gb = ctx.input_grad(1)) axpy(*gb, 1.0, ctx.out_grad());
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b, "sub");
  same_shape(a.value(), b.value(), "sub");
  DenseMatrix out = subtract(a.value(), b.value());
  return a.tape->record(std::move(out), {a.id, b.id}, [](Tape::BackwardContext& ctx) {
    if (DenseMatrix* ga = ctx.input_grad(0)) axpy(*ga, 1.0, ctx.out_grad());
    if (DenseMatrix* gb = ctx.input_grad(1)) axpy(*gb, -1.0, ctx.out_grad());
  });
}

Var add_row(Var x, Var bias) {
  same_tape(x, bias, "add_row");
  const DenseMatrix& xv = x.value();
  const DenseMatrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw std::invalid_argument("add_row: bias " + bv.shape() + " does not fit rows of " +
                                xv.shape());
  }
  DenseMatrix out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bv(0, j);
  }
  return x.tape->record(std::move(out), {x.id, bias.id}, [](Tape::BackwardContext& ctx) {
    const DenseMatrix& g = ctx.out_grad();
    if (DenseMatrix* gx = ctx.input_grad(0)) axpy(*gx, 1.0, g);
    if (DenseMatrix* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gb)(0, j) += g(i, j);
    }
  });
}

Var scale(Var a, double s) {
  DenseMatrix out = sslgraph::scale(a.value(), s);
  return a.tape->record(std::move(out), {a.id}, [s](Tape::BackwardContext& ctx) {
    if (DenseMatrix* ga = ctx.input_grad(0)) axpy(*ga, s, ctx.out_grad());
  });
}

Var relu(Var x) {
  return unary_elementwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var elu(Var x, double alpha) {
  return unary_elementwise(
      x, [alpha](double v) { return v > 0.0 ? v : alpha * std::expm1(v); },
      [alpha](double v, double y) { return v > 0.0 ? 1.0 : y + alpha; });
}

Var leaky_relu(Var x, double slope) {
  return unary_elementwise(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var square(Var x) {
  return unary_elementwise(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var softmax_rows(Var x) {
  DenseMatrix out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double& v : r) z += (v = std::exp(v - m));
    for (double& v : r) v /= z;
  }
  return x.tape->record(std::move(out), {x.id}, [](Tape::BackwardContext& ctx) {
    DenseMatrix* gx = ctx.input_grad(0);
    if (gx == nullptr) return;
    const DenseMatrix& y = ctx.out_value();
    const DenseMatrix& g = ctx.out_grad();
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) (*gx)(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var dropout(Var x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.value().size());
  DenseMatrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out.data()[i] *= (*mask)[i];
  }
  return x.tape->record(std::move(out), {x.id}, [mask](Tape::BackwardContext& ctx) {
    DenseMatrix* gx = ctx.input_grad(0);
    if (gx == nullptr) return;
    const auto& g = ctx.out_grad().data();
    for (std::size_t i = 0; i < g.size(); ++i) gx->data()[i] += g[i] * (*mask)[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape->record(DenseMatrix(1, 1, s), {x.id}, [](Tape::BackwardContext& ctx) {
    DenseMatrix* gx = ctx.input_grad(0);
    if (gx == nullptr) return;
    const double g = ctx.out_grad()(0, 0);
    for (double& v : gx->data()) v += g;
  });
}

Var mean(Var x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw std::invalid_argument("mean: empty matrix");
  return scale(sum(x), 1.0 / static_cast<double>(count));
}

Var mse(Var prediction, const DenseMatrix& target) {
  const DenseMatrix& p = prediction.value();
  same_shape(p, target, "mse");
  if (p.size() == 0) throw std::invalid_argument("mse: empty matrix");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p.data()[i] - target.data()[i];
    s += d * d;
  }
  const double inv = 1.0 / static_cast<double>(p.size());
  const DenseMatrix* t = &target;
  return prediction.tape->record(
      DenseMatrix(1, 1, s * inv), {prediction.id}, [t, inv](Tape::BackwardContext& ctx) {
        DenseMatrix* gp = ctx.input_grad(0);
        if (gp == nullptr) return;
        const double g = ctx.out_grad()(0, 0) * 2.0 * inv;
        const auto& pv = ctx.input(0).data();
        const auto& tv = t->data();
        for (std::size_t i = 0; i < pv.size(); ++i) gp->data()[i] += g * (pv[i] - tv[i]);
      });
}

Var masked_cross_entropy(Var logits, std::span<const int> labels,
                         std::span<const std::uint8_t> mask) {
  const DenseMatrix& z = logits.value();
  if (labels.size() != z.rows() || mask.size() != z.rows()) {
    throw std::invalid_argument("masked_cross_entropy: labels/mask length does not match " +
                                z.shape());
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (!mask[i]) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= z.cols()) {
      throw std::invalid_argument("masked_cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range for " + std::to_string(z.cols()) + " classes");
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("masked_cross_entropy: empty mask");

  // Softmax probabilities of masked rows are kept for the backward pass.
  auto probs = std::make_shared<DenseMatrix>(z.rows(), z.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (!mask[i]) continue;
    auto r = z.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double zsum = 0.0;
    for (double v : r) zsum += std::exp(v - m);
    const double log_z = m + std::log(zsum);
    total += log_z - r[static_cast<std::size_t>(labels[i])];
    auto pr = probs->row(i);
    for (std::size_t j = 0; j < r.size(); ++j) pr[j] = std::exp(r[j] - log_z);
  }
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return logits.tape->record(
      DenseMatrix(1, 1, total * inv), {logits.id},
      [probs, lab = std::move(lab), msk = std::move(msk), inv](Tape::BackwardContext& ctx) {
        DenseMatrix* gz = ctx.input_grad(0);
        if (gz == nullptr) return;
        const double g = ctx.out_grad()(0, 0) * inv;
        for (std::size_t i = 0; i < gz->rows(); ++i) {
          if (!msk[i]) continue;
          auto pr = probs->row(i);
          auto gr = gz->row(i);
          for (std::size_t j = 0; j < gr.size(); ++j) gr[j] += g * pr[j];
          gr[static_cast<std::size_t>(lab[i])] -= g;
        }
      });
}

Var gat_aggregate(Var z, Var att, const SparseAdjacency& pattern, double slope,
                  std::vector<double>* alpha_out) {
  same_tape(z, att, "gat_aggregate");
  const DenseMatrix& zv = z.value();
  const DenseMatrix& av = att.value();
  const std::size_t n = zv.rows();
  const std::size_t f = zv.cols();
  if (pattern.n() != n) {
    throw std::invalid_argument("gat_aggregate: pattern over " + std::to_string(pattern.n()) +
                                " nodes vs features " + zv.shape());
  }
  if (av.rows() != 1 || av.cols() != 2 * f) {
    throw std::invalid_argument("gat_aggregate: attention vector " + av.shape() +
                                " does not match feature width " + std::to_string(f));
  }

  std::vector<double> src(n, 0.0), dst(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = zv.row(i);
    for (std::size_t k = 0; k < f; ++k) {
      src[i] += r[k] * av(0, k);
      dst[i] += r[k] * av(0, f + k);
    }
  }

  // Per-edge raw score (pre-activation) and attention weight in CSR order.
  auto raw = std::make_shared<std::vector<double>>(pattern.nnz());
  auto alpha = std::make_shared<std::vector<double>>(pattern.nnz());
  DenseMatrix out(n, f);
  const auto offsets = pattern.row_offsets();
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = pattern.neighbors(i);
    if (nb.empty()) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const double u = src[i] + dst[nb[p]];
      (*raw)[offsets[i] + p] = u;
      const double e = u > 0.0 ? u : slope * u;
      (*alpha)[offsets[i] + p] = e;
      m = std::max(m, e);
    }
    double zsum = 0.0;
    for (std::size_t p = 0; p < nb.size(); ++p) {
      double& a = (*alpha)[offsets[i] + p];
      a = std::exp(a - m);
      zsum += a;
    }
    auto orow = out.row(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      double& a = (*alpha)[offsets[i] + p];
      a /= zsum;
      auto zr = zv.row(nb[p]);
      for (std::size_t k = 0; k < f; ++k) orow[k] += a * zr[k];
    }
  }
  if (alpha_out != nullptr) *alpha_out = *alpha;

  const SparseAdjacency* pat = &pattern;
  return z.tape->record(
      std::move(out), {z.id, att.id}, [pat, raw, alpha, slope](Tape::BackwardContext& ctx) {
        const DenseMatrix& zv = ctx.input(0);
        const DenseMatrix& av = ctx.input(1);
        const DenseMatrix& g = ctx.out_grad();
        const std::size_t n = zv.rows();
        const std::size_t f = zv.cols();
        const auto offsets = pat->row_offsets();

        DenseMatrix dz(n, f);
        std::vector<double> dsrc(n, 0.0), ddst(n, 0.0);
        std::vector<double> dalpha;
        for (std::size_t i = 0; i < n; ++i) {
          auto nb = pat->neighbors(i);
          dalpha.assign(nb.size(), 0.0);
          auto gr = g.row(i);
          double weighted = 0.0;
          for (std::size_t p = 0; p < nb.size(); ++p) {
            const double a = (*alpha)[offsets[i] + p];
            auto zr = zv.row(nb[p]);
            auto dzr = dz.row(nb[p]);
            double d = 0.0;
            for (std::size_t k = 0; k < f; ++k) {
              d += gr[k] * zr[k];
              dzr[k] += a * gr[k];
            }
            dalpha[p] = d;
            weighted += a * d;
          }
          for (std::size_t p = 0; p < nb.size(); ++p) {
            const double a = (*alpha)[offsets[i] + p];
            const double u = (*raw)[offsets[i] + p];
            const double du = a * (dalpha[p] - weighted) * (u > 0.0 ? 1.0 : slope);
            dsrc[i] += du;
            ddst[nb[p]] += du;
          }
        }
        if (DenseMatrix* ga = ctx.input_grad(1)) {
          for (std::size_t i = 0; i < n; ++i) {
            auto zr = zv.row(i);
            for (std::size_t k = 0; k < f; ++k) {
              (*ga)(0, k) += dsrc[i] * zr[k];
              (*ga)(0, f + k) += ddst[i] * zr[k];
            }
          }
        }
        if (DenseMatrix* gz = ctx.input_grad(0)) {
          for (std::size_t i = 0; i < n; ++i) {
            auto dzr = dz.row(i);
            for (std::size_t k = 0; k < f; ++k)
              dzr[k] += dsrc[i] * av(0, k) + ddst[i] * av(0, f + k);
          }
          axpy(*gz, 1.0, dz);
        }
      });
}

}  // namespace ad
}  // namespace sslgraph
