#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sslgraph/autodiff.hpp"
#include "sslgraph/dataset.hpp"
#include "sslgraph/matrix.hpp"
#include "sslgraph/rng.hpp"
#include "sslgraph/sparse.hpp"

namespace sslgraph {

enum class ModelKind { MLP, GCN, GAT, GraphConv };
enum class Activation { ReLU, ELU };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

inline constexpr double kGatSlope = 0.2;

/// One-hidden-layer node classifier.
struct ModelSpec {
  ModelKind kind = ModelKind::GCN;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 16;
  std::size_t out_dim = 0;
  double dropout_rate = 0.1;
  Activation activation = Activation::ReLU;

  /// ELU for GAT, ReLU otherwise.
  static ModelSpec make(ModelKind kind, std::size_t in_dim, std::size_t out_dim,
                        std::size_t hidden_dim = 16, double dropout_rate = 0.1);
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Learnable tensors in layer order:
///   MLP/GCN:   l1.weight l1.bias l2.weight l2.bias
///   GAT:       l1.weight l1.att l1.bias l2.weight l2.att l2.bias
///   GraphConv: l1.weight_root l1.weight_neighbor l1.bias (same for l2)
/// Biases and attention vectors are stored as 1×c rows.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<DenseMatrix> tensors;

  std::size_t scalar_count() const;
  const DenseMatrix& at(std::string_view name) const;
};

std::size_t count_parameters(const ModelSpec& spec);

/// Glorot-uniform weights and attention vectors, zero biases.
ParamSet init_params(const ModelSpec& spec, Rng& rng);

/// Throws std::invalid_argument when tensor count or shapes disagree with the spec.
void check_params(const ModelSpec& spec, const ParamSet& params);

/// Everything a forward pass needs from the graph, prepared once per dataset.
struct GraphInput {
  DenseMatrix features;
  std::vector<int> labels;
  SparseAdjacency adjacency;    // raw, c_ij = 1, no self-loops
  SparseAdjacency normalized;   // symmetric √-degree with self-loops
  SparseAdjacency self_loops;   // adjacency pattern plus diagonal (attention support)
  std::size_t num_classes = 0;

  static GraphInput build(const DatasetContainer& ds, DenseMatrix features);
};

/// h = xW + b
Var mlp_layer(Var x, Var w, Var b);
/// h = Â(xW) + b
Var gcn_layer(Var x, const SparseAdjacency& normalized, Var w, Var b);
/// h_i = Σ_{j∈N_i∪{i}} α_ij (Wx_j) + b with single-head attention.
Var gat_layer(Var x, const SparseAdjacency& self_loops, Var w, Var att, Var b,
              std::vector<double>* alpha = nullptr);
/// h = xW_root + (A x)W_neighbor + b, A without self-loops.
Var graphconv_layer(Var x, const SparseAdjacency& adjacency, Var w_root, Var w_neighbor, Var b);

/// layer1 → activation → dropout (training only) → layer2, returning raw logits.
Var forward(const ModelSpec& spec, std::span<const Var> params, const GraphInput& graph, Var x,
            bool training, Rng& rng);

/// Convenience wrapper on a private tape.
DenseMatrix forward(const ModelSpec& spec, const ParamSet& params, const GraphInput& graph,
                    bool training, Rng& rng);

/// Hidden-layer activations (after the nonlinearity, eval mode).
DenseMatrix hidden_representation(const ModelSpec& spec, const ParamSet& params,
                                  const GraphInput& graph);

/// Binary checkpoint: "SSLGPAR1", u32 version, spec echo, tensor count, then
/// per tensor u64 rows, u64 cols and little-endian f64 data in layer order.
void save_params(const std::filesystem::path& path, const ModelSpec& spec, const ParamSet& params);
std::pair<ModelSpec, ParamSet> load_params(const std::filesystem::path& path);

}  // namespace sslgraph
