#include "sslgraph/models.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sslgraph {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::MLP: return "MLP";
    case ModelKind::GCN: return "GCN";
    case ModelKind::GAT: return "GAT";
    case ModelKind::GraphConv: return "GraphConv";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  auto same = [](std::string_view a, std::string_view b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
      return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
    });
  };
  for (auto k : {ModelKind::MLP, ModelKind::GCN, ModelKind::GAT, ModelKind::GraphConv})
    if (same(name, to_string(k))) return k;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

ModelSpec ModelSpec::make(ModelKind kind, std::size_t in_dim, std::size_t out_dim,
                          std::size_t hidden_dim, double dropout_rate) {
  ModelSpec s;
  s.kind = kind;
  s.in_dim = in_dim;
  s.out_dim = out_dim;
  s.hidden_dim = hidden_dim;
  s.dropout_rate = dropout_rate;
  s.activation = kind == ModelKind::GAT ? Activation::ELU : Activation::ReLU;
  return s;
}

void ModelSpec::validate() const {
  if (in_dim == 0 || hidden_dim == 0 || out_dim == 0) {
    throw std::invalid_argument("ModelSpec: dimensions must be positive");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("ModelSpec: dropout rate must lie in [0, 1)");
  }
}

namespace {

struct TensorShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool is_weight;  // Glorot-initialized (weights, attention); biases start at zero
};

std::vector<TensorShape> layout(const ModelSpec& spec) {
  std::vector<TensorShape> out;
  const std::array<std::pair<std::size_t, std::size_t>, 2> dims{
      {{spec.in_dim, spec.hidden_dim}, {spec.hidden_dim, spec.out_dim}}};
  for (std::size_t l = 0; l < 2; ++l) {
    const auto [fan_in, fan_out] = dims[l];
    const std::string p = "l" + std::to_string(l + 1) + ".";
    switch (spec.kind) {
      case ModelKind::MLP:
      case ModelKind::GCN:
        out.push_back({p + "weight", fan_in, fan_out, true});
        out.push_back({p + "bias", 1, fan_out, false});
        break;
      case ModelKind::GAT:
        out.push_back({p + "weight", fan_in, fan_out, true});
        out.push_back({p + "att", 1, 2 * fan_out, true});
        out.push_back({p + "bias", 1, fan_out, false});
        break;
      case ModelKind::GraphConv:
        out.push_back({p + "weight_root", fan_in, fan_out, true});
        out.push_back({p + "weight_neighbor", fan_in, fan_out, true});
        out.push_back({p + "bias", 1, fan_out, false});
        break;
    }
  }
  return out;
}

}  // namespace

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

const DenseMatrix& ParamSet::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw std::out_of_range("ParamSet: no tensor named '" + std::string(name) + "'");
}

std::size_t count_parameters(const ModelSpec& spec) {
  const std::size_t in = spec.in_dim, h = spec.hidden_dim, out = spec.out_dim;
  const std::size_t base = in * h + h + h * out + out;
  switch (spec.kind) {
    case ModelKind::MLP:
    case ModelKind::GCN: return base;
    case ModelKind::GAT: return base + 2 * h + 2 * out;
    case ModelKind::GraphConv: return 2 * (in * h) + h + 2 * (h * out) + out;
  }
  return 0;
}

ParamSet init_params(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  ParamSet ps;
  for (const auto& t : layout(spec)) {
    DenseMatrix m(t.rows, t.cols);
    if (t.is_weight) {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
      for (double& v : m.data()) v = rng.uniform(-limit, limit);
    }
    ps.names.push_back(t.name);
    ps.tensors.push_back(std::move(m));
  }
  return ps;
}

void check_params(const ModelSpec& spec, const ParamSet& params) {
  const auto shapes = layout(spec);
  if (params.tensors.size() != shapes.size()) {
    throw std::invalid_argument("ParamSet has " + std::to_string(params.tensors.size()) +
                                " tensors, " + std::string(to_string(spec.kind)) + " needs " +
                                std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& t = params.tensors[i];
    if (t.rows() != shapes[i].rows || t.cols() != shapes[i].cols) {
      throw std::invalid_argument("ParamSet tensor " + shapes[i].name + " is " + t.shape() +
                                  ", expected " + std::to_string(shapes[i].rows) + "x" +
                                  std::to_string(shapes[i].cols));
    }
  }
}

GraphInput GraphInput::build(const DatasetContainer& ds, DenseMatrix features) {
  if (features.rows() != ds.num_nodes()) {
    throw std::invalid_argument("GraphInput: features " + features.shape() + " vs " +
                                std::to_string(ds.num_nodes()) + " nodes");
  }
  GraphInput g;
  g.features = std::move(features);
  g.labels = ds.labels;
  g.adjacency = ds.edges;
  g.normalized = normalize_adjacency(ds.edges);
  g.self_loops = ds.edges.with_self_loops();
  g.num_classes = ds.num_classes();
  return g;
}

Var mlp_layer(Var x, Var w, Var b) { return ad::add_row(ad::matmul(x, w), b); }

Var gcn_layer(Var x, const SparseAdjacency& normalized, Var w, Var b) {
  return ad::add_row(ad::spmm(normalized, ad::matmul(x, w)), b);
}

Var gat_layer(Var x, const SparseAdjacency& self_loops, Var w, Var att, Var b,
              std::vector<double>* alpha) {
  Var z = ad::matmul(x, w);
  return ad::add_row(ad::gat_aggregate(z, att, self_loops, kGatSlope, alpha), b);
}

Var graphconv_layer(Var x, const SparseAdjacency& adjacency, Var w_root, Var w_neighbor, Var b) {
  // (A x) W equals A (x W); the right-hand grouping keeps the sparse product narrow.
  Var root = ad::matmul(x, w_root);
  Var neighbor = ad::spmm(adjacency, ad::matmul(x, w_neighbor));
  return ad::add_row(ad::add(root, neighbor), b);
}

namespace {

Var apply_layer(const ModelSpec& spec, std::span<const Var> p, const GraphInput& g, Var x) {
  switch (spec.kind) {
    case ModelKind::MLP: return mlp_layer(x, p[0], p[1]);
    case ModelKind::GCN: return gcn_layer(x, g.normalized, p[0], p[1]);
    case ModelKind::GAT: return gat_layer(x, g.self_loops, p[0], p[1], p[2]);
    case ModelKind::GraphConv: return graphconv_layer(x, g.adjacency, p[0], p[1], p[2]);
  }
  throw std::logic_error("unreachable");
}

std::size_t tensors_per_layer(ModelKind kind) {
  return kind == ModelKind::MLP || kind == ModelKind::GCN ? 2 : 3;
}

Var activate(const ModelSpec& spec, Var h) {
  return spec.activation == Activation::ELU ? ad::elu(h) : ad::relu(h);
}

}  // namespace

Var forward(const ModelSpec& spec, std::span<const Var> params, const GraphInput& graph, Var x,
            bool training, Rng& rng) {
  const std::size_t per = tensors_per_layer(spec.kind);
  if (params.size() != 2 * per) {
    throw std::invalid_argument("forward: " + std::to_string(params.size()) +
                                " parameter handles, expected " + std::to_string(2 * per));
  }
  if (x.cols() != spec.in_dim) {
    throw std::invalid_argument("forward: features " + x.value().shape() + " vs in_dim " +
                                std::to_string(spec.in_dim));
  }
  Var h = activate(spec, apply_layer(spec, params.subspan(0, per), graph, x));
  if (training && spec.dropout_rate > 0.0) h = ad::dropout(h, spec.dropout_rate, rng);
  return apply_layer(spec, params.subspan(per, per), graph, h);
}

DenseMatrix forward(const ModelSpec& spec, const ParamSet& params, const GraphInput& graph,
                    bool training, Rng& rng) {
  check_params(spec, params);
  Tape tape;
  std::vector<Var> handles;
  for (const auto& t : params.tensors) handles.push_back(tape.constant_ref(t));
  Var x = tape.constant_ref(graph.features);
  return forward(spec, handles, graph, x, training, rng).value();
}

DenseMatrix hidden_representation(const ModelSpec& spec, const ParamSet& params,
                                  const GraphInput& graph) {
  check_params(spec, params);
  Tape tape;
  std::vector<Var> handles;
  for (const auto& t : params.tensors) handles.push_back(tape.constant_ref(t));
  Var x = tape.constant_ref(graph.features);
  const std::size_t per = tensors_per_layer(spec.kind);
  return activate(spec, apply_layer(spec, std::span<const Var>(handles).subspan(0, per), graph, x))
      .value();
}

namespace {

constexpr char kMagic[8] = {'S', 'S', 'L', 'G', 'P', 'A', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const ModelSpec& spec,
                 const ParamSet& params) {
  check_params(spec, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.kind));
  put<std::uint64_t>(out, spec.in_dim);
  put<std::uint64_t>(out, spec.hidden_dim);
  put<std::uint64_t>(out, spec.out_dim);
  put<double>(out, spec.dropout_rate);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.activation));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

std::pair<ModelSpec, ParamSet> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  ModelSpec spec;
  const auto kind = get<std::uint32_t>(in);
  if (kind > static_cast<std::uint32_t>(ModelKind::GraphConv)) {
    throw std::runtime_error("checkpoint: unknown model kind");
  }
  spec.kind = static_cast<ModelKind>(kind);
  spec.in_dim = get<std::uint64_t>(in);
  spec.hidden_dim = get<std::uint64_t>(in);
  spec.out_dim = get<std::uint64_t>(in);
  spec.dropout_rate = get<double>(in);
  const auto act = get<std::uint32_t>(in);
  if (act > static_cast<std::uint32_t>(Activation::ELU)) {
    throw std::runtime_error("checkpoint: unknown activation");
  }
  spec.activation = static_cast<Activation>(act);
  spec.validate();

  const auto shapes = layout(spec);
  const auto count = get<std::uint32_t>(in);
  if (count != shapes.size()) throw std::runtime_error("checkpoint: tensor count mismatch");
  ParamSet ps;
  for (const auto& s : shapes) {
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows != s.rows || cols != s.cols) {
      throw std::runtime_error("checkpoint: tensor " + s.name + " has wrong shape");
    }
    DenseMatrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data().data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor " + s.name);
    ps.names.push_back(s.name);
    ps.tensors.push_back(std::move(m));
  }
  return {spec, std::move(ps)};
}

}  // namespace sslgraph
