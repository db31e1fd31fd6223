#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sslgraph/matrix.hpp"
#include "sslgraph/rng.hpp"
#include "sslgraph/sparse.hpp"

namespace sslgraph {

using Mask = std::vector<std::uint8_t>;

/// Sparse binary n×d matrix: row i lists the word indices present in node i.
struct BinaryFeatures {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::size_t nnz() const { return indices.size(); }
  DenseMatrix to_dense() const;

  friend bool operator==(const BinaryFeatures&, const BinaryFeatures&) = default;
};

/// A citation graph: one node per paper with bag-of-words features, a class
/// label and undirected citation edges (self-loop free, deduplicated).
struct DatasetContainer {
  std::string name;
  std::vector<std::string> node_ids;  // content-file order
  BinaryFeatures features;
  std::vector<int> labels;
  SparseAdjacency edges;
  std::vector<std::string> class_names;  // sorted, index = label

  std::size_t num_nodes() const { return labels.size(); }
  std::size_t num_features() const { return features.cols; }
  std::size_t num_classes() const { return class_names.size(); }

  friend bool operator==(const DatasetContainer&, const DatasetContainer&) = default;
};

struct IngestStats {
  std::size_t cite_lines = 0;
  std::size_t dangling_edges = 0;   // reference an id missing from the content file
  std::size_t self_citations = 0;
  std::size_t undirected_edges = 0;
};

struct IngestOptions {
  std::string name;
  /// When set, any class string outside this list is an error.
  std::optional<std::vector<std::string>> known_classes;
};

/// Parses `<id> <0/1 flags...> <class>` content lines and `<cited> <citing>`
/// cites lines. Throws std::runtime_error on malformed input, unknown class
/// strings or duplicate node ids; citations to missing ids are skipped and
/// counted in `stats`.
DatasetContainer ingest_citation_files(const std::filesystem::path& content_path,
                                       const std::filesystem::path& cites_path,
                                       const IngestOptions& options = {},
                                       IngestStats* stats = nullptr);

/// Writes a container in the same content/cites text layout. `extra_cites`
/// are appended verbatim (used to emit dangling references).
void write_citation_files(
    const DatasetContainer& ds, const std::filesystem::path& content_path,
    const std::filesystem::path& cites_path,
    std::span<const std::pair<std::string, std::string>> extra_cites = {});

struct SplitMask {
  Mask train;
  Mask val;
  Mask test;

  static std::size_t count(const Mask& m);
  static std::vector<std::size_t> indices(const Mask& m);
};

/// Deterministic split: train = first `per_class` nodes of every class in
/// node order; test = last `n_test` non-train nodes; val = first `n_val`
/// remaining nodes in node order.
SplitMask make_split(const DatasetContainer& ds, std::size_t per_class, std::size_t n_val,
                     std::size_t n_test);

/// Adds self-loops and sets value(i,j) = 1/√((deg_i+1)(deg_j+1)).
SparseAdjacency normalize_adjacency(const SparseAdjacency& edges);

/// Cache layout (tab-separated, one header line each):
///   nodes.tsv   index  id  label  class  words   (words: space-separated indices)
///   edges.tsv   source  target                   (undirected, source < target)
///   splits.tsv  index  split                     (train|val|test|none)
/// nodes.tsv starts with a `#` line carrying name, feature count and classes.
void write_dataset_tsv(const DatasetContainer& ds, const SplitMask& split,
                       const std::filesystem::path& dir);
std::pair<DatasetContainer, SplitMask> read_dataset_tsv(const std::filesystem::path& dir);

/// Parameters of the synthetic citation-graph generator used when the real
/// corpora are unavailable: class-topic word model plus homophilous edges.
struct SyntheticCitationSpec {
  std::string name = "synthetic";
  std::size_t nodes = 2708;
  std::size_t words = 1433;
  std::size_t classes = 7;
  std::size_t undirected_edges = 5278;
  double words_per_node = 18.0;
  /// Probability a word is drawn from the node's class topic.
  double topic_affinity = 0.35;
  std::size_t topic_size = 120;
  /// Probability an edge joins two nodes of the same class.
  double homophily = 0.81;
  std::size_t dangling_citations = 0;
  std::uint64_t seed = 7;
};

DatasetContainer generate_citation_graph(const SyntheticCitationSpec& spec,
                                         std::vector<std::pair<std::string, std::string>>*
                                             dangling = nullptr);

}  // namespace sslgraph
