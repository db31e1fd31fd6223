#pragma once

#include <cstdint>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "sslgraph/matrix.hpp"

namespace sslgraph {

/// Square compressed-sparse-row matrix over n nodes.
///
/// Column indices inside each row are strictly increasing. Graph adjacencies
/// built through `from_edges` are symmetric as a pattern; `is_symmetric`
/// checks that for matrices assembled by hand.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;
  explicit SparseAdjacency(std::size_t n);  // no entries
  SparseAdjacency(std::size_t n, std::vector<std::size_t> row_offsets,
                  std::vector<std::uint32_t> col_indices, std::vector<double> values);

  /// Undirected graph from an edge list: both directions are inserted,
  /// duplicates merged (weight 1) and self-loops dropped.
  static SparseAdjacency from_edges(std::size_t n,
                                    std::span<const std::pair<std::size_t, std::size_t>> edges);

  /// Triplets summed per (row, col); no symmetrization.
  static SparseAdjacency from_triplets(std::size_t n,
                                       std::vector<std::tuple<std::size_t, std::size_t, double>> t);

  std::size_t n() const { return n_; }
  std::size_t nnz() const { return cols_.size(); }

  std::span<const std::size_t> row_offsets() const { return offsets_; }
  std::span<const std::uint32_t> col_indices() const { return cols_; }
  std::span<const double> values() const { return values_; }

  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {cols_.data() + offsets_[i], degree(i)};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + offsets_[i], degree(i)};
  }

  /// Value at (i, j), 0 when absent.
  double at(std::size_t i, std::size_t j) const;
  bool contains(std::size_t i, std::size_t j) const;

  bool is_symmetric_pattern() const;
  bool is_symmetric_values(double tol = 0.0) const;

  /// Same pattern plus (i, i) for every node; existing diagonal entries are kept.
  SparseAdjacency with_self_loops(double diagonal = 1.0) const;

  /// Same pattern, every stored value replaced.
  SparseAdjacency with_values(std::vector<double> values) const;

  DenseMatrix to_dense() const;

  /// Number of undirected edges (off-diagonal pairs counted once).
  std::size_t undirected_edge_count() const;

  friend bool operator==(const SparseAdjacency&, const SparseAdjacency&) = default;

 private:
  void validate() const;

  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

/// Row i of the result is Σ_j adj(i,j) · h_j.
DenseMatrix spmm(const SparseAdjacency& adj, const DenseMatrix& h);
/// adjᵀ · h; used by the backward pass.
DenseMatrix spmm_transposed(const SparseAdjacency& adj, const DenseMatrix& h);

}  // namespace sslgraph
