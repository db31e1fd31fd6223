#include "sslgraph/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace sslgraph {

SparseAdjacency::SparseAdjacency(std::size_t n) : n_(n), offsets_(n + 1, 0) {}

SparseAdjacency::SparseAdjacency(std::size_t n, std::vector<std::size_t> row_offsets,
                                 std::vector<std::uint32_t> col_indices,
                                 std::vector<double> values)
    : n_(n),
      offsets_(std::move(row_offsets)),
      cols_(std::move(col_indices)),
      values_(std::move(values)) {
  validate();
}

void SparseAdjacency::validate() const {
  if (offsets_.size() != n_ + 1 || offsets_.front() != 0 || offsets_.back() != cols_.size() ||
      values_.size() != cols_.size()) {
    throw std::invalid_argument("SparseAdjacency: inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (offsets_[i] > offsets_[i + 1]) {
      throw std::invalid_argument("SparseAdjacency: row offsets not monotone");
    }
    for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
      if (cols_[p] >= n_) {
        throw std::invalid_argument("SparseAdjacency: column index " + std::to_string(cols_[p]) +
                                    " out of range for n=" + std::to_string(n_));
      }
      if (p > offsets_[i] && cols_[p] <= cols_[p - 1]) {
        throw std::invalid_argument("SparseAdjacency: columns of row " + std::to_string(i) +
                                    " not strictly increasing");
      }
    }
  }
}

SparseAdjacency SparseAdjacency::from_edges(
    std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(edges.size() * 2);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw std::invalid_argument("from_edges: node index out of range");
    if (a == b) continue;
    t.emplace_back(a, b, 1.0);
    t.emplace_back(b, a, 1.0);
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end(),
                      [](const auto& x, const auto& y) {
                        return std::get<0>(x) == std::get<0>(y) && std::get<1>(x) == std::get<1>(y);
                      }),
          t.end());
  return from_triplets(n, std::move(t));
}

SparseAdjacency SparseAdjacency::from_triplets(
    std::size_t n, std::vector<std::tuple<std::size_t, std::size_t, double>> t) {
  std::sort(t.begin(), t.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  cols.reserve(t.size());
  vals.reserve(t.size());
  std::size_t last_r = n, last_c = n;
  for (const auto& [r, c, v] : t) {
    if (r >= n || c >= n) throw std::invalid_argument("from_triplets: index out of range");
    if (r == last_r && c == last_c) {
      vals.back() += v;
      continue;
    }
    cols.push_back(static_cast<std::uint32_t>(c));
    vals.push_back(v);
    ++offsets[r + 1];
    last_r = r;
    last_c = c;
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  return SparseAdjacency(n, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseAdjacency::at(std::size_t i, std::size_t j) const {
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), static_cast<std::uint32_t>(j));
  if (it == nb.end() || *it != j) return 0.0;
  return values_[offsets_[i] + static_cast<std::size_t>(it - nb.begin())];
}

bool SparseAdjacency::contains(std::size_t i, std::size_t j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(j));
}

bool SparseAdjacency::is_symmetric_pattern() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (auto j : neighbors(i))
      if (!contains(j, i)) return false;
  return true;
}

bool SparseAdjacency::is_symmetric_values(double tol) const {
  for (std::size_t i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    auto vals = row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      if (!contains(nb[p], i) || std::abs(at(nb[p], i) - vals[p]) > tol) return false;
    }
  }
  return true;
}

SparseAdjacency SparseAdjacency::with_self_loops(double diagonal) const {
  std::vector<std::size_t> offsets(n_ + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  cols.reserve(nnz() + n_);
  vals.reserve(nnz() + n_);
  for (std::size_t i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    auto rv = row_values(i);
    bool placed = false;
    for (std::size_t p = 0; p < nb.size(); ++p) {
      if (!placed && nb[p] >= i) {
        if (nb[p] != i) {
          cols.push_back(static_cast<std::uint32_t>(i));
          vals.push_back(diagonal);
        }
        placed = true;
      }
      cols.push_back(nb[p]);
      vals.push_back(rv[p]);
    }
    if (!placed) {
      cols.push_back(static_cast<std::uint32_t>(i));
      vals.push_back(diagonal);
    }
    offsets[i + 1] = cols.size();
  }
  return SparseAdjacency(n_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseAdjacency SparseAdjacency::with_values(std::vector<double> values) const {
  return SparseAdjacency(n_, offsets_, cols_, std::move(values));
}

DenseMatrix SparseAdjacency::to_dense() const {
  DenseMatrix d(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    auto rv = row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) d(i, nb[p]) = rv[p];
  }
  return d;
}

std::size_t SparseAdjacency::undirected_edge_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (auto j : neighbors(i))
      if (j > i) ++count;
  return count;
}

DenseMatrix spmm(const SparseAdjacency& adj, const DenseMatrix& h) {
  if (adj.n() != h.rows()) {
    throw std::invalid_argument("spmm: adjacency over " + std::to_string(adj.n()) +
                                " nodes vs features " + h.shape());
  }
  DenseMatrix out(h.rows(), h.cols());
  const std::size_t f = h.cols();
  for (std::size_t i = 0; i < adj.n(); ++i) {
    double* orow = out.row(i).data();
    auto nb = adj.neighbors(i);
    auto rv = adj.row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const double* hrow = h.row(nb[p]).data();
      const double c = rv[p];
      for (std::size_t k = 0; k < f; ++k) orow[k] += c * hrow[k];
    }
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseAdjacency& adj, const DenseMatrix& h) {
  if (adj.n() != h.rows()) {
    throw std::invalid_argument("spmm_transposed: adjacency over " + std::to_string(adj.n()) +
                                " nodes vs features " + h.shape());
  }
  DenseMatrix out(h.rows(), h.cols());
  const std::size_t f = h.cols();
  for (std::size_t i = 0; i < adj.n(); ++i) {
    const double* hrow = h.row(i).data();
    auto nb = adj.neighbors(i);
    auto rv = adj.row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      double* orow = out.row(nb[p]).data();
      const double c = rv[p];
      for (std::size_t k = 0; k < f; ++k) orow[k] += c * hrow[k];
    }
  }
  return out;
}

}  // namespace sslgraph
