#pragma once

// Shared oracles and fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "sslgraph/dataset.hpp"
#include "sslgraph/matrix.hpp"
#include "sslgraph/rng.hpp"

namespace sslgraph::testing {

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("sslgraph_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline IngestOptions named(std::string name) {
  IngestOptions o;
  o.name = std::move(name);
  return o;
}

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                                 double hi = 1.0) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

struct GradCheck {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

/// Central differences on up to `samples` random coordinates (all when fewer).
/// Relative error is |a − n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(std::vector<DenseMatrix>& params,
                                 const std::vector<DenseMatrix>& analytic,
                                 const std::function<double()>& loss, Rng& rng,
                                 std::size_t samples = 120, double h = 1e-6,
                                 double floor = 1e-6) {
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t].size(); ++i) coords.emplace_back(t, i);
  if (coords.size() > samples) {
    rng.shuffle(std::span(coords));
    coords.resize(samples);
  }
  GradCheck out;
  for (auto [t, i] : coords) {
    double& p = params[t].data()[i];
    const double orig = p;
    p = orig + h;
    const double up = loss();
    p = orig - h;
    const double down = loss();
    p = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[t].data()[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, rel);
    ++out.checked;
  }
  return out;
}

/// Small graph with `n` nodes, random features and labels, ~`edges` random edges.
inline DatasetContainer toy_graph(std::size_t n, std::size_t d, std::size_t classes,
                                  std::size_t edges, std::uint64_t seed) {
  Rng rng(seed);
  DatasetContainer ds;
  ds.name = "toy";
  ds.features.rows = n;
  ds.features.cols = d;
  for (std::size_t i = 0; i < n; ++i) {
    ds.node_ids.push_back("n" + std::to_string(i));
    ds.labels.push_back(static_cast<int>(i % classes));
    for (std::size_t j = 0; j < d; ++j)
      if (rng.bernoulli(0.3)) ds.features.indices.push_back(static_cast<std::uint32_t>(j));
    ds.features.offsets.push_back(ds.features.indices.size());
  }
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t k = 0; k < edges; ++k) e.emplace_back(rng.uniform_index(n), rng.uniform_index(n));
  ds.edges = SparseAdjacency::from_edges(n, e);
  for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  return ds;
}

/// Well-separated Gaussian blobs in `dims` dimensions, `per` points each.
inline DenseMatrix blobs(std::size_t clusters, std::size_t per, std::size_t dims, double spread,
                         std::vector<int>* labels, Rng& rng) {
  DenseMatrix x(clusters * per, dims);
  for (std::size_t c = 0; c < clusters; ++c) {
    std::vector<double> centre(dims);
    for (double& v : centre) v = rng.uniform(-10.0, 10.0);
    for (std::size_t p = 0; p < per; ++p) {
      const std::size_t i = c * per + p;
      for (std::size_t k = 0; k < dims; ++k) x(i, k) = centre[k] + spread * rng.normal();
      if (labels != nullptr) labels->push_back(static_cast<int>(c));
    }
  }
  return x;
}

}  // namespace sslgraph::testing
