#pragma once

// Loop and brute-force reference implementations shared by the unit tests and
// the acceptance gate. Deliberately naive: per node, per pair, per entry.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "sslgraph/matrix.hpp"
#include "sslgraph/models.hpp"
#include "sslgraph/sparse.hpp"

namespace sslgraph::testing {

inline double euclidean(const DenseMatrix& m, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.cols(); ++k) s += (m(i, k) - m(j, k)) * (m(i, k) - m(j, k));
  return std::sqrt(s);
}

inline DenseMatrix mlp_oracle(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& b) {
  DenseMatrix h(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b(0, j);
      for (std::size_t k = 0; k < x.cols(); ++k) s += x(i, k) * w(k, j);
      h(i, j) = s;
    }
  return h;
}

// h_i = b + Σ_{j ∈ N(i) ∪ {i}} z_j / sqrt((deg_i + 1)(deg_j + 1))
inline DenseMatrix gcn_oracle(const SparseAdjacency& adj, const DenseMatrix& x, const DenseMatrix& w,
                              const DenseMatrix& b) {
  const DenseMatrix z = mlp_oracle(x, w, DenseMatrix(1, w.cols()));
  DenseMatrix h(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double di = static_cast<double>(adj.degree(i)) + 1.0;
    std::vector<std::size_t> nb{i};
    for (auto j : adj.neighbors(i)) nb.push_back(j);
    for (std::size_t c = 0; c < w.cols(); ++c) {
      double s = b(0, c);
      for (auto j : nb) s += z(j, c) / std::sqrt(di * (static_cast<double>(adj.degree(j)) + 1.0));
      h(i, c) = s;
    }
  }
  return h;
}

inline DenseMatrix gat_oracle(const SparseAdjacency& adj, const DenseMatrix& x, const DenseMatrix& w,
                              const DenseMatrix& att, const DenseMatrix& b) {
  const DenseMatrix z = mlp_oracle(x, w, DenseMatrix(1, w.cols()));
  const std::size_t f = w.cols();
  DenseMatrix h(x.rows(), f);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<std::size_t> nb{i};
    for (auto j : adj.neighbors(i)) nb.push_back(j);
    std::vector<double> e;
    double mx = -1e300;
    for (auto j : nb) {
      double s = 0.0;
      for (std::size_t k = 0; k < f; ++k) s += att(0, k) * z(i, k) + att(0, f + k) * z(j, k);
      e.push_back(s > 0.0 ? s : kGatSlope * s);
      mx = std::max(mx, e.back());
    }
    double total = 0.0;
    for (double& v : e) total += (v = std::exp(v - mx));
    for (std::size_t c = 0; c < f; ++c) {
      double s = b(0, c);
      for (std::size_t p = 0; p < nb.size(); ++p) s += e[p] / total * z(nb[p], c);
      h(i, c) = s;
    }
  }
  return h;
}

// h_i = x_i W1 + b + Σ_{j ∈ N(i)} x_j W2
inline DenseMatrix graphconv_oracle(const SparseAdjacency& adj, const DenseMatrix& x, const DenseMatrix& w1,
                                    const DenseMatrix& w2, const DenseMatrix& b) {
  DenseMatrix h = mlp_oracle(x, w1, b);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (auto j : adj.neighbors(i))
      for (std::size_t c = 0; c < w2.cols(); ++c)
        for (std::size_t k = 0; k < x.cols(); ++k) h(i, c) += x(j, k) * w2(k, c);
  return h;
}

inline double ce_oracle(const DenseMatrix& logits, const std::vector<int>& labels,
                        const std::vector<std::uint8_t>& mask) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    double mx = -1e300;
    for (std::size_t k = 0; k < logits.cols(); ++k) mx = std::max(mx, logits(i, k));
    double z = 0.0;
    for (std::size_t k = 0; k < logits.cols(); ++k) z += std::exp(logits(i, k) - mx);
    total += -(logits(i, static_cast<std::size_t>(labels[i])) - mx - std::log(z));
    ++count;
  }
  return total / static_cast<double>(count);
}

inline DenseMatrix covariance_oracle(const DenseMatrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / static_cast<double>(n);
  DenseMatrix c(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      c(a, b) = s / static_cast<double>(n - 1);
    }
  return c;
}

inline double silhouette_oracle(const DenseMatrix& x, const std::vector<int>& labels) {
  const std::set<int> clusters(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::map<int, std::pair<double, std::size_t>> acc;
    for (std::size_t j = 0; j < x.rows(); ++j) {
      if (j == i) continue;
      auto& [s, c] = acc[labels[j]];
      s += euclidean(x, i, j);
      ++c;
    }
    if (acc[labels[i]].second == 0) continue;  // singleton: s = 0
    const double a = acc[labels[i]].first / static_cast<double>(acc[labels[i]].second);
    double b = 1e300;
    for (int c : clusters)
      if (c != labels[i]) b = std::min(b, acc[c].first / static_cast<double>(acc[c].second));
    const double m = std::max(a, b);
    total += m == 0.0 ? 0.0 : (b - a) / m;
  }
  return total / static_cast<double>(x.rows());
}

inline double dunn_oracle(const DenseMatrix& x, const std::vector<int>& labels) {
  double inter = 1e300, diameter = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      const double d = euclidean(x, i, j);
      if (labels[i] == labels[j]) {
        diameter = std::max(diameter, d);
      } else {
        inter = std::min(inter, d);
      }
    }
  return inter / diameter;
}

}  // namespace sslgraph::testing
