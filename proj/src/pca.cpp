#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sslgraph/dimred.hpp"
#include "sslgraph/linalg.hpp"

namespace sslgraph {

namespace {

// Above this width the full Jacobi sweep is too slow; switch to LAPACK.
constexpr std::size_t kJacobiMaxDim = 256;

}  // namespace

std::vector<double> PcaModel::explained_variance_ratio() const {
  std::vector<double> out(eigenvalues.size(), 0.0);
  if (total_variance <= 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(eigenvalues[i] / total_variance, 0.0, 1.0);
  return out;
}

DenseMatrix covariance(const DenseMatrix& x, std::vector<double>* mean_out) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw std::invalid_argument("covariance: need at least 2 samples");
  std::vector<double> mean(d, 0.0);
  std::size_t nonzeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += r[j];
      if (r[j] != 0.0) ++nonzeros;
    }
  }
  for (double& m : mean) m /= static_cast<double>(n);

  DenseMatrix cov(d, d);
  const bool sparse = nonzeros * 10 < n * d;
  std::vector<std::size_t> nz;
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(i);
    nz.clear();
    if (sparse) {
      // Accumulate the raw second moment over nonzeros only; centred below.
      for (std::size_t j = 0; j < d; ++j)
        if (r[j] != 0.0) nz.push_back(j);
      for (std::size_t a = 0; a < nz.size(); ++a) {
        const double va = r[nz[a]];
        double* crow = cov.row(nz[a]).data();
        for (std::size_t b = a; b < nz.size(); ++b) crow[nz[b]] += va * r[nz[b]];
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mean[j];
      for (std::size_t a = 0; a < d; ++a) {
        const double va = centered[a];
        if (va == 0.0) continue;
        double* crow = cov.row(a).data();
        for (std::size_t b = a; b < d; ++b) crow[b] += va * centered[b];
      }
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double v = cov(a, b);
      if (sparse) v -= static_cast<double>(n) * mean[a] * mean[b];
      v /= denom;
      cov(a, b) = cov(b, a) = v;
    }
  }
  if (mean_out != nullptr) *mean_out = std::move(mean);
  return cov;
}

PcaModel pca_fit(const DenseMatrix& x, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw std::invalid_argument("pca_fit: fewer than 2 samples");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " must lie in [1, " +
                                std::to_string(std::min(n - 1, d)) + "]");
  }
  PcaModel model;
  const DenseMatrix cov = covariance(x, &model.mean);
  for (std::size_t j = 0; j < d; ++j) model.total_variance += cov(j, j);

  EigenDecomposition eig = d <= kJacobiMaxDim ? eigh_symmetric(cov) : eigh_top_k(cov, k);
  model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(k));
  model.components = DenseMatrix(d, k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(eig.vectors(r, c)) > std::abs(eig.vectors(arg, c))) arg = r;
    const double sign = eig.vectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) model.components(r, c) = sign * eig.vectors(r, c);
  }
  return model;
}

DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("pca_transform: input " + x.shape() + " vs model dimension " +
                                std::to_string(model.input_dim()));
  }
  DenseMatrix centered = x;
  for (std::size_t i = 0; i < centered.rows(); ++i) {
    auto r = centered.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= model.mean[j];
  }
  return matmul(centered, model.components);
}

}  // namespace sslgraph
