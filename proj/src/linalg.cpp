#include "sslgraph/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sslgraph {

namespace {

void check_symmetric(const DenseMatrix& s, const char* op) {
  if (s.rows() != s.cols()) {
    throw std::invalid_argument(std::string(op) + ": matrix is not square (" + s.shape() + ")");
  }
  double scale = 0.0;
  for (double v : s.data()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-9 * std::max(1.0, scale);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > tol) {
        throw std::invalid_argument(std::string(op) + ": matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
}

double off_diagonal_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition eigh_symmetric(const DenseMatrix& s) {
  check_symmetric(s, "eigh_symmetric");
  const std::size_t n = s.rows();
  DenseMatrix a = s;
  // Symmetrize exactly so rotations act on a true symmetric matrix.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  DenseMatrix v = DenseMatrix::identity(n);

  const double threshold = 1e-10 * frobenius_norm(s);
  int sweep = 0;
  while (sweep < 100 && off_diagonal_norm(a) > threshold) {
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rotation angle zeroing a(p,q) (numerically stable form).
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  out.sweeps = sweep;
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

EigenDecomposition eigh_top_k(const DenseMatrix& s, std::size_t k) {
  check_symmetric(s, "eigh_top_k");
  const auto n = static_cast<lapack_int>(s.rows());
  if (k == 0 || k > s.rows()) {
    throw std::invalid_argument("eigh_top_k: k=" + std::to_string(k) + " out of range for " +
                                s.shape());
  }
  std::vector<double> a = s.data();
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) * k);
  std::vector<lapack_int> isuppz(2 * k);
  lapack_int found = 0;
  const lapack_int il = n - static_cast<lapack_int>(k) + 1;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, il, n, 0.0,
                     &found, w.data(), z.data(), static_cast<lapack_int>(k), isuppz.data());
  if (info != 0 || found != static_cast<lapack_int>(k)) {
    throw std::runtime_error("eigh_top_k: dsyevr failed (info=" + std::to_string(info) + ")");
  }
  // dsyevr returns ascending order; flip to descending.
  EigenDecomposition out;
  out.values.resize(k);
  out.vectors = DenseMatrix(s.rows(), k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = k - 1 - j;
    out.values[j] = w[src];
    for (std::size_t r = 0; r < s.rows(); ++r) out.vectors(r, j) = z[r * k + src];
  }
  return out;
}

}  // namespace sslgraph
