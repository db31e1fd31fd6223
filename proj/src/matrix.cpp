#include "sslgraph/matrix.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sslgraph {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape() + " vs " +
                                b.shape());
  }
}

// Large products with a mostly non-zero left operand go to BLAS; sparse
// operands (bag-of-words features) stay on the zero-skipping loops.
bool use_blas(const DenseMatrix& a, std::size_t m, std::size_t n, std::size_t k) {
  if (m * n * k < (std::size_t{1} << 20)) return false;
  const auto nz = std::count_if(a.data().begin(), a.data().end(), [](double v) { return v != 0.0; });
  return static_cast<double>(nz) > 0.25 * static_cast<double>(a.size());
}

// Parallelism comes from the experiment worker pool; a single BLAS thread also
// keeps results independent of the machine.
const bool blas_single_threaded = [] {
  openblas_set_num_threads(1);
  return true;
}();

int dim(std::size_t v) { return static_cast<int>(v); }

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                " does not match " + shape());
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string DenseMatrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// i-k-j ordering; zero entries of `a` are skipped, which makes products with
// sparse binary feature matrices cheap.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: dimension mismatch " + a.shape() + " x " + b.shape());
  }
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  if (use_blas(a, a.rows(), n, a.cols())) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, dim(a.rows()), dim(n), dim(a.cols()), 1.0,
                a.data().data(), dim(a.cols()), b.data().data(), dim(n), 0.0, c.data().data(), dim(n));
    return c;
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i).data();
    const auto arow = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: dimension mismatch " + a.shape() + "^T x " +
                                b.shape());
  }
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  if (use_blas(a, a.cols(), n, a.rows())) {
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, dim(a.cols()), dim(n), dim(a.rows()), 1.0,
                a.data().data(), dim(a.cols()), b.data().data(), dim(n), 0.0, c.data().data(), dim(n));
    return c;
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto arow = a.row(r);
    const double* brow = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = arow[i];
      if (ari == 0.0) continue;
      double* crow = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += ari * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: dimension mismatch " + a.shape() + " x " +
                                b.shape() + "^T");
  }
  DenseMatrix c(a.rows(), b.rows());
  if (use_blas(a, a.rows(), b.rows(), a.cols())) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, dim(a.rows()), dim(b.rows()), dim(a.cols()),
                1.0, a.data().data(), dim(a.cols()), b.data().data(), dim(b.cols()), 0.0,
                c.data().data(), dim(b.rows()));
    return c;
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix c = a;
  axpy(c, 1.0, b);
  return c;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix c = a;
  axpy(c, -1.0, b);
  return c;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

void axpy(DenseMatrix& a, double s, const DenseMatrix& b) {
  require_same_shape(a, b, "axpy");
  auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += s * bd[i];
}

DenseMatrix gather_rows(const DenseMatrix& a, std::span<const std::size_t> rows) {
  DenseMatrix out(rows.size(), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= a.rows()) throw std::out_of_range("gather_rows: row index out of range");
    std::copy_n(a.row(rows[r]).begin(), a.cols(), out.row(r).begin());
  }
  return out;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace sslgraph
