#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sslgraph/dimred.hpp"

namespace sslgraph {

namespace {

DenseMatrix squared_distances(const DenseMatrix& x) {
  const std::size_t n = x.rows();
  DenseMatrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto xj = x.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) {
        const double t = xi[k] - xj[k];
        s += t * t;
      }
      d(i, j) = d(j, i) = s;
    }
  }
  return d;
}

}  // namespace

TsneAffinities tsne_affinities(const DenseMatrix& x, double perplexity) {
  const std::size_t n = x.rows();
  if (n < 5) throw std::invalid_argument("tsne: need at least 5 points");
  if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n - 1)) {
    throw std::invalid_argument("tsne: perplexity " + std::to_string(perplexity) +
                                " infeasible for " + std::to_string(n) + " points");
  }
  const DenseMatrix dist = squared_distances(x);
  TsneAffinities out;
  out.betas.assign(n, 1.0);
  out.row_perplexities.assign(n, 0.0);
  DenseMatrix cond(n, n);
  const double target = perplexity;

  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, dist(i, j));

    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double perp = 0.0, used = beta;
    for (int iter = 0; iter < 50; ++iter) {
      used = beta;
      // Shifting by the nearest distance leaves p_{j|i} unchanged and avoids underflow.
      double sum = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0.0;
          continue;
        }
        const double shifted = dist(i, j) - dmin;
        row[j] = std::exp(-beta * shifted);
        sum += row[j];
        weighted += row[j] * shifted;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      perp = std::exp(entropy);
      if (std::abs(perp - target) < 1e-4) break;
      if (perp > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += row[j];
    for (std::size_t j = 0; j < n; ++j) cond(i, j) = row[j] / sum;
    out.betas[i] = used;
    out.row_perplexities[i] = perp;
  }

  out.p = DenseMatrix(n, n);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.p(i, j) = (cond(i, j) + cond(j, i)) / denom;
  return out;
}

DenseMatrix tsne_q(const DenseMatrix& y) {
  const std::size_t n = y.rows();
  DenseMatrix q(n, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < y.cols(); ++k) {
        const double t = y(i, k) - y(j, k);
        s += t * t;
      }
      const double w = 1.0 / (1.0 + s);
      q(i, j) = q(j, i) = w;
      total += 2.0 * w;
    }
  }
  for (double& v : q.data()) v /= total;
  return q;
}

double tsne_kl(const DenseMatrix& p, const DenseMatrix& y) {
  const DenseMatrix q = tsne_q(y);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi > 0.0) kl += pi * std::log(pi / std::max(q.data()[i], 1e-300));
  }
  return kl;
}

TsneResult tsne_embed(const DenseMatrix& x, const TsneConfig& cfg) {
  if (cfg.dims != 2 && cfg.dims != 3) throw std::invalid_argument("tsne: dims must be 2 or 3");
  const std::size_t n = x.rows();
  const std::size_t dims = cfg.dims;
  const TsneAffinities aff = tsne_affinities(x, cfg.perplexity);
  const DenseMatrix& p = aff.p;

  DenseMatrix y(n, dims);
  bool initialized = false;
  if (cfg.pca_init && x.cols() >= dims) {
    y = pca_transform(pca_fit(x, dims), x);
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += y(i, 0);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) var += (y(i, 0) - mean) * (y(i, 0) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd > 0.0 && std::isfinite(sd)) {
      for (double& v : y.data()) v *= 1e-4 / sd;
      initialized = true;
    }
  }
  if (!initialized) {
    Rng rng(cfg.seed);
    for (double& v : y.data()) v = 1e-4 * rng.normal();
  }

  TsneResult result;
  result.initial_kl = tsne_kl(p, y);

  DenseMatrix update(n, dims), gains(n, dims, 1.0), grad(n, dims);
  DenseMatrix num(n, n);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
          const double t = y(i, k) - y(j, k);
          s += t * t;
        }
        const double w = 1.0 / (1.0 + s);
        num(i, j) = num(j, i) = w;
        total += 2.0 * w;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double g[3] = {0.0, 0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = num(i, j);
        const double coeff = (exaggeration * p(i, j) - w / total) * w;
        for (std::size_t k = 0; k < dims; ++k) g[k] += coeff * (y(i, k) - y(j, k));
      }
      for (std::size_t k = 0; k < dims; ++k) grad(i, k) = 4.0 * g[k];
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
      double& gain = gains.data()[i];
      const double gr = grad.data()[i];
      double& up = update.data()[i];
      gain = (gr > 0.0) != (up > 0.0) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      up = momentum * up - cfg.learning_rate * gain * gr;
      y.data()[i] += up;
    }
    for (std::size_t k = 0; k < dims; ++k) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += y(i, k);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) y(i, k) -= mean;
    }
    if (!y.all_finite()) {
      throw std::runtime_error("tsne: non-finite embedding at iteration " + std::to_string(it));
    }
  }
  result.final_kl = tsne_kl(p, y);
  result.embedding = std::move(y);
  return result;
}

}  // namespace sslgraph
