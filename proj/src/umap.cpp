#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

#include "sslgraph/dimred.hpp"

namespace sslgraph {

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

double clip4(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

KnnGraph exact_knn(const DenseMatrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  if (k < 1 || k >= n) {
    throw std::invalid_argument("exact_knn: k=" + std::to_string(k) + " out of range for " +
                                std::to_string(n) + " points");
  }
  KnnGraph g;
  g.indices.resize(n);
  g.distances.resize(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(euclidean(x.row(i), x.row(j)), j);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t p = 0; p < k; ++p) {
      g.indices[i].push_back(cand[p].second);
      g.distances[i].push_back(cand[p].first);
    }
  }
  return g;
}

FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn) {
  const std::size_t n = knn.indices.size();
  if (n == 0) throw std::invalid_argument("fuzzy_simplicial_set: empty graph");
  const std::size_t k = knn.indices[0].size();
  const double target = std::log2(static_cast<double>(k));

  double global_mean = 0.0;
  for (const auto& row : knn.distances)
    for (double d : row) global_mean += d;
  global_mean /= static_cast<double>(n * k);

  FuzzyGraph g;
  g.rho.assign(n, 0.0);
  g.sigma.assign(n, 1.0);
  std::vector<std::tuple<std::size_t, std::size_t, double>> directed;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& dist = knn.distances[i];
    for (double d : dist) {
      if (d > 0.0) {
        g.rho[i] = d;
        break;
      }
    }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), sigma = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
      double psum = 0.0;
      for (double d : dist) psum += std::exp(-std::max(0.0, d - g.rho[i]) / sigma);
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = sigma;
        sigma = 0.5 * (lo + hi);
      } else {
        lo = sigma;
        sigma = std::isinf(hi) ? sigma * 2.0 : 0.5 * (lo + hi);
      }
    }
    const double mean_i = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(k);
    const double floor = 1e-3 * (g.rho[i] > 0.0 ? mean_i : global_mean);
    g.sigma[i] = std::max(sigma, floor);
    for (std::size_t p = 0; p < k; ++p) {
      const double v = std::exp(-std::max(0.0, dist[p] - g.rho[i]) / g.sigma[i]);
      directed.emplace_back(i, knn.indices[i][p], v);
    }
  }
  g.directed = SparseAdjacency::from_triplets(n, directed);

  std::vector<std::tuple<std::size_t, std::size_t, double>> sym;
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = g.directed.neighbors(i);
    auto vals = g.directed.row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const std::size_t j = nb[p];
      const double a = vals[p];
      const double b = g.directed.at(j, i);
      const double v = a + b - a * b;
      sym.emplace_back(i, j, v);
      if (!g.directed.contains(j, i)) sym.emplace_back(j, i, v);
    }
  }
  g.membership = SparseAdjacency::from_triplets(n, sym);
  return g;
}

std::pair<double, double> fit_ab(double min_dist, double spread) {
  if (!(spread > 0.0) || min_dist < 0.0) throw std::invalid_argument("fit_ab: bad parameters");
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (int s = 0; s < kSamples; ++s) {
    xs[s] = 3.0 * spread * s / (kSamples - 1);
    ys[s] = xs[s] < min_dist ? 1.0 : std::exp(-(xs[s] - min_dist) / spread);
  }
  auto residual = [&](double a, double b) {
    double r = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const double f = 1.0 / (1.0 + a * std::pow(xs[s], 2.0 * b));
      r += (f - ys[s]) * (f - ys[s]);
    }
    return r;
  };

  // Levenberg-Marquardt on (a, b) from (1, 1).
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double cost = residual(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    double jtj[2][2] = {{0, 0}, {0, 0}}, jtr[2] = {0, 0};
    for (int s = 0; s < kSamples; ++s) {
      const double x = xs[s];
      const double xp = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double denom = 1.0 + a * xp;
      const double f = 1.0 / denom;
      const double r = f - ys[s];
      const double da = -xp / (denom * denom);
      const double db = x > 0.0 ? -a * xp * 2.0 * std::log(x) / (denom * denom) : 0.0;
      jtj[0][0] += da * da;
      jtj[0][1] += da * db;
      jtj[1][1] += db * db;
      jtr[0] += da * r;
      jtr[1] += db * r;
    }
    jtj[1][0] = jtj[0][1];
    const double m00 = jtj[0][0] * (1.0 + lambda), m11 = jtj[1][1] * (1.0 + lambda);
    const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
    if (det == 0.0) break;
    const double step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
    const double step_b = -(-jtj[1][0] * jtr[0] + m00 * jtr[1]) / det;
    const double na = a + step_a, nb = b + step_b;
    const double ncost = na > 0.0 && nb > 0.0 ? residual(na, nb) : cost + 1.0;
    if (ncost < cost) {
      const bool converged = cost - ncost < 1e-15 * std::max(1.0, cost);
      a = na;
      b = nb;
      cost = ncost;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (converged) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

double umap_cross_entropy(const SparseAdjacency& membership, const DenseMatrix& y, double a,
                          double b) {
  constexpr double eps = 1e-12;
  double ce = 0.0;
  for (std::size_t i = 0; i < membership.n(); ++i) {
    auto nb = membership.neighbors(i);
    auto vals = membership.row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const double d = euclidean(y.row(i), y.row(nb[p]));
      const double w = std::clamp(1.0 / (1.0 + a * std::pow(d, 2.0 * b)), eps, 1.0 - eps);
      const double v = std::clamp(vals[p], eps, 1.0 - eps);
      ce += v * std::log(v / w) + (1.0 - v) * std::log((1.0 - v) / (1.0 - w));
    }
  }
  return ce;
}

UmapResult umap_embed(const DenseMatrix& x, const UmapConfig& cfg) {
  const std::size_t n = x.rows();
  if (cfg.n_neighbors < 2 || cfg.n_neighbors >= n) {
    throw std::invalid_argument("umap: n_neighbors=" + std::to_string(cfg.n_neighbors) +
                                " must lie in [2, n)");
  }
  if (cfg.dims == 0 || cfg.epochs == 0) throw std::invalid_argument("umap: bad configuration");
  UmapResult result;
  result.graph = fuzzy_simplicial_set(exact_knn(x, cfg.n_neighbors));
  std::tie(result.a, result.b) = fit_ab(cfg.min_dist, cfg.spread);
  const double a = result.a, b = result.b;

  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng sample_rng = rng.split(1);
  const std::size_t dims = cfg.dims;
  DenseMatrix y(n, dims);
  for (double& v : y.data()) v = init_rng.uniform(-10.0, 10.0);

  // Edge schedule: strong edges are sampled every epoch, weak ones proportionally less.
  const SparseAdjacency& m = result.graph.membership;
  double max_w = 0.0;
  for (double v : m.values()) max_w = std::max(max_w, v);
  std::vector<std::size_t> head, tail;
  std::vector<double> per_sample;
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = m.neighbors(i);
    auto vals = m.row_values(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      if (vals[p] < max_w / static_cast<double>(cfg.epochs)) continue;
      head.push_back(i);
      tail.push_back(nb[p]);
      per_sample.push_back(max_w / vals[p]);
    }
  }
  const double neg_rate = static_cast<double>(cfg.negative_sample_rate);
  std::vector<double> next_sample = per_sample;
  std::vector<double> per_negative(per_sample.size());
  for (std::size_t e = 0; e < per_sample.size(); ++e) per_negative[e] = per_sample[e] / neg_rate;
  std::vector<double> next_negative = per_negative;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double alpha =
        cfg.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
    const double now = static_cast<double>(epoch);
    for (std::size_t e = 0; e < head.size(); ++e) {
      if (next_sample[e] > now) continue;
      auto current = y.row(head[e]);
      auto other = y.row(tail[e]);
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) d2 += (current[k] - other[k]) * (current[k] - other[k]);
      double coeff = 0.0;
      if (d2 > 0.0) {
        coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
      }
      for (std::size_t k = 0; k < dims; ++k) {
        const double g = clip4(coeff * (current[k] - other[k]));
        current[k] += g * alpha;
        other[k] -= g * alpha;
      }
      next_sample[e] += per_sample[e];

      const auto negatives =
          static_cast<std::size_t>((now - next_negative[e]) / per_negative[e]);
      for (std::size_t s = 0; s < negatives; ++s) {
        const std::size_t j = sample_rng.uniform_index(n);
        if (j == head[e]) continue;
        auto neg = y.row(j);
        double nd2 = 0.0;
        for (std::size_t k = 0; k < dims; ++k) nd2 += (current[k] - neg[k]) * (current[k] - neg[k]);
        double rcoeff = 0.0;
        if (nd2 > 0.0) rcoeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
        for (std::size_t k = 0; k < dims; ++k) {
          const double g = rcoeff > 0.0 ? clip4(rcoeff * (current[k] - neg[k])) : 4.0;
          current[k] += g * alpha;
        }
      }
      next_negative[e] += static_cast<double>(negatives) * per_negative[e];
    }
  }
  if (!y.all_finite()) throw std::runtime_error("umap: non-finite embedding");
  result.embedding = std::move(y);
  return result;
}

}  // namespace sslgraph
