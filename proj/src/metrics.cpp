#include "sslgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace sslgraph {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

// Dense cluster ids 0..c-1 in order of first appearance.
std::vector<std::size_t> compact_labels(std::span<const int> labels, std::size_t* clusters) {
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.emplace(labels[i], ids.size());
    out[i] = it->second;
  }
  *clusters = ids.size();
  return out;
}

double distance(const DenseMatrix& p, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.cols(); ++k) {
    const double t = p(i, k) - p(j, k);
    s += t * t;
  }
  return std::sqrt(s);
}

void check_points(const DenseMatrix& points, std::span<const int> labels, const char* who) {
  if (points.rows() != labels.size()) {
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(labels.size()) +
                                " labels for " + points.shape() + " points");
  }
}

}  // namespace

ClassificationReport classification_report(const DenseMatrix& logits, std::span<const int> labels,
                                           std::span<const std::uint8_t> mask) {
  if (labels.size() != logits.rows() || mask.size() != logits.rows()) {
    throw std::invalid_argument("classification_report: labels/mask length differs from logits " +
                                logits.shape());
  }
  std::map<int, ClassMetrics> classes;
  std::map<int, std::size_t> predicted;
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    auto r = logits.row(i);
    const auto pred = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    ++total;
    auto& c = classes[labels[i]];
    c.label = labels[i];
    ++c.support;
    ++predicted[pred];
    if (pred == labels[i]) {
      ++correct;
      ++c.true_positive;
    }
  }
  if (total == 0) throw std::invalid_argument("classification_report: empty mask");

  ClassificationReport rep;
  rep.accuracy = ratio(correct, total);
  for (auto& [label, c] : classes) {
    c.predicted = predicted.count(label) ? predicted[label] : 0;
    c.precision = ratio(c.true_positive, c.predicted);
    c.recall = ratio(c.true_positive, c.support);
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
                                        : 0.0;
    rep.precision += c.precision;
    rep.recall += c.recall;
    rep.f1 += c.f1;
    rep.per_class.push_back(c);
  }
  const auto k = static_cast<double>(classes.size());
  rep.precision /= k;
  rep.recall /= k;
  rep.f1 /= k;
  return rep;
}

const char* to_string(ClusterLabeling l) {
  return l == ClusterLabeling::TrueLabels ? "true" : "predicted";
}

double silhouette(const DenseMatrix& points, std::span<const int> labels) {
  check_points(points, labels, "silhouette");
  std::size_t c = 0;
  const auto ids = compact_labels(labels, &c);
  if (c < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");
  const std::size_t n = points.rows();
  std::vector<std::size_t> sizes(c, 0);
  for (auto id : ids) ++sizes[id];

  double total = 0.0;
  std::vector<double> sums(c);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[ids[j]] += distance(points, i, j);
    const std::size_t own = ids[i];
    if (sizes[own] < 2) continue;
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k)
      if (k != own) b = std::min(b, sums[k] / static_cast<double>(sizes[k]));
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

double dunn_index(const DenseMatrix& points, std::span<const int> labels) {
  check_points(points, labels, "dunn_index");
  std::size_t c = 0;
  const auto ids = compact_labels(labels, &c);
  if (c < 2) throw std::invalid_argument("dunn_index: need at least 2 clusters");
  const std::size_t n = points.rows();
  double min_sep = std::numeric_limits<double>::infinity();
  double max_diam = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(points, i, j);
      if (ids[i] == ids[j]) {
        max_diam = std::max(max_diam, d);
      } else {
        min_sep = std::min(min_sep, d);
      }
    }
  }
  if (!(max_diam > 0.0)) throw std::invalid_argument("dunn_index: zero maximum cluster diameter");
  return min_sep / max_diam;
}

ClusterScore cluster_score(const DenseMatrix& points, std::span<const int> labels,
                           ClusterLabeling labeling) {
  return {silhouette(points, labels), dunn_index(points, labels), labeling};
}

}  // namespace sslgraph
