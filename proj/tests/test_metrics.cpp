#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "sslgraph/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace sslgraph;
using namespace sslgraph::testing;

namespace {

struct Confusion {
  double accuracy, precision, recall, f1;
};

Confusion confusion_oracle(const DenseMatrix& logits, const std::vector<int>& labels, const Mask& mask,
                           int classes) {
  std::vector<std::vector<int>> cm(static_cast<std::size_t>(classes), std::vector<int>(static_cast<std::size_t>(classes), 0));
  int correct = 0, total = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    int pred = 0;
    for (int k = 1; k < classes; ++k)
      if (logits(i, static_cast<std::size_t>(k)) > logits(i, static_cast<std::size_t>(pred))) pred = k;
    ++cm[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(pred)];
    correct += pred == labels[i];
    ++total;
  }
  double p = 0.0, r = 0.0, f = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    int row = 0, col = 0;
    for (std::size_t k = 0; k < cm.size(); ++k) {
      row += cm[c][k];
      col += cm[k][c];
    }
    if (row == 0) continue;
    ++present;
    const double tp = cm[c][c];
    const double pc = col == 0 ? 0.0 : tp / col;
    const double rc = tp / row;
    p += pc;
    r += rc;
    f += pc + rc == 0.0 ? 0.0 : 2 * pc * rc / (pc + rc);
  }
  return {100.0 * correct / total, 100.0 * p / present, 100.0 * r / present, 100.0 * f / present};
}

DenseMatrix one_hot(const std::vector<int>& pred, int classes) {
  DenseMatrix m(pred.size(), static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < pred.size(); ++i) m(i, static_cast<std::size_t>(pred[i])) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("classification report: perfect predictions") {
  const std::vector<int> labels{0, 1, 2, 1, 0};
  const auto r = classification_report(one_hot(labels, 3), labels, Mask(5, 1));
  CHECK(r.accuracy == 100.0);
  CHECK(r.precision == 100.0);
  CHECK(r.recall == 100.0);
  CHECK(r.f1 == 100.0);
}

TEST_CASE("classification report: one of each confusion cell per class gives 50") {
  const std::vector<int> labels{0, 0, 1, 1};
  const auto r = classification_report(one_hot({0, 1, 1, 0}, 2), labels, Mask(4, 1));
  CHECK(r.accuracy == 50.0);
  CHECK(r.precision == 50.0);
  CHECK(r.recall == 50.0);
  CHECK(r.f1 == 50.0);
  REQUIRE(r.per_class.size() == 2);
  CHECK(r.per_class[0].true_positive == 1);
  CHECK(r.per_class[0].predicted == 2);
  CHECK(r.per_class[0].support == 2);
}

TEST_CASE("classification report equals the confusion-matrix oracle on random data") {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseMatrix logits = random_matrix(200, 6, rng, -2, 2);
    std::vector<int> labels(200);
    Mask mask(200, 0);
    for (std::size_t i = 0; i < 200; ++i) {
      labels[i] = static_cast<int>(rng.uniform_index(6));
      mask[i] = rng.bernoulli(0.7);
    }
    const auto r = classification_report(logits, labels, mask);
    const Confusion o = confusion_oracle(logits, labels, mask, 6);
    CHECK(std::abs(r.accuracy - o.accuracy) <= 1e-9);
    CHECK(std::abs(r.precision - o.precision) <= 1e-9);
    CHECK(std::abs(r.recall - o.recall) <= 1e-9);
    CHECK(std::abs(r.f1 - o.f1) <= 1e-9);
    std::size_t support = 0;
    for (const auto& c : r.per_class) support += c.support;
    CHECK(support == SplitMask::count(mask));
    for (double v : {r.accuracy, r.precision, r.recall, r.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }

    // argmax is unchanged by a per-row shift
    DenseMatrix shifted = logits;
    for (std::size_t i = 0; i < 200; ++i) {
      const double c = rng.uniform(-50, 50);
      for (std::size_t k = 0; k < 6; ++k) shifted(i, k) += c;
    }
    const auto s = classification_report(shifted, labels, mask);
    CHECK(s.accuracy == r.accuracy);
    CHECK(s.f1 == r.f1);
  }
}

TEST_CASE("classification report: absent classes and empty masks") {
  // Class 2 never appears among masked labels but is predicted once.
  const std::vector<int> labels{0, 1, 1, 2};
  const Mask mask{1, 1, 1, 0};
  const auto r = classification_report(one_hot({0, 1, 2, 2}, 3), labels, mask);
  CHECK(r.accuracy == doctest::Approx(200.0 / 3.0));
  CHECK(r.recall == doctest::Approx(75.0));
  CHECK(r.precision == doctest::Approx(100.0));
  CHECK_THROWS_AS(classification_report(one_hot(labels, 3), labels, Mask(4, 0)), std::invalid_argument);
}

TEST_CASE("silhouette examples") {
  const DenseMatrix pairs{{0, 0}, {0, 0}, {3, 4}, {3, 4}};
  CHECK(silhouette(pairs, std::vector<int>{0, 0, 1, 1}) == 1.0);
  const DenseMatrix same(4, 2, 1.5);
  CHECK(silhouette(same, std::vector<int>{0, 1, 0, 1}) == 0.0);
  // A singleton contributes 0.
  const DenseMatrix three{{0, 0}, {0, 1}, {10, 0}};
  CHECK(silhouette(three, std::vector<int>{0, 0, 1}) == doctest::Approx(silhouette_oracle(three, {0, 0, 1})));
  CHECK_THROWS_AS(silhouette(pairs, std::vector<int>(4, 3)), std::invalid_argument);
}

TEST_CASE("dunn examples") {
  const DenseMatrix line{{0}, {1}, {10}, {11}};
  CHECK(dunn_index(line, std::vector<int>{0, 0, 1, 1}) == 9.0);
  CHECK(dunn_index(scale(line, 3.5), std::vector<int>{0, 0, 1, 1}) == doctest::Approx(9.0).epsilon(1e-15));
  const DenseMatrix singles{{0}, {1}};
  CHECK_THROWS_AS(dunn_index(singles, std::vector<int>{0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(dunn_index(line, std::vector<int>(4, 0)), std::invalid_argument);
}

TEST_CASE("silhouette and dunn equal all-pairs oracles on 3-blob sets") {
  Rng rng(2);
  for (std::size_t per : {20u, 66u}) {
    std::vector<int> labels;
    const DenseMatrix x = blobs(3, per, 2, 2.0, &labels, rng);
    CHECK(std::abs(silhouette(x, labels) - silhouette_oracle(x, labels)) <= 1e-12);
    CHECK(std::abs(dunn_index(x, labels) - dunn_oracle(x, labels)) <= 1e-12);
  }
}

TEST_CASE("cluster indices: bounds and invariances") {
  Rng rng(3);
  std::vector<int> labels;
  const DenseMatrix x = blobs(4, 15, 2, 3.0, &labels, rng);
  const double s = silhouette(x, labels), d = dunn_index(x, labels);

  DenseMatrix moved = scale(x, 2.5);
  for (std::size_t i = 0; i < moved.rows(); ++i) {
    moved(i, 0) += 7.0;
    moved(i, 1) -= 3.0;
  }
  CHECK(silhouette(moved, labels) == doctest::Approx(s).epsilon(1e-12));
  CHECK(dunn_index(moved, labels) == doctest::Approx(d).epsilon(1e-12));

  std::vector<int> relabeled = labels;
  for (int& l : relabeled) l = (l * 3 + 5) % 4 + 10;
  CHECK(silhouette(x, relabeled) == doctest::Approx(s).epsilon(1e-12));
  CHECK(dunn_index(x, relabeled) == doctest::Approx(d).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> random(60);
    for (int& l : random) l = static_cast<int>(rng.uniform_index(3));
    if (std::set<int>(random.begin(), random.end()).size() < 2) continue;
    const double v = silhouette(x, random);
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  const ClusterScore cs = cluster_score(x, labels, ClusterLabeling::PredictedLabels);
  CHECK(cs.silhouette == s);
  CHECK(cs.dunn == d);
  CHECK(std::string(to_string(cs.labeling)) == "predicted");
}
