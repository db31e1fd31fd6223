#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sslgraph/matrix.hpp"

namespace sslgraph {

struct ClassMetrics {
  int label = 0;
  std::size_t support = 0;    // masked nodes with this true label
  std::size_t predicted = 0;  // masked nodes predicted as this label
  std::size_t true_positive = 0;
  double precision = 0.0;     // percentages
  double recall = 0.0;
  double f1 = 0.0;
};

/// Percentages in [0, 100]. Macro averages run over the classes present
/// among the masked true labels; undefined per-class ratios count as 0.
struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

ClassificationReport classification_report(const DenseMatrix& logits, std::span<const int> labels,
                                           std::span<const std::uint8_t> mask);

enum class ClusterLabeling { TrueLabels, PredictedLabels };
const char* to_string(ClusterLabeling l);

struct ClusterScore {
  double silhouette = 0.0;
  double dunn = 0.0;
  ClusterLabeling labeling = ClusterLabeling::TrueLabels;
};

/// Mean silhouette over all points. Singleton clusters and a = b = 0 give s = 0.
double silhouette(const DenseMatrix& points, std::span<const int> labels);

/// Minimum single-linkage distance between clusters over the maximum
/// complete-linkage diameter.
double dunn_index(const DenseMatrix& points, std::span<const int> labels);

ClusterScore cluster_score(const DenseMatrix& points, std::span<const int> labels,
                           ClusterLabeling labeling);

}  // namespace sslgraph
