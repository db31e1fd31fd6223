#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sslgraph/dataset.hpp"
#include "sslgraph/dimred.hpp"
#include "sslgraph/metrics.hpp"
#include "sslgraph/models.hpp"
#include "sslgraph/trainer.hpp"

namespace sslgraph {

enum class InputMode { Original, Pca, Autoencoder };
enum class Reducer { PCA, TSNE, UMAP };

/// "Original", "PCA-100", "AE-100" (the suffix is the reduced width).
std::string input_label(InputMode mode, std::size_t reduce_dim);
InputMode parse_input_mode(std::string_view s);
/// "PCA", "t-SNE", "UMAP"
const char* to_string(Reducer r);
/// "pca", "tsne", "umap" (file-name form)
const char* slug(Reducer r);
Reducer parse_reducer(std::string_view s);

/// Optional overrides applied on top of TrainConfig::defaults_for(kind), or
/// of an explicit base configuration.
struct TrainOverrides {
  std::optional<double> learning_rate;
  std::optional<double> graphconv_learning_rate;
  std::optional<double> weight_decay;
  std::optional<double> momentum;
  std::optional<double> dropout;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> batch_size;

  TrainConfig apply(ModelKind kind, std::uint64_t seed) const;
  TrainConfig apply(TrainConfig base, std::uint64_t seed) const;
};

struct ExperimentConfig {
  std::string dataset = "cora";
  /// Either a canonical TSV directory (with splits) or content + cites files.
  std::filesystem::path dataset_dir;
  std::filesystem::path content_path;
  std::filesystem::path cites_path;
  std::size_t per_class = 20;
  std::size_t n_val = 500;
  std::size_t n_test = 1000;

  std::vector<ModelKind> models{ModelKind::MLP, ModelKind::GCN, ModelKind::GAT,
                                ModelKind::GraphConv};
  std::vector<InputMode> modes{InputMode::Original, InputMode::Pca, InputMode::Autoencoder};
  std::vector<Reducer> reducers{Reducer::PCA, Reducer::TSNE, Reducer::UMAP};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::uint64_t seed_offset = 0;

  std::size_t hidden_dim = 16;
  std::size_t reduce_dim = 100;
  TrainOverrides train;
  TrainOverrides autoencoder;  // on top of ae_default_config()
  AeActivation ae_activation = AeActivation::ReLU;
  TsneConfig tsne;
  UmapConfig umap;
  ClusterLabeling cluster_labels = ClusterLabeling::TrueLabels;

  std::filesystem::path output_dir;  // results for this dataset go to output_dir/<dataset>
  std::size_t workers = 1;

  /// INI file with [dataset], [experiment], [train], [autoencoder], [tsne]
  /// and [umap] sections; relative paths resolve against the file's directory.
  static ExperimentConfig load(const std::filesystem::path& path);
  void validate() const;
  std::uint64_t effective_seed(std::uint64_t seed) const { return seed + seed_offset; }
};

/// Loads the dataset named by the config (canonical TSV or raw files + split rule).
std::pair<DatasetContainer, SplitMask> load_experiment_dataset(const ExperimentConfig& cfg);

struct StageTimings {
  double features = 0.0;  // seconds
  double train = 0.0;
  double reduce = 0.0;
  double score = 0.0;
};

struct ClusterResult {
  Reducer reducer = Reducer::PCA;
  ClusterScore score;
  DenseMatrix embedding;       // test nodes × 2
  std::vector<int> labels;     // labels used for scoring and colouring
  std::optional<std::string> error;
};

/// One (model, input mode, seed) run.
struct CellResult {
  ModelKind model = ModelKind::GCN;
  InputMode mode = InputMode::Original;
  std::uint64_t seed = 0;
  std::size_t parameters = 0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  ClassificationReport classification;
  std::vector<ClusterResult> clusters;  // first seed only
  StageTimings timings;
  std::optional<std::string> error;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<std::string> class_names;
  std::vector<CellResult> cells;  // model-major, then mode, then seed
  double wall_seconds = 0.0;

  bool ok() const;
};

/// Executes every (model, mode, seed) cell; failures are recorded per cell.
RunReport run_matrix(const ExperimentConfig& cfg, const DatasetContainer& ds,
                     const SplitMask& split);
RunReport run_matrix(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Tabular outputs

struct ClassificationRow {
  std::string model;
  std::string input;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t parameters = 0;
  std::size_t best_epoch = 0;
  std::string status = "ok";
};

struct ClusteringRow {
  std::string model;
  std::string input;
  std::string reducer;
  std::uint64_t seed = 0;
  std::string labeling;
  double silhouette = 0.0;
  double dunn = 0.0;
  std::string status = "ok";
};

std::string classification_csv(std::span<const ClassificationRow> rows);
std::string clustering_csv(std::span<const ClusteringRow> rows);
/// Throws std::runtime_error when the header does not match the schema.
std::vector<ClassificationRow> parse_classification_csv(std::string_view text);
std::vector<ClusteringRow> parse_clustering_csv(std::string_view text);

std::vector<ClassificationRow> classification_rows(const RunReport& report);
std::vector<ClusteringRow> clustering_rows(const RunReport& report);

/// Mean and sample standard deviation; "81.00 (1.00)", or "80.00 (—)" for one value.
std::string format_mean_std(std::span<const double> values);

struct Summary {
  std::string markdown;
  std::string csv;
};

/// Per (model, input) aggregation in first-appearance order.
Summary aggregate(std::span<const ClassificationRow> classification,
                  std::span<const ClusteringRow> clustering);

/// Writes per-cell CSVs, SVG scatter plots, embedding TSVs, summary.md,
/// summary.csv and timing.json into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

/// Re-aggregates every *_classification.csv / *_clustering.csv in `dir`.
Summary aggregate_directory(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Plots

const std::vector<std::string>& default_palette();

/// Standalone SVG: one circle per row of `embedding` coloured by label,
/// 5% margins around the data range, legend listing `class_names`.
std::string render_scatter_svg(const DenseMatrix& embedding, std::span<const int> labels,
                               std::span<const std::string> class_names,
                               std::span<const std::string> palette = default_palette());

/// `x  y  label` rows after a `#classes=` line.
void write_embedding_tsv(const std::filesystem::path& path, const DenseMatrix& embedding,
                         std::span<const int> labels, std::span<const std::string> class_names);
struct EmbeddingFile {
  DenseMatrix embedding;
  std::vector<int> labels;
  std::vector<std::string> class_names;
};
EmbeddingFile read_embedding_tsv(const std::filesystem::path& path);

/// SSLGRAPH_OUTPUT_ROOT when set, "results" otherwise.
std::filesystem::path default_output_root();

}  // namespace sslgraph
