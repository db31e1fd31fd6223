#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sslgraph/dataset.hpp"
#include "sslgraph/matrix.hpp"
#include "sslgraph/sparse.hpp"
#include "sslgraph/trainer.hpp"

namespace sslgraph {

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  std::vector<double> mean;         // length d
  DenseMatrix components;           // d × k, orthonormal columns
  std::vector<double> eigenvalues;  // k, descending
  double total_variance = 0.0;      // trace of the covariance

  std::size_t input_dim() const { return components.rows(); }
  std::size_t output_dim() const { return components.cols(); }
  std::vector<double> explained_variance_ratio() const;
};

/// Covariance Σ = XcᵀXc/(n−1) of mean-centred rows.
DenseMatrix covariance(const DenseMatrix& x, std::vector<double>* mean = nullptr);

/// Top-k eigenpairs of the covariance. Components are sign-normalized so
/// the largest-magnitude entry of each column is positive.
PcaModel pca_fit(const DenseMatrix& x, std::size_t k);
/// y = (x − mean)·A_k
DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x);

// ---------------------------------------------------------------------------
// t-SNE (exact O(n²))

struct TsneConfig {
  double perplexity = 40.0;
  std::size_t dims = 2;
  double learning_rate = 200.0;
  std::size_t iterations = 1000;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  /// 1e-4 std initial layout taken from a 2-D PCA; random Gaussian otherwise.
  bool pca_init = true;
  std::uint64_t seed = 0;
};

struct TsneAffinities {
  DenseMatrix p;                          // symmetric joint probabilities, Σ = 1
  std::vector<double> betas;              // 1/(2σ_i²)
  std::vector<double> row_perplexities;   // achieved conditional perplexity
};

/// Perplexity-calibrated conditionals p_{j|i} (binary search on β, at most
/// 50 steps, stop when |perplexity − target| < 1e-4), symmetrized to
/// p_ij = (p_{j|i} + p_{i|j})/(2n).
TsneAffinities tsne_affinities(const DenseMatrix& x, double perplexity);
/// Student-t joint similarities q_ij ∝ (1 + ‖y_i − y_j‖²)⁻¹.
DenseMatrix tsne_q(const DenseMatrix& y);
/// Σ p_ij log(p_ij / q_ij)
double tsne_kl(const DenseMatrix& p, const DenseMatrix& y);

struct TsneResult {
  DenseMatrix embedding;
  double initial_kl = 0.0;
  double final_kl = 0.0;
};

TsneResult tsne_embed(const DenseMatrix& x, const TsneConfig& cfg);

// ---------------------------------------------------------------------------
// UMAP

struct UmapConfig {
  std::size_t n_neighbors = 15;
  std::size_t dims = 2;
  double min_dist = 0.1;
  double spread = 1.0;
  std::size_t epochs = 500;
  std::size_t negative_sample_rate = 5;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
};

/// Exact Euclidean k nearest neighbors (self excluded, ties by index).
struct KnnGraph {
  std::vector<std::vector<std::size_t>> indices;
  std::vector<std::vector<double>> distances;
};
KnnGraph exact_knn(const DenseMatrix& x, std::size_t k);

struct FuzzyGraph {
  SparseAdjacency directed;    // v_{j|i} stored in row i
  SparseAdjacency membership;  // fuzzy union v_ij, symmetric
  std::vector<double> rho;
  std::vector<double> sigma;
};
/// ρ_i = nearest-neighbor distance, σ_i solved so that
/// Σ_j exp(−max(0, d_ij − ρ_i)/σ_i) = log₂(k); union v = a + b − ab.
FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn);

/// Least-squares fit of (1 + a·d^{2b})⁻¹ to the min_dist/spread target curve.
std::pair<double, double> fit_ab(double min_dist, double spread);

/// Cross-entropy between v and w = (1 + a‖y_i − y_j‖^{2b})⁻¹ over stored pairs.
double umap_cross_entropy(const SparseAdjacency& membership, const DenseMatrix& y, double a,
                          double b);

struct UmapResult {
  DenseMatrix embedding;
  FuzzyGraph graph;
  double a = 0.0;
  double b = 0.0;
};

UmapResult umap_embed(const DenseMatrix& x, const UmapConfig& cfg);

// ---------------------------------------------------------------------------
// Autoencoder

enum class AeActivation { ReLU, Linear };

/// Single-layer encoder d→k (ReLU by default) and linear decoder k→d.
struct AeModel {
  DenseMatrix encoder_weight;  // d × k
  DenseMatrix encoder_bias;    // 1 × k
  DenseMatrix decoder_weight;  // k × d
  DenseMatrix decoder_bias;    // 1 × d
  AeActivation activation = AeActivation::ReLU;

  std::size_t input_dim() const { return encoder_weight.rows(); }
  std::size_t bottleneck() const { return encoder_weight.cols(); }
};

struct AeTrainResult {
  AeModel model;
  std::vector<double> train_mse;  // per epoch: loss before each step, averaged over the epoch's batches
  std::vector<double> val_mse;    // per epoch, after the step
  std::size_t best_epoch = 0;     // 1-based
  double best_val_mse = 0.0;
};

/// SGD settings for an autoencoder on d input features. The loss is a mean
/// over n·d entries, so its gradient shrinks like 1/d; the learning rate is
/// d/64 to compensate, and weight decay is off because at the classifier rate
/// it would outweigh the gradient. Full-batch steps are too few to leave the
/// mean-reconstruction plateau, hence mini-batches of 64 rows; much above d/64
/// the ReLU codes die.
TrainConfig ae_default_config(std::size_t input_dim);

/// Glorot-uniform weights, zero biases.
AeModel ae_init(std::size_t input_dim, std::size_t bottleneck, AeActivation activation, Rng& rng);

/// Full-batch SGD (trainer semantics) on the mean squared reconstruction
/// error over every row of `x`; early stopping on the MSE of `split.val` rows.
/// `init` overrides the Glorot initialization.
AeTrainResult ae_train(const DenseMatrix& x, std::size_t bottleneck, const SplitMask& split,
                       const TrainConfig& cfg, AeActivation activation = AeActivation::ReLU,
                       const AeModel* init = nullptr);

DenseMatrix ae_encode(const AeModel& model, const DenseMatrix& x);
DenseMatrix ae_decode(const AeModel& model, const DenseMatrix& codes);
double reconstruction_mse(const AeModel& model, const DenseMatrix& x);

struct SweepPoint {
  std::size_t size = 0;
  double val_mse = 0.0;
};

/// One AE per bottleneck size, shared seed.
std::vector<SweepPoint> bottleneck_sweep(const DenseMatrix& x, const SplitMask& split,
                                         std::span<const std::size_t> sizes,
                                         const TrainConfig& cfg,
                                         AeActivation activation = AeActivation::ReLU);

/// Interior size with the largest second difference m[i−1] − 2m[i] + m[i+1]
/// of the (size-sorted) validation curve; nullopt with fewer than 3 points.
std::optional<std::size_t> sweep_knee(std::span<const SweepPoint> sweep);

}  // namespace sslgraph
