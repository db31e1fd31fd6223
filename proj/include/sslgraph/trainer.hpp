#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslgraph/dataset.hpp"
#include "sslgraph/matrix.hpp"
#include "sslgraph/models.hpp"

namespace sslgraph {

struct TrainConfig {
  double learning_rate = 1e-1;
  double weight_decay = 2e-3;
  double momentum = 0.9;
  double dropout = 0.1;
  std::size_t patience = 5;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;
  /// Rows per autoencoder step, reshuffled every epoch; 0 trains on the full
  /// batch. Classifiers always train full batch.
  std::size_t batch_size = 0;
  /// Return the parameters of the best validation epoch rather than the last.
  bool restore_best = true;

  /// Defaults with the 1e-3 learning rate GraphConv needs.
  static TrainConfig defaults_for(ModelKind kind);
  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

enum class StopReason { Patience, MaxEpochs };

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based epoch number
  StopReason stop_reason = StopReason::MaxEpochs;

  /// Columns: epoch,train_loss,val_loss,val_acc
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

/// Patience counter over a validation metric; strict improvement only.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Feeds the metric of `epoch`; returns true once `patience` consecutive
  /// epochs have failed to improve on the best value.
  bool update(std::size_t epoch, double value);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t bad_epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = 0.0;
  bool has_best_ = false;
  bool improved_ = false;
};

/// Mean over masked rows of -log softmax(logits)[label].
double masked_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                            std::span<const std::uint8_t> mask);
/// Fraction of masked rows whose argmax equals the label.
double masked_accuracy(const DenseMatrix& logits, std::span<const int> labels,
                       std::span<const std::uint8_t> mask);

/// In-place SGD: g' = g + wd·p; v ← μ·v + g'; p ← p − lr·v.
void sgd_step(std::span<DenseMatrix> params, std::span<const DenseMatrix> grads,
              std::span<DenseMatrix> velocity, const TrainConfig& cfg);

struct TrainResult {
  ParamSet params;
  TrainHistory history;
};

/// Full-graph transductive training: one gradient step per epoch on the
/// masked training loss, validation loss in eval mode after each step,
/// early stopping with `cfg.patience`.
TrainResult train(const ModelSpec& spec, const GraphInput& graph, const SplitMask& split,
                  const TrainConfig& cfg);

/// Loss and gradients of the masked training objective at `params`
/// (dropout disabled); used by gradient checks and the masking invariant.
double training_loss_and_grads(const ModelSpec& spec, const ParamSet& params,
                               const GraphInput& graph, const Mask& mask,
                               std::vector<DenseMatrix>* grads);

}  // namespace sslgraph
