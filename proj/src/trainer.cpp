#include "sslgraph/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sslgraph/autodiff.hpp"

namespace sslgraph {

TrainConfig TrainConfig::defaults_for(ModelKind kind) {
  TrainConfig cfg;
  if (kind == ModelKind::GraphConv) cfg.learning_rate = 1e-3;
  return cfg;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("TrainConfig: dropout must lie in [0, 1)");
  }
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_acc\n";
  char buf[128];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10f,%.10f,%.6f\n", e.epoch, e.train_loss, e.val_loss,
                  e.val_accuracy);
    out << buf;
  }
  return out.str();
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_csv();
}

bool EarlyStopping::update(std::size_t epoch, double value) {
  improved_ = !has_best_ || value < best_;
  if (improved_) {
    has_best_ = true;
    best_ = value;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

double masked_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                            std::span<const std::uint8_t> mask) {
  Tape tape;
  return ad::masked_cross_entropy(tape.constant_ref(logits), labels, mask).value()(0, 0);
}

double masked_accuracy(const DenseMatrix& logits, std::span<const int> labels,
                       std::span<const std::uint8_t> mask) {
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    auto r = logits.row(i);
    const auto pred = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    ++total;
    if (pred == labels[i]) ++correct;
  }
  if (total == 0) throw std::invalid_argument("masked_accuracy: empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

void sgd_step(std::span<DenseMatrix> params, std::span<const DenseMatrix> grads,
              std::span<DenseMatrix> velocity, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw std::invalid_argument("sgd_step: parameter, gradient and velocity counts differ");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t].data();
    const auto& g = grads[t].data();
    auto& v = velocity[t].data();
    if (g.size() != p.size() || v.size() != p.size()) {
      throw std::invalid_argument("sgd_step: shape mismatch at tensor " + std::to_string(t) +
                                  " (" + params[t].shape() + " vs " + grads[t].shape() + ")");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * p[i];
      v[i] = cfg.momentum * v[i] + gi;
      p[i] -= cfg.learning_rate * v[i];
    }
  }
}

double training_loss_and_grads(const ModelSpec& spec, const ParamSet& params,
                               const GraphInput& graph, const Mask& mask,
                               std::vector<DenseMatrix>* grads) {
  check_params(spec, params);
  Tape tape;
  std::vector<Var> handles;
  for (const auto& t : params.tensors) handles.push_back(tape.parameter(t));
  Rng unused(0);
  Var logits = forward(spec, handles, graph, tape.constant_ref(graph.features), false, unused);
  Var loss = ad::masked_cross_entropy(logits, graph.labels, mask);
  if (grads != nullptr) {
    tape.backward(loss);
    grads->clear();
    for (auto h : handles) grads->push_back(tape.grad(h));
  }
  return loss.value()(0, 0);
}

TrainResult train(const ModelSpec& spec, const GraphInput& graph, const SplitMask& split,
                  const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (spec.in_dim != graph.features.cols() || spec.out_dim != graph.num_classes) {
    throw std::invalid_argument("train: model spec does not match the graph input");
  }
  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng dropout_rng = root.split(1);
  Rng eval_rng = root.split(2);  // never consumed: eval mode has no dropout

  ParamSet params = init_params(spec, init_rng);
  std::vector<DenseMatrix> velocity;
  for (const auto& t : params.tensors) velocity.emplace_back(t.rows(), t.cols());

  TrainResult result;
  ParamSet best = params;
  EarlyStopping stopper(cfg.patience);
  result.history.stop_reason = StopReason::MaxEpochs;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    {
      Tape tape;
      std::vector<Var> handles;
      for (const auto& t : params.tensors) handles.push_back(tape.parameter(t));
      Var logits =
          forward(spec, handles, graph, tape.constant_ref(graph.features), true, dropout_rng);
      Var loss = ad::masked_cross_entropy(logits, graph.labels, split.train);
      rec.train_loss = loss.value()(0, 0);
      if (!std::isfinite(rec.train_loss)) {
        throw TrainingDiverged("train: non-finite training loss at epoch " +
                               std::to_string(epoch) + " (" + std::string(to_string(spec.kind)) +
                               ", lr=" + std::to_string(cfg.learning_rate) + ")");
      }
      tape.backward(loss);
      std::vector<DenseMatrix> grads;
      for (auto h : handles) {
        grads.push_back(tape.grad(h));
        if (!grads.back().all_finite()) {
          throw TrainingDiverged("train: non-finite gradient at epoch " + std::to_string(epoch));
        }
      }
      sgd_step(params.tensors, grads, velocity, cfg);
    }

    const DenseMatrix eval_logits = forward(spec, params, graph, false, eval_rng);
    rec.val_loss = masked_cross_entropy(eval_logits, graph.labels, split.val);
    rec.val_accuracy = masked_accuracy(eval_logits, graph.labels, split.val);
    if (!std::isfinite(rec.val_loss)) {
      throw TrainingDiverged("train: non-finite validation loss at epoch " +
                             std::to_string(epoch));
    }
    result.history.epochs.push_back(rec);

    const bool stop = stopper.update(epoch, rec.val_loss);
    if (stopper.improved()) best = params;
    if (stop) {
      result.history.stop_reason = StopReason::Patience;
      break;
    }
  }
  result.history.best_epoch = stopper.best_epoch();
  result.params = cfg.restore_best ? std::move(best) : std::move(params);
  return result;
}

}  // namespace sslgraph
