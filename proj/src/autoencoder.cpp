#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sslgraph/autodiff.hpp"
#include "sslgraph/dimred.hpp"

namespace sslgraph {

namespace {

DenseMatrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return m;
}

Var encode_var(Var x, Var w, Var b, AeActivation act) {
  Var h = ad::add_row(ad::matmul(x, w), b);
  return act == AeActivation::ReLU ? ad::relu(h) : h;
}

void check_model(const AeModel& m) {
  const std::size_t d = m.input_dim(), k = m.bottleneck();
  if (m.encoder_bias.rows() != 1 || m.encoder_bias.cols() != k || m.decoder_weight.rows() != k ||
      m.decoder_weight.cols() != d || m.decoder_bias.rows() != 1 || m.decoder_bias.cols() != d) {
    throw std::invalid_argument("autoencoder: inconsistent tensor shapes");
  }
}

}  // namespace

TrainConfig ae_default_config(std::size_t input_dim) {
  TrainConfig cfg;
  cfg.learning_rate = static_cast<double>(std::max<std::size_t>(input_dim, 1)) / 64.0;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 64;
  cfg.patience = 10;
  cfg.max_epochs = 100;
  return cfg;
}

AeModel ae_init(std::size_t input_dim, std::size_t bottleneck, AeActivation activation, Rng& rng) {
  if (bottleneck == 0 || input_dim == 0) throw std::invalid_argument("ae_init: empty layer");
  AeModel m;
  m.encoder_weight = glorot(input_dim, bottleneck, rng);
  m.encoder_bias = DenseMatrix(1, bottleneck);
  m.decoder_weight = glorot(bottleneck, input_dim, rng);
  m.decoder_bias = DenseMatrix(1, input_dim);
  m.activation = activation;
  return m;
}

DenseMatrix ae_encode(const AeModel& model, const DenseMatrix& x) {
  check_model(model);
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("ae_encode: input " + x.shape() + " vs encoder " +
                                model.encoder_weight.shape());
  }
  Tape tape;
  return encode_var(tape.constant_ref(x), tape.constant_ref(model.encoder_weight),
                    tape.constant_ref(model.encoder_bias), model.activation)
      .value();
}

DenseMatrix ae_decode(const AeModel& model, const DenseMatrix& codes) {
  check_model(model);
  if (codes.cols() != model.bottleneck()) {
    throw std::invalid_argument("ae_decode: codes " + codes.shape() + " vs decoder " +
                                model.decoder_weight.shape());
  }
  Tape tape;
  return ad::add_row(ad::matmul(tape.constant_ref(codes), tape.constant_ref(model.decoder_weight)),
                     tape.constant_ref(model.decoder_bias))
      .value();
}

double reconstruction_mse(const AeModel& model, const DenseMatrix& x) {
  const DenseMatrix rec = ae_decode(model, ae_encode(model, x));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = rec.data()[i] - x.data()[i];
    s += t * t;
  }
  return x.size() == 0 ? 0.0 : s / static_cast<double>(x.size());
}

AeTrainResult ae_train(const DenseMatrix& x, std::size_t bottleneck, const SplitMask& split,
                       const TrainConfig& cfg, AeActivation activation, const AeModel* init) {
  cfg.validate();
  const std::size_t d = x.cols();
  if (bottleneck == 0 || bottleneck > d) {
    throw std::invalid_argument("ae_train: bottleneck " + std::to_string(bottleneck) +
                                " must lie in [1, " + std::to_string(d) + "]");
  }
  if (split.val.size() != x.rows()) throw std::invalid_argument("ae_train: mask length mismatch");
  const std::vector<std::size_t> val_rows = SplitMask::indices(split.val);
  if (val_rows.empty()) throw std::invalid_argument("ae_train: empty validation mask");
  const DenseMatrix x_val = gather_rows(x, val_rows);

  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  AeTrainResult result;
  AeModel model = init != nullptr ? *init : ae_init(d, bottleneck, activation, init_rng);
  model.activation = activation;
  check_model(model);
  if (model.input_dim() != d || model.bottleneck() != bottleneck) {
    throw std::invalid_argument("ae_train: initial model shape does not match");
  }

  std::vector<DenseMatrix> velocity;
  for (const DenseMatrix* t : {&model.encoder_weight, &model.encoder_bias, &model.decoder_weight,
                               &model.decoder_bias}) {
    velocity.emplace_back(t->rows(), t->cols());
  }
  AeModel best = model;
  EarlyStopping stopper(cfg.patience);
  const std::size_t n = x.rows();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng = rng.split(1);

  auto step = [&](const DenseMatrix& xb) {
    std::vector<DenseMatrix> grads;
    double batch_mse = 0.0;
    {
      Tape tape;
      Var we = tape.parameter(model.encoder_weight);
      Var be = tape.parameter(model.encoder_bias);
      Var wd = tape.parameter(model.decoder_weight);
      Var bd = tape.parameter(model.decoder_bias);
      Var xs = tape.constant_ref(xb);
      Var rec = ad::add_row(ad::matmul(encode_var(xs, we, be, activation), wd), bd);
      Var loss = ad::mse(rec, xb);
      batch_mse = loss.value()(0, 0);
      if (!std::isfinite(batch_mse)) return batch_mse;
      tape.backward(loss);
      for (Var v : {we, be, wd, bd}) grads.push_back(tape.grad(v));
    }
    std::vector<DenseMatrix> params{std::move(model.encoder_weight), std::move(model.encoder_bias),
                                    std::move(model.decoder_weight), std::move(model.decoder_bias)};
    sgd_step(params, grads, velocity, cfg);
    model.encoder_weight = std::move(params[0]);
    model.encoder_bias = std::move(params[1]);
    model.decoder_weight = std::move(params[2]);
    model.decoder_bias = std::move(params[3]);
    return batch_mse;
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_mse = 0.0;
    if (batch == n) {
      train_mse = step(x);
    } else {
      shuffle_rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t end = std::min(start + batch, n);
        const std::span<const std::size_t> rows(order.data() + start, end - start);
        train_mse += step(gather_rows(x, rows)) * static_cast<double>(end - start);
      }
      train_mse /= static_cast<double>(n);
    }
    if (!std::isfinite(train_mse)) {
      throw TrainingDiverged("ae_train: non-finite loss at epoch " + std::to_string(epoch));
    }
    result.train_mse.push_back(train_mse);

    const double val = reconstruction_mse(model, x_val);
    if (!std::isfinite(val)) {
      throw TrainingDiverged("ae_train: non-finite validation MSE at epoch " +
                             std::to_string(epoch));
    }
    result.val_mse.push_back(val);
    const bool stop = stopper.update(epoch, val);
    if (stopper.improved()) best = model;
    if (stop) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_mse = stopper.best_value();
  result.model = cfg.restore_best ? std::move(best) : std::move(model);
  return result;
}

std::vector<SweepPoint> bottleneck_sweep(const DenseMatrix& x, const SplitMask& split,
                                         std::span<const std::size_t> sizes,
                                         const TrainConfig& cfg, AeActivation activation) {
  if (sizes.empty()) throw std::invalid_argument("bottleneck_sweep: no sizes");
  std::vector<SweepPoint> out;
  for (std::size_t k : sizes) {
    const AeTrainResult r = ae_train(x, k, split, cfg, activation);
    out.push_back({k, r.best_val_mse});
  }
  return out;
}

std::optional<std::size_t> sweep_knee(std::span<const SweepPoint> sweep) {
  if (sweep.size() < 3) return std::nullopt;
  std::vector<SweepPoint> sorted(sweep.begin(), sweep.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepPoint& a, const SweepPoint& b) { return a.size < b.size; });
  std::size_t best = 1;
  double best_curv = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < sorted.size(); ++i) {
    const double curv = sorted[i - 1].val_mse - 2.0 * sorted[i].val_mse + sorted[i + 1].val_mse;
    if (curv > best_curv) {
      best_curv = curv;
      best = i;
    }
  }
  return sorted[best].size;
}

}  // namespace sslgraph
