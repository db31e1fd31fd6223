#include "doctest.h"
#include "sslgraph/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace sslgraph;
using namespace sslgraph::testing;

namespace {

struct Problem {
  DatasetContainer ds = toy_graph(60, 12, 3, 120, 31);
  GraphInput graph = GraphInput::build(ds, ds.features.to_dense());
  SplitMask split = make_split(ds, 4, 20, 20);
};

}  // namespace

TEST_CASE("masked cross-entropy equals the per-row oracle") {
  Rng rng(1);
  for (std::size_t n : {1u, 7u, 50u}) {
    const DenseMatrix logits = random_matrix(n, 5, rng, -20, 20);
    std::vector<int> labels(n);
    Mask mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng.uniform_index(5));
      mask[i] = rng.bernoulli(0.6) || i == 0;
    }
    CHECK(std::abs(masked_cross_entropy(logits, labels, mask) - ce_oracle(logits, labels, mask)) <= 1e-12);
  }
}

TEST_CASE("masked cross-entropy of uniform logits is log(C)") {
  const DenseMatrix logits(4, 7, 0.25);
  const std::vector<int> labels{0, 3, 6, 2};
  const Mask mask{1, 1, 0, 1};
  CHECK(masked_cross_entropy(logits, labels, mask) == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  CHECK(masked_accuracy(DenseMatrix{{1, 0}, {0, 1}}, std::vector<int>{0, 0}, Mask{1, 1}) == 0.5);
}

TEST_CASE("sgd_step matches the unrolled momentum recurrence") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.1;
  cfg.momentum = 0.9;
  std::vector<DenseMatrix> p{DenseMatrix{{1.0}}}, v{DenseMatrix{{0.0}}};
  const std::vector<DenseMatrix> g{DenseMatrix{{0.5}}};
  sgd_step(p, g, v, cfg);
  CHECK(p[0](0, 0) == doctest::Approx(0.94).epsilon(1e-15));
  CHECK(v[0](0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  sgd_step(p, g, v, cfg);
  CHECK(v[0](0, 0) == doctest::Approx(0.9 * 0.6 + 0.5 + 0.1 * 0.94).epsilon(1e-15));
  CHECK(p[0](0, 0) == doctest::Approx(0.94 - 0.1 * 1.134).epsilon(1e-15));

  std::vector<DenseMatrix> wrong{DenseMatrix(2, 2)};
  CHECK_THROWS_AS(sgd_step(p, wrong, v, cfg), std::invalid_argument);
}

TEST_CASE("early stopping: strict improvement, patience counts bad epochs") {
  EarlyStopping es(2);
  CHECK_FALSE(es.update(1, 3.0));
  CHECK_FALSE(es.update(2, 2.0));
  CHECK_FALSE(es.update(3, 2.0));  // equal is not an improvement
  CHECK(es.update(4, 2.1));
  CHECK(es.best_epoch() == 2);
  CHECK(es.best_value() == 2.0);
}

TEST_CASE("training is deterministic and restores the best validation epoch") {
  Problem pr;
  for (ModelKind kind : {ModelKind::MLP, ModelKind::GCN, ModelKind::GAT, ModelKind::GraphConv}) {
    CAPTURE(to_string(kind));
    const ModelSpec spec = ModelSpec::make(kind, 12, 3);
    TrainConfig cfg = TrainConfig::defaults_for(kind);
    cfg.seed = 5;
    const TrainResult a = train(spec, pr.graph, pr.split, cfg);
    const TrainResult b = train(spec, pr.graph, pr.split, cfg);
    CHECK(a.history == b.history);
    CHECK(a.params.tensors == b.params.tensors);
    REQUIRE(!a.history.epochs.empty());
    CHECK(a.history.epochs.size() <= cfg.max_epochs);

    double best = 1e300;
    for (const auto& e : a.history.epochs) best = std::min(best, e.val_loss);
    CHECK(a.history.epochs[a.history.best_epoch - 1].val_loss == best);
    Rng unused(0);
    const DenseMatrix logits = forward(spec, a.params, pr.graph, false, unused);
    CHECK(std::abs(masked_cross_entropy(logits, pr.graph.labels, pr.split.val) - best) <= 1e-12);
    if (a.history.stop_reason == StopReason::Patience) {
      CHECK(a.history.epochs.size() == a.history.best_epoch + cfg.patience);
    }
  }
}

TEST_CASE("different seeds give different runs; training reduces the loss") {
  Problem pr;
  const ModelSpec spec = ModelSpec::make(ModelKind::GCN, 12, 3);
  TrainConfig cfg;
  cfg.seed = 1;
  const TrainResult a = train(spec, pr.graph, pr.split, cfg);
  cfg.seed = 2;
  const TrainResult b = train(spec, pr.graph, pr.split, cfg);
  CHECK(a.params.tensors != b.params.tensors);
  CHECK(a.history.epochs[a.history.best_epoch - 1].val_loss < a.history.epochs.front().val_loss);
}

TEST_CASE("history CSV layout") {
  TrainHistory h;
  h.epochs.push_back({1, 1.5, 1.25, 0.5});
  CHECK(h.to_csv() == "epoch,train_loss,val_loss,val_acc\n1,1.5000000000,1.2500000000,0.500000\n");
}

TEST_CASE("configuration validation and divergence") {
  TrainConfig cfg;
  CHECK(TrainConfig::defaults_for(ModelKind::GraphConv).learning_rate == 1e-3);
  CHECK(TrainConfig::defaults_for(ModelKind::GCN).learning_rate == 0.1);
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.patience = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  Problem pr;
  cfg = {};
  cfg.learning_rate = 1e250;
  CHECK_THROWS_AS(train(ModelSpec::make(ModelKind::MLP, 12, 3), pr.graph, pr.split, cfg), TrainingDiverged);
}
