#include "sslgraph/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sslgraph {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(s)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Runs fn(0..count-1) on up to `workers` threads. Results must be written to
// per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

template <typename T>
void read_opt(const boost::property_tree::ptree& tree, const char* key, std::optional<T>& out) {
  if (auto v = tree.get_optional<T>(key)) out = *v;
}

TrainOverrides read_overrides(const boost::property_tree::ptree& tree) {
  TrainOverrides o;
  read_opt(tree, "learning_rate", o.learning_rate);
  read_opt(tree, "graphconv_learning_rate", o.graphconv_learning_rate);
  read_opt(tree, "weight_decay", o.weight_decay);
  read_opt(tree, "momentum", o.momentum);
  read_opt(tree, "dropout", o.dropout);
  read_opt(tree, "patience", o.patience);
  read_opt(tree, "max_epochs", o.max_epochs);
  read_opt(tree, "batch_size", o.batch_size);
  return o;
}

}  // namespace

std::string input_label(InputMode mode, std::size_t reduce_dim) {
  switch (mode) {
    case InputMode::Original: return "Original";
    case InputMode::Pca: return "PCA-" + std::to_string(reduce_dim);
    case InputMode::Autoencoder: return "AE-" + std::to_string(reduce_dim);
  }
  return "?";
}

InputMode parse_input_mode(std::string_view s) {
  const std::string l = lower(s);
  if (l == "original") return InputMode::Original;
  if (l.rfind("pca", 0) == 0) return InputMode::Pca;
  if (l.rfind("ae", 0) == 0 || l == "autoencoder") return InputMode::Autoencoder;
  throw std::invalid_argument("unknown input mode '" + std::string(s) + "'");
}

const char* to_string(Reducer r) {
  switch (r) {
    case Reducer::PCA: return "PCA";
    case Reducer::TSNE: return "t-SNE";
    case Reducer::UMAP: return "UMAP";
  }
  return "?";
}

const char* slug(Reducer r) {
  switch (r) {
    case Reducer::PCA: return "pca";
    case Reducer::TSNE: return "tsne";
    case Reducer::UMAP: return "umap";
  }
  return "?";
}

Reducer parse_reducer(std::string_view s) {
  const std::string l = lower(s);
  if (l == "pca") return Reducer::PCA;
  if (l == "t-sne" || l == "tsne") return Reducer::TSNE;
  if (l == "umap") return Reducer::UMAP;
  throw std::invalid_argument("unknown reducer '" + std::string(s) + "'");
}

TrainConfig TrainOverrides::apply(ModelKind kind, std::uint64_t seed) const {
  TrainConfig cfg = apply(TrainConfig::defaults_for(kind), seed);
  if (kind == ModelKind::GraphConv) {
    cfg.learning_rate = graphconv_learning_rate.value_or(TrainConfig::defaults_for(kind).learning_rate);
  }
  return cfg;
}

TrainConfig TrainOverrides::apply(TrainConfig cfg, std::uint64_t seed) const {
  if (learning_rate) cfg.learning_rate = *learning_rate;
  if (weight_decay) cfg.weight_decay = *weight_decay;
  if (momentum) cfg.momentum = *momentum;
  if (dropout) cfg.dropout = *dropout;
  if (patience) cfg.patience = *patience;
  if (max_epochs) cfg.max_epochs = *max_epochs;
  if (batch_size) cfg.batch_size = *batch_size;
  cfg.seed = seed;
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree root;
  try {
    pt::read_ini(path.string(), root);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error("config: " + std::string(e.what()));
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  const pt::ptree empty;
  auto section = [&](const char* name) -> const pt::ptree& {
    auto it = root.find(name);
    return it == root.not_found() ? empty : it->second;
  };
  static const std::set<std::string> known{"dataset", "experiment", "train", "autoencoder",
                                           "tsne", "umap"};
  for (const auto& [name, _] : root) {
    if (!known.count(name)) throw std::runtime_error("config: unknown section [" + name + "]");
  }

  ExperimentConfig cfg;
  const auto& ds = section("dataset");
  cfg.dataset = ds.get("name", cfg.dataset);
  cfg.dataset_dir = resolve(ds.get("dir", std::string()));
  cfg.content_path = resolve(ds.get("content", std::string()));
  cfg.cites_path = resolve(ds.get("cites", std::string()));
  cfg.per_class = ds.get("per_class", cfg.per_class);
  cfg.n_val = ds.get("val", cfg.n_val);
  cfg.n_test = ds.get("test", cfg.n_test);

  const auto& ex = section("experiment");
  if (auto v = ex.get_optional<std::string>("models")) {
    cfg.models.clear();
    for (const auto& m : split_list(*v)) cfg.models.push_back(parse_model_kind(m));
  }
  if (auto v = ex.get_optional<std::string>("inputs")) {
    cfg.modes.clear();
    for (const auto& m : split_list(*v)) cfg.modes.push_back(parse_input_mode(m));
  }
  if (auto v = ex.get_optional<std::string>("reducers")) {
    cfg.reducers.clear();
    for (const auto& r : split_list(*v)) cfg.reducers.push_back(parse_reducer(r));
  }
  if (auto v = ex.get_optional<std::string>("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : split_list(*v)) cfg.seeds.push_back(std::stoull(s));
  }
  cfg.seed_offset = ex.get("seed_offset", cfg.seed_offset);
  cfg.hidden_dim = ex.get("hidden", cfg.hidden_dim);
  cfg.reduce_dim = ex.get("reduce_dim", cfg.reduce_dim);
  cfg.workers = ex.get("workers", cfg.workers);
  if (auto v = ex.get_optional<std::string>("output")) cfg.output_dir = resolve(*v);
  if (auto v = ex.get_optional<std::string>("cluster_labels")) {
    const std::string l = lower(*v);
    if (l == "true") {
      cfg.cluster_labels = ClusterLabeling::TrueLabels;
    } else if (l == "predicted") {
      cfg.cluster_labels = ClusterLabeling::PredictedLabels;
    } else {
      throw std::runtime_error("config: cluster_labels must be 'true' or 'predicted'");
    }
  }

  cfg.train = read_overrides(section("train"));
  const auto& ae = section("autoencoder");
  cfg.autoencoder = read_overrides(ae);
  if (auto v = ae.get_optional<std::string>("activation")) {
    const std::string l = lower(*v);
    if (l == "relu") {
      cfg.ae_activation = AeActivation::ReLU;
    } else if (l == "linear") {
      cfg.ae_activation = AeActivation::Linear;
    } else {
      throw std::runtime_error("config: autoencoder activation must be relu or linear");
    }
  }

  const auto& ts = section("tsne");
  cfg.tsne.perplexity = ts.get("perplexity", cfg.tsne.perplexity);
  cfg.tsne.iterations = ts.get("iterations", cfg.tsne.iterations);
  cfg.tsne.learning_rate = ts.get("learning_rate", cfg.tsne.learning_rate);
  const auto& um = section("umap");
  cfg.umap.n_neighbors = um.get("n_neighbors", cfg.umap.n_neighbors);
  cfg.umap.min_dist = um.get("min_dist", cfg.umap.min_dist);
  cfg.umap.spread = um.get("spread", cfg.umap.spread);
  cfg.umap.epochs = um.get("epochs", cfg.umap.epochs);

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw std::invalid_argument("config: no models");
  if (modes.empty()) throw std::invalid_argument("config: no input modes");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  const std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw std::invalid_argument("config: seeds must be distinct");
  if (dataset.empty()) throw std::invalid_argument("config: dataset name is empty");
  if (hidden_dim == 0 || reduce_dim == 0) throw std::invalid_argument("config: zero width");
  if (workers == 0) throw std::invalid_argument("config: workers must be >= 1");
}

std::pair<DatasetContainer, SplitMask> load_experiment_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset_dir.empty()) {
    auto loaded = read_dataset_tsv(cfg.dataset_dir);
    loaded.first.name = cfg.dataset;
    return loaded;
  }
  if (cfg.content_path.empty() || cfg.cites_path.empty()) {
    throw std::runtime_error("config: dataset needs either 'dir' or both 'content' and 'cites'");
  }
  IngestOptions options;
  options.name = cfg.dataset;
  DatasetContainer ds = ingest_citation_files(cfg.content_path, cfg.cites_path, options);
  SplitMask split = make_split(ds, cfg.per_class, cfg.n_val, cfg.n_test);
  return {std::move(ds), std::move(split)};
}

bool RunReport::ok() const {
  for (const auto& c : cells) {
    if (c.error) return false;
    for (const auto& k : c.clusters)
      if (k.error) return false;
  }
  return true;
}

namespace {

struct FeatureSet {
  std::shared_ptr<const GraphInput> graph;
  double seconds = 0.0;
  std::optional<std::string> error;
};

DenseMatrix reduce(Reducer r, const DenseMatrix& x, const ExperimentConfig& cfg,
                   std::uint64_t seed) {
  switch (r) {
    case Reducer::PCA: return pca_transform(pca_fit(x, 2), x);
    case Reducer::TSNE: {
      TsneConfig t = cfg.tsne;
      t.seed = seed;
      return tsne_embed(x, t).embedding;
    }
    case Reducer::UMAP: {
      UmapConfig u = cfg.umap;
      u.seed = seed;
      return umap_embed(x, u).embedding;
    }
  }
  throw std::logic_error("unreachable reducer");
}

void run_cell(const ExperimentConfig& cfg, const SplitMask& split, const FeatureSet& features,
              bool first_seed, CellResult& cell) {
  if (features.error) {
    cell.error = "feature preparation failed: " + *features.error;
    return;
  }
  const GraphInput& graph = *features.graph;
  cell.timings.features = features.seconds;
  try {
    const TrainConfig tc = cfg.train.apply(cell.model, cfg.effective_seed(cell.seed));
    const ModelSpec spec = ModelSpec::make(cell.model, graph.features.cols(), graph.num_classes,
                                           cfg.hidden_dim, tc.dropout);
    cell.parameters = count_parameters(spec);
    auto start = Clock::now();
    TrainResult trained = train(spec, graph, split, tc);
    cell.timings.train = seconds_since(start);
    cell.epochs = trained.history.epochs.size();
    cell.best_epoch = trained.history.best_epoch;

    Rng unused(0);
    const DenseMatrix logits = forward(spec, trained.params, graph, false, unused);
    cell.classification = classification_report(logits, graph.labels, split.test);
    if (!first_seed) return;

    const auto test_rows = SplitMask::indices(split.test);
    const DenseMatrix test_logits = gather_rows(logits, test_rows);
    std::vector<int> labels;
    for (auto i : test_rows) {
      if (cfg.cluster_labels == ClusterLabeling::TrueLabels) {
        labels.push_back(graph.labels[i]);
      } else {
        auto r = logits.row(i);
        labels.push_back(static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()));
      }
    }
    for (Reducer r : cfg.reducers) {
      ClusterResult cr;
      cr.reducer = r;
      cr.labels = labels;
      try {
        start = Clock::now();
        cr.embedding = reduce(r, test_logits, cfg, cfg.effective_seed(cell.seed));
        cell.timings.reduce += seconds_since(start);
        start = Clock::now();
        cr.score = cluster_score(cr.embedding, labels, cfg.cluster_labels);
        cell.timings.score += seconds_since(start);
      } catch (const std::exception& e) {
        cr.error = e.what();
      }
      cell.clusters.push_back(std::move(cr));
    }
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
}

}  // namespace

RunReport run_matrix(const ExperimentConfig& cfg, const DatasetContainer& ds,
                     const SplitMask& split) {
  cfg.validate();
  const auto wall_start = Clock::now();
  RunReport report;
  report.config = cfg;
  report.class_names = ds.class_names;

  const DenseMatrix original = ds.features.to_dense();

  // Feature jobs: one per (mode, seed) for the autoencoder, one per mode otherwise.
  struct FeatureJob {
    InputMode mode;
    std::uint64_t seed;
  };
  std::vector<FeatureJob> jobs;
  for (InputMode m : cfg.modes) {
    if (m == InputMode::Autoencoder) {
      for (auto s : cfg.seeds) jobs.push_back({m, s});
    } else {
      jobs.push_back({m, 0});
    }
  }
  std::vector<FeatureSet> features(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    const auto start = Clock::now();
    try {
      DenseMatrix x;
      switch (jobs[j].mode) {
        case InputMode::Original: x = original; break;
        case InputMode::Pca: x = pca_transform(pca_fit(original, cfg.reduce_dim), original); break;
        case InputMode::Autoencoder: {
          const TrainConfig tc =
              cfg.autoencoder.apply(ae_default_config(original.cols()), cfg.effective_seed(jobs[j].seed));
          const AeTrainResult ae = ae_train(original, cfg.reduce_dim, split, tc, cfg.ae_activation);
          x = ae_encode(ae.model, original);
          break;
        }
      }
      features[j].graph = std::make_shared<const GraphInput>(GraphInput::build(ds, std::move(x)));
    } catch (const std::exception& e) {
      features[j].error = e.what();
    }
    features[j].seconds = seconds_since(start);
  });
  auto feature_for = [&](InputMode m, std::uint64_t seed) -> const FeatureSet& {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].mode == m && (m != InputMode::Autoencoder || jobs[j].seed == seed)) {
        return features[j];
      }
    }
    throw std::logic_error("missing feature job");
  };

  for (ModelKind k : cfg.models) {
    for (InputMode m : cfg.modes) {
      for (auto s : cfg.seeds) {
        CellResult c;
        c.model = k;
        c.mode = m;
        c.seed = s;
        report.cells.push_back(std::move(c));
      }
    }
  }
  parallel_for(report.cells.size(), cfg.workers, [&](std::size_t i) {
    CellResult& c = report.cells[i];
    run_cell(cfg, split, feature_for(c.mode, c.seed), c.seed == cfg.seeds.front(), c);
  });
  report.wall_seconds = seconds_since(wall_start);
  return report;
}

RunReport run_matrix(const ExperimentConfig& cfg) {
  auto [ds, split] = load_experiment_dataset(cfg);
  return run_matrix(cfg, ds, split);
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("SSLGRAPH_OUTPUT_ROOT"); env != nullptr && *env != '\0') {
    return env;
  }
  return "results";
}

}  // namespace sslgraph
