#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "sslgraph/experiment.hpp"
#include "support.hpp"

using namespace sslgraph;
using namespace sslgraph::testing;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Legend swatches are the 12×12 rects.
std::size_t legend_entries(const std::string& svg) { return count(svg, "width=\"12\" height=\"12\""); }

struct SmallGraph {
  DatasetContainer ds;
  SplitMask split;
  SmallGraph() {
    SyntheticCitationSpec spec;
    spec.nodes = 300;
    spec.words = 80;
    spec.classes = 3;
    spec.undirected_edges = 500;
    spec.topic_size = 10;
    spec.seed = 3;
    ds = generate_citation_graph(spec);
    split = make_split(ds, 10, 60, 100);
  }
};

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dataset = "small";
  cfg.models = {ModelKind::GCN};
  cfg.modes = {InputMode::Original};
  cfg.seeds = {1, 2};
  cfg.reducers = {Reducer::PCA, Reducer::UMAP};
  cfg.umap.epochs = 60;
  cfg.reduce_dim = 20;
  return cfg;
}

}  // namespace

TEST_CASE("mean (sample std) formatting") {
  CHECK(format_mean_std(std::vector<double>{80, 81, 82}) == "81.00 (1.00)");
  CHECK(format_mean_std(std::vector<double>{80}) == "80.00 (—)");
  // Hand computation: mean 78.4, sample variance 11.3.
  const std::vector<double> five{74, 80, 77, 83, 78};
  CHECK(format_mean_std(five) == "78.40 (3.36)");
}

TEST_CASE("aggregate: one table row per (model, input), runs counted") {
  std::vector<ClassificationRow> rows;
  for (const char* model : {"GCN", "MLP"})
    for (const char* input : {"Original", "PCA-100"})
      for (std::uint64_t s = 0; s < 3; ++s) {
        ClassificationRow r;
        r.model = model;
        r.input = input;
        r.seed = s;
        r.accuracy = 80.0 + static_cast<double>(s);
        r.parameters = std::string(input) == "Original" ? 23063 : 1735;
        rows.push_back(r);
      }
  rows.back().status = "error: diverged";
  const Summary s = aggregate(rows, {});
  CHECK(count(s.markdown, "| GCN") == 4);  // two classification rows, two parameter rows
  CHECK(count(s.markdown, "| MLP") == 4);
  CHECK(s.markdown.find("81.00 (1.00)") != std::string::npos);
  CHECK(s.markdown.find("80.50 (0.71)") != std::string::npos);  // failed seed left out
  CHECK(s.markdown.find("2/3") != std::string::npos);
  CHECK(s.markdown.find("13.29x") != std::string::npos);
  // summary.csv: header + 4 rows
  CHECK(count(s.csv, "\n") == 5);

  rows[1].parameters = 99;
  CHECK_THROWS_AS(aggregate(rows, {}), std::runtime_error);
}

TEST_CASE("CSV round trip and schema checks") {
  ClassificationRow c;
  c.model = "GAT";
  c.input = "AE-100";
  c.seed = 4;
  c.accuracy = 71.25;
  c.precision = 70.5;
  c.recall = 69.125;
  c.f1 = 69.0;
  c.parameters = 1781;
  c.best_epoch = 37;
  const std::vector<ClassificationRow> crow{c};
  const auto back = parse_classification_csv(classification_csv(crow));
  REQUIRE(back.size() == 1);
  CHECK(back[0].model == "GAT");
  CHECK(back[0].input == "AE-100");
  CHECK(back[0].seed == 4);
  CHECK(back[0].recall == 69.125);
  CHECK(back[0].parameters == 1781);
  CHECK(back[0].best_epoch == 37);
  CHECK(back[0].status == "ok");

  ClusteringRow k;
  k.model = "GCN";
  k.input = "Original";
  k.reducer = "t-SNE";
  k.labeling = "true";
  k.silhouette = -0.125;
  k.dunn = 0.0625;
  k.status = "error: bad, input";
  const std::vector<ClusteringRow> krow{k};
  const auto kb = parse_clustering_csv(clustering_csv(krow));
  REQUIRE(kb.size() == 1);
  CHECK(kb[0].reducer == "t-SNE");
  CHECK(kb[0].silhouette == -0.125);
  CHECK(kb[0].status.rfind("error", 0) == 0);

  CHECK_THROWS_AS(parse_classification_csv("model,input\nGCN,Original\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_clustering_csv(classification_csv(crow)), std::runtime_error);
}

TEST_CASE("scatter SVG: empty, corners, and a full test set") {
  const std::vector<std::string> two{"A", "B"};
  const std::string empty = render_scatter_svg(DenseMatrix(0, 2), std::vector<int>{}, two);
  CHECK(empty.rfind("<svg", 0) == 0);
  CHECK(count(empty, "<circle") == 0);
  CHECK(legend_entries(empty) == 2);
  CHECK(empty.find("</svg>") != std::string::npos);

  const DenseMatrix corners{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const std::string svg = render_scatter_svg(corners, std::vector<int>{0, 1, 0, 1}, two);
  CHECK(count(svg, "<circle") == 4);
  CHECK(legend_entries(svg) == 2);
  const std::regex coord("c([xy])=\"([0-9.\\-]+)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), coord); it != std::sregex_iterator(); ++it) {
    const double v = std::stod((*it)[2]);
    CHECK(v >= 0.0);
    CHECK(v <= ((*it)[1] == "x" ? 760.0 : 540.0));
  }

  Rng rng(1);
  const DenseMatrix big = random_matrix(1000, 2, rng, -30, 30);
  std::vector<int> labels(1000);
  for (std::size_t i = 0; i < 1000; ++i) labels[i] = static_cast<int>(i % 7);
  const std::vector<std::string> seven{"a", "b", "c", "d", "e", "f", "g"};
  const std::string full = render_scatter_svg(big, labels, seven);
  CHECK(count(full, "<circle") == 1000);
  CHECK(legend_entries(full) == 7);

  labels[3] = 7;
  CHECK_THROWS_AS(render_scatter_svg(big, labels, seven), std::invalid_argument);
  CHECK_THROWS_AS(render_scatter_svg(DenseMatrix(3, 3), std::vector<int>{0, 0, 0}, two),
                  std::invalid_argument);
  CHECK(render_scatter_svg(corners, std::vector<int>{0, 1, 0, 1}, std::vector<std::string>{"<&>", "b"})
            .find("&lt;&amp;&gt;") != std::string::npos);
}

TEST_CASE("embedding TSV round trip") {
  TempDir dir("emb");
  Rng rng(2);
  const DenseMatrix e = random_matrix(12, 2, rng);
  std::vector<int> labels(12);
  for (std::size_t i = 0; i < 12; ++i) labels[i] = static_cast<int>(i % 3);
  const std::vector<std::string> names{"x", "y", "z"};
  write_embedding_tsv(dir.path / "e.tsv", e, labels, names);
  const EmbeddingFile f = read_embedding_tsv(dir.path / "e.tsv");
  CHECK(f.labels == labels);
  CHECK(f.class_names == names);
  CHECK(max_abs_diff(f.embedding, e) <= 1e-9);
}

TEST_CASE("config file parsing") {
  TempDir dir("cfg");
  std::ofstream(dir.path / "exp.ini") << "[dataset]\nname = cora\ndir = data/cora\n\n"
                                         "[experiment]\nmodels = gcn, GAT\ninputs = Original, PCA-100\n"
                                         "reducers = umap\nseeds = 3,4\nseed_offset = 10\nworkers = 2\n"
                                         "output = out\ncluster_labels = predicted\n\n"
                                         "[train]\nlearning_rate = 0.05\nmax_epochs = 20\n\n"
                                         "[autoencoder]\nactivation = linear\nlearning_rate = 50\n\n"
                                         "[umap]\nn_neighbors = 10\n";
  const ExperimentConfig cfg = ExperimentConfig::load(dir.path / "exp.ini");
  CHECK(cfg.dataset == "cora");
  CHECK(cfg.dataset_dir == dir.path / "data/cora");
  CHECK(cfg.output_dir == dir.path / "out");
  CHECK(cfg.models == std::vector<ModelKind>{ModelKind::GCN, ModelKind::GAT});
  CHECK(cfg.modes == std::vector<InputMode>{InputMode::Original, InputMode::Pca});
  CHECK(cfg.reducers == std::vector<Reducer>{Reducer::UMAP});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.effective_seed(3) == 13);
  CHECK(cfg.workers == 2);
  CHECK(cfg.cluster_labels == ClusterLabeling::PredictedLabels);
  CHECK(cfg.umap.n_neighbors == 10);
  CHECK(cfg.ae_activation == AeActivation::Linear);

  const TrainConfig gcn = cfg.train.apply(ModelKind::GCN, 7);
  CHECK(gcn.learning_rate == 0.05);
  CHECK(gcn.max_epochs == 20);
  CHECK(gcn.seed == 7);
  CHECK(cfg.train.apply(ModelKind::GraphConv, 7).learning_rate == 1e-3);
  const TrainConfig ae = cfg.autoencoder.apply(ae_default_config(1433), 1);
  CHECK(ae.learning_rate == 50.0);
  CHECK(ae.weight_decay == 0.0);

  std::ofstream(dir.path / "bad.ini") << "[experiment]\nseeds = 1,1\n";
  CHECK_THROWS_AS(ExperimentConfig::load(dir.path / "bad.ini"), std::invalid_argument);
  std::ofstream(dir.path / "unknown.ini") << "[plots]\nx = 1\n";
  CHECK_THROWS_AS(ExperimentConfig::load(dir.path / "unknown.ini"), std::runtime_error);
  std::ofstream(dir.path / "mode.ini") << "[experiment]\ninputs = ICA\n";
  CHECK_THROWS(ExperimentConfig::load(dir.path / "mode.ini"));
}

TEST_CASE("input and reducer labels") {
  CHECK(input_label(InputMode::Pca, 100) == "PCA-100");
  CHECK(input_label(InputMode::Autoencoder, 100) == "AE-100");
  CHECK(input_label(InputMode::Original, 100) == "Original");
  CHECK(parse_input_mode("ae-100") == InputMode::Autoencoder);
  CHECK(std::string(to_string(Reducer::TSNE)) == "t-SNE");
  CHECK(parse_reducer("t-sne") == Reducer::TSNE);
}

TEST_CASE("output root follows the environment") {
  ::setenv("SSLGRAPH_OUTPUT_ROOT", "/tmp/elsewhere", 1);
  CHECK(default_output_root() == "/tmp/elsewhere");
  ::unsetenv("SSLGRAPH_OUTPUT_ROOT");
  CHECK(default_output_root() == "results");
}

TEST_CASE("run matrix: one model, one mode, two seeds") {
  SmallGraph g;
  const ExperimentConfig cfg = small_config();
  const RunReport report = run_matrix(cfg, g.ds, g.split);
  CHECK(report.ok());
  REQUIRE(report.cells.size() == 2);
  CHECK(report.cells[0].seed == 1);
  CHECK(report.cells[1].seed == 2);
  CHECK(report.cells[0].clusters.size() == 2);
  CHECK(report.cells[1].clusters.empty());
  for (const auto& c : report.cells[0].clusters) {
    CHECK(c.embedding.rows() == 100);
    CHECK(c.embedding.cols() == 2);
  }
  CHECK(report.cells[0].parameters == count_parameters(ModelSpec::make(ModelKind::GCN, 80, 3)));

  const auto rows = classification_rows(report);
  CHECK(rows.size() == 2);
  CHECK(clustering_rows(report).size() == 2);
  const Summary s = aggregate(rows, clustering_rows(report));
  CHECK(count(s.markdown, "| GCN") == 4);  // classification, two reducers, parameters
  CHECK(s.markdown.find("2/2") != std::string::npos);
}

TEST_CASE("run matrix outputs are byte-identical across invocations and worker counts") {
  SmallGraph g;
  ExperimentConfig cfg = small_config();
  cfg.models = {ModelKind::MLP, ModelKind::GCN};
  cfg.modes = {InputMode::Original, InputMode::Pca, InputMode::Autoencoder};
  cfg.autoencoder.max_epochs = 15;
  TempDir a("det_a"), b("det_b");
  write_report(run_matrix(cfg, g.ds, g.split), a.path);
  cfg.workers = 3;
  write_report(run_matrix(cfg, g.ds, g.split), b.path);
  std::size_t compared = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path)) {
    const auto name = e.path().filename();
    if (name == "timing.json") continue;
    CAPTURE(name.string());
    CHECK(slurp(e.path()) == slurp(b.path / name));
    ++compared;
  }
  // 6 cells × 2 CSVs, 6 × 2 reducers × (SVG + TSV), summary.md, summary.csv
  CHECK(compared == 12 + 24 + 2);
  CHECK(std::filesystem::exists(a.path / "GCN_PCA-20_umap.svg"));
  CHECK(aggregate_directory(a.path).csv == slurp(a.path / "summary.csv"));
}

TEST_CASE("run matrix records per-cell failures") {
  SmallGraph g;
  ExperimentConfig cfg = small_config();
  cfg.seeds = {1};
  cfg.modes = {InputMode::Original, InputMode::Pca};
  cfg.reduce_dim = 500;  // wider than the 80 input features
  const RunReport report = run_matrix(cfg, g.ds, g.split);
  REQUIRE(report.cells.size() == 2);
  CHECK_FALSE(report.cells[0].error.has_value());
  CHECK(report.cells[1].error.has_value());
  CHECK_FALSE(report.ok());
  const auto rows = classification_rows(report);
  CHECK(rows[1].status.rfind("error", 0) == 0);
}

TEST_CASE("GCN on PCA-100 features of a Cora-sized graph has 1,735 parameters") {
  const DatasetContainer ds = generate_citation_graph({});
  const SplitMask split = make_split(ds, 20, 500, 1000);
  ExperimentConfig cfg;
  cfg.dataset = "cora";
  cfg.models = {ModelKind::GCN};
  cfg.modes = {InputMode::Pca};
  cfg.seeds = {0};
  cfg.reducers = {Reducer::PCA};
  cfg.train.max_epochs = 5;
  const RunReport report = run_matrix(cfg, ds, split);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].parameters == 1735);
  CHECK(classification_rows(report)[0].input == "PCA-100");
}
