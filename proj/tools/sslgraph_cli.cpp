#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sslgraph/dataset.hpp"
#include "sslgraph/dimred.hpp"
#include "sslgraph/experiment.hpp"

using namespace sslgraph;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

struct RunArgs {
  std::string config;
  std::string output;
  std::size_t workers = 0;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> seed_offset;
  std::vector<std::string> models;
  std::vector<std::string> inputs;
  std::vector<std::string> reducers;
  std::optional<std::size_t> max_epochs;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = ExperimentConfig::load(a.config);
  if (a.workers > 0) cfg.workers = a.workers;
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  if (a.seed_offset) cfg.seed_offset = *a.seed_offset;
  if (!a.models.empty()) {
    cfg.models.clear();
    for (const auto& m : a.models) cfg.models.push_back(parse_model_kind(m));
  }
  if (!a.inputs.empty()) {
    cfg.modes.clear();
    for (const auto& m : a.inputs) cfg.modes.push_back(parse_input_mode(m));
  }
  if (!a.reducers.empty()) {
    cfg.reducers.clear();
    for (const auto& r : a.reducers) cfg.reducers.push_back(parse_reducer(r));
  }
  if (a.max_epochs) {
    cfg.train.max_epochs = a.max_epochs;
    cfg.autoencoder.max_epochs = a.max_epochs;
  }
  if (!a.output.empty()) cfg.output_dir = a.output;
  if (cfg.output_dir.empty()) cfg.output_dir = default_output_root();
  cfg.validate();

  const RunReport report = run_matrix(cfg);
  const auto dir = cfg.output_dir / cfg.dataset;
  write_report(report, dir);
  std::size_t failed = 0;
  for (const auto& c : report.cells) {
    if (c.error) {
      ++failed;
      std::cerr << "cell " << to_string(c.model) << " " << input_label(c.mode, cfg.reduce_dim)
                << " seed " << c.seed << " failed: " << *c.error << "\n";
    }
    for (const auto& k : c.clusters)
      if (k.error) std::cerr << "embedding " << to_string(k.reducer) << " failed: " << *k.error << "\n";
  }
  std::printf("%zu cells, %zu failed, %.1f s; results in %s\n", report.cells.size(), failed,
              report.wall_seconds, dir.string().c_str());
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised node classification and embedding benchmark"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the model x input x seed matrix from a config file");
  run_cmd->add_option("config", run.config, "INI experiment config")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", run.output, "Output root (default $SSLGRAPH_OUTPUT_ROOT or ./results)");
  run_cmd->add_option("-j,--workers", run.workers, "Worker threads");
  run_cmd->add_option("--seeds", run.seeds, "Seed list")->delimiter(',');
  run_cmd->add_option("--seed-offset", run.seed_offset, "Added to every seed");
  run_cmd->add_option("--models", run.models, "MLP,GCN,GAT,GraphConv")->delimiter(',');
  run_cmd->add_option("--inputs", run.inputs, "Original,PCA-100,AE-100")->delimiter(',');
  run_cmd->add_option("--reducers", run.reducers, "PCA,t-SNE,UMAP")->delimiter(',');
  run_cmd->add_option("--max-epochs", run.max_epochs, "Epoch cap for classifiers and autoencoders");

  std::string content, cites, name = "dataset", out_dir;
  std::size_t per_class = 20, n_val = 500, n_test = 1000;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert content/cites files to the TSV cache layout");
  ingest_cmd->add_option("--content", content)->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--cites", cites)->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--name", name);
  ingest_cmd->add_option("--out", out_dir, "Output directory")->required();
  ingest_cmd->add_option("--per-class", per_class);
  ingest_cmd->add_option("--val", n_val);
  ingest_cmd->add_option("--test", n_test);

  std::string sweep_dir, sweep_out;
  std::vector<std::size_t> sizes{25, 50, 100, 200, 400};
  std::uint64_t sweep_seed = 0;
  std::size_t sweep_epochs = 200;
  bool sweep_linear = false;
  auto* sweep_cmd = app.add_subcommand("sweep-bottleneck", "Validation MSE per autoencoder bottleneck size");
  sweep_cmd->add_option("--data", sweep_dir, "TSV dataset directory")->required()->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--sizes", sizes)->delimiter(',');
  sweep_cmd->add_option("--seed", sweep_seed);
  sweep_cmd->add_option("--max-epochs", sweep_epochs);
  sweep_cmd->add_flag("--linear", sweep_linear, "Linear encoder instead of ReLU");
  sweep_cmd->add_option("--out", sweep_out, "CSV output (stdout when omitted)");

  std::string plot_in, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Render an embedding TSV as an SVG scatter plot");
  plot_cmd->add_option("input", plot_in)->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("-o,--output", plot_out, "SVG path (input with .svg when omitted)");

  std::string report_dir;
  bool report_stdout = false;
  auto* report_cmd = app.add_subcommand("report", "Aggregate the per-cell CSVs of a results directory");
  report_cmd->add_option("dir", report_dir)->required()->check(CLI::ExistingDirectory);
  report_cmd->add_flag("--stdout", report_stdout, "Print the Markdown instead of writing summary files");

  SyntheticCitationSpec synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic citation graph as content/cites files");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--name", synth.name);
  synth_cmd->add_option("--nodes", synth.nodes);
  synth_cmd->add_option("--words", synth.words);
  synth_cmd->add_option("--classes", synth.classes);
  synth_cmd->add_option("--edges", synth.undirected_edges);
  synth_cmd->add_option("--homophily", synth.homophily);
  synth_cmd->add_option("--dangling", synth.dangling_citations);
  synth_cmd->add_option("--seed", synth.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);

    if (*ingest_cmd) {
      IngestOptions opts;
      opts.name = name;
      IngestStats stats;
      const DatasetContainer ds = ingest_citation_files(content, cites, opts, &stats);
      const SplitMask split = make_split(ds, per_class, n_val, n_test);
      write_dataset_tsv(ds, split, out_dir);
      std::printf("%s: %zu nodes, %zu features, %zu classes, %zu undirected edges, "
                  "%zu dangling citations skipped, %zu self-citations dropped\n",
                  ds.name.c_str(), ds.num_nodes(), ds.num_features(), ds.num_classes(),
                  stats.undirected_edges, stats.dangling_edges, stats.self_citations);
      return 0;
    }

    if (*sweep_cmd) {
      const auto [ds, split] = read_dataset_tsv(sweep_dir);
      const DenseMatrix x = ds.features.to_dense();
      TrainConfig cfg = ae_default_config(x.cols());
      cfg.seed = sweep_seed;
      cfg.max_epochs = sweep_epochs;
      const auto points = bottleneck_sweep(x, split, sizes, cfg,
                                           sweep_linear ? AeActivation::Linear : AeActivation::ReLU);
      std::string csv = "size,val_mse\n";
      for (const auto& p : points) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%.10f\n", p.size, p.val_mse);
        csv += buf;
      }
      if (sweep_out.empty()) {
        std::fputs(csv.c_str(), stdout);
      } else {
        write_file(sweep_out, csv);
      }
      if (auto knee = sweep_knee(points)) {
        std::fprintf(stderr, "knee (max second difference): %zu\n", *knee);
      }
      return 0;
    }

    if (*plot_cmd) {
      const EmbeddingFile f = read_embedding_tsv(plot_in);
      if (plot_out.empty()) plot_out = std::filesystem::path(plot_in).replace_extension(".svg").string();
      write_file(plot_out, render_scatter_svg(f.embedding, f.labels, f.class_names));
      return 0;
    }

    if (*report_cmd) {
      const Summary s = aggregate_directory(report_dir);
      if (report_stdout) {
        std::fputs(s.markdown.c_str(), stdout);
      } else {
        write_file(std::filesystem::path(report_dir) / "summary.md", s.markdown);
        write_file(std::filesystem::path(report_dir) / "summary.csv", s.csv);
      }
      return 0;
    }

    if (*synth_cmd) {
      std::vector<std::pair<std::string, std::string>> dangling;
      const DatasetContainer ds = generate_citation_graph(synth, &dangling);
      std::filesystem::create_directories(synth_out);
      const auto dir = std::filesystem::path(synth_out);
      write_citation_files(ds, dir / (synth.name + ".content"), dir / (synth.name + ".cites"), dangling);
      std::printf("%s: %zu nodes, %zu words, %zu classes, %zu undirected edges\n", ds.name.c_str(),
                  ds.num_nodes(), ds.num_features(), ds.num_classes(),
                  ds.edges.undirected_edge_count());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
