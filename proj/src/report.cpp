#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sslgraph/experiment.hpp"

namespace sslgraph {

namespace {

constexpr const char* kClassificationHeader =
    "model,input,seed,accuracy,precision,recall,f1,parameters,best_epoch,status";
constexpr const char* kClusteringHeader =
    "model,input,reducer,seed,labeling,silhouette,dunn,status";

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text, const char* header,
                                                std::size_t fields) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw std::runtime_error("csv: unexpected header '" + line + "', expected '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != fields) {
      throw std::runtime_error("csv: line " + std::to_string(lineno) + " has " +
                               std::to_string(f.size()) + " fields, expected " +
                               std::to_string(fields));
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

// Display width in code points, so "—" counts as one column.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 3);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = std::max(width[c], display_width(header[c]));
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], display_width(r[c]));
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out += " " + cells[c] + std::string(width[c] - display_width(cells[c]), ' ') + " |";
    }
    return out + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (std::size_t w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

struct Stats {
  double mean = 0.0;
  std::optional<double> sd;
};

Stats mean_std(std::span<const double> v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string classification_csv(std::span<const ClassificationRow> rows) {
  std::string out = std::string(kClassificationHeader) + "\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.input + "," + std::to_string(r.seed) + "," +
           fmt("%.6f", r.accuracy) + "," + fmt("%.6f", r.precision) + "," +
           fmt("%.6f", r.recall) + "," + fmt("%.6f", r.f1) + "," + std::to_string(r.parameters) +
           "," + std::to_string(r.best_epoch) + "," + sanitize(r.status) + "\n";
  }
  return out;
}

std::string clustering_csv(std::span<const ClusteringRow> rows) {
  std::string out = std::string(kClusteringHeader) + "\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.input + "," + r.reducer + "," + std::to_string(r.seed) + "," +
           r.labeling + "," + fmt("%.6f", r.silhouette) + "," + fmt("%.6f", r.dunn) + "," +
           sanitize(r.status) + "\n";
  }
  return out;
}

std::vector<ClassificationRow> parse_classification_csv(std::string_view text) {
  std::vector<ClassificationRow> out;
  for (const auto& f : parse_csv(text, kClassificationHeader, 10)) {
    ClassificationRow r;
    r.model = f[0];
    r.input = f[1];
    r.seed = std::stoull(f[2]);
    r.accuracy = to_double(f[3]);
    r.precision = to_double(f[4]);
    r.recall = to_double(f[5]);
    r.f1 = to_double(f[6]);
    r.parameters = std::stoull(f[7]);
    r.best_epoch = std::stoull(f[8]);
    r.status = f[9];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ClusteringRow> parse_clustering_csv(std::string_view text) {
  std::vector<ClusteringRow> out;
  for (const auto& f : parse_csv(text, kClusteringHeader, 8)) {
    ClusteringRow r;
    r.model = f[0];
    r.input = f[1];
    r.reducer = f[2];
    r.seed = std::stoull(f[3]);
    r.labeling = f[4];
    r.silhouette = to_double(f[5]);
    r.dunn = to_double(f[6]);
    r.status = f[7];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ClassificationRow> classification_rows(const RunReport& report) {
  std::vector<ClassificationRow> out;
  for (const auto& c : report.cells) {
    ClassificationRow r;
    r.model = std::string(to_string(c.model));
    r.input = input_label(c.mode, report.config.reduce_dim);
    r.seed = c.seed;
    r.parameters = c.parameters;
    if (c.error) {
      r.status = "error: " + *c.error;
    } else {
      r.accuracy = c.classification.accuracy;
      r.precision = c.classification.precision;
      r.recall = c.classification.recall;
      r.f1 = c.classification.f1;
      r.best_epoch = c.best_epoch;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ClusteringRow> clustering_rows(const RunReport& report) {
  std::vector<ClusteringRow> out;
  for (const auto& c : report.cells) {
    for (const auto& k : c.clusters) {
      ClusteringRow r;
      r.model = std::string(to_string(c.model));
      r.input = input_label(c.mode, report.config.reduce_dim);
      r.reducer = to_string(k.reducer);
      r.seed = c.seed;
      r.labeling = to_string(report.config.cluster_labels);
      if (k.error) {
        r.status = "error: " + *k.error;
      } else {
        r.silhouette = k.score.silhouette;
        r.dunn = k.score.dunn;
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string format_mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("format_mean_std: no values");
  const Stats s = mean_std(values);
  return fmt("%.2f", s.mean) + " (" + (s.sd ? fmt("%.2f", *s.sd) : std::string("—")) + ")";
}

Summary aggregate(std::span<const ClassificationRow> classification,
                  std::span<const ClusteringRow> clustering) {
  if (classification.empty()) throw std::invalid_argument("aggregate: no classification rows");
  using Key = std::pair<std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ClassificationRow*>> groups;
  for (const auto& r : classification) {
    Key k{r.model, r.input};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  std::vector<std::string> reducers;
  std::map<std::pair<Key, std::string>, const ClusteringRow*> clusters;
  for (const auto& r : clustering) {
    if (std::find(reducers.begin(), reducers.end(), r.reducer) == reducers.end()) {
      reducers.push_back(r.reducer);
    }
    clusters[{{r.model, r.input}, r.reducer}] = &r;
  }

  std::map<std::string, std::size_t> original_params;
  for (const auto& k : order) {
    const auto& rows = groups[k];
    for (const auto* r : rows) {
      if (r->parameters != rows.front()->parameters) {
        throw std::runtime_error("aggregate: parameter count differs across seeds for " +
                                 k.first + " / " + k.second);
      }
    }
    if (k.second == "Original") original_params[k.first] = rows.front()->parameters;
  }

  std::vector<std::vector<std::string>> cls_rows, clu_rows, par_rows;
  std::string csv = "model,input,runs,failed,accuracy_mean,accuracy_std,precision_mean,"
                    "precision_std,recall_mean,recall_std,f1_mean,f1_std,parameters";
  for (const auto& r : reducers) csv += ",silhouette_" + r + ",dunn_" + r;
  csv += "\n";

  for (const auto& k : order) {
    const auto& rows = groups[k];
    std::vector<double> acc, prec, rec, f1;
    std::size_t failed = 0;
    for (const auto* r : rows) {
      if (r->status != "ok") {
        ++failed;
        continue;
      }
      acc.push_back(r->accuracy);
      prec.push_back(r->precision);
      rec.push_back(r->recall);
      f1.push_back(r->f1);
    }
    const std::string runs = std::to_string(rows.size() - failed) + "/" +
                             std::to_string(rows.size());
    std::vector<std::string> line{k.first, k.second};
    csv += k.first + "," + k.second + "," + std::to_string(rows.size()) + "," +
           std::to_string(failed);
    for (const auto* v : {&acc, &prec, &rec, &f1}) {
      line.push_back(v->empty() ? "error" : format_mean_std(*v));
      const Stats s = mean_std(*v);
      csv += "," + (v->empty() ? std::string() : fmt("%.4f", s.mean)) + "," +
             (s.sd ? fmt("%.4f", *s.sd) : std::string());
    }
    line.push_back(runs);
    cls_rows.push_back(std::move(line));

    const std::size_t params = rows.front()->parameters;
    csv += "," + std::to_string(params);
    std::string factor = "—";
    if (auto it = original_params.find(k.first); it != original_params.end() && params > 0) {
      factor = fmt("%.2f", static_cast<double>(it->second) / static_cast<double>(params)) + "x";
    }
    par_rows.push_back({k.first, k.second, std::to_string(params), factor});

    for (const auto& red : reducers) {
      auto it = clusters.find({k, red});
      if (it == clusters.end()) {
        csv += ",,";
        continue;
      }
      const ClusteringRow& c = *it->second;
      if (c.status != "ok") {
        csv += ",,";
        clu_rows.push_back({k.first, k.second, red, "error", "error"});
        continue;
      }
      csv += "," + fmt("%.6f", c.silhouette) + "," + fmt("%.6f", c.dunn);
      clu_rows.push_back({k.first, k.second, red, fmt("%.3f", c.silhouette), fmt("%.3f", c.dunn)});
    }
    csv += "\n";
  }

  Summary s;
  s.csv = std::move(csv);
  s.markdown = "## Classification on the test mask, mean (std) over seeds\n\n";
  s.markdown += markdown_table({"Model", "Input", "Accuracy", "Precision", "Recall", "F1", "Runs"},
                               cls_rows);
  if (!clu_rows.empty()) {
    const std::string labeling = clustering.front().labeling;
    s.markdown += "\n## Cluster quality of 2-D output embeddings, first seed, " + labeling +
                  " labels\n\n";
    s.markdown += markdown_table({"Model", "Input", "Reducer", "Silhouette", "Dunn"}, clu_rows);
  }
  s.markdown += "\n## Learnable parameters\n\n";
  s.markdown += markdown_table({"Model", "Input", "Parameters", "Reduction"}, par_rows);
  return s;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto cls = classification_rows(report);
  const auto clu = clustering_rows(report);

  std::map<std::pair<std::string, std::string>, std::vector<ClassificationRow>> cls_groups;
  std::map<std::pair<std::string, std::string>, std::vector<ClusteringRow>> clu_groups;
  for (const auto& r : cls) cls_groups[{r.model, r.input}].push_back(r);
  for (const auto& r : clu) clu_groups[{r.model, r.input}].push_back(r);
  for (const auto& [k, rows] : cls_groups) {
    const std::string stem = k.first + "_" + k.second;
    write_text(dir / (stem + "_classification.csv"), classification_csv(rows));
    write_text(dir / (stem + "_clustering.csv"), clustering_csv(clu_groups[k]));
  }

  for (const auto& c : report.cells) {
    for (const auto& k : c.clusters) {
      if (k.error) continue;
      const std::string stem = std::string(to_string(c.model)) + "_" +
                               input_label(c.mode, report.config.reduce_dim) + "_" + slug(k.reducer);
      write_text(dir / (stem + ".svg"),
                 render_scatter_svg(k.embedding, k.labels, report.class_names));
      write_embedding_tsv(dir / (stem + ".tsv"), k.embedding, k.labels, report.class_names);
    }
  }

  const Summary summary = aggregate(cls, clu);
  write_text(dir / "summary.md", "# " + report.config.dataset + "\n\n" + summary.markdown);
  write_text(dir / "summary.csv", summary.csv);

  nlohmann::json timing;
  timing["dataset"] = report.config.dataset;
  timing["wall_seconds"] = report.wall_seconds;
  timing["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    timing["cells"].push_back({{"model", to_string(c.model)},
                               {"input", input_label(c.mode, report.config.reduce_dim)},
                               {"seed", c.seed},
                               {"epochs", c.epochs},
                               {"features_s", c.timings.features},
                               {"train_s", c.timings.train},
                               {"reduce_s", c.timings.reduce},
                               {"score_s", c.timings.score}});
  }
  write_text(dir / "timing.json", timing.dump(2) + "\n");
}

Summary aggregate_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<ClassificationRow> cls;
  std::vector<ClusteringRow> clu;
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (ends_with(name, "_classification.csv")) {
      auto rows = parse_classification_csv(read_text(f));
      cls.insert(cls.end(), rows.begin(), rows.end());
    } else if (ends_with(name, "_clustering.csv")) {
      auto rows = parse_clustering_csv(read_text(f));
      clu.insert(clu.end(), rows.begin(), rows.end());
    }
  }
  if (cls.empty()) throw std::runtime_error("report: no *_classification.csv files in " + dir.string());
  // Same (model, input) order as run_matrix writes them.
  auto rank = [](const std::string& model, const std::string& input) {
    int m = 99;
    try {
      m = static_cast<int>(parse_model_kind(model));
    } catch (const std::invalid_argument&) {
    }
    const int i = input == "Original" ? 0 : input.rfind("PCA", 0) == 0 ? 1 : input.rfind("AE", 0) == 0 ? 2 : 3;
    return std::pair(m, i);
  };
  std::stable_sort(cls.begin(), cls.end(), [&](const auto& a, const auto& b) {
    return rank(a.model, a.input) < rank(b.model, b.input);
  });
  std::stable_sort(clu.begin(), clu.end(), [&](const auto& a, const auto& b) {
    return rank(a.model, a.input) < rank(b.model, b.input);
  });
  return aggregate(cls, clu);
}

const std::vector<std::string>& default_palette() {
  static const std::vector<std::string> palette{"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                                                "#911eb4", "#17becf", "#f032e6"};
  return palette;
}

std::string render_scatter_svg(const DenseMatrix& embedding, std::span<const int> labels,
                               std::span<const std::string> class_names,
                               std::span<const std::string> palette) {
  if (embedding.cols() != 2 && !(embedding.rows() == 0 && embedding.cols() == 0)) {
    throw std::invalid_argument("render_scatter_svg: embedding must have 2 columns, got " +
                                embedding.shape());
  }
  if (labels.size() != embedding.rows()) {
    throw std::invalid_argument("render_scatter_svg: label count differs from point count");
  }
  if (class_names.size() > palette.size()) {
    throw std::invalid_argument("render_scatter_svg: " + std::to_string(class_names.size()) +
                                " classes exceed the " + std::to_string(palette.size()) +
                                "-colour palette");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= palette.size()) {
      throw std::invalid_argument("render_scatter_svg: label " + std::to_string(l) +
                                  " outside the palette");
    }
  }

  constexpr double width = 760, height = 540;
  constexpr double left = 50, top = 30, plot_w = 520, plot_h = 480;
  double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
  if (embedding.rows() > 0) {
    for (int a = 0; a < 2; ++a) {
      lo[a] = hi[a] = embedding(0, a);
      for (std::size_t i = 1; i < embedding.rows(); ++i) {
        lo[a] = std::min(lo[a], embedding(i, a));
        hi[a] = std::max(hi[a], embedding(i, a));
      }
      double span = hi[a] - lo[a];
      if (!(span > 0.0)) span = 1.0;
      lo[a] -= 0.05 * span;
      hi[a] += 0.05 * span;
    }
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"540\" "
         "viewBox=\"0 0 760 540\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt("%.0f", width) + "\" height=\"" +
         fmt("%.0f", height) + "\" fill=\"white\"/>\n";
  out += "<rect x=\"" + fmt("%.0f", left) + "\" y=\"" + fmt("%.0f", top) + "\" width=\"" +
         fmt("%.0f", plot_w) + "\" height=\"" + fmt("%.0f", plot_h) +
         "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  out += "<g class=\"points\">\n";
  for (std::size_t i = 0; i < embedding.rows(); ++i) {
    const double x = left + (embedding(i, 0) - lo[0]) / (hi[0] - lo[0]) * plot_w;
    const double y = top + plot_h - (embedding(i, 1) - lo[1]) / (hi[1] - lo[1]) * plot_h;
    out += "<circle cx=\"" + fmt("%.2f", x) + "\" cy=\"" + fmt("%.2f", y) + "\" r=\"2.5\" fill=\"" +
           palette[static_cast<std::size_t>(labels[i])] + "\" fill-opacity=\"0.8\"/>\n";
  }
  out += "</g>\n<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const double y = top + 10 + 22.0 * static_cast<double>(c);
    out += "<rect x=\"590\" y=\"" + fmt("%.0f", y) + "\" width=\"12\" height=\"12\" fill=\"" +
           palette[c] + "\"/><text x=\"608\" y=\"" + fmt("%.0f", y + 10) + "\">" +
           xml_escape(class_names[c]) + "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

void write_embedding_tsv(const std::filesystem::path& path, const DenseMatrix& embedding,
                         std::span<const int> labels, std::span<const std::string> class_names) {
  if (labels.size() != embedding.rows() || embedding.cols() != 2) {
    throw std::invalid_argument("write_embedding_tsv: need n×2 embedding and n labels");
  }
  std::string out = "#classes=";
  for (std::size_t c = 0; c < class_names.size(); ++c) out += (c ? "," : "") + class_names[c];
  out += "\nx\ty\tlabel\n";
  for (std::size_t i = 0; i < embedding.rows(); ++i) {
    out += fmt("%.10g", embedding(i, 0)) + "\t" + fmt("%.10g", embedding(i, 1)) + "\t" +
           std::to_string(labels[i]) + "\n";
  }
  write_text(path, out);
}

EmbeddingFile read_embedding_tsv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  EmbeddingFile f;
  if (!std::getline(in, line) || line.rfind("#classes=", 0) != 0) {
    throw std::runtime_error(path.string() + ": missing #classes= line");
  }
  std::istringstream names(line.substr(9));
  for (std::string n; std::getline(names, n, ',');) f.class_names.push_back(n);
  if (!std::getline(in, line) || line != "x\ty\tlabel") {
    throw std::runtime_error(path.string() + ": expected header 'x<TAB>y<TAB>label'");
  }
  std::vector<double> values;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double x = 0, y = 0;
    int label = 0;
    if (!(row >> x >> y >> label)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    values.push_back(x);
    values.push_back(y);
    f.labels.push_back(label);
  }
  f.embedding = DenseMatrix(f.labels.size(), 2, std::move(values));
  return f;
}

}  // namespace sslgraph
