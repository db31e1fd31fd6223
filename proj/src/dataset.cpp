#include "sslgraph/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace sslgraph {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

DenseMatrix BinaryFeatures::to_dense() const {
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (auto j : row(i)) m(i, j) = 1.0;
  return m;
}

DatasetContainer ingest_citation_files(const std::filesystem::path& content_path,
                                       const std::filesystem::path& cites_path,
                                       const IngestOptions& options, IngestStats* stats) {
  DatasetContainer ds;
  ds.name = options.name.empty() ? content_path.stem().string() : options.name;

  struct Row {
    std::string id;
    std::vector<std::uint32_t> words;
    std::string cls;
  };
  std::vector<Row> rows;
  std::unordered_map<std::string, std::size_t> index_of;
  std::optional<std::size_t> width;

  auto in = open_input(content_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() < 3) {
      throw std::runtime_error(content_path.string() + ":" + std::to_string(line_no) +
                               ": expected id, word flags and class");
    }
    const std::size_t d = tok.size() - 2;
    if (width && *width != d) {
      throw std::runtime_error(content_path.string() + ":" + std::to_string(line_no) + ": " +
                               std::to_string(d) + " word flags, expected " +
                               std::to_string(*width));
    }
    width = d;
    Row r;
    r.id = tok.front();
    r.cls = tok.back();
    for (std::size_t k = 0; k < d; ++k) {
      const std::string& f = tok[k + 1];
      if (f == "1" || f == "1.0") {
        r.words.push_back(static_cast<std::uint32_t>(k));
      } else if (f != "0" && f != "0.0") {
        throw std::runtime_error(content_path.string() + ":" + std::to_string(line_no) +
                                 ": word flag '" + f + "' is not binary");
      }
    }
    if (!index_of.emplace(r.id, rows.size()).second) {
      throw std::runtime_error(content_path.string() + ":" + std::to_string(line_no) +
                               ": duplicate node id '" + r.id + "'");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error(content_path.string() + ": no nodes");

  std::set<std::string> classes;
  for (const auto& r : rows) classes.insert(r.cls);
  if (options.known_classes) {
    const std::set<std::string> known(options.known_classes->begin(),
                                      options.known_classes->end());
    for (const auto& c : classes)
      if (!known.count(c)) throw std::runtime_error("unknown class string '" + c + "'");
    classes = known;
  }
  ds.class_names.assign(classes.begin(), classes.end());
  std::map<std::string, int> label_of;
  for (std::size_t c = 0; c < ds.class_names.size(); ++c)
    label_of[ds.class_names[c]] = static_cast<int>(c);

  ds.features.rows = rows.size();
  ds.features.cols = *width;
  for (const auto& r : rows) {
    ds.node_ids.push_back(r.id);
    ds.labels.push_back(label_of.at(r.cls));
    ds.features.indices.insert(ds.features.indices.end(), r.words.begin(), r.words.end());
    ds.features.offsets.push_back(ds.features.indices.size());
  }

  IngestStats local;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto cin = open_input(cites_path);
  line_no = 0;
  while (std::getline(cin, line)) {
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) {
      throw std::runtime_error(cites_path.string() + ":" + std::to_string(line_no) +
                               ": expected '<cited> <citing>'");
    }
    ++local.cite_lines;
    auto a = index_of.find(tok[0]);
    auto b = index_of.find(tok[1]);
    if (a == index_of.end() || b == index_of.end()) {
      ++local.dangling_edges;
      continue;
    }
    if (a->second == b->second) {
      ++local.self_citations;
      continue;
    }
    edges.emplace_back(a->second, b->second);
  }
  ds.edges = SparseAdjacency::from_edges(rows.size(), edges);
  local.undirected_edges = ds.edges.undirected_edge_count();
  if (stats != nullptr) *stats = local;
  return ds;
}

void write_citation_files(const DatasetContainer& ds, const std::filesystem::path& content_path,
                          const std::filesystem::path& cites_path,
                          std::span<const std::pair<std::string, std::string>> extra_cites) {
  auto out = open_output(content_path);
  std::string flags;
  for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
    flags.assign(2 * ds.num_features(), '\t');
    for (std::size_t k = 0; k < ds.num_features(); ++k) flags[2 * k] = '0';
    for (auto w : ds.features.row(i)) flags[2 * w] = '1';
    out << ds.node_ids[i] << '\t' << flags << ds.class_names[ds.labels[i]] << '\n';
  }
  auto cites = open_output(cites_path);
  for (std::size_t i = 0; i < ds.num_nodes(); ++i)
    for (auto j : ds.edges.neighbors(i))
      if (j > i) cites << ds.node_ids[i] << '\t' << ds.node_ids[j] << '\n';
  for (const auto& [a, b] : extra_cites) cites << a << '\t' << b << '\n';
}

std::size_t SplitMask::count(const Mask& m) {
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

std::vector<std::size_t> SplitMask::indices(const Mask& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) out.push_back(i);
  return out;
}

SplitMask make_split(const DatasetContainer& ds, std::size_t per_class, std::size_t n_val,
                     std::size_t n_test) {
  const std::size_t n = ds.num_nodes();
  const std::size_t k = ds.num_classes();
  if (per_class * k + n_val + n_test > n) {
    throw std::invalid_argument("make_split: " + std::to_string(per_class) + "x" +
                                std::to_string(k) + " train + " + std::to_string(n_val) +
                                " val + " + std::to_string(n_test) + " test exceeds " +
                                std::to_string(n) + " nodes");
  }
  SplitMask s{Mask(n, 0), Mask(n, 0), Mask(n, 0)};
  std::vector<std::size_t> taken(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    if (taken[c] < per_class) {
      ++taken[c];
      s.train[i] = 1;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (taken[c] < per_class) {
      throw std::invalid_argument("make_split: class '" + ds.class_names[c] + "' has only " +
                                  std::to_string(taken[c]) + " nodes, need " +
                                  std::to_string(per_class));
    }
  }
  std::size_t need = n_test;
  for (std::size_t i = n; i-- > 0 && need > 0;) {
    if (!s.train[i]) {
      s.test[i] = 1;
      --need;
    }
  }
  need = n_val;
  for (std::size_t i = 0; i < n && need > 0; ++i) {
    if (!s.train[i] && !s.test[i]) {
      s.val[i] = 1;
      --need;
    }
  }
  return s;
}

SparseAdjacency normalize_adjacency(const SparseAdjacency& edges) {
  if (!edges.is_symmetric_pattern()) {
    throw std::invalid_argument("normalize_adjacency: adjacency pattern is not symmetric");
  }
  const std::size_t n = edges.n();
  std::vector<double> deg1(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t deg = 0;
    for (auto j : edges.neighbors(i))
      if (j != i) ++deg;
    deg1[i] = static_cast<double>(deg + 1);
  }
  SparseAdjacency loops = edges.with_self_loops();
  std::vector<double> values(loops.nnz());
  const auto offsets = loops.row_offsets();
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = loops.neighbors(i);
    for (std::size_t p = 0; p < nb.size(); ++p)
      values[offsets[i] + p] = 1.0 / std::sqrt(deg1[i] * deg1[nb[p]]);
  }
  return loops.with_values(std::move(values));
}

void write_dataset_tsv(const DatasetContainer& ds, const SplitMask& split,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto nodes = open_output(dir / "nodes.tsv");
  nodes << "#name=" << ds.name << "\tnum_features=" << ds.num_features() << "\tclasses=";
  for (std::size_t c = 0; c < ds.class_names.size(); ++c)
    nodes << (c ? "," : "") << ds.class_names[c];
  nodes << '\n' << "index\tid\tlabel\tclass\twords\n";
  for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
    nodes << i << '\t' << ds.node_ids[i] << '\t' << ds.labels[i] << '\t'
          << ds.class_names[ds.labels[i]] << '\t';
    bool first = true;
    for (auto w : ds.features.row(i)) {
      nodes << (first ? "" : " ") << w;
      first = false;
    }
    nodes << '\n';
  }
  auto edges = open_output(dir / "edges.tsv");
  edges << "source\ttarget\n";
  for (std::size_t i = 0; i < ds.num_nodes(); ++i)
    for (auto j : ds.edges.neighbors(i))
      if (j > i) edges << i << '\t' << j << '\n';
  auto splits = open_output(dir / "splits.tsv");
  splits << "index\tsplit\n";
  for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
    const char* tag = split.train.at(i) ? "train"
                      : split.val.at(i) ? "val"
                      : split.test.at(i) ? "test"
                                         : "none";
    splits << i << '\t' << tag << '\n';
  }
}

std::pair<DatasetContainer, SplitMask> read_dataset_tsv(const std::filesystem::path& dir) {
  DatasetContainer ds;
  auto nodes = open_input(dir / "nodes.tsv");
  std::string line;
  if (!std::getline(nodes, line) || line.rfind("#name=", 0) != 0) {
    throw std::runtime_error((dir / "nodes.tsv").string() + ": missing metadata line");
  }
  for (const auto& field : split_tabs(line.substr(1))) {
    const auto eq = field.find('=');
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "name") {
      ds.name = value;
    } else if (key == "num_features") {
      ds.features.cols = std::stoul(value);
    } else if (key == "classes") {
      std::stringstream ss(value);
      std::string c;
      while (std::getline(ss, c, ',')) ds.class_names.push_back(c);
    }
  }
  std::getline(nodes, line);  // column header
  while (std::getline(nodes, line)) {
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 5) throw std::runtime_error("nodes.tsv: malformed row '" + line + "'");
    if (std::stoul(cols[0]) != ds.node_ids.size()) {
      throw std::runtime_error("nodes.tsv: rows out of order at index " + cols[0]);
    }
    ds.node_ids.push_back(cols[1]);
    const int label = std::stoi(cols[2]);
    if (label < 0 || static_cast<std::size_t>(label) >= ds.class_names.size()) {
      throw std::runtime_error("nodes.tsv: label out of range at index " + cols[0]);
    }
    ds.labels.push_back(label);
    for (const auto& w : split_ws(cols[4])) {
      const auto word = std::stoul(w);
      if (word >= ds.features.cols) throw std::runtime_error("nodes.tsv: word index out of range");
      ds.features.indices.push_back(static_cast<std::uint32_t>(word));
    }
    ds.features.offsets.push_back(ds.features.indices.size());
  }
  ds.features.rows = ds.node_ids.size();

  const std::size_t n = ds.node_ids.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto ein = open_input(dir / "edges.tsv");
  std::getline(ein, line);
  while (std::getline(ein, line)) {
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw std::runtime_error("edges.tsv: malformed row '" + line + "'");
    edges.emplace_back(std::stoul(cols[0]), std::stoul(cols[1]));
  }
  ds.edges = SparseAdjacency::from_edges(n, edges);

  SplitMask split{Mask(n, 0), Mask(n, 0), Mask(n, 0)};
  auto sin = open_input(dir / "splits.tsv");
  std::getline(sin, line);
  while (std::getline(sin, line)) {
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw std::runtime_error("splits.tsv: malformed row '" + line + "'");
    const std::size_t i = std::stoul(cols[0]);
    if (i >= n) throw std::runtime_error("splits.tsv: index out of range");
    if (cols[1] == "train") split.train[i] = 1;
    else if (cols[1] == "val") split.val[i] = 1;
    else if (cols[1] == "test") split.test[i] = 1;
    else if (cols[1] != "none") throw std::runtime_error("splits.tsv: unknown split " + cols[1]);
  }
  return {std::move(ds), std::move(split)};
}

DatasetContainer generate_citation_graph(
    const SyntheticCitationSpec& spec, std::vector<std::pair<std::string, std::string>>* dangling) {
  if (spec.classes < 2 || spec.nodes < spec.classes || spec.words < spec.topic_size ||
      spec.topic_size == 0) {
    throw std::invalid_argument("generate_citation_graph: inconsistent sizes");
  }
  Rng rng(spec.seed);
  Rng topic_rng = rng.split(1);
  Rng node_rng = rng.split(2);
  Rng edge_rng = rng.split(3);

  DatasetContainer ds;
  ds.name = spec.name;
  for (std::size_t c = 0; c < spec.classes; ++c)
    ds.class_names.push_back("Topic_" + std::string(1, static_cast<char>('A' + c % 26)) +
                             (c >= 26 ? std::to_string(c / 26) : ""));

  // Imbalanced class sizes: weight ∝ 1/(1 + c/2).
  std::vector<double> cum;
  double total = 0.0;
  for (std::size_t c = 0; c < spec.classes; ++c) cum.push_back(total += 1.0 / (1.0 + 0.5 * c));

  std::vector<std::vector<std::uint32_t>> topics(spec.classes);
  std::vector<std::uint32_t> vocab(spec.words);
  for (std::size_t w = 0; w < spec.words; ++w) vocab[w] = static_cast<std::uint32_t>(w);
  for (auto& t : topics) {
    topic_rng.shuffle(std::span<std::uint32_t>(vocab));
    t.assign(vocab.begin(), vocab.begin() + static_cast<std::ptrdiff_t>(spec.topic_size));
  }

  std::vector<std::vector<std::size_t>> members(spec.classes);
  ds.features.rows = spec.nodes;
  ds.features.cols = spec.words;
  for (std::size_t i = 0; i < spec.nodes; ++i) {
    const double u = node_rng.uniform() * total;
    std::size_t c = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    c = std::min(c, spec.classes - 1);
    ds.labels.push_back(static_cast<int>(c));
    members[c].push_back(i);
    ds.node_ids.push_back(std::to_string(100000 + mix64(spec.seed * 7919 + i) % 900000) + "_" +
                          std::to_string(i));
    const double jitter = node_rng.normal() * 0.25 * spec.words_per_node;
    const auto count = static_cast<std::size_t>(
        std::clamp(std::round(spec.words_per_node + jitter), 1.0, static_cast<double>(spec.words)));
    std::set<std::uint32_t> words;
    while (words.size() < count) {
      if (node_rng.bernoulli(spec.topic_affinity)) {
        words.insert(topics[c][node_rng.uniform_index(spec.topic_size)]);
      } else {
        words.insert(static_cast<std::uint32_t>(node_rng.uniform_index(spec.words)));
      }
    }
    ds.features.indices.insert(ds.features.indices.end(), words.begin(), words.end());
    ds.features.offsets.push_back(ds.features.indices.size());
  }
  for (std::size_t c = 0; c < spec.classes; ++c) {
    if (members[c].empty()) throw std::runtime_error("generate_citation_graph: empty class");
  }

  const std::size_t max_edges = spec.nodes * (spec.nodes - 1) / 2;
  const std::size_t target = std::min(spec.undirected_edges, max_edges);
  std::set<std::pair<std::size_t, std::size_t>> edge_set;
  while (edge_set.size() < target) {
    const std::size_t a = edge_rng.uniform_index(spec.nodes);
    const auto ca = static_cast<std::size_t>(ds.labels[a]);
    std::size_t b;
    if (edge_rng.bernoulli(spec.homophily)) {
      b = members[ca][edge_rng.uniform_index(members[ca].size())];
    } else {
      b = edge_rng.uniform_index(spec.nodes);
    }
    if (a == b) continue;
    edge_set.emplace(std::min(a, b), std::max(a, b));
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges(edge_set.begin(), edge_set.end());
  ds.edges = SparseAdjacency::from_edges(spec.nodes, edges);

  if (dangling != nullptr) {
    dangling->clear();
    for (std::size_t k = 0; k < spec.dangling_citations; ++k) {
      dangling->emplace_back("missing_" + std::to_string(k),
                             ds.node_ids[edge_rng.uniform_index(spec.nodes)]);
    }
  }
  return ds;
}

}  // namespace sslgraph
