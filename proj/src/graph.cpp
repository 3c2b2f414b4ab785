#include "egae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "egae/log.hpp"
#include "egae/rng.hpp"

namespace egae {

namespace {

void validate_adjacency(const CsrMatrix& adj) {
  for (int i = 0; i < adj.rows; ++i) {
    for (std::int64_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const auto j = adj.col_idx[static_cast<std::size_t>(k)];
      const auto v = adj.values[static_cast<std::size_t>(k)];
      if (i == j) throw std::invalid_argument("graph: self-loop stored in adjacency");
      if (v < 0.0) throw std::invalid_argument("graph: negative edge weight");
      if (v != adj.at(j, i)) throw std::invalid_argument("graph: adjacency not symmetric");
    }
  }
}

}  // namespace

SparseGraph SparseGraph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::tuple<int, int, double>> weighted;
  weighted.reserve(edges.size());
  for (const auto& [i, j] : edges) weighted.emplace_back(i, j, 1.0);
  return from_weighted_edges(n, weighted);
}

SparseGraph SparseGraph::from_weighted_edges(
    int n, const std::vector<std::tuple<int, int, double>>& edges) {
  std::vector<std::tuple<int, int, double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const auto& [i, j, v] : edges) {
    if (i == j) continue;
    triplets.emplace_back(i, j, v);
    triplets.emplace_back(j, i, v);
  }
  SparseGraph g;
  g.n = n;
  g.adj = CsrMatrix::from_triplets(n, n, std::move(triplets));
  validate_adjacency(g.adj);
  return g;
}

RenormalizedLaplacian renormalized_laplacian(const SparseGraph& g) {
  if (!g.adj.is_symmetric()) throw std::invalid_argument("renormalized_laplacian: input not symmetric");
  const int n = g.n;
  Vector dhat(n);
  for (int i = 0; i < n; ++i) {
    double s = 1.0;  // self-loop from I + A
    for (std::int64_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k)
      s += g.adj.values[static_cast<std::size_t>(k)];
    dhat[i] = s;
  }

  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.assign(n + 1, 0);
  m.col_idx.reserve(static_cast<std::size_t>(g.adj.nnz() + n));
  m.values.reserve(static_cast<std::size_t>(g.adj.nnz() + n));
  for (int i = 0; i < n; ++i) {
    bool diag_emitted = false;
    for (std::int64_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
      const int j = g.adj.col_idx[static_cast<std::size_t>(k)];
      if (!diag_emitted && j > i) {
        m.col_idx.push_back(i);
        m.values.push_back(1.0 / dhat[i]);
        diag_emitted = true;
      }
      m.col_idx.push_back(j);
      m.values.push_back(g.adj.values[static_cast<std::size_t>(k)] /
                         std::sqrt(dhat[i] * dhat[j]));
    }
    if (!diag_emitted) {
      m.col_idx.push_back(i);
      m.values.push_back(1.0 / dhat[i]);
    }
    m.row_ptr[i + 1] = static_cast<std::int64_t>(m.col_idx.size());
  }
  return RenormalizedLaplacian{std::move(m)};
}

CsrMatrix unnormalized_laplacian(const SparseGraph& g) {
  if (!g.adj.is_symmetric()) throw std::invalid_argument("unnormalized_laplacian: input not symmetric");
  std::vector<std::tuple<int, int, double>> triplets;
  triplets.reserve(static_cast<std::size_t>(g.adj.nnz() + g.n));
  for (int i = 0; i < g.n; ++i) {
    double deg = 0.0;
    for (std::int64_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k) {
      const int j = g.adj.col_idx[static_cast<std::size_t>(k)];
      const double v = g.adj.values[static_cast<std::size_t>(k)];
      deg += v;
      triplets.emplace_back(i, j, -v);
    }
    if (deg != 0.0) triplets.emplace_back(i, i, deg);
  }
  return CsrMatrix::from_triplets(g.n, g.n, std::move(triplets));
}

namespace {

[[noreturn]] void parse_error(const std::string& file, int line, const std::string& msg) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding spaces
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& file, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) parse_error(file, line, "malformed number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_error(file, line, "malformed number '" + s + "'");
  } catch (const std::out_of_range&) {
    parse_error(file, line, "number out of range '" + s + "'");
  }
}

struct NodeTable {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> ids;

  int intern(const std::string& id) {
    const auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  }
};

struct LabelTable {
  std::unordered_map<std::string, int> index;
  int count = 0;

  int intern(const std::string& label) {
    const auto [it, inserted] = index.emplace(label, count);
    if (inserted) ++count;
    return it->second;
  }
};

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

std::vector<std::tuple<int, int, double>> read_edges(
    const std::string& path, bool csv, NodeTable& nodes, const LoadOptions& opts) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::tuple<int, int, double>> edges;
  std::string line;
  int lineno = 0;
  int skipped = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv && lineno == 1) continue;  // header
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string a, b;
    double w = 1.0;
    if (csv) {
      const auto fields = split_csv(line);
      if (fields.size() != 2 && fields.size() != 3)
        parse_error(path, lineno, "expected 2 or 3 fields");
      a = fields[0];
      b = fields[1];
      if (fields.size() == 3) w = parse_double(fields[2], path, lineno);
    } else {
      std::stringstream ss(line);
      if (!(ss >> a >> b)) parse_error(path, lineno, "expected two node ids");
      std::string extra;
      if (ss >> extra) parse_error(path, lineno, "unexpected trailing field '" + extra + "'");
    }
    int ia, ib;
    const auto ita = nodes.index.find(a);
    const auto itb = nodes.index.find(b);
    if (ita == nodes.index.end() || itb == nodes.index.end()) {
      const std::string& bad = (ita == nodes.index.end()) ? a : b;
      if (opts.skip_dangling) {
        ++skipped;
        continue;
      }
      parse_error(path, lineno, "edge references unknown node id '" + bad + "'");
    }
    ia = ita->second;
    ib = itb->second;
    if (!opts.keep_edge_weights) w = 1.0;
    if (w < 0.0) parse_error(path, lineno, "negative edge weight");
    edges.emplace_back(ia, ib, w);
  }
  if (skipped > 0)
    EGAE_LOG_INFO("%s: skipped %d dangling edges", path.c_str(), skipped);
  return edges;
}

Dataset load_content_cites(const std::string& node_file, const std::string& edge_file,
                           const LoadOptions& opts) {
  std::ifstream in = open_or_throw(node_file);
  NodeTable nodes;
  LabelTable labels;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_labels;
  int d = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.size() < 3) parse_error(node_file, lineno, "expected id, features, label");
    if (d < 0) d = static_cast<int>(tokens.size()) - 2;
    if (static_cast<int>(tokens.size()) != d + 2)
      parse_error(node_file, lineno, "inconsistent feature count");
    std::vector<double> feats(d);
    for (int j = 0; j < d; ++j) feats[j] = parse_double(tokens[j + 1], node_file, lineno);

    const int idx = nodes.intern(tokens[0]);
    const int lbl = labels.intern(tokens.back());
    if (idx == static_cast<int>(rows.size())) {
      rows.push_back(std::move(feats));
      row_labels.push_back(lbl);
    } else {
      // duplicate id: last occurrence wins
      rows[idx] = std::move(feats);
      row_labels[idx] = lbl;
    }
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw std::runtime_error(node_file + ": no nodes");

  Dataset ds;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
  ds.labels = std::move(row_labels);
  ds.num_classes = labels.count;
  ds.node_ids = std::move(nodes.ids);

  auto edges = read_edges(edge_file, /*csv=*/false, nodes, opts);
  ds.graph = SparseGraph::from_weighted_edges(n, edges);
  return ds;
}

Dataset load_csv_triple(const std::string& node_file, const std::string& edge_file,
                        const LoadOptions& opts) {
  std::ifstream in = open_or_throw(node_file);
  NodeTable nodes;
  std::vector<std::vector<double>> rows;
  int d = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) continue;  // header
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2) parse_error(node_file, lineno, "expected id and features");
    if (d < 0) d = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) != d + 1)
      parse_error(node_file, lineno, "inconsistent feature count");
    std::vector<double> feats(d);
    for (int j = 0; j < d; ++j) feats[j] = parse_double(fields[j + 1], node_file, lineno);
    const int idx = nodes.intern(fields[0]);
    if (idx == static_cast<int>(rows.size()))
      rows.push_back(std::move(feats));
    else
      rows[idx] = std::move(feats);
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw std::runtime_error(node_file + ": no nodes");

  Dataset ds;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
  ds.node_ids = nodes.ids;

  // labels.csv sits next to nodes.csv
  const auto label_path =
      (std::filesystem::path(node_file).parent_path() / "labels.csv").string();
  std::ifstream lin = open_or_throw(label_path);
  LabelTable labels;
  ds.labels.assign(n, -1);
  lineno = 0;
  while (std::getline(lin, line)) {
    ++lineno;
    if (lineno == 1) continue;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2) parse_error(label_path, lineno, "expected id,label");
    const auto it = nodes.index.find(fields[0]);
    if (it == nodes.index.end())
      parse_error(label_path, lineno, "label references unknown node id '" + fields[0] + "'");
    ds.labels[it->second] = labels.intern(fields[1]);
  }
  for (int i = 0; i < n; ++i)
    if (ds.labels[i] < 0)
      throw std::runtime_error(label_path + ": missing label for node id '" + ds.node_ids[i] + "'");
  ds.num_classes = labels.count;

  auto edges = read_edges(edge_file, /*csv=*/true, nodes, opts);
  ds.graph = SparseGraph::from_weighted_edges(n, edges);
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& node_file, const std::string& edge_file,
                     DatasetFormat format, const LoadOptions& opts) {
  Dataset ds = (format == DatasetFormat::kContentCites)
                   ? load_content_cites(node_file, edge_file, opts)
                   : load_csv_triple(node_file, edge_file, opts);
  if (!ds.features.allFinite())
    throw std::runtime_error(node_file + ": non-finite feature value");
  EGAE_LOG_INFO("loaded dataset: n=%d d=%ld edges=%lld classes=%d", ds.graph.n,
                static_cast<long>(ds.features.cols()),
                static_cast<long long>(ds.graph.edge_count()), ds.num_classes);
  return ds;
}

Dataset gen_two_rings(int n_per_ring, double p_intra, std::uint64_t seed) {
  if (n_per_ring < 2) throw std::invalid_argument("gen_two_rings: n_per_ring must be >= 2");
  if (p_intra <= 0.0 || p_intra > 1.0)
    throw std::invalid_argument("gen_two_rings: p_intra must be in (0, 1]");

  const int n = 2 * n_per_ring;
  Rng rng(mix_seed(seed, 0));
  Dataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  ds.node_ids.resize(n);
  const double radii[2] = {1.0, 2.0};
  for (int ring = 0; ring < 2; ++ring) {
    for (int k = 0; k < n_per_ring; ++k) {
      const int i = ring * n_per_ring + k;
      const double angle = rng.uniform(0.0, 6.283185307179586476925286766559);
      const double r = radii[ring] + 0.05 * rng.normal();
      ds.features(i, 0) = r * std::cos(angle);
      ds.features(i, 1) = r * std::sin(angle);
      ds.labels[i] = ring;
      ds.node_ids[i] = std::to_string(i);
    }
  }
  ds.num_classes = 2;

  Rng edge_rng(mix_seed(seed, 1));
  std::vector<std::pair<int, int>> edges;
  for (int ring = 0; ring < 2; ++ring) {
    const int base = ring * n_per_ring;
    for (int a = 0; a < n_per_ring; ++a)
      for (int b = a + 1; b < n_per_ring; ++b)
        if (edge_rng.uniform() < p_intra) edges.emplace_back(base + a, base + b);
  }
  ds.graph = SparseGraph::from_edges(n, edges);
  return ds;
}

void write_csv_triple(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto atomic_write = [&](const std::string& name, auto&& body) {
    const fs::path final_path = fs::path(dir) / name;
    const fs::path tmp_path = final_path.string() + ".tmp";
    {
      std::ofstream out(tmp_path);
      if (!out) throw std::runtime_error("cannot write " + tmp_path.string());
      body(out);
    }
    fs::rename(tmp_path, final_path);
  };

  atomic_write("nodes.csv", [&](std::ofstream& out) {
    out << "id";
    for (int j = 0; j < ds.features.cols(); ++j) out << ",f" << j;
    out << "\n";
    char buf[40];
    for (int i = 0; i < ds.graph.n; ++i) {
      out << ds.node_ids[i];
      for (int j = 0; j < ds.features.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, j));
        out << ',' << buf;
      }
      out << "\n";
    }
  });
  atomic_write("edges.csv", [&](std::ofstream& out) {
    out << "src,dst\n";
    for (int i = 0; i < ds.graph.n; ++i)
      for (std::int64_t k = ds.graph.adj.row_ptr[i]; k < ds.graph.adj.row_ptr[i + 1]; ++k) {
        const int j = ds.graph.adj.col_idx[static_cast<std::size_t>(k)];
        if (i < j) out << ds.node_ids[i] << ',' << ds.node_ids[j] << "\n";
      }
  });
  atomic_write("labels.csv", [&](std::ofstream& out) {
    out << "id,label\n";
    for (int i = 0; i < ds.graph.n; ++i)
      out << ds.node_ids[i] << ',' << ds.labels[i] << "\n";
  });
}

}  // namespace egae
