#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "egae/errors.hpp"
#include "egae/graph.hpp"
#include "egae/log.hpp"
#include "egae/metrics.hpp"
#include "egae/model.hpp"
#include "egae/rng.hpp"
#include "egae/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct DatasetArgs {
  std::string data_dir;
  std::string format;  // "", "content-cites", "csv-triple"
  bool skip_dangling = false;
  bool keep_edge_weights = false;
};

void add_dataset_flags(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--data", args.data_dir, "Dataset directory")->required();
  cmd->add_option("--format", args.format, "Dataset format")
      ->check(CLI::IsMember({"content-cites", "csv-triple"}));
  cmd->add_flag("--skip-dangling", args.skip_dangling,
                "Skip edges referencing unknown node ids instead of failing");
  cmd->add_flag("--keep-edge-weights", args.keep_edge_weights,
                "Keep edge weights instead of binarizing");
}

egae::Dataset load_from_args(const DatasetArgs& args) {
  std::string format = args.format;
  std::string node_file, edge_file;
  const fs::path dir(args.data_dir);
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + args.data_dir);

  if (format.empty()) format = fs::exists(dir / "nodes.csv") ? "csv-triple" : "content-cites";
  if (format == "csv-triple") {
    node_file = (dir / "nodes.csv").string();
    edge_file = (dir / "edges.csv").string();
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension().string();
      if (ext == ".content") node_file = entry.path().string();
      if (ext == ".cites") edge_file = entry.path().string();
    }
    if (node_file.empty() || edge_file.empty())
      throw std::runtime_error("no .content/.cites pair found in " + args.data_dir);
  }
  egae::LoadOptions opts;
  opts.skip_dangling = args.skip_dangling;
  opts.keep_edge_weights = args.keep_edge_weights;
  const auto fmt = format == "csv-triple" ? egae::DatasetFormat::kCsvTriple
                                          : egae::DatasetFormat::kContentCites;
  return egae::load_dataset(node_file, edge_file, fmt, opts);
}

void write_text_atomic(const fs::path& path, const std::string& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
  }
  fs::rename(tmp, path);
}

void write_assignment_csv(const fs::path& path, const egae::Dataset& ds,
                          const std::vector<int>& labels) {
  std::string body = "node_id,cluster\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    body += ds.node_ids[i] + "," + std::to_string(labels[i]) + "\n";
  write_text_atomic(path, body);
}

json metrics_json(const egae::RunSummary& summary) {
  json j;
  j["restarts"] = summary.runs.size();
  j["acc"] = {{"mean", summary.mean.acc}, {"std", summary.stddev.acc}};
  j["nmi"] = {{"mean", summary.mean.nmi}, {"std", summary.stddev.nmi}};
  j["ari"] = {{"mean", summary.mean.ari}, {"std", summary.stddev.ari}};
  j["best_run"] = summary.best_run;
  json per_run = json::array();
  for (const auto& run : summary.runs)
    per_run.push_back({{"acc", run.metrics.acc},
                       {"nmi", run.metrics.nmi},
                       {"ari", run.metrics.ari},
                       {"seconds", run.wall_seconds}});
  j["per_run"] = per_run;
  return j;
}

void echo_config(const egae::TrainConfig& cfg) {
  std::string line;
  std::istringstream in(egae::format_config(cfg));
  std::cout << "# resolved config\n";
  while (std::getline(in, line)) std::cout << "#   " << line << "\n";
}

int cmd_train(const DatasetArgs& data_args, const std::string& config_path,
              const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed,
              std::optional<int> jobs, const std::string& out_dir) {
  egae::TrainConfig cfg =
      config_path.empty() ? egae::TrainConfig{} : egae::parse_config(config_path);
  for (const auto& kv : overrides) egae::apply_override(cfg, kv);
  if (seed) cfg.seed = *seed;
  if (jobs) cfg.jobs = *jobs;
  cfg.validate();
  echo_config(cfg);

  const egae::Dataset ds = load_from_args(data_args);
  const egae::RunSummary summary = egae::run(ds, cfg);
  const egae::RunResult& best = summary.runs[summary.best_run];

  fs::create_directories(out_dir);
  egae::save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), best.params);
  egae::write_trace_csv((fs::path(out_dir) / "loss_trace.csv").string(), best.trace);
  write_assignment_csv(fs::path(out_dir) / "assignment.csv", ds, best.assignment.labels);
  if (summary.has_metrics) {
    write_text_atomic(fs::path(out_dir) / "metrics.json", metrics_json(summary).dump(2) + "\n");
    std::printf("acc %.4f +- %.4f  nmi %.4f +- %.4f  ari %.4f +- %.4f  (%zu runs)\n",
                summary.mean.acc, summary.stddev.acc, summary.mean.nmi, summary.stddev.nmi,
                summary.mean.ari, summary.stddev.ari, summary.runs.size());
  }
  std::printf("outputs written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_eval(const DatasetArgs& data_args, const std::string& pred_path,
             const std::string& out_path) {
  const egae::Dataset ds = load_from_args(data_args);
  std::ifstream in(pred_path);
  if (!in) throw std::runtime_error("cannot open " + pred_path);
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ds.node_ids.size(); ++i)
    index[ds.node_ids[i]] = static_cast<int>(i);

  std::vector<int> pred(ds.node_ids.size(), -1);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(pred_path + ":" + std::to_string(lineno) + ": expected id,cluster");
    const std::string id = line.substr(0, comma);
    const auto it = index.find(id);
    if (it == index.end())
      throw std::runtime_error(pred_path + ":" + std::to_string(lineno) + ": unknown node id '" +
                               id + "'");
    pred[it->second] = std::stoi(line.substr(comma + 1));
  }
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] < 0)
      throw std::runtime_error(pred_path + ": missing assignment for node '" + ds.node_ids[i] + "'");

  const egae::MetricReport m = egae::evaluate_clustering(pred, ds.labels);
  json j{{"acc", m.acc}, {"nmi", m.nmi}, {"ari", m.ari}};
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) write_text_atomic(out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_embed(const DatasetArgs& data_args, const std::string& checkpoint_path,
              const std::string& out_path) {
  const egae::Dataset ds = load_from_args(data_args);
  const egae::EncoderParams params = egae::load_checkpoint(checkpoint_path);
  if (params.in_dim != ds.features.cols())
    throw std::runtime_error("checkpoint expects " + std::to_string(params.in_dim) +
                             " features, dataset has " + std::to_string(ds.features.cols()));
  const egae::Embedding emb =
      egae::encode(params, egae::renormalized_laplacian(ds.graph), ds.features);

  std::string body = "node_id";
  for (int j = 0; j < emb.z.cols(); ++j) body += ",z" + std::to_string(j);
  body += "\n";
  char buf[40];
  for (int i = 0; i < emb.z.rows(); ++i) {
    body += ds.node_ids[i];
    for (int j = 0; j < emb.z.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", emb.z(i, j));
      body += buf;
    }
    body += "\n";
  }
  write_text_atomic(out_path, body);
  if (emb.degenerate_rows > 0)
    EGAE_LOG_INFO("embed: %d degenerate (all-zero) rows", emb.degenerate_rows);
  std::printf("wrote %s (%ld rows)\n", out_path.c_str(), static_cast<long>(emb.z.rows()));
  return 0;
}

int cmd_synth(int n_per_ring, double p_intra, std::uint64_t seed, const std::string& out_dir) {
  const egae::Dataset ds = egae::gen_two_rings(n_per_ring, p_intra, seed);
  egae::write_csv_triple(ds, out_dir);
  std::printf("wrote two-rings dataset to %s (n=%d, edges=%lld)\n", out_dir.c_str(), ds.graph.n,
              static_cast<long long>(ds.graph.edge_count()));
  return 0;
}

int cmd_baseline(const DatasetArgs& data_args, int runs, std::uint64_t seed, int clusters,
                 const std::string& out_path) {
  const egae::Dataset ds = load_from_args(data_args);
  const int c = clusters > 0 ? clusters : ds.num_classes;

  std::vector<egae::MetricReport> reports;
  for (int r = 0; r < runs; ++r) {
    egae::KmeansOpts opts;
    opts.restarts = 10;
    opts.seed = egae::mix_seed(seed, static_cast<std::uint64_t>(r));
    const egae::KmeansResult km = egae::kmeans(ds.features, c, opts);
    reports.push_back(egae::evaluate_clustering(km.assignment.labels, ds.labels));
  }
  auto stats = [&](auto get) {
    double mean = 0.0, var = 0.0;
    for (const auto& m : reports) mean += get(m);
    mean /= runs;
    for (const auto& m : reports) var += (get(m) - mean) * (get(m) - mean);
    return std::pair<double, double>(mean, std::sqrt(var / runs));
  };
  const auto [acc_m, acc_s] = stats([](const egae::MetricReport& m) { return m.acc; });
  const auto [nmi_m, nmi_s] = stats([](const egae::MetricReport& m) { return m.nmi; });
  const auto [ari_m, ari_s] = stats([](const egae::MetricReport& m) { return m.ari; });

  json j;
  j["restarts"] = runs;
  j["acc"] = {{"mean", acc_m}, {"std", acc_s}};
  j["nmi"] = {{"mean", nmi_m}, {"std", nmi_s}};
  j["ari"] = {{"mean", ari_m}, {"std", ari_s}};
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) write_text_atomic(out_path, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph clustering with an embedding graph auto-encoder"};
  app.require_subcommand(1);

  DatasetArgs train_data;
  std::string config_path, out_dir = "egae_out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> jobs_flag;
  auto* train = app.add_subcommand("train", "Train and cluster a dataset");
  add_dataset_flags(train, train_data);
  train->add_option("--config", config_path, "Config file (key = value lines)");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--set", overrides, "Config override KEY=VALUE (repeatable)");
  train->add_option("--seed", seed_flag, "Base seed (overrides config)");
  train->add_option("--jobs", jobs_flag, "Parallel restarts (overrides config)");

  DatasetArgs eval_data;
  std::string pred_path, eval_out;
  auto* eval = app.add_subcommand("eval", "Metrics for an existing assignment CSV");
  add_dataset_flags(eval, eval_data);
  eval->add_option("--pred", pred_path, "assignment.csv to evaluate")->required();
  eval->add_option("--out", eval_out, "Optional metrics JSON path");

  DatasetArgs embed_data;
  std::string checkpoint_path, embed_out = "embedding.csv";
  auto* embed = app.add_subcommand("embed", "Export embeddings for a checkpoint");
  add_dataset_flags(embed, embed_data);
  embed->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  embed->add_option("--out", embed_out, "Output CSV path");

  int n_per_ring = 100;
  double p_intra = 0.9;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "two_rings";
  auto* synth = app.add_subcommand("synth", "Generate the two-rings synthetic dataset");
  synth->add_option("--n-per-ring", n_per_ring, "Nodes per ring");
  synth->add_option("--p-intra", p_intra, "Intra-cluster edge probability");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", synth_out, "Output directory");

  DatasetArgs base_data;
  int base_runs = 10, base_clusters = 0;
  std::uint64_t base_seed = 0;
  std::string base_out;
  auto* baseline = app.add_subcommand("baseline", "k-means on raw features");
  add_dataset_flags(baseline, base_data);
  baseline->add_option("--runs", base_runs, "Independent k-means runs");
  baseline->add_option("--seed", base_seed, "Seed");
  baseline->add_option("--clusters", base_clusters, "Cluster count (default: class count)");
  baseline->add_option("--out", base_out, "Optional metrics JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(train_data, config_path, overrides, seed_flag, jobs_flag, out_dir);
    if (eval->parsed()) return cmd_eval(eval_data, pred_path, eval_out);
    if (embed->parsed()) return cmd_embed(embed_data, checkpoint_path, embed_out);
    if (synth->parsed()) return cmd_synth(n_per_ring, p_intra, synth_seed, synth_out);
    if (baseline->parsed())
      return cmd_baseline(base_data, base_runs, base_seed, base_clusters, base_out);
  } catch (const egae::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
