#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egae/clustering.hpp"
#include "egae/graph.hpp"
#include "egae/metrics.hpp"
#include "egae/model.hpp"

namespace egae {

struct TrainConfig {
  double alpha = 1.0;          // clustering-decoder tradeoff
  double beta = 0.0;           // adjacency-sharing weight, 0 = disabled
  double lr_pretrain = 1e-3;
  double lr_finetune = 1e-4;
  int pretrain_iters = 200;
  int outer_iters = 30;        // indicator updates
  int inner_iters = 5;         // gradient steps per indicator update
  double l1_coeff = 1e-3;
  int hidden_dim = 256;
  int embed_dim = 128;
  int restarts = 10;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";  // or "sgd"
  int clusters = 0;                // 0 = use dataset class count
  int kmeans_restarts = 20;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  int jobs = 1;

  void validate() const;
};

// Flat `key = value` file, '#' starts a comment, keys match the field
// names above.
TrainConfig parse_config(const std::string& path);
void apply_override(TrainConfig& cfg, const std::string& key_value);
std::string format_config(const TrainConfig& cfg);

struct TraceRow {
  int iter = 0;
  std::string phase;  // "pretrain" or "finetune"
  double j_r = 0.0, j_c = 0.0, l1 = 0.0, total = 0.0;
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

struct PretrainResult {
  EncoderParams params;
  std::vector<TraceRow> trace;
};

// pretrain_iters full-batch steps on J_r + L1 only (alpha = 0).
PretrainResult pretrain(const Dataset& ds, const TrainConfig& cfg);

struct RunResult {
  Assignment assignment;        // from the final indicator update
  Embedding embedding;
  std::vector<TraceRow> trace;  // pretrain + finetune, one row per step
  EncoderParams params;
  bool has_metrics = false;
  MetricReport metrics;
  int degenerate_rows = 0;
  double wall_seconds = 0.0;
};

// Alternating optimization: inner_iters gradient steps with the indicator
// fixed, then indicator + assignment from relaxed k-means (or the
// adjacency-sharing variant when beta > 0), repeated outer_iters times.
RunResult finetune(const Dataset& ds, EncoderParams params, const TrainConfig& cfg);

struct RunSummary {
  std::vector<RunResult> runs;
  int best_run = 0;  // lowest final total loss, ties to lowest index
  bool has_metrics = false;
  MetricReport mean;
  MetricReport stddev;
};

// pretrain + finetune over `restarts` derived seeds; metrics are averaged
// when the dataset carries labels.
RunSummary run(const Dataset& ds, const TrainConfig& cfg);

// Per-run seed derivation, exposed so single runs can be reproduced.
std::uint64_t restart_seed(std::uint64_t base_seed, int restart);

}  // namespace egae
