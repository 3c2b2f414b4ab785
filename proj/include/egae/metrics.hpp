#pragma once

#include <vector>

namespace egae {

struct MetricReport {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

enum class NmiNorm { kGeometric, kArithmetic };

// Clustering accuracy under the optimal label bijection (Hungarian
// assignment on the contingency matrix).
double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// Normalized mutual information, natural log. Returns 0 when either
// partition is a single cluster.
double normalized_mutual_info(const std::vector<int>& pred, const std::vector<int>& truth,
                              NmiNorm norm = NmiNorm::kGeometric);

// Adjusted Rand index (pair counting, chance corrected).
double adjusted_rand_index(const std::vector<int>& pred, const std::vector<int>& truth);

MetricReport evaluate_clustering(const std::vector<int>& pred, const std::vector<int>& truth);

// Minimum-cost assignment on a square matrix; returns col index chosen for
// each row. Exposed for tests.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace egae
