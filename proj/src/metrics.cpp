#include "egae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace egae {

namespace {

int check_and_count(const std::vector<int>& labels) {
  int c = 0;
  for (int v : labels) {
    if (v < 0) throw std::invalid_argument("metrics: negative label");
    c = std::max(c, v + 1);
  }
  return c;
}

std::vector<std::vector<double>> contingency(const std::vector<int>& pred,
                                             const std::vector<int>& truth, int cp, int ct) {
  std::vector<std::vector<double>> table(cp, std::vector<double>(ct, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) table[pred[i]][truth[i]] += 1.0;
  return table;
}

}  // namespace

// Jonker-Volgenant style shortest augmenting path with potentials, O(k^3).
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int k = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<int> match(k + 1, 0);  // match[col] = row, 1-based
  for (int i = 1; i <= k; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(k + 1, inf);
    std::vector<int> way(k + 1, 0);
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(k, -1);
  for (int j = 1; j <= k; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("clustering_accuracy: length mismatch");
  const int cp = check_and_count(pred);
  const int ct = check_and_count(truth);
  const int k = std::max(cp, ct);
  const auto table = contingency(pred, truth, cp, ct);

  // maximize matches == minimize (max - count)
  const double n = static_cast<double>(pred.size());
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, n));
  for (int i = 0; i < cp; ++i)
    for (int j = 0; j < ct; ++j) cost[i][j] = n - table[i][j];
  const auto assign = solve_assignment(cost);
  double matched = 0.0;
  for (int i = 0; i < cp; ++i)
    if (assign[i] < ct) matched += table[i][assign[i]];
  return matched / n;
}

double normalized_mutual_info(const std::vector<int>& pred, const std::vector<int>& truth,
                              NmiNorm norm) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("normalized_mutual_info: length mismatch");
  const int cp = check_and_count(pred);
  const int ct = check_and_count(truth);
  const auto table = contingency(pred, truth, cp, ct);
  const double n = static_cast<double>(pred.size());

  std::vector<double> a(cp, 0.0), b(ct, 0.0);
  for (int i = 0; i < cp; ++i)
    for (int j = 0; j < ct; ++j) {
      a[i] += table[i][j];
      b[j] += table[i][j];
    }
  double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
  for (int i = 0; i < cp; ++i)
    if (a[i] > 0.0) h_pred -= (a[i] / n) * std::log(a[i] / n);
  for (int j = 0; j < ct; ++j)
    if (b[j] > 0.0) h_truth -= (b[j] / n) * std::log(b[j] / n);
  for (int i = 0; i < cp; ++i)
    for (int j = 0; j < ct; ++j)
      if (table[i][j] > 0.0)
        mi += (table[i][j] / n) * std::log(n * table[i][j] / (a[i] * b[j]));

  if (h_pred <= 0.0 || h_truth <= 0.0) return 0.0;
  const double denom = (norm == NmiNorm::kGeometric) ? std::sqrt(h_pred * h_truth)
                                                     : 0.5 * (h_pred + h_truth);
  return std::clamp(mi / denom, 0.0, 1.0);
}

double adjusted_rand_index(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("adjusted_rand_index: length mismatch");
  const int cp = check_and_count(pred);
  const int ct = check_and_count(truth);
  const auto table = contingency(pred, truth, cp, ct);
  auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };

  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<double> a(cp, 0.0), b(ct, 0.0);
  for (int i = 0; i < cp; ++i)
    for (int j = 0; j < ct; ++j) {
      sum_ij += choose2(table[i][j]);
      a[i] += table[i][j];
      b[j] += table[i][j];
    }
  for (int i = 0; i < cp; ++i) sum_a += choose2(a[i]);
  for (int j = 0; j < ct; ++j) sum_b += choose2(b[j]);

  const double total = choose2(static_cast<double>(pred.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_ij - expected) / (max_index - expected);
}

MetricReport evaluate_clustering(const std::vector<int>& pred, const std::vector<int>& truth) {
  return MetricReport{clustering_accuracy(pred, truth), normalized_mutual_info(pred, truth),
                      adjusted_rand_index(pred, truth)};
}

}  // namespace egae
