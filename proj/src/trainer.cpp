#include "egae/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "egae/errors.hpp"
#include "egae/log.hpp"
#include "egae/rng.hpp"

namespace egae {

void TrainConfig::validate() const {
  if (alpha < 0.0) throw std::invalid_argument("config: alpha must be >= 0");
  if (beta < 0.0) throw std::invalid_argument("config: beta must be >= 0");
  if (lr_pretrain < 0.0 || lr_finetune < 0.0)
    throw std::invalid_argument("config: learning rates must be >= 0");
  if (pretrain_iters < 0 || outer_iters < 1 || inner_iters < 1)
    throw std::invalid_argument("config: iteration counts out of range");
  if (l1_coeff < 0.0) throw std::invalid_argument("config: l1_coeff must be >= 0");
  if (hidden_dim < 1 || embed_dim < 1) throw std::invalid_argument("config: dims must be >= 1");
  if (restarts < 1) throw std::invalid_argument("config: restarts must be >= 1");
  if (optimizer != "adam" && optimizer != "sgd")
    throw std::invalid_argument("config: optimizer must be adam or sgd");
  if (clusters < 0) throw std::invalid_argument("config: clusters must be >= 0");
  if (kmeans_restarts < 1 || kmeans_max_iter < 1 || kmeans_tol < 0.0)
    throw std::invalid_argument("config: k-means options out of range");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
}

namespace {

template <typename Fn>
bool dispatch_key(TrainConfig& cfg, const std::string& key, Fn&& set) {
  if (key == "alpha") return set(cfg.alpha), true;
  if (key == "beta") return set(cfg.beta), true;
  if (key == "lr_pretrain") return set(cfg.lr_pretrain), true;
  if (key == "lr_finetune") return set(cfg.lr_finetune), true;
  if (key == "pretrain_iters") return set(cfg.pretrain_iters), true;
  if (key == "outer_iters") return set(cfg.outer_iters), true;
  if (key == "inner_iters") return set(cfg.inner_iters), true;
  if (key == "l1_coeff") return set(cfg.l1_coeff), true;
  if (key == "hidden_dim") return set(cfg.hidden_dim), true;
  if (key == "embed_dim") return set(cfg.embed_dim), true;
  if (key == "restarts") return set(cfg.restarts), true;
  if (key == "seed") return set(cfg.seed), true;
  if (key == "optimizer") return set(cfg.optimizer), true;
  if (key == "clusters") return set(cfg.clusters), true;
  if (key == "kmeans_restarts") return set(cfg.kmeans_restarts), true;
  if (key == "kmeans_max_iter") return set(cfg.kmeans_max_iter), true;
  if (key == "kmeans_tol") return set(cfg.kmeans_tol), true;
  if (key == "jobs") return set(cfg.jobs), true;
  return false;
}

void set_key(TrainConfig& cfg, const std::string& key, const std::string& value,
             const std::string& where) {
  auto setter = [&](auto& field) {
    using T = std::decay_t<decltype(field)>;
    std::stringstream ss(value);
    T parsed{};
    if (!(ss >> parsed) || !(ss >> std::ws).eof())
      throw std::runtime_error(where + ": bad value '" + value + "' for key '" + key + "'");
    field = parsed;
  };
  if (!dispatch_key(cfg, key, setter))
    throw std::runtime_error(where + ": unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

TrainConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
            path + ":" + std::to_string(lineno));
  }
  cfg.validate();
  return cfg;
}

void apply_override(TrainConfig& cfg, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("override must be KEY=VALUE: " + key_value);
  set_key(cfg, trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)), "override");
}

std::string format_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "alpha = " << cfg.alpha << "\n"
      << "beta = " << cfg.beta << "\n"
      << "lr_pretrain = " << cfg.lr_pretrain << "\n"
      << "lr_finetune = " << cfg.lr_finetune << "\n"
      << "pretrain_iters = " << cfg.pretrain_iters << "\n"
      << "outer_iters = " << cfg.outer_iters << "\n"
      << "inner_iters = " << cfg.inner_iters << "\n"
      << "l1_coeff = " << cfg.l1_coeff << "\n"
      << "hidden_dim = " << cfg.hidden_dim << "\n"
      << "embed_dim = " << cfg.embed_dim << "\n"
      << "restarts = " << cfg.restarts << "\n"
      << "seed = " << cfg.seed << "\n"
      << "optimizer = " << cfg.optimizer << "\n"
      << "clusters = " << cfg.clusters << "\n"
      << "kmeans_restarts = " << cfg.kmeans_restarts << "\n"
      << "kmeans_max_iter = " << cfg.kmeans_max_iter << "\n"
      << "kmeans_tol = " << cfg.kmeans_tol << "\n"
      << "jobs = " << cfg.jobs << "\n";
  return out.str();
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write trace: " + path);
    out << "iter,phase,j_r,j_c,l1,total\n";
    char buf[160];
    for (const auto& row : trace) {
      std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g\n", row.iter,
                    row.phase.c_str(), row.j_r, row.j_c, row.l1, row.total);
      out << buf;
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace {

// Adam with bias correction; SGD when cfg.optimizer says so.
class Optimizer {
 public:
  Optimizer(const std::string& kind, double lr, const EncoderParams& p)
      : adam_(kind == "adam"), lr_(lr) {
    if (adam_) {
      m1_ = DenseMatrix::Zero(p.w1.rows(), p.w1.cols());
      v1_ = DenseMatrix::Zero(p.w1.rows(), p.w1.cols());
      m2_ = DenseMatrix::Zero(p.w2.rows(), p.w2.cols());
      v2_ = DenseMatrix::Zero(p.w2.rows(), p.w2.cols());
    }
  }

  void step(EncoderParams& p, const Gradients& g) {
    if (!adam_) {
      p.w1 -= lr_ * g.dw1;
      p.w2 -= lr_ * g.dw2;
      return;
    }
    ++t_;
    apply(p.w1, g.dw1, m1_, v1_);
    apply(p.w2, g.dw2, m2_, v2_);
  }

 private:
  void apply(DenseMatrix& w, const DenseMatrix& grad, DenseMatrix& m, DenseMatrix& v) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double corr1 = 1.0 - std::pow(b1, t_);
    const double corr2 = 1.0 - std::pow(b2, t_);
    w.array() -= lr_ * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
  }

  bool adam_;
  double lr_;
  int t_ = 0;
  DenseMatrix m1_, v1_, m2_, v2_;
};

int effective_clusters(const Dataset& ds, const TrainConfig& cfg) {
  const int c = cfg.clusters > 0 ? cfg.clusters : ds.num_classes;
  if (c < 1) throw std::invalid_argument("trainer: cluster count unresolved");
  if (c > ds.graph.n) throw std::invalid_argument("trainer: more clusters than nodes");
  return c;
}

void check_finite_loss(const LossReport& r, const char* phase, int iter) {
  if (!std::isfinite(r.total))
    throw NumericalError(std::string("trainer: non-finite loss in ") + phase +
                         " at iteration " + std::to_string(iter));
}

}  // namespace

std::uint64_t restart_seed(std::uint64_t base_seed, int restart) {
  return mix_seed(base_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(restart));
}

PretrainResult pretrain(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  PretrainResult out;
  out.params = init_params(static_cast<int>(ds.features.cols()), cfg.hidden_dim, cfg.embed_dim,
                           cfg.seed);
  Evaluator ev(renormalized_laplacian(ds.graph), ds.features);
  Optimizer opt(cfg.optimizer, cfg.lr_pretrain, out.params);
  out.trace.reserve(cfg.pretrain_iters);
  for (int iter = 0; iter < cfg.pretrain_iters; ++iter) {
    const auto res = ev.eval(out.params, ds.graph, nullptr, 0.0, cfg.l1_coeff, true);
    check_finite_loss(res.report, "pretrain", iter);
    out.trace.push_back({iter, "pretrain", res.report.j_r, 0.0, res.report.l1, res.report.total});
    opt.step(out.params, res.grads);
  }
  return out;
}

RunResult finetune(const Dataset& ds, EncoderParams params, const TrainConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int c = effective_clusters(ds, cfg);
  Evaluator ev(renormalized_laplacian(ds.graph), ds.features);
  CsrMatrix lap_unnorm;
  if (cfg.beta > 0.0) lap_unnorm = unnormalized_laplacian(ds.graph);

  KmeansOpts km;
  km.restarts = cfg.kmeans_restarts;
  km.max_iter = cfg.kmeans_max_iter;
  km.tol = cfg.kmeans_tol;

  auto update_indicator = [&](const Embedding& z, int outer) {
    km.seed = mix_seed(cfg.seed, 0xa160ULL + static_cast<std::uint64_t>(outer));
    if (cfg.beta > 0.0) {
      Indicator ind = rectified_indicator(z, lap_unnorm, cfg.beta, c);
      const RowNormalized rows = row_normalize(ind.p);
      KmeansResult res = kmeans(rows.m, c, km);
      return RelaxedKmeansResult{std::move(ind), std::move(res.assignment)};
    }
    return relaxed_kmeans(z, c, km);
  };

  RunResult out;
  RelaxedKmeansResult current = update_indicator(ev.embed(params), -1);
  if (current.indicator.rank_deficient)
    EGAE_LOG_INFO("finetune: rank-deficient embedding at initial indicator");

  Optimizer opt(cfg.optimizer, cfg.lr_finetune, params);
  out.trace.reserve(static_cast<std::size_t>(cfg.outer_iters) * cfg.inner_iters);
  int iter = 0;
  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    for (int inner = 0; inner < cfg.inner_iters; ++inner, ++iter) {
      const auto res =
          ev.eval(params, ds.graph, &current.indicator.p, cfg.alpha, cfg.l1_coeff, true);
      check_finite_loss(res.report, "finetune", iter);
      out.trace.push_back(
          {iter, "finetune", res.report.j_r, res.report.j_c, res.report.l1, res.report.total});
      opt.step(params, res.grads);
    }
    Embedding z = ev.embed(params);
    if (z.degenerate_rows > 0)
      EGAE_LOG_DEBUG("finetune: %d degenerate embedding rows at outer %d", z.degenerate_rows,
                     outer);
    RelaxedKmeansResult next = update_indicator(z, outer);
    if (next.indicator.rank_deficient && !current.indicator.rank_deficient)
      EGAE_LOG_INFO("finetune: rank-deficient embedding at outer %d", outer);
    current = std::move(next);
    out.embedding = std::move(z);
  }

  out.assignment = current.assignment;
  out.params = std::move(params);
  out.degenerate_rows = out.embedding.degenerate_rows;
  if (!ds.labels.empty()) {
    out.has_metrics = true;
    out.metrics = evaluate_clustering(out.assignment.labels, ds.labels);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RunSummary run(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  RunSummary summary;
  summary.runs.resize(cfg.restarts);

  auto run_one = [&](int r) {
    TrainConfig local = cfg;
    local.seed = restart_seed(cfg.seed, r);
    const auto t0 = std::chrono::steady_clock::now();
    PretrainResult pre = pretrain(ds, local);
    RunResult res = finetune(ds, std::move(pre.params), local);
    res.trace.insert(res.trace.begin(), pre.trace.begin(), pre.trace.end());
    for (std::size_t i = 0; i < res.trace.size(); ++i)
      res.trace[i].iter = static_cast<int>(i);
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.runs[r] = std::move(res);
  };

  if (cfg.jobs <= 1 || cfg.restarts == 1) {
    for (int r = 0; r < cfg.restarts; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(cfg.jobs, cfg.restarts);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int r = next.fetch_add(1); r < cfg.restarts; r = next.fetch_add(1)) run_one(r);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  summary.best_run = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (summary.runs[r].trace.back().total < summary.runs[summary.best_run].trace.back().total)
      summary.best_run = r;

  summary.has_metrics = !ds.labels.empty();
  if (summary.has_metrics) {
    auto accumulate = [&](auto get) {
      double mean = 0.0;
      for (const auto& run : summary.runs) mean += get(run.metrics);
      mean /= cfg.restarts;
      double var = 0.0;
      for (const auto& run : summary.runs) {
        const double d = get(run.metrics) - mean;
        var += d * d;
      }
      return std::pair<double, double>(mean, std::sqrt(var / cfg.restarts));
    };
    std::tie(summary.mean.acc, summary.stddev.acc) =
        accumulate([](const MetricReport& m) { return m.acc; });
    std::tie(summary.mean.nmi, summary.stddev.nmi) =
        accumulate([](const MetricReport& m) { return m.nmi; });
    std::tie(summary.mean.ari, summary.stddev.ari) =
        accumulate([](const MetricReport& m) { return m.ari; });
  }
  return summary;
}

}  // namespace egae
