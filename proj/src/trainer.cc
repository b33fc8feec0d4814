// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "uisrnn/kernels.h"

namespace uisrnn {

namespace {

double empirical_variance(std::span<const Utterance> corpus) {
  double sum = 0.0, sum_sq = 0.0;
  double n = 0.0;
  for (const auto &utt : corpus) {
    const auto &v = utt.embeddings.values();
    sum += v.sum();
    sum_sq += v.squaredNorm();
    n += static_cast<double>(v.size());
  }
  const double mean = sum / n;
  return std::max(sum_sq / n - mean * mean, 1e-12);
}

std::vector<LabelSequence> corpus_labels(std::span<const Utterance> corpus) {
  std::vector<LabelSequence> labels;
  labels.reserve(corpus.size());
  for (const auto &utt : corpus) labels.push_back(utt.labels);
  return labels;
}

double window_mean(const std::vector<double> &v, size_t end, size_t width) {
  double s = 0.0;
  for (size_t i = end - width; i < end; ++i) s += v[i];
  return s / static_cast<double>(width);
}

}  // namespace

void validate_corpus(std::span<const Utterance> corpus, const TrainConfig &config) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  const int d = corpus.front().embeddings.dim();
  for (const auto &utt : corpus) {
    if (utt.embeddings.dim() != d)
      throw std::invalid_argument("inconsistent embedding dimension in '" + utt.id + "'");
    if (utt.embeddings.length() != utt.labels.length())
      throw std::invalid_argument("label/embedding length mismatch in '" + utt.id + "'");
  }
  if (!(config.step_size >= 0.0)) throw std::invalid_argument("step size must be >= 0");
  if (config.batch_size < 1 || config.batch_size > static_cast<int>(corpus.size()))
    throw std::invalid_argument("batch size must lie in [1, corpus size]");
  if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (config.grad_clip_norm && !(*config.grad_clip_norm > 0.0))
    throw std::invalid_argument("grad_clip_norm must be positive");
  if (config.convergence_tol < 0.0) throw std::invalid_argument("convergence_tol must be >= 0");
  if (config.smoothing_window < 1) throw std::invalid_argument("smoothing_window must be >= 1");
}

ModelParams initialize_model(std::span<const Utterance> corpus,
                             const TrainConfig &config) {
  validate_corpus(corpus, config);
  ModelParams params;
  std::seed_seq seq{config.seed, std::uint64_t{1}};
  const std::uint64_t init_seed = std::mt19937_64(seq)();
  params.net = NetParams::random(
      {corpus.front().embeddings.dim(), config.hidden_dim, config.fc_dim}, init_seed,
      config.init_gain);
  params.net.final_relu = config.final_relu;
  params.emission.log_sigma2 = std::log(empirical_variance(corpus));
  params.prior.alpha = 1.0;
  const auto labels = corpus_labels(corpus);
  params.prior.p0 = estimate_p0(labels);
  return params;
}

ModelParams minibatch_step(const ModelParams &params,
                           std::span<const Utterance> corpus,
                           std::span<const int> batch, double scale,
                           const TrainConfig &config, double *objective) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  BatchGradient g = batch_gradients(corpus, batch, params);
  if (objective) *objective = scale * g.objective;

  double factor = scale;
  if (config.grad_clip_norm) {
    const double norm = scale * std::sqrt(g.net.squared_norm() + g.log_sigma2 * g.log_sigma2 +
                                          g.log_alpha * g.log_alpha);
    if (norm > *config.grad_clip_norm) factor *= *config.grad_clip_norm / norm;
  }
  const double step = config.step_size * factor;
  ModelParams next = params;
  next.net.axpy(step, g.net);
  next.emission.log_sigma2 += step * g.log_sigma2;
  next.prior.alpha = std::exp(std::log(params.prior.alpha) + step * g.log_alpha);
  return next;
}

std::string format_log_line(int iteration, double objective, const ModelParams &params) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "iter=%d objective=%.6f alpha=%.6f sigma2=%.6f p0=%.6f",
                iteration, objective, params.prior.alpha, params.emission.sigma2(),
                params.prior.p0);
  return buf;
}

TrainResult train(std::span<const Utterance> corpus, const TrainConfig &config,
                  std::ostream *log) {
  return train_from(corpus, initialize_model(corpus, config), config, log);
}

TrainResult train_from(std::span<const Utterance> corpus, ModelParams init,
                       const TrainConfig &config, std::ostream *log) {
  validate_corpus(corpus, config);
  init.validate();
  if (init.net.dims.input != corpus.front().embeddings.dim())
    throw std::invalid_argument("model dimension does not match corpus");
  init.prior.p0 = estimate_p0(corpus_labels(corpus));

  const int n = static_cast<int>(corpus.size());
  std::seed_seq seq{config.seed, std::uint64_t{2}};
  std::mt19937_64 rng(seq);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();

  TrainResult result{std::move(init), {}};
  TrainReport &report = result.report;
  report.stop_reason = "max_iterations";
  const size_t window = static_cast<size_t>(config.smoothing_window);
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    if (cursor >= order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const size_t take = std::min<size_t>(config.batch_size, order.size() - cursor);
    std::span<const int> batch(order.data() + cursor, take);
    cursor += take;

    double objective = 0.0;
    const double scale = static_cast<double>(n) / static_cast<double>(take);
    result.params = minibatch_step(result.params, corpus, batch, scale, config, &objective);
    report.objective.push_back(objective);
    report.iterations = iter;

    if (log && config.log_every > 0 &&
        (iter % config.log_every == 0 || iter == config.max_iterations))
      *log << format_log_line(iter, objective, result.params) << '\n';

    const size_t done = report.objective.size();
    if (config.convergence_tol > 0.0 && done >= 2 * window) {
      const double current = window_mean(report.objective, done, window);
      const double previous = window_mean(report.objective, done - window, window);
      const double rel = std::abs(current - previous) / std::max(std::abs(previous), 1e-12);
      if (rel < config.convergence_tol) {
        report.stop_reason = "converged";
        if (log && config.log_every > 0 && iter % config.log_every != 0)
          *log << format_log_line(iter, objective, result.params) << '\n';
        break;
      }
    }
  }
  report.alpha = result.params.prior.alpha;
  report.sigma2 = result.params.emission.sigma2();
  report.p0 = result.params.prior.p0;
  return result;
}

}  // namespace uisrnn
