// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/kernels.h"

#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace uisrnn {

namespace {

struct UtteranceGradient {
  NetGradients net;
  double log_alpha = 0.0;
  double objective = 0.0;
};

UtteranceGradient utterance_gradient(const Utterance &utt, const ModelParams &params) {
  UtteranceGradient g;
  g.net = backward_gradients(utt.embeddings, utt.labels, params.net, params.emission);
  const ChangeIndicators z = derive_change_indicators(utt.labels);
  const double alpha = params.prior.alpha;
  // Chain rule onto ln alpha.
  g.log_alpha = alpha * grad_alpha(utt.labels, z, alpha);
  g.objective = g.net.log_likelihood + sequence_assignment_log_prob(utt.labels, z, alpha) +
                change_sequence_log_prob(z, params.prior.p0);
  return g;
}

// Exceptions cannot leave an OpenMP region; each slot keeps its own and the
// first in index order is rethrown afterwards.
void rethrow_first(const std::vector<std::exception_ptr> &errors) {
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
}

bool finite(const UtteranceGradient &g) {
  return g.net.net.all_finite() && std::isfinite(g.net.log_sigma2) &&
         std::isfinite(g.log_alpha);
}

BatchGradient reduce(std::span<const Utterance> corpus, std::span<const int> indices,
                     const std::vector<UtteranceGradient> &parts,
                     const ModelParams &params) {
  BatchGradient out;
  out.net = NetParams::zeros(params.net.dims);
  out.net.final_relu = params.net.final_relu;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (!finite(parts[i]))
      throw std::runtime_error("non-finite gradient in utterance '" +
                               corpus[indices[i]].id + "'");
    out.net.axpy(1.0, parts[i].net.net);
    out.log_sigma2 += parts[i].net.log_sigma2;
    out.log_alpha += parts[i].log_alpha;
    out.objective += parts[i].objective;
  }
  return out;
}

}  // namespace

BatchGradient batch_gradients(std::span<const Utterance> corpus,
                              std::span<const int> indices,
                              const ModelParams &params) {
  const int n = static_cast<int>(indices.size());
  std::vector<UtteranceGradient> parts(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      parts[i] = utterance_gradient(corpus[indices[i]], params);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return reduce(corpus, indices, parts, params);
}

BatchGradient batch_gradients_serial(std::span<const Utterance> corpus,
                                     std::span<const int> indices,
                                     const ModelParams &params) {
  std::vector<UtteranceGradient> parts;
  parts.reserve(indices.size());
  for (int i : indices) parts.push_back(utterance_gradient(corpus[i], params));
  return reduce(corpus, indices, parts, params);
}

double corpus_log_likelihood(std::span<const Utterance> corpus,
                             const ModelParams &params) {
  const int n = static_cast<int>(corpus.size());
  std::vector<double> parts(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      parts[i] = forward_log_likelihood(corpus[i].embeddings, corpus[i].labels, params.net,
                                        params.emission)
                     .log_likelihood;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

double corpus_log_likelihood_serial(std::span<const Utterance> corpus,
                                    const ModelParams &params) {
  double total = 0.0;
  for (const auto &utt : corpus)
    total += forward_log_likelihood(utt.embeddings, utt.labels, params.net, params.emission)
                 .log_likelihood;
  return total;
}

std::vector<DecodeResult> decode_corpus(std::span<const EmbeddingSequence> inputs,
                                        const ModelParams &params,
                                        const DecodeConfig &config, int workers) {
  config.validate();
  const int n = static_cast<int>(inputs.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  std::vector<std::optional<DecodeResult>> slots(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    try {
      slots[i] = config.beam_width == 1 ? decode_greedy(inputs[i], params, config)
                                        : decode_beam(inputs[i], params, config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  std::vector<DecodeResult> out;
  out.reserve(n);
  for (auto &s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<DecodeResult> decode_corpus_serial(
    std::span<const EmbeddingSequence> inputs, const ModelParams &params,
    const DecodeConfig &config) {
  config.validate();
  std::vector<DecodeResult> out;
  out.reserve(inputs.size());
  for (const auto &x : inputs)
    out.push_back(config.beam_width == 1 ? decode_greedy(x, params, config)
                                         : decode_beam(x, params, config));
  return out;
}

}  // namespace uisrnn
