// SPDX-License-Identifier: Apache-2.0
/**
 * @file   kernels.h
 * @brief  Corpus-level kernels parallelized over utterances with OpenMP,
 *         each paired with a serial reference used by the tests and the
 *         benchmark.
 *
 * Per-utterance results are written to private slots and reduced in
 * utterance order, so outputs are bit-identical for any thread count.
 */
#ifndef UISRNN_KERNELS_H_
#define UISRNN_KERNELS_H_

#include <span>
#include <vector>

#include "uisrnn/decoder.h"
#include "uisrnn/model.h"

namespace uisrnn {

/// Summed gradients of the log joint over a set of utterances.
struct BatchGradient {
  NetParams net;            ///< d ln p(X|Y) / d theta
  double log_sigma2 = 0.0;  ///< d ln p(X|Y) / d log sigma2
  double log_alpha = 0.0;   ///< d ln p(Y|Z) / d log alpha
  double objective = 0.0;   ///< sum of ln p(X, Y, Z)
};

/// Throws std::runtime_error naming the utterance if any gradient is
/// non-finite.
BatchGradient batch_gradients(std::span<const Utterance> corpus,
                              std::span<const int> indices,
                              const ModelParams &params);
BatchGradient batch_gradients_serial(std::span<const Utterance> corpus,
                                     std::span<const int> indices,
                                     const ModelParams &params);

/// Sum of ln p(X | Y) over the corpus.
double corpus_log_likelihood(std::span<const Utterance> corpus,
                             const ModelParams &params);
double corpus_log_likelihood_serial(std::span<const Utterance> corpus,
                                    const ModelParams &params);

/// Decodes every sequence; `workers` <= 0 uses the OpenMP default.
std::vector<DecodeResult> decode_corpus(std::span<const EmbeddingSequence> inputs,
                                        const ModelParams &params,
                                        const DecodeConfig &config,
                                        int workers = 0);
std::vector<DecodeResult> decode_corpus_serial(
    std::span<const EmbeddingSequence> inputs, const ModelParams &params,
    const DecodeConfig &config);

}  // namespace uisrnn

#endif  // UISRNN_KERNELS_H_
