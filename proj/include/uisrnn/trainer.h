// SPDX-License-Identifier: Apache-2.0
/**
 * @file   trainer.h
 * @brief  Maximum-likelihood training. p0 is set once in closed form;
 *         network weights, log sigma2 and log alpha follow plain minibatch
 *         gradient ascent with a constant step size and N/b scaling.
 */
#ifndef UISRNN_TRAINER_H_
#define UISRNN_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uisrnn/model.h"

namespace uisrnn {

struct TrainConfig {
  double step_size = 1e-5;  ///< rho
  int batch_size = 10;      ///< b
  int max_iterations = 1000;
  std::optional<double> grad_clip_norm;
  std::uint64_t seed = 0;
  /// Relative change between consecutive smoothing windows that counts as
  /// converged; 0 disables the check.
  double convergence_tol = 1e-5;
  int smoothing_window = 20;
  int log_every = 10;  ///< 0 disables logging

  // Network shape for a fresh model.
  int hidden_dim = 16;
  int fc_dim = 16;
  bool final_relu = false;
  double init_gain = 1.0;
};

struct TrainReport {
  std::vector<double> objective;  ///< N/b-scaled minibatch log joint, per iteration
  int iterations = 0;
  std::string stop_reason;
  double alpha = 0.0;
  double sigma2 = 0.0;
  double p0 = 0.0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Fresh parameters for a corpus: seeded uniform weights, sigma2 set to the
/// empirical coordinate variance, alpha = 1 and p0 in closed form.
ModelParams initialize_model(std::span<const Utterance> corpus,
                             const TrainConfig &config);

/// Throws std::invalid_argument on an empty corpus, mixed dimensions, length
/// mismatches or an invalid config.
void validate_corpus(std::span<const Utterance> corpus, const TrainConfig &config);

TrainResult train(std::span<const Utterance> corpus, const TrainConfig &config,
                  std::ostream *log = nullptr);

/// Same, starting from given parameters (p0 is still re-estimated).
TrainResult train_from(std::span<const Utterance> corpus, ModelParams init,
                       const TrainConfig &config, std::ostream *log = nullptr);

/// One ascent step on the utterances `batch` (indices into corpus), with the
/// summed gradient multiplied by `scale` (N/b) and `config.step_size`.
/// Returns the updated parameters; `objective`, if given, receives the
/// scaled log joint at the incoming parameters.
ModelParams minibatch_step(const ModelParams &params,
                           std::span<const Utterance> corpus,
                           std::span<const int> batch, double scale,
                           const TrainConfig &config, double *objective = nullptr);

/// `iter=<n> objective=<v> alpha=<v> sigma2=<v> p0=<v>`
std::string format_log_line(int iteration, double objective, const ModelParams &params);

}  // namespace uisrnn

#endif  // UISRNN_TRAINER_H_
