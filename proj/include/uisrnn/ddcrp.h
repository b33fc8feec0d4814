// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ddcrp.h
 * @brief  Label prior: constant-probability speaker-change model and the
 *         block-count Chinese restaurant process used for speaker assignment.
 *
 * On a change (z=1) the next speaker is an existing speaker k != last with
 * weight N_k (its block count) or a brand-new speaker with weight alpha.
 */
#ifndef UISRNN_DDCRP_H_
#define UISRNN_DDCRP_H_

#include <limits>
#include <span>
#include <vector>

#include "uisrnn/labels.h"

namespace uisrnn {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct PriorParams {
  double p0 = 0.5;     ///< probability of NO speaker change
  double alpha = 1.0;  ///< concentration for opening a new speaker

  /// Throws std::invalid_argument unless 0 <= p0 <= 1 and alpha > 0.
  void validate() const;
};

/// ln p0 when z == 0, ln(1 - p0) when z == 1; -inf for a zero probability.
double change_log_prob(bool z, double p0);

struct AssignmentCandidate {
  SpeakerId speaker;
  bool z;
  double log_prior;
};

/// Candidates for the next label, ordered continuation first, then existing
/// speakers by ascending id, then the new speaker K+1. Exponentials of the
/// log-priors sum to one.
std::vector<AssignmentCandidate> assignment_candidates(
    const BlockCounts &state, const PriorParams &params);

/// ln p(Y | Z, alpha) in closed form. Throws if z does not match labels.
double sequence_assignment_log_prob(const LabelSequence &labels,
                                    const ChangeIndicators &z, double alpha);

/// d/d(alpha) of sequence_assignment_log_prob.
double grad_alpha(const LabelSequence &labels, const ChangeIndicators &z,
                  double alpha);

/// Sum over t >= 2 of ln p(z_t | p0).
double change_sequence_log_prob(const ChangeIndicators &z, double p0);

/// Closed-form maximum-likelihood no-change probability over a corpus.
/// Throws std::invalid_argument("p0 undefined") if every utterance has T=1.
double estimate_p0(std::span<const LabelSequence> corpus);

}  // namespace uisrnn

#endif  // UISRNN_DDCRP_H_
