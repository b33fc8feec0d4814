// SPDX-License-Identifier: Apache-2.0
/**
 * @file   decoder.h
 * @brief  MAP label inference: online greedy decoding, beam search with an
 *         optional speaker cap, and an exhaustive oracle for short inputs.
 *
 * Each step scores every (speaker, z) candidate by
 *   ln p(z) + ln p(y | z, prefix) + ln N(x_t; mu_candidate, sigma2 I).
 * Ties are broken deterministically: continuation first, then existing
 * speakers by ascending id, then the new speaker. Across beam parents, the
 * better-ranked parent wins ties. When picking a final labeling, scores
 * within kTieTolerance (relative) of the best are ties, resolved by the same
 * rule applied at the first position where the labelings differ.
 */
#ifndef UISRNN_DECODER_H_
#define UISRNN_DECODER_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "uisrnn/model.h"

namespace uisrnn {

inline constexpr double kTieTolerance = 1e-12;

struct DecodeConfig {
  int beam_width = 10;
  std::optional<int> max_speakers;  ///< C; no new speaker once K == C
  /// Frames of delay before a label is committed; 0 commits only at the end.
  int look_ahead = 0;

  void validate() const;
};

/// Immutable cons-list node; beam hypotheses share label history.
struct LabelNode {
  SpeakerId label;
  std::shared_ptr<const LabelNode> parent;
};

struct DecoderHypothesis {
  std::shared_ptr<const LabelNode> tail;
  int length = 0;
  std::vector<SpeakerThread> threads;  ///< index k-1 for speaker k
  BlockCounts blocks;
  double log_prob = 0.0;

  LabelSequence labels() const;
  SpeakerId label_at(int t) const;  ///< 0-based position
};

struct StepCandidate {
  SpeakerId speaker;
  bool z;
  double log_prior;     ///< ln p(z) + ln p(y | z, prefix)
  double log_emission;  ///< ln p(x_t | ...)
  ThreadProposal proposal;

  double step_log_prob() const { return log_prior + log_emission; }
};

/// Candidates in tie-break order. For an empty hypothesis the only
/// candidate is speaker 1 with no prior term.
std::vector<StepCandidate> step_scores(const DecoderHypothesis &hyp,
                                       const Eigen::VectorXd &x,
                                       const ModelParams &params,
                                       const DecodeConfig &config);

/// Returns a copy of `hyp` extended by the candidate.
DecoderHypothesis extend(const DecoderHypothesis &hyp, StepCandidate candidate,
                         const Eigen::VectorXd &x);

struct DecodeStats {
  int max_candidates_per_step = 0;
  long total_candidates = 0;
};

struct DecodeResult {
  LabelSequence labels;
  double log_prob = 0.0;
  DecodeStats stats;
};

/// Beam search that consumes one frame at a time.
class OnlineDecoder {
 public:
  OnlineDecoder(const ModelParams &params, DecodeConfig config);

  void push(const Eigen::VectorXd &x);
  /// Surviving hypotheses, best first.
  const std::vector<DecoderHypothesis> &beam() const { return beam_; }
  /// Labels already fixed by the look-ahead rule.
  const std::vector<SpeakerId> &committed() const { return committed_; }
  const DecodeStats &stats() const { return stats_; }
  DecodeResult finish() const;

 private:
  const ModelParams &params_;
  DecodeConfig config_;
  std::vector<DecoderHypothesis> beam_;
  std::vector<SpeakerId> committed_;
  DecodeStats stats_;
};

DecodeResult decode_greedy(const EmbeddingSequence &x, const ModelParams &params,
                           const DecodeConfig &config = {});

DecodeResult decode_beam(const EmbeddingSequence &x, const ModelParams &params,
                         const DecodeConfig &config);

struct ExhaustiveResult {
  LabelSequence labels;
  double log_prob = 0.0;
  std::int64_t num_candidates = 0;
};

inline constexpr int kExhaustiveMaxLength = 12;

/// Scores every restricted-growth labeling with the full joint. Throws
/// std::invalid_argument("oracle guard") for T > kExhaustiveMaxLength.
ExhaustiveResult exhaustive_decode(const EmbeddingSequence &x,
                                   const ModelParams &params);

/// All restricted-growth strings of the given length in lexicographic order.
std::vector<std::vector<SpeakerId>> enumerate_label_sequences(int length);

}  // namespace uisrnn

#endif  // UISRNN_DECODER_H_
