// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/ddcrp.h"

#include <cmath>
#include <stdexcept>

namespace uisrnn {

namespace {

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void check_consistent(const LabelSequence &labels, const ChangeIndicators &z) {
  if (z != derive_change_indicators(labels))
    throw std::invalid_argument("change indicators inconsistent with labels");
}

// Walks the sequence and calls on_change(S_{t-1}) at every change step,
// where S is the total block count of speakers other than the previous one.
template <typename F>
void for_each_change(const LabelSequence &labels, F &&on_change) {
  BlockCounts state;
  state.push(labels[0]);
  for (int t = 1; t < labels.length(); ++t) {
    if (labels[t] != labels[t - 1]) {
      const int others = state.total_blocks() - state.count(state.last_speaker());
      on_change(static_cast<double>(others));
    }
    state.push(labels[t]);
  }
}

}  // namespace

void PriorParams::validate() const {
  if (!(p0 >= 0.0 && p0 <= 1.0))
    throw std::invalid_argument("p0 must lie in [0, 1]");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be positive");
}

double change_log_prob(bool z, double p0) {
  if (!(p0 >= 0.0 && p0 <= 1.0))
    throw std::invalid_argument("p0 must lie in [0, 1]");
  return z ? safe_log(1.0 - p0) : safe_log(p0);
}

std::vector<AssignmentCandidate> assignment_candidates(
    const BlockCounts &state, const PriorParams &params) {
  params.validate();
  if (state.empty())
    throw std::invalid_argument("assignment candidates need a nonempty prefix");
  const SpeakerId last = state.last_speaker();
  const int num_speakers = state.num_speakers();
  const double others = state.total_blocks() - state.count(last);
  const double log_change = change_log_prob(true, params.p0);
  const double log_norm = std::log(others + params.alpha);

  std::vector<AssignmentCandidate> out;
  out.reserve(num_speakers + 1);
  out.push_back({last, false, change_log_prob(false, params.p0)});
  for (SpeakerId k = 1; k <= num_speakers; ++k) {
    if (k == last) continue;
    out.push_back({k, true, log_change + std::log(state.count(k)) - log_norm});
  }
  out.push_back({num_speakers + 1, true,
                 log_change + std::log(params.alpha) - log_norm});
  return out;
}

double sequence_assignment_log_prob(const LabelSequence &labels,
                                    const ChangeIndicators &z, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  check_consistent(labels, z);
  const BlockCounts final_counts = block_counts(labels);
  double value = (final_counts.num_speakers() - 1) * std::log(alpha);
  for (int n : final_counts.counts()) value += std::lgamma(static_cast<double>(n));
  for_each_change(labels, [&](double others) { value -= std::log(others + alpha); });
  return value;
}

double grad_alpha(const LabelSequence &labels, const ChangeIndicators &z,
                  double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  check_consistent(labels, z);
  double grad = (labels.num_speakers() - 1) / alpha;
  for_each_change(labels, [&](double others) { grad -= 1.0 / (others + alpha); });
  return grad;
}

double change_sequence_log_prob(const ChangeIndicators &z, double p0) {
  double value = 0.0;
  for (auto zt : z) value += change_log_prob(zt != 0, p0);
  return value;
}

double estimate_p0(std::span<const LabelSequence> corpus) {
  long same = 0;
  long transitions = 0;
  for (const auto &labels : corpus) {
    for (int t = 1; t < labels.length(); ++t)
      if (labels[t] == labels[t - 1]) ++same;
    transitions += labels.length() - 1;
  }
  if (transitions == 0) throw std::invalid_argument("p0 undefined");
  return static_cast<double>(same) / static_cast<double>(transitions);
}

}  // namespace uisrnn
