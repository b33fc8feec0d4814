// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/labels.h"

#include <cmath>

namespace uisrnn {

EmbeddingSequence::EmbeddingSequence(Eigen::MatrixXd values)
    : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw std::invalid_argument("embedding sequence must have T >= 1, d >= 1");
  if (!values_.allFinite())
    throw std::invalid_argument("embedding sequence has non-finite entries");
}

bool is_canonical(std::span<const SpeakerId> raw) {
  if (raw.empty()) return false;
  SpeakerId max_seen = 0;
  for (SpeakerId y : raw) {
    if (y < 1 || y > max_seen + 1) return false;
    if (y > max_seen) max_seen = y;
  }
  return true;
}

LabelSequence::LabelSequence(std::vector<SpeakerId> labels)
    : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("empty sequence");
  if (!is_canonical(labels_))
    throw std::invalid_argument("non-canonical label sequence");
  for (SpeakerId y : labels_)
    if (y > num_speakers_) num_speakers_ = y;
}

ChangeIndicators derive_change_indicators(const LabelSequence &labels) {
  ChangeIndicators z;
  if (labels.length() < 2) return z;
  z.reserve(labels.length() - 1);
  for (int t = 1; t < labels.length(); ++t)
    z.push_back(labels[t] != labels[t - 1] ? 1 : 0);
  return z;
}

void BlockCounts::push(SpeakerId next_label) {
  const int k = num_speakers();
  if (next_label < 1 || next_label > k + 1)
    throw std::invalid_argument("non-canonical label");
  if (next_label == k + 1) counts_.push_back(0);
  if (next_label != last_) {
    ++counts_[next_label - 1];
    ++total_;
  }
  last_ = next_label;
}

BlockCounts block_counts(const LabelSequence &labels_prefix) {
  if (labels_prefix.length() == 0) throw std::invalid_argument("empty sequence");
  BlockCounts state;
  for (SpeakerId y : labels_prefix.values()) state.push(y);
  return state;
}

BlockCounts update_block_counts(BlockCounts state, SpeakerId next_label) {
  state.push(next_label);
  return state;
}

}  // namespace uisrnn
