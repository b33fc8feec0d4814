// SPDX-License-Identifier: Apache-2.0
/**
 * @file   labels.h
 * @brief  Core sequence types: embedding sequences, canonical speaker
 *         labels, change indicators and block-count bookkeeping.
 *
 * Speaker ids are 1-based everywhere in the public interface. A label
 * sequence is kept in restricted-growth form: the first label is 1 and each
 * label is at most one more than the maximum seen before it.
 */
#ifndef UISRNN_LABELS_H_
#define UISRNN_LABELS_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace uisrnn {

using SpeakerId = int;

/// T x d matrix of finite embedding coordinates, one row per segment.
class EmbeddingSequence {
 public:
  EmbeddingSequence() = default;
  explicit EmbeddingSequence(Eigen::MatrixXd values);

  int length() const { return static_cast<int>(values_.rows()); }
  int dim() const { return static_cast<int>(values_.cols()); }
  const Eigen::MatrixXd &values() const { return values_; }
  /// Row t (0-based) as a column vector.
  Eigen::VectorXd frame(int t) const { return values_.row(t).transpose(); }

  bool operator==(const EmbeddingSequence &other) const {
    return values_ == other.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

class LabelSequence {
 public:
  LabelSequence() = default;
  /// Throws std::invalid_argument unless `labels` is nonempty and in
  /// restricted-growth form.
  explicit LabelSequence(std::vector<SpeakerId> labels);

  int length() const { return static_cast<int>(labels_.size()); }
  /// 0-based position, 1-based speaker id.
  SpeakerId operator[](int t) const { return labels_[t]; }
  const std::vector<SpeakerId> &values() const { return labels_; }
  int num_speakers() const { return num_speakers_; }

  bool operator==(const LabelSequence &other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<SpeakerId> labels_;
  int num_speakers_ = 0;
};

/// z[i] describes the transition into position i+1 (0-based), so the
/// vector has length T-1.
using ChangeIndicators = std::vector<std::uint8_t>;

/// Per-speaker block (maximal run) counts of a label prefix.
class BlockCounts {
 public:
  BlockCounts() = default;

  /// Block count for speaker k in [1, num_speakers()].
  int count(SpeakerId k) const { return counts_.at(k - 1); }
  const std::vector<int> &counts() const { return counts_; }
  SpeakerId last_speaker() const { return last_; }
  int num_speakers() const { return static_cast<int>(counts_.size()); }
  int total_blocks() const { return total_; }
  bool empty() const { return counts_.empty(); }

  /// Extends the prefix by one label in O(1) amortized time.
  void push(SpeakerId next_label);

  bool operator==(const BlockCounts &other) const = default;

 private:
  std::vector<int> counts_;
  SpeakerId last_ = 0;
  int total_ = 0;
};

/// Relabels ids by order of first appearance.
template <typename Id>
LabelSequence canonicalize(std::span<const Id> raw) {
  if (raw.empty()) throw std::invalid_argument("empty sequence");
  std::unordered_map<Id, SpeakerId> seen;
  std::vector<SpeakerId> out;
  out.reserve(raw.size());
  for (const Id &id : raw) {
    auto it = seen.find(id);
    if (it == seen.end())
      it = seen.emplace(id, static_cast<SpeakerId>(seen.size()) + 1).first;
    out.push_back(it->second);
  }
  return LabelSequence(std::move(out));
}

template <typename Id>
LabelSequence canonicalize(const std::vector<Id> &raw) {
  return canonicalize(std::span<const Id>(raw));
}

/// True if `raw` is nonempty and already in restricted-growth form.
bool is_canonical(std::span<const SpeakerId> raw);

ChangeIndicators derive_change_indicators(const LabelSequence &labels);

BlockCounts block_counts(const LabelSequence &labels_prefix);

/// Functional form of BlockCounts::push. Throws std::invalid_argument
/// ("non-canonical label") if next_label > num_speakers + 1.
BlockCounts update_block_counts(BlockCounts state, SpeakerId next_label);

}  // namespace uisrnn

#endif  // UISRNN_LABELS_H_
