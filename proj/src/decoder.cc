// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/decoder.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uisrnn {

namespace {

// Tie-break key of a full labeling: 0 for a continuation, otherwise the
// speaker switched to. Lexicographically smaller keys win ties.
std::vector<int> tie_key(const std::vector<SpeakerId> &labels) {
  std::vector<int> key(labels.size());
  for (size_t t = 0; t < labels.size(); ++t)
    key[t] = (t > 0 && labels[t] == labels[t - 1]) ? 0 : labels[t];
  return key;
}

bool within_tie_tolerance(double score, double best) {
  return score >= best - kTieTolerance * std::max(1.0, std::abs(best));
}

void extend_rgs(std::vector<SpeakerId> &prefix, int max_label, int length,
                std::vector<std::vector<SpeakerId>> &out) {
  if (static_cast<int>(prefix.size()) == length) {
    out.push_back(prefix);
    return;
  }
  for (SpeakerId k = 1; k <= max_label + 1; ++k) {
    prefix.push_back(k);
    extend_rgs(prefix, std::max(max_label, k), length, out);
    prefix.pop_back();
  }
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
  if (max_speakers && *max_speakers < 1)
    throw std::invalid_argument("max speakers must be >= 1");
  if (look_ahead < 0) throw std::invalid_argument("look-ahead must be >= 0");
}

LabelSequence DecoderHypothesis::labels() const {
  std::vector<SpeakerId> out(length);
  const LabelNode *node = tail.get();
  for (int t = length - 1; t >= 0; --t, node = node->parent.get()) out[t] = node->label;
  return LabelSequence(std::move(out));
}

SpeakerId DecoderHypothesis::label_at(int t) const {
  if (t < 0 || t >= length) throw std::out_of_range("label position out of range");
  const LabelNode *node = tail.get();
  for (int i = length - 1; i > t; --i) node = node->parent.get();
  return node->label;
}

std::vector<StepCandidate> step_scores(const DecoderHypothesis &hyp,
                                       const Eigen::VectorXd &x,
                                       const ModelParams &params,
                                       const DecodeConfig &config) {
  const NetParams &net = params.net;
  if (x.size() != net.dims.input) throw std::invalid_argument("frame dimension mismatch");
  const double sigma2 = params.emission.sigma2();
  const SpeakerThread fresh = SpeakerThread::fresh(net.dims);

  auto score = [&](SpeakerId k, bool z, double log_prior) {
    const SpeakerThread &thread =
        k <= static_cast<int>(hyp.threads.size()) ? hyp.threads[k - 1] : fresh;
    ThreadProposal p = propose(thread, net);
    const double emission = gaussian_log_pdf(x, p.mean, sigma2);
    return StepCandidate{k, z, log_prior, emission, std::move(p)};
  };

  std::vector<StepCandidate> out;
  if (hyp.length == 0) {
    out.push_back(score(1, false, 0.0));
    return out;
  }
  const auto priors = assignment_candidates(hyp.blocks, params.prior);
  out.reserve(priors.size());
  const bool capped = config.max_speakers && hyp.blocks.num_speakers() >= *config.max_speakers;
  for (const auto &c : priors) {
    if (capped && c.speaker > hyp.blocks.num_speakers()) continue;
    out.push_back(score(c.speaker, c.z, c.log_prior));
  }
  return out;
}

DecoderHypothesis extend(const DecoderHypothesis &hyp, StepCandidate candidate,
                         const Eigen::VectorXd &x) {
  DecoderHypothesis next = hyp;
  next.tail = std::make_shared<const LabelNode>(LabelNode{candidate.speaker, hyp.tail});
  ++next.length;
  if (candidate.speaker > static_cast<int>(next.threads.size()))
    next.threads.push_back({Eigen::VectorXd::Zero(candidate.proposal.hidden.size()),
                            Eigen::VectorXd::Zero(x.size()), Eigen::VectorXd::Zero(x.size()), 0});
  commit(next.threads[candidate.speaker - 1], std::move(candidate.proposal), x);
  next.blocks.push(candidate.speaker);
  next.log_prob += candidate.log_prior + candidate.log_emission;
  return next;
}

OnlineDecoder::OnlineDecoder(const ModelParams &params, DecodeConfig config)
    : params_(params), config_(config) {
  config_.validate();
  beam_.emplace_back();
}

void OnlineDecoder::push(const Eigen::VectorXd &x) {
  struct Expansion {
    int parent;
    StepCandidate candidate;
    double score;
  };
  std::vector<Expansion> expansions;
  for (int i = 0; i < static_cast<int>(beam_.size()); ++i) {
    auto candidates = step_scores(beam_[i], x, params_, config_);
    stats_.max_candidates_per_step =
        std::max(stats_.max_candidates_per_step, static_cast<int>(candidates.size()));
    stats_.total_candidates += static_cast<long>(candidates.size());
    for (auto &c : candidates) {
      const double score = beam_[i].log_prob + c.step_log_prob();
      expansions.push_back({i, std::move(c), score});
    }
  }
  // Stable: equal scores keep parent rank, then candidate order.
  std::stable_sort(expansions.begin(), expansions.end(),
                   [](const Expansion &a, const Expansion &b) { return a.score > b.score; });
  const size_t keep = std::min<size_t>(expansions.size(), config_.beam_width);
  std::vector<DecoderHypothesis> next;
  next.reserve(keep);
  for (size_t i = 0; i < keep; ++i)
    next.push_back(extend(beam_[expansions[i].parent], std::move(expansions[i].candidate), x));
  beam_ = std::move(next);

  if (config_.look_ahead > 0 && beam_.front().length > config_.look_ahead) {
    const int position = beam_.front().length - config_.look_ahead - 1;
    const SpeakerId label = beam_.front().label_at(position);
    committed_.push_back(label);
    std::erase_if(beam_, [&](const DecoderHypothesis &h) { return h.label_at(position) != label; });
  }
}

DecodeResult OnlineDecoder::finish() const {
  if (beam_.front().length == 0) throw std::logic_error("decoder has consumed no frames");
  const double best = beam_.front().log_prob;
  const DecoderHypothesis *chosen = &beam_.front();
  std::vector<int> chosen_key = tie_key(chosen->labels().values());
  for (size_t i = 1; i < beam_.size(); ++i) {
    if (!within_tie_tolerance(beam_[i].log_prob, best)) break;
    std::vector<int> key = tie_key(beam_[i].labels().values());
    if (key < chosen_key) {
      chosen = &beam_[i];
      chosen_key = std::move(key);
    }
  }
  return {chosen->labels(), chosen->log_prob, stats_};
}

DecodeResult decode_beam(const EmbeddingSequence &x, const ModelParams &params,
                         const DecodeConfig &config) {
  OnlineDecoder decoder(params, config);
  for (int t = 0; t < x.length(); ++t) decoder.push(x.frame(t));
  return decoder.finish();
}

DecodeResult decode_greedy(const EmbeddingSequence &x, const ModelParams &params,
                           const DecodeConfig &config) {
  DecodeConfig greedy = config;
  greedy.beam_width = 1;
  greedy.validate();
  DecoderHypothesis hyp;
  DecodeStats stats;
  std::vector<SpeakerId> labels;
  labels.reserve(x.length());
  for (int t = 0; t < x.length(); ++t) {
    const Eigen::VectorXd xt = x.frame(t);
    auto candidates = step_scores(hyp, xt, params, greedy);
    stats.max_candidates_per_step =
        std::max(stats.max_candidates_per_step, static_cast<int>(candidates.size()));
    stats.total_candidates += static_cast<long>(candidates.size());
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i)
      if (candidates[i].step_log_prob() > candidates[best].step_log_prob()) best = i;
    StepCandidate &c = candidates[best];
    if (c.speaker > static_cast<int>(hyp.threads.size()))
      hyp.threads.push_back(SpeakerThread::fresh(params.net.dims));
    hyp.tail = std::make_shared<const LabelNode>(LabelNode{c.speaker, hyp.tail});
    ++hyp.length;
    hyp.log_prob += c.step_log_prob();
    hyp.blocks.push(c.speaker);
    labels.push_back(c.speaker);
    commit(hyp.threads[c.speaker - 1], std::move(c.proposal), xt);
  }
  return {LabelSequence(std::move(labels)), hyp.log_prob, stats};
}

std::vector<std::vector<SpeakerId>> enumerate_label_sequences(int length) {
  std::vector<std::vector<SpeakerId>> out;
  if (length < 1) return out;
  std::vector<SpeakerId> prefix{1};
  extend_rgs(prefix, 1, length, out);
  return out;
}

ExhaustiveResult exhaustive_decode(const EmbeddingSequence &x,
                                   const ModelParams &params) {
  if (x.length() > kExhaustiveMaxLength) throw std::invalid_argument("oracle guard");
  const auto all = enumerate_label_sequences(x.length());
  std::vector<double> scores(all.size());
  for (size_t i = 0; i < all.size(); ++i)
    scores[i] = joint_log_prob(x, LabelSequence(all[i]), params).total();
  const double top = *std::max_element(scores.begin(), scores.end());
  size_t best = all.size();
  for (size_t i = 0; i < all.size(); ++i) {
    if (!within_tie_tolerance(scores[i], top)) continue;
    if (best == all.size() || tie_key(all[i]) < tie_key(all[best])) best = i;
  }
  return {LabelSequence(all[best]), scores[best], static_cast<std::int64_t>(all.size())};
}

}  // namespace uisrnn
