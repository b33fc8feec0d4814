// SPDX-License-Identifier: Apache-2.0
/**
 * @file   io.h
 * @brief  Corpus and checkpoint files, synthetic sampling from the
 *         generative process, and cross-validation splits.
 *
 * Corpus files are JSON lines:
 *   {"utt": "id", "embeddings": [[x11, ..., x1d], ...], "labels": [1, 1, 2, ...]}
 * "labels" is optional and may hold any integers or strings; they are
 * canonicalized by order of first appearance on load.
 *
 * Checkpoints are a single JSON document carrying a format version, the
 * network dims, the GRU convention tag and every tensor as nested arrays.
 * Doubles are written as shortest round-trip decimals so save/load is exact.
 */
#ifndef UISRNN_IO_H_
#define UISRNN_IO_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uisrnn/model.h"
#include "uisrnn/trainer.h"

namespace uisrnn {

inline constexpr int kCheckpointVersion = 1;

struct CorpusEntry {
  std::string id;
  EmbeddingSequence embeddings;
  std::optional<LabelSequence> labels;

  bool operator==(const CorpusEntry &) const = default;
};

/// Throws FormatError with file name and 1-based line number.
std::vector<CorpusEntry> read_corpus(std::istream &in, const std::string &source_name);
std::vector<CorpusEntry> read_corpus_file(const std::string &path);
void write_corpus(std::ostream &out, std::span<const CorpusEntry> corpus);

/// Entries that carry labels, as training utterances. Throws FormatError if
/// any entry lacks labels or has a length mismatch.
std::vector<Utterance> to_utterances(std::span<const CorpusEntry> corpus,
                                     const std::string &source_name);

nlohmann::json train_config_to_json(const TrainConfig &config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json &j);

struct Checkpoint {
  ModelParams params;
  nlohmann::json train_config;  ///< echo of the config used, may be null
  std::uint64_t seed = 0;
};

nlohmann::json checkpoint_to_json(const Checkpoint &ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json &j, const std::string &source_name);
void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

struct SampledUtterance {
  EmbeddingSequence embeddings;
  LabelSequence labels;
  double log_prob = 0.0;  ///< ln p(X, Y, Z) accumulated while sampling
};

/// Draws one utterance from the generative process; deterministic in seed.
SampledUtterance sample_utterance(const ModelParams &params, int length,
                                  std::uint64_t seed);

struct Fold {
  std::vector<int> train;
  std::vector<int> eval;
};

/// Partitions [0, corpus_size) into k near-equal evaluation folds.
std::vector<Fold> kfold_split(int corpus_size, int k, std::uint64_t seed);

}  // namespace uisrnn

#endif  // UISRNN_IO_H_
