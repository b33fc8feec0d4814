// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.h
 * @brief  Full parameter set and the joint log-probability of a labeled
 *         utterance.
 */
#ifndef UISRNN_MODEL_H_
#define UISRNN_MODEL_H_

#include <string>

#include "uisrnn/ddcrp.h"
#include "uisrnn/labels.h"
#include "uisrnn/sequence_net.h"

namespace uisrnn {

struct ModelParams {
  NetParams net;
  EmissionParams emission;
  PriorParams prior;

  void validate() const;
  bool operator==(const ModelParams &other) const;
};

struct Utterance {
  std::string id;
  EmbeddingSequence embeddings;
  LabelSequence labels;
};

/// Split of ln p(X, Y, Z) into its three factors.
struct JointLogProb {
  double emission = 0.0;    ///< ln p(X | Y)
  double assignment = 0.0;  ///< ln p(Y | Z, alpha)
  double change = 0.0;      ///< ln p(Z | p0)

  double total() const { return emission + assignment + change; }
};

JointLogProb joint_log_prob(const EmbeddingSequence &x, const LabelSequence &y,
                            const ModelParams &params);

}  // namespace uisrnn

#endif  // UISRNN_MODEL_H_
