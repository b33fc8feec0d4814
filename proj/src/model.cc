// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/model.h"

#include <cmath>
#include <stdexcept>

namespace uisrnn {

void ModelParams::validate() const {
  net.validate();
  prior.validate();
  if (!std::isfinite(emission.log_sigma2))
    throw std::invalid_argument("log_sigma2 must be finite");
}

bool ModelParams::operator==(const ModelParams &other) const {
  return net == other.net && emission.log_sigma2 == other.emission.log_sigma2 &&
         prior.p0 == other.prior.p0 && prior.alpha == other.prior.alpha;
}

JointLogProb joint_log_prob(const EmbeddingSequence &x, const LabelSequence &y,
                            const ModelParams &params) {
  const ChangeIndicators z = derive_change_indicators(y);
  JointLogProb out;
  out.emission = forward_log_likelihood(x, y, params.net, params.emission).log_likelihood;
  out.assignment = sequence_assignment_log_prob(y, z, params.prior.alpha);
  out.change = change_sequence_log_prob(z, params.prior.p0);
  return out;
}

}  // namespace uisrnn
