// SPDX-License-Identifier: Apache-2.0
#ifndef UISRNN_ASSIGNMENT_H_
#define UISRNN_ASSIGNMENT_H_

#include <vector>

#include <Eigen/Dense>

namespace uisrnn {

/// One-to-one assignment of rows to columns maximizing the total weight
/// (Hungarian algorithm, O(n^3) on the padded square problem). Returns the
/// matched column per row, or -1 for rows left unmatched when there are more
/// rows than columns.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd &weights);

}  // namespace uisrnn

#endif  // UISRNN_ASSIGNMENT_H_
