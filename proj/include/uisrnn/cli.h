// SPDX-License-Identifier: Apache-2.0
#ifndef UISRNN_CLI_H_
#define UISRNN_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace uisrnn {

/// Entry point for the `uisrnn` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on runtime or file errors, 2 on usage errors.
int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace uisrnn

#endif  // UISRNN_CLI_H_
