// SPDX-License-Identifier: Apache-2.0
#ifndef UISRNN_ERROR_H_
#define UISRNN_ERROR_H_

#include <stdexcept>
#include <string>

namespace uisrnn {

/// Malformed input file. what() reads "<file>:<line>: <message>".
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string &file, long line, const std::string &message)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
        file_(file),
        line_(line) {}

  const std::string &file() const { return file_; }
  long line() const { return line_; }

 private:
  std::string file_;
  long line_;
};

}  // namespace uisrnn

#endif  // UISRNN_ERROR_H_
