/*
 * Copyright 2026 The Code Wizard Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CODEWIZARD_ERROR_HPP
#define CODEWIZARD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace codewizard {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is the 1-based physical line, 0 if the
/// error concerns the file as a whole.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(Format(file, line, what)), file_(std::move(file)), line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  static std::string Format(const std::string& file, std::size_t line,
                            const std::string& what) {
    std::string out = file.empty() ? std::string("<input>") : file;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string file_;
  std::size_t line_;
};

/// Structurally valid input that cannot be combined (aggregation, deltas).
class RejectionError : public Error {
 public:
  using Error::Error;
};

/// A statistic that is undefined or whose preconditions do not hold.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Bundle-level I/O problems: missing files, version mismatch, unwritable.
class StorageError : public Error {
 public:
  using Error::Error;
};

}  // namespace codewizard

#endif  // CODEWIZARD_ERROR_HPP
