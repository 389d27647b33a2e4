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

// RFC 4180 style comma-separated values.

#ifndef CODEWIZARD_CSV_HPP
#define CODEWIZARD_CSV_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace codewizard::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line where the record starts
};

/// Splits `text` into records. Quoted fields may contain commas, doubled
/// quotes and line breaks. Blank lines are skipped, a leading UTF-8 BOM is
/// ignored and both LF and CRLF endings are accepted. Throws ParseError
/// (tagged with `file_name`) on an unterminated or misplaced quote.
std::vector<Record> Parse(std::string_view text, const std::string& file_name);

/// One line, LF-terminated. Fields are quoted only when they need to be.
std::string FormatRow(std::span<const std::string> fields);

}  // namespace codewizard::csv

#endif  // CODEWIZARD_CSV_HPP
