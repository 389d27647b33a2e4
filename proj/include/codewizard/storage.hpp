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

// On-disk formats.
//
// A project bundle is a directory:
//
//   manifest.json          name, format version, revision, roster, rounds
//   codebook.csv           id,label,definition,color
//   units.csv              unit_id,timestamp,text,source_link
//   round-<n>/coder-*.csv  one sheet per coder, "# coder: <id>" first
//
// The manifest is the only source of a round's coding mode.

#ifndef CODEWIZARD_STORAGE_HPP
#define CODEWIZARD_STORAGE_HPP

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "codewizard/metrics.hpp"
#include "codewizard/model.hpp"
#include "codewizard/snapshot.hpp"

namespace codewizard {

inline constexpr int kBundleFormatVersion = 1;

/// Colors handed out, in order, to codes that do not declare one.
inline constexpr std::array<std::string_view, 12> kPalette = {
    "#E6194B", "#3CB44B", "#FFE119", "#4363D8", "#F58231", "#911EB4",
    "#42D4F4", "#F032E6", "#BFEF45", "#469990", "#9A6324", "#000075"};

Codebook ParseCodebook(std::string_view text,
                       const std::string& file_name = "codebook.csv");
std::string FormatCodebook(const Codebook& codebook);

std::vector<Unit> ParseUnits(std::string_view text,
                             const std::string& file_name = "units.csv");
std::string FormatUnits(std::span<const Unit> units);

/// Codes are kept as raw tokens; they are resolved when sheets are
/// aggregated.
CoderSheet ParseCoderSheet(std::string_view text, const std::string& file_name);
std::string FormatCoderSheet(const CoderSheet& sheet, bool with_secondary);

/// Column `coder` of a round as a sheet. Missing cells become rows with a
/// blank primary.
CoderSheet SheetFromRound(const Round& round, std::size_t coder);

std::string ReadFile(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content);

/// Throws StorageError for a missing or unversioned manifest, a format
/// version newer than supported, or a round whose directory or sheets do
/// not match the manifest. Parse errors propagate as ParseError.
Project LoadProject(const std::filesystem::path& dir);

/// Every file is replaced atomically; the manifest is written last.
void SaveProject(const Project& project, const std::filesystem::path& dir);

enum class ExportFormat { kJson, kCsv };

std::optional<ExportFormat> ParseExportFormat(std::string_view text);

/// Writes one file per metric family into `out_dir` plus
/// metrics_manifest.json, which lists the files and the reason for any
/// family that was left out. Returns the written paths.
std::vector<std::filesystem::path> ExportMetrics(
    const MetricsSnapshot& snapshot, ExportFormat format,
    const std::filesystem::path& out_dir);

/// Reads back a JSON-format export.
MetricsSnapshot LoadExportedSnapshot(const std::filesystem::path& dir);

std::filesystem::path WriteRoundDelta(const RoundDelta& delta,
                                      const std::filesystem::path& out_dir);

}  // namespace codewizard

#endif  // CODEWIZARD_STORAGE_HPP
