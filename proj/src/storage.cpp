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

#include "codewizard/storage.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "codewizard/csv.hpp"

namespace codewizard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kCodebookFile = "codebook.csv";
constexpr const char* kUnitsFile = "units.csv";
constexpr const char* kLockFile = ".codewizard.lock";
constexpr const char* kMetricsManifest = "metrics_manifest.json";

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string Upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool IsHexColor(std::string_view s) {
  return s.size() == 7 && s[0] == '#' &&
         std::all_of(s.begin() + 1, s.end(), [](unsigned char c) {
           return std::isxdigit(c) != 0;
         });
}

// Column positions of a header row, validated against the known names.
class Header {
 public:
  Header(const csv::Record& record, const std::string& file,
         std::initializer_list<std::string_view> required,
         std::initializer_list<std::string_view> optional)
      : width_(record.fields.size()) {
    for (std::size_t i = 0; i < record.fields.size(); ++i) {
      const std::string name = Trim(record.fields[i]);
      const bool known =
          std::find(required.begin(), required.end(), name) != required.end() ||
          std::find(optional.begin(), optional.end(), name) != optional.end();
      if (!known) {
        throw ParseError(file, record.line, "unknown column '" + name + "'");
      }
      if (!columns_.emplace(name, i).second) {
        throw ParseError(file, record.line, "duplicate column '" + name + "'");
      }
    }
    for (std::string_view name : required) {
      if (!columns_.count(std::string(name))) {
        throw ParseError(file, record.line,
                         "missing required column '" + std::string(name) + "'");
      }
    }
  }

  std::optional<std::size_t> Find(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) return std::nullopt;
    return it->second;
  }

  std::string Get(const csv::Record& row, const std::string& name) const {
    auto i = Find(name);
    return i ? row.fields[*i] : std::string();
  }

  void CheckWidth(const csv::Record& row, const std::string& file) const {
    if (row.fields.size() != width_) {
      throw ParseError(file, row.line,
                       "malformed row: expected " + std::to_string(width_) +
                           " fields, found " + std::to_string(row.fields.size()));
    }
  }

 private:
  std::size_t width_;
  std::map<std::string, std::size_t> columns_;
};

// flock(2)-based advisory lock on the bundle's lock file.
class BundleLock {
 public:
  BundleLock(const fs::path& dir, bool exclusive) {
    const fs::path path = dir / kLockFile;
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      // Read-only bundles can still be loaded without a lock.
      if (exclusive) throw StorageError("cannot lock " + path.string());
      return;
    }
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      throw StorageError("cannot lock " + path.string());
    }
  }
  ~BundleLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  BundleLock(const BundleLock&) = delete;
  BundleLock& operator=(const BundleLock&) = delete;

 private:
  int fd_ = -1;
};

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string FormatFixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, RoundForDisplay(v, decimals));
  return buf;
}

std::string ScopeName(const MetricScope& scope) {
  return scope.is_team() ? std::string("team") : "coder:" + *scope.coder_id;
}

}  // namespace

Codebook ParseCodebook(std::string_view text, const std::string& file_name) {
  const auto records = csv::Parse(text, file_name);
  if (records.empty()) throw ParseError(file_name, 0, "no codes");
  const Header header(records[0], file_name, {"id", "label", "definition"},
                      {"color"});
  if (records.size() == 1) {
    throw ParseError(file_name, records[0].line, "no codes");
  }

  Codebook codebook;
  std::map<std::string, std::size_t> id_lines;
  std::map<std::string, std::size_t> color_lines;
  std::vector<std::size_t> uncolored;
  std::vector<std::size_t> lines;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    header.CheckWidth(row, file_name);
    Code code{Trim(header.Get(row, "id")), header.Get(row, "label"),
              header.Get(row, "definition"), Trim(header.Get(row, "color"))};
    if (code.id.empty()) throw ParseError(file_name, row.line, "empty code id");
    if (auto [it, fresh] = id_lines.emplace(code.id, row.line); !fresh) {
      throw ParseError(file_name, row.line,
                       "duplicate code id '" + code.id + "' (first on line " +
                           std::to_string(it->second) + ")");
    }
    if (code.color.empty()) {
      uncolored.push_back(codebook.codes.size());
    } else {
      if (!IsHexColor(code.color)) {
        throw ParseError(file_name, row.line,
                         "color '" + code.color + "' is not #RRGGBB");
      }
      code.color = Upper(code.color);
      if (auto [it, fresh] = color_lines.emplace(code.color, row.line); !fresh) {
        throw ParseError(file_name, row.line,
                         "color " + code.color + " already used on line " +
                             std::to_string(it->second));
      }
    }
    lines.push_back(row.line);
    codebook.codes.push_back(std::move(code));
  }

  std::size_t next = 0;
  for (std::size_t i : uncolored) {
    while (next < kPalette.size() &&
           color_lines.count(std::string(kPalette[next]))) {
      ++next;
    }
    if (next == kPalette.size()) {
      throw ParseError(file_name, lines[i],
                       "palette exhausted after " +
                           std::to_string(kPalette.size()) +
                           " colors; give code '" + codebook.codes[i].id +
                           "' an explicit color");
    }
    codebook.codes[i].color = std::string(kPalette[next]);
    color_lines.emplace(codebook.codes[i].color, lines[i]);
  }
  return codebook;
}

std::string FormatCodebook(const Codebook& codebook) {
  std::string out = "id,label,definition,color\n";
  for (const auto& c : codebook.codes) {
    const std::vector<std::string> row{c.id, c.label, c.definition, c.color};
    out += csv::FormatRow(row);
  }
  return out;
}

std::vector<Unit> ParseUnits(std::string_view text,
                             const std::string& file_name) {
  const auto records = csv::Parse(text, file_name);
  if (records.empty()) throw ParseError(file_name, 0, "missing header row");
  const Header header(records[0], file_name, {"unit_id", "text"},
                      {"timestamp", "source_link"});

  std::vector<Unit> units;
  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    header.CheckWidth(row, file_name);
    Unit unit{Trim(header.Get(row, "unit_id")), header.Get(row, "timestamp"),
              header.Get(row, "text"), header.Get(row, "source_link")};
    if (unit.id.empty()) throw ParseError(file_name, row.line, "empty unit_id");
    if (auto [it, fresh] = seen.emplace(unit.id, row.line); !fresh) {
      throw ParseError(file_name, row.line,
                       "duplicate unit id '" + unit.id + "' (first on line " +
                           std::to_string(it->second) + ")");
    }
    if (unit.text.empty()) {
      throw ParseError(file_name, row.line,
                       "unit '" + unit.id + "' has empty text");
    }
    units.push_back(std::move(unit));
  }
  return units;
}

std::string FormatUnits(std::span<const Unit> units) {
  std::string out = "unit_id,timestamp,text,source_link\n";
  for (const auto& u : units) {
    const std::vector<std::string> row{u.id, u.timestamp, u.text, u.source_link};
    out += csv::FormatRow(row);
  }
  return out;
}

CoderSheet ParseCoderSheet(std::string_view text,
                           const std::string& file_name) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  // "# key: value" lines precede the CSV body.
  CoderSheet sheet;
  bool has_coder = false;
  std::size_t line = 1;
  while (!text.empty() && text.front() == '#') {
    const std::size_t eol = text.find('\n');
    std::string_view directive = text.substr(1, eol == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : eol - 1);
    if (!directive.empty() && directive.back() == '\r') directive.remove_suffix(1);
    const std::size_t colon = directive.find(':');
    if (colon != std::string_view::npos &&
        Trim(directive.substr(0, colon)) == "coder") {
      sheet.coder_id = Trim(directive.substr(colon + 1));
      if (sheet.coder_id.empty()) {
        throw ParseError(file_name, line, "empty coder id");
      }
      has_coder = true;
    }
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line;
  }
  if (!has_coder) {
    throw ParseError(file_name, 1, "missing '# coder: <id>' header line");
  }

  auto records = csv::Parse(text, file_name);
  for (auto& r : records) r.line += line - 1;
  if (records.empty()) throw ParseError(file_name, line, "missing header row");
  const Header header(records[0], file_name, {"unit_id", "primary"},
                      {"secondary"});

  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    header.CheckWidth(row, file_name);
    SheetRow entry;
    entry.unit_id = Trim(header.Get(row, "unit_id"));
    entry.line = row.line;
    if (entry.unit_id.empty()) {
      throw ParseError(file_name, row.line, "malformed row: empty unit_id");
    }
    if (auto [it, fresh] = seen.emplace(entry.unit_id, row.line); !fresh) {
      throw ParseError(file_name, row.line,
                       "duplicate unit '" + entry.unit_id + "' (lines " +
                           std::to_string(it->second) + " and " +
                           std::to_string(row.line) + ")");
    }
    if (auto p = Trim(header.Get(row, "primary")); !p.empty()) entry.primary = p;
    if (auto s = Trim(header.Get(row, "secondary")); !s.empty()) {
      entry.secondary = s;
    }
    sheet.rows.push_back(std::move(entry));
  }
  return sheet;
}

std::string FormatCoderSheet(const CoderSheet& sheet, bool with_secondary) {
  std::string out = "# coder: " + sheet.coder_id + "\n";
  out += with_secondary ? "unit_id,primary,secondary\n" : "unit_id,primary\n";
  for (const auto& row : sheet.rows) {
    std::vector<std::string> fields{row.unit_id, row.primary.value_or("")};
    if (with_secondary) fields.push_back(row.secondary.value_or(""));
    out += csv::FormatRow(fields);
  }
  return out;
}

CoderSheet SheetFromRound(const Round& round, std::size_t coder) {
  const auto& m = round.assignments;
  CoderSheet sheet;
  sheet.coder_id = m.coder_ids().at(coder);
  for (std::size_t u = 0; u < m.num_units(); ++u) {
    SheetRow row;
    row.unit_id = m.unit_ids()[u];
    if (const auto& cell = m.at(u, coder)) {
      row.primary = cell->primary;
      row.secondary = cell->secondary;
    }
    sheet.rows.push_back(std::move(row));
  }
  return sheet;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFileAtomic(const fs::path& path, std::string_view content) {
  const fs::path tmp =
      path.parent_path() /
      (path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw StorageError("cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw StorageError("cannot replace " + path.string());
  }
}

namespace {

std::string RoundDirectory(int index) { return "round-" + std::to_string(index); }

std::string SheetFileName(std::size_t coder) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "coder-%02zu.csv", coder + 1);
  return buf;
}

Project LoadUnlocked(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifest;
  if (!fs::exists(manifest_path)) {
    throw StorageError("no " + std::string(kManifest) + " in " + dir.string());
  }
  json manifest;
  try {
    manifest = json::parse(ReadFile(manifest_path));
  } catch (const json::exception& e) {
    throw StorageError("malformed " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("format_version")) {
    throw StorageError("unversioned bundle: " + manifest_path.string() +
                       " has no format_version");
  }

  try {
    const int version = manifest.at("format_version").get<int>();
    if (version > kBundleFormatVersion) {
      throw StorageError("bundle format version " + std::to_string(version) +
                         " is newer than supported version " +
                         std::to_string(kBundleFormatVersion));
    }

    Project project;
    project.name = manifest.value("name", std::string());
    project.revision = manifest.at("revision").get<std::uint64_t>();
    project.coders = manifest.at("coders").get<std::vector<std::string>>();
    project.codebook = ParseCodebook(ReadFile(dir / kCodebookFile),
                                     (dir / kCodebookFile).string());
    project.codebook.instructions = manifest.value("instructions", std::string());
    project.units =
        ParseUnits(ReadFile(dir / kUnitsFile), (dir / kUnitsFile).string());

    for (const auto& rj : manifest.at("rounds")) {
      const int index = rj.at("index").get<int>();
      const auto mode = ParseRoundMode(rj.at("mode").get<std::string>());
      if (!mode) {
        throw StorageError("round " + std::to_string(index) +
                           ": unknown mode " + rj.at("mode").dump());
      }
      const fs::path round_dir = dir / rj.at("directory").get<std::string>();
      if (!fs::is_directory(round_dir)) {
        throw StorageError("round " + std::to_string(index) + ": directory '" +
                           round_dir.filename().string() + "' is missing");
      }

      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(round_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      std::map<std::string, CoderSheet> by_coder;
      for (const auto& file : files) {
        CoderSheet sheet = ParseCoderSheet(ReadFile(file), file.string());
        std::string id = sheet.coder_id;
        if (!by_coder.emplace(id, std::move(sheet)).second) {
          throw StorageError("round " + std::to_string(index) + ": coder '" +
                             id + "' has more than one sheet");
        }
      }

      std::vector<CoderSheet> sheets;
      for (const auto& coder : rj.at("coders").get<std::vector<std::string>>()) {
        auto it = by_coder.find(coder);
        if (it == by_coder.end()) {
          throw StorageError("round " + std::to_string(index) +
                             ": no sheet for coder '" + coder + "'");
        }
        sheets.push_back(std::move(it->second));
        by_coder.erase(it);
      }
      if (!by_coder.empty()) {
        throw StorageError("round " + std::to_string(index) + ": sheet for coder '" +
                           by_coder.begin()->first +
                           "' is not listed in the manifest");
      }

      AggregateOptions options;
      options.round_index = index;
      options.mode = *mode;
      options.note = rj.value("note", std::string());
      project.rounds.push_back(
          Aggregate(sheets, project.codebook, project.units, options));
    }
    return project;
  } catch (const json::exception& e) {
    throw StorageError("malformed " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace

Project LoadProject(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw StorageError("no project bundle at " + dir.string());
  }
  BundleLock lock(dir, /*exclusive=*/false);
  return LoadUnlocked(dir);
}

void SaveProject(const Project& project, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create " + dir.string());
  BundleLock lock(dir, /*exclusive=*/true);

  WriteFileAtomic(dir / kCodebookFile, FormatCodebook(project.codebook));
  WriteFileAtomic(dir / kUnitsFile, FormatUnits(project.units));

  json rounds = json::array();
  for (const auto& round : project.rounds) {
    const std::string name = RoundDirectory(round.index);
    const fs::path round_dir = dir / name;
    fs::create_directories(round_dir, ec);
    if (ec) throw StorageError("cannot create " + round_dir.string());

    const auto& m = round.assignments;
    bool with_secondary = round.mode == RoundMode::kDouble;
    for (std::size_t u = 0; u < m.num_units() && !with_secondary; ++u) {
      for (std::size_t c = 0; c < m.num_coders(); ++c) {
        if (m.at(u, c) && m.at(u, c)->secondary) with_secondary = true;
      }
    }
    std::set<std::string> written;
    for (std::size_t c = 0; c < m.num_coders(); ++c) {
      const std::string file = SheetFileName(c);
      WriteFileAtomic(round_dir / file,
                      FormatCoderSheet(SheetFromRound(round, c), with_secondary));
      written.insert(file);
    }
    for (const auto& entry : fs::directory_iterator(round_dir)) {
      if (entry.path().extension() == ".csv" &&
          !written.count(entry.path().filename().string())) {
        fs::remove(entry.path(), ec);
      }
    }
    rounds.push_back({{"index", round.index},
                      {"mode", ToString(round.mode)},
                      {"directory", name},
                      {"coders", m.coder_ids()},
                      {"note", round.note}});
  }

  json manifest{{"format_version", kBundleFormatVersion},
                {"name", project.name},
                {"revision", project.revision},
                {"instructions", project.codebook.instructions},
                {"coders", project.coders},
                {"rounds", std::move(rounds)}};
  WriteFileAtomic(dir / kManifest, manifest.dump(2) + "\n");
}

std::optional<ExportFormat> ParseExportFormat(std::string_view text) {
  if (text == "json") return ExportFormat::kJson;
  if (text == "csv") return ExportFormat::kCsv;
  return std::nullopt;
}

namespace {

std::string AgreementCsv(const MetricsSnapshot& s) {
  std::string out = "unit_id,n_coders,p_i,p_i_display,shade\n";
  for (const auto& row : s.agreements) {
    const std::vector<std::string> fields{
        row.unit_id, std::to_string(row.n_coders),
        row.p_i ? FormatDouble(*row.p_i) : "",
        row.p_i ? FormatFixed(*row.p_i, 2) : "",
        row.shade ? std::string(ToString(*row.shade)) : ""};
    out += csv::FormatRow(fields);
  }
  return out;
}

std::string CertaintyCsv(const MetricsSnapshot& s) {
  std::string out =
      "scope,code,n_primary_uses,n_same_secondary,certainty,certainty_percent\n";
  for (const auto& report : *s.certainty.value) {
    for (std::size_t i = 0; i < report.code_ids.size(); ++i) {
      const auto& c = report.per_code[i];
      const std::vector<std::string> fields{
          ScopeName(report.scope), report.code_ids[i],
          std::to_string(c.n_primary_uses), std::to_string(c.n_same_secondary),
          c.certainty ? FormatDouble(*c.certainty) : "",
          c.certainty ? FormatFixed(*c.certainty * 100.0, 0) : ""};
      out += csv::FormatRow(fields);
    }
  }
  return out;
}

std::string PsMatrixCsv(const MetricsSnapshot& s) {
  std::string out;
  bool header_written = false;
  for (const auto& ps : *s.ps_matrices.value) {
    if (!header_written) {
      std::vector<std::string> header{"scope", "primary", "n_primary"};
      for (const auto& id : ps.code_ids) header.push_back(id);
      for (const auto& id : ps.code_ids) header.push_back(id + "_percent");
      out += csv::FormatRow(header);
      header_written = true;
    }
    for (std::size_t p = 0; p < ps.size(); ++p) {
      std::vector<std::string> fields{ScopeName(ps.scope), ps.code_ids[p],
                                      std::to_string(ps.row_counts[p])};
      for (std::size_t q = 0; q < ps.size(); ++q) {
        auto v = ps.cell(p, q);
        fields.push_back(v ? FormatDouble(*v) : "");
      }
      for (std::size_t q = 0; q < ps.size(); ++q) {
        auto v = ps.cell(p, q);
        fields.push_back(v ? FormatFixed(*v * 100.0, 0) : "");
      }
      out += csv::FormatRow(fields);
    }
  }
  return out;
}

std::string ConnectionDegreesCsv(const ConnectionDegreeTable& t) {
  // Self pairs first, then mixed pairs in codebook order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t x = 0; x < t.size(); ++x) pairs.emplace_back(x, x);
  for (std::size_t x = 0; x < t.size(); ++x) {
    for (std::size_t y = x + 1; y < t.size(); ++y) pairs.emplace_back(x, y);
  }
  std::vector<std::string> header{"row", "unit_id"};
  for (auto [x, y] : pairs) header.push_back(t.code_ids[x] + "/" + t.code_ids[y]);
  std::string out = csv::FormatRow(header);
  for (std::size_t u = 0; u < t.unit_ids.size(); ++u) {
    std::vector<std::string> fields{"unit", t.unit_ids[u]};
    for (auto [x, y] : pairs) fields.push_back(std::to_string(t.degree(u, x, y)));
    out += csv::FormatRow(fields);
  }
  std::vector<std::string> sums{"sum", ""};
  for (auto [x, y] : pairs) sums.push_back(std::to_string(t.sum(x, y)));
  out += csv::FormatRow(sums);
  return out;
}

std::string CdmCsv(const CorrelatedDisagreementMatrix& cdm) {
  std::vector<std::string> header{"code"};
  for (const auto& id : cdm.code_ids()) header.push_back(id);
  for (const auto& id : cdm.code_ids()) header.push_back(id + "_display");
  std::string out = csv::FormatRow(header);
  for (std::size_t x = 0; x < cdm.size(); ++x) {
    std::vector<std::string> fields{cdm.code_ids()[x]};
    for (std::size_t y = 0; y < cdm.size(); ++y) {
      fields.push_back(y < x ? FormatDouble(cdm.at(x, y)) : "");
    }
    for (std::size_t y = 0; y < cdm.size(); ++y) {
      fields.push_back(y < x ? FormatFixed(cdm.at(x, y), 2) : "");
    }
    out += csv::FormatRow(fields);
  }
  return out;
}

json FamilyFile(const MetricsSnapshot& s, const char* family, json data) {
  return json{{"schema_version", kSchemaVersion},
              {"revision", s.revision},
              {"round", s.round_index},
              {"family", family},
              {"data", std::move(data)}};
}

struct Family {
  const char* name;
  json (*to_json)(const MetricsSnapshot&);
};

constexpr Family kFamilies[] = {
    {"kappa", &KappaJson},
    {"per_unit_agreement", &AgreementJson},
    {"certainty", &CertaintyJson},
    {"ps_matrix", &PsMatrixJson},
    {"connection_degrees", &ConnectionDegreesJson},
    {"cdm", &CdmJson},
};

}  // namespace

std::vector<fs::path> ExportMetrics(const MetricsSnapshot& s,
                                    ExportFormat format, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw StorageError("cannot create " + out_dir.string());
  }

  std::vector<fs::path> written;
  json files = json::array();
  json omitted = json::object();
  auto emit = [&](const std::string& name, const std::string& content) {
    WriteFileAtomic(out_dir / name, content);
    written.push_back(out_dir / name);
    files.push_back(name);
  };

  const std::map<std::string, std::string> unavailable = [&] {
    std::map<std::string, std::string> m;
    if (!s.certainty.ok()) m["certainty"] = s.certainty.reason;
    if (!s.ps_matrices.ok()) m["ps_matrix"] = s.ps_matrices.reason;
    if (!s.connection_degrees.ok()) {
      m["connection_degrees"] = s.connection_degrees.reason;
    }
    if (!s.cdm.ok()) m["cdm"] = s.cdm.reason;
    return m;
  }();

  for (const Family& family : kFamilies) {
    const std::string name = family.name;
    const bool as_json =
        format == ExportFormat::kJson || name == "kappa";
    const std::string file = name + (as_json ? ".json" : ".csv");
    if (auto it = unavailable.find(name); it != unavailable.end()) {
      omitted[file] = it->second;
      continue;
    }
    if (as_json) {
      emit(file, FamilyFile(s, family.name, family.to_json(s)).dump(2) + "\n");
    } else if (name == "per_unit_agreement") {
      emit(file, AgreementCsv(s));
    } else if (name == "certainty") {
      emit(file, CertaintyCsv(s));
    } else if (name == "ps_matrix") {
      emit(file, PsMatrixCsv(s));
    } else if (name == "connection_degrees") {
      emit(file, ConnectionDegreesCsv(*s.connection_degrees.value));
    } else if (name == "cdm") {
      emit(file, CdmCsv(*s.cdm.value));
    }
  }

  json manifest{{"schema_version", kSchemaVersion},
                {"revision", s.revision},
                {"round", s.round_index},
                {"mode", ToString(s.mode)},
                {"computed_at", s.computed_at},
                {"format", format == ExportFormat::kJson ? "json" : "csv"},
                {"files", files},
                {"omitted", omitted}};
  WriteFileAtomic(out_dir / kMetricsManifest, manifest.dump(2) + "\n");
  written.push_back(out_dir / kMetricsManifest);
  return written;
}

MetricsSnapshot LoadExportedSnapshot(const fs::path& dir) {
  try {
    const json manifest = json::parse(ReadFile(dir / kMetricsManifest));
    if (manifest.at("format").get<std::string>() != "json") {
      throw StorageError("only JSON exports can be read back");
    }
    json whole{{"schema_version", manifest.at("schema_version")},
               {"revision", manifest.at("revision")},
               {"round", manifest.at("round")},
               {"mode", manifest.at("mode")},
               {"computed_at", manifest.at("computed_at")}};
    const json& omitted = manifest.at("omitted");
    for (const Family& family : kFamilies) {
      const std::string file = std::string(family.name) + ".json";
      if (omitted.contains(file)) {
        whole[family.name] = {{"available", false},
                              {"reason", omitted.at(file)}};
        continue;
      }
      const json body = json::parse(ReadFile(dir / file));
      if (body.at("revision") != manifest.at("revision")) {
        throw StorageError(file + " belongs to a different revision");
      }
      whole[family.name] = body.at("data");
    }
    return SnapshotFromJson(whole);
  } catch (const json::exception& e) {
    throw StorageError("malformed export in " + dir.string() + ": " + e.what());
  }
}

fs::path WriteRoundDelta(const RoundDelta& delta, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw StorageError("cannot create " + out_dir.string());
  }
  const fs::path path = out_dir / "round_delta.json";
  WriteFileAtomic(path, RoundDeltaJson(delta).dump(2) + "\n");
  return path;
}

}  // namespace codewizard
