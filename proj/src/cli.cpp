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

#include "codewizard/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "CLI11.hpp"
#include "codewizard/server.hpp"
#include "codewizard/session.hpp"
#include "codewizard/snapshot.hpp"

namespace codewizard::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Values given on the command line; unset ones fall back to the config.
struct Flags {
  std::string project;
  std::string config;
  std::vector<int> rounds;
  std::string format;
  std::string host;
  int port = -1;
  std::string out;
};

void AddCommon(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--project,-p", flags.project, "Project bundle directory");
  cmd->add_option("--config", flags.config, "JSON config file");
}

CliConfig Resolve(const Flags& flags) {
  CliConfig config;
  if (const char* env = std::getenv(kProjectEnv); env && *env) {
    config.project = env;
  }
  if (!flags.config.empty()) ApplyConfigFile(flags.config, config);
  if (!flags.project.empty()) config.project = flags.project;
  if (!flags.rounds.empty()) config.round = flags.rounds.front();
  if (!flags.format.empty()) {
    auto format = ParseExportFormat(flags.format);
    if (!format) throw StorageError("unknown format '" + flags.format + "'");
    config.format = *format;
  }
  if (!flags.host.empty()) config.host = flags.host;
  if (flags.port >= 0) config.port = flags.port;
  if (config.project.empty()) {
    throw StorageError(std::string("no project given (use --project or ") +
                       kProjectEnv + ")");
  }
  return config;
}

json ViolationJson(const Violation& v) {
  return json{{"rule", v.rule},
              {"field", v.field},
              {"message", v.message},
              {"unit_ids", v.unit_ids},
              {"coder_id", v.coder_id}};
}

void PrintViolations(const std::vector<Violation>& violations,
                     std::ostream& os) {
  for (const auto& v : violations) {
    os << v.rule << " [" << v.field << "]: " << v.message << "\n";
  }
}

const Round& SelectRound(const Project& project, std::optional<int> index) {
  if (project.rounds.empty()) throw RejectionError("project has no rounds");
  if (!index) return project.rounds.back();
  const Round* round = project.FindRound(*index);
  if (round == nullptr) {
    throw RejectionError("no such round " + std::to_string(*index));
  }
  return *round;
}

int CmdValidate(const Flags& flags, bool json_report, std::ostream& out,
                std::ostream& err) {
  CliConfig config = Resolve(flags);
  Project project;
  try {
    project = LoadProject(config.project);
  } catch (const Error& e) {
    err << "error: cannot read bundle: " << e.what() << "\n";
    return kExitError;
  }
  const auto violations = ValidateProject(project);
  if (json_report) {
    json report{{"project", config.project.string()},
                {"revision", project.revision},
                {"count", violations.size()},
                {"violations", json::array()}};
    for (const auto& v : violations) report["violations"].push_back(ViolationJson(v));
    out << report.dump(2) << "\n";
  } else {
    PrintViolations(violations, out);
    out << violations.size()
        << (violations.size() == 1 ? " violation" : " violations") << "\n";
  }
  return violations.empty() ? kExitOk : kExitFindings;
}

struct AggregateFlags {
  std::vector<std::string> sheets;
  std::string mode;
  std::string note;
  std::string codebook;
  std::string units;
  std::string name;
};

int CmdAggregate(const Flags& flags, const AggregateFlags& agg,
                 std::ostream& out, std::ostream& err) {
  CliConfig config = Resolve(flags);
  Project project;
  if (fs::exists(config.project / "manifest.json")) {
    project = LoadProject(config.project);
  } else {
    if (agg.codebook.empty() || agg.units.empty()) {
      err << "error: " << config.project.string()
          << " is not a bundle; pass --codebook and --units to create one\n";
      return kExitError;
    }
    project.name = agg.name.empty() ? config.project.filename().string() : agg.name;
    project.codebook = ParseCodebook(ReadFile(agg.codebook), agg.codebook);
    project.units = ParseUnits(ReadFile(agg.units), agg.units);
  }

  std::vector<CoderSheet> sheets;
  for (const auto& file : agg.sheets) {
    sheets.push_back(ParseCoderSheet(ReadFile(file), file));
  }
  AggregateOptions options;
  options.note = agg.note;
  options.round_index = 1;
  for (const auto& r : project.rounds) {
    options.round_index = std::max(options.round_index, r.index + 1);
  }
  if (!agg.mode.empty()) {
    options.mode = ParseRoundMode(agg.mode);
    if (!options.mode) {
      err << "error: unknown mode '" << agg.mode << "'\n";
      return kExitError;
    }
  }
  Round round = Aggregate(sheets, project.codebook, project.units, options);
  const int index = round.index;
  const auto mode = round.mode;
  const auto n_units = round.assignments.num_units();
  const auto n_coders = round.assignments.num_coders();
  project = WithRound(project, std::move(round));
  SaveProject(project, config.project);

  out << "round " << index << " aggregated: " << n_units << " units x "
      << n_coders << " coders (" << ToString(mode) << "), revision "
      << project.revision << "\n";
  const auto violations = ValidateRound(*project.FindRound(index), project);
  PrintViolations(violations, out);
  return violations.empty() ? kExitOk : kExitFindings;
}

int CmdMetrics(const Flags& flags, std::ostream& out, std::ostream& err) {
  CliConfig config = Resolve(flags);
  const Project project = LoadProject(config.project);
  const Round& round = SelectRound(project, config.round);
  for (const auto& v : ValidateRound(round, project)) {
    err << "warning: " << v.message << "\n";
  }
  const MetricsSnapshot snapshot =
      ComputeSnapshot(project, round.index, config.thresholds);
  const fs::path out_dir =
      flags.out.empty()
          ? config.project / "exports" / ("round-" + std::to_string(round.index))
          : fs::path(flags.out);
  const auto files = ExportMetrics(snapshot, config.format, out_dir);

  out << "round " << round.index << " (revision " << project.revision << "): ";
  int status = kExitOk;
  if (const auto& k = snapshot.kappa.value) {
    out << "kappa=" << Fixed(k->kappa, 3) << " (p_bar=" << Fixed(k->p_bar, 3)
        << ", p_e=" << Fixed(k->p_e, 3) << ", units=" << k->n_units_included
        << ", coders=" << k->n_coders << ")\n";
    if (!k->excluded_units.empty()) {
      out << "excluded incomplete units:";
      for (const auto& u : k->excluded_units) out << " " << u;
      out << "\n";
    }
  } else {
    out << "kappa refused: " << snapshot.kappa.reason << "\n";
    status = kExitFindings;
  }
  out << "wrote " << files.size() << " files to " << out_dir.string() << "\n";
  return status;
}

int CmdDiff(const Flags& flags, const std::string& against, std::ostream& out,
            std::ostream& err) {
  CliConfig config = Resolve(flags);
  if (flags.rounds.size() != 2) {
    err << "error: diff needs exactly two --round values\n";
    return kExitError;
  }
  const Project project = LoadProject(config.project);
  const Project other = against.empty() ? project : LoadProject(against);
  const Round& before = SelectRound(project, flags.rounds[0]);
  const Round& after = SelectRound(other, flags.rounds[1]);

  RoundDelta delta;
  try {
    delta = ComputeRoundDelta(before, project.codebook, after, other.codebook);
  } catch (const RejectionError& e) {
    err << "rejected: " << e.what() << "\n";
    return kExitFindings;
  }
  const fs::path out_dir =
      flags.out.empty() ? config.project / "exports" : fs::path(flags.out);
  const fs::path file = WriteRoundDelta(delta, out_dir);

  auto kappa_text = [](const std::optional<double>& k) {
    return k ? Fixed(*k, 3) : std::string("n/a");
  };
  out << "kappa " << kappa_text(delta.kappa_before) << " -> "
      << kappa_text(delta.kappa_after) << "\n";
  const auto d = delta.kappa_delta();
  out << "Δkappa = " << (d ? Fixed(*d, 3) : std::string("n/a")) << ", "
      << delta.pairs_changed() << " pairs changed ("
      << delta.newly_zero_pairs.size() << " newly zero, "
      << delta.newly_nonzero_pairs.size() << " newly nonzero)\n";
  for (const auto& [x, y] : delta.newly_zero_pairs) {
    out << "  newly zero: " << x << "/" << y << "\n";
  }
  for (const auto& [x, y] : delta.newly_nonzero_pairs) {
    out << "  newly nonzero: " << x << "/" << y << "\n";
  }
  out << "wrote " << file.string() << "\n";
  return kExitOk;
}

struct ServeFlags {
  std::string static_dir;
  int heartbeat_ms = 15000;
};

int CmdServe(const Flags& flags, const ServeFlags& serve, std::ostream& out,
             std::ostream& err) {
  CliConfig config = Resolve(flags);
  std::unique_ptr<Session> session;
  try {
    session = Session::Open(config.project, config.thresholds);
  } catch (const Error& e) {
    err << "error: cannot open bundle: " << e.what() << "\n";
    return kExitError;
  }
  const auto violations = ValidateProject(session->Current()->project);
  if (!violations.empty()) {
    err << "refusing to serve an invalid bundle:\n";
    PrintViolations(violations, err);
    return kExitFindings;
  }

  ServerOptions options;
  options.host = config.host;
  options.port = config.port;
  options.heartbeat = std::chrono::milliseconds(serve.heartbeat_ms);
  if (!serve.static_dir.empty()) options.static_dir = serve.static_dir;
  SessionServer server(*session, options);

  // Signals are taken by a dedicated thread so shutdown runs outside a
  // signal handler. SIGUSR1 wakes that thread when the server stops itself.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGUSR1);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);

  if (!server.Bind()) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    err << "error: cannot bind " << config.host << ":" << config.port
        << " (port in use?)\n";
    return kExitError;
  }
  out << "serving " << config.project.string() << " on http://" << config.host
      << ":" << server.port() << " (revision "
      << session->Current()->project.revision << ")" << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.Stop();
  });
  server.Run();
  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);

  try {
    session->Save();
  } catch (const Error& e) {
    err << "error: could not persist session: " << e.what() << "\n";
    return kExitError;
  }
  out << "saved revision " << session->Current()->project.revision << std::endl;
  return kExitOk;
}

}  // namespace

void ApplyConfigFile(const fs::path& path, CliConfig& config) {
  json j;
  try {
    j = json::parse(ReadFile(path));
    if (j.contains("project")) config.project = j.at("project").get<std::string>();
    if (j.contains("round")) config.round = j.at("round").get<int>();
    if (j.contains("format")) {
      auto format = ParseExportFormat(j.at("format").get<std::string>());
      if (!format) throw StorageError("unknown format in " + path.string());
      config.format = *format;
    }
    if (j.contains("shade_thresholds")) {
      const auto& t = j.at("shade_thresholds");
      config.thresholds.medium = t.value("medium", config.thresholds.medium);
      config.thresholds.light = t.value("light", config.thresholds.light);
    }
    if (j.contains("host")) config.host = j.at("host").get<std::string>();
    if (j.contains("port")) config.port = j.at("port").get<int>();
  } catch (const json::exception& e) {
    throw StorageError("malformed config " + path.string() + ": " + e.what());
  }
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Collaborative qualitative coding analytics", "codewizard"};
  app.require_subcommand(1);

  Flags flags;
  bool json_report = false;
  AggregateFlags agg;
  std::string against;
  ServeFlags serve;

  auto* validate = app.add_subcommand("validate", "Check a project bundle");
  AddCommon(validate, flags);
  validate->add_option("--format", flags.format, "Report format (json)");

  auto* aggregate =
      app.add_subcommand("aggregate", "Add a round from per-coder sheets");
  AddCommon(aggregate, flags);
  aggregate->add_option("sheets", agg.sheets, "Coder sheet files")->required();
  aggregate->add_option("--mode", agg.mode, "single or double (default: inferred)");
  aggregate->add_option("--note", agg.note, "Round note");
  aggregate->add_option("--codebook", agg.codebook, "Codebook file for a new bundle");
  aggregate->add_option("--units", agg.units, "Units file for a new bundle");
  aggregate->add_option("--name", agg.name, "Project name for a new bundle");

  auto* metrics = app.add_subcommand("metrics", "Compute and export metrics");
  AddCommon(metrics, flags);
  metrics->add_option("--round,-r", flags.rounds, "Round index (default: last)")
      ->expected(1);
  metrics->add_option("--format,-f", flags.format, "json or csv");
  metrics->add_option("--out,-o", flags.out, "Output directory");

  auto* diff = app.add_subcommand("diff", "Compare two rounds");
  AddCommon(diff, flags);
  diff->add_option("--round,-r", flags.rounds, "Two round indices")->expected(1, 2);
  diff->add_option("--against", against, "Bundle holding the second round");
  diff->add_option("--out,-o", flags.out, "Output directory");

  auto* serve_cmd = app.add_subcommand("serve", "Run the live session service");
  AddCommon(serve_cmd, flags);
  serve_cmd->add_option("--port", flags.port, "TCP port (0 picks one)");
  serve_cmd->add_option("--host", flags.host, "Bind address");
  serve_cmd->add_option("--static", serve.static_dir, "Directory of UI assets");
  serve_cmd->add_option("--heartbeat-ms", serve.heartbeat_ms,
                        "Event stream keepalive interval");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (validate->parsed()) {
      if (!flags.format.empty() && flags.format != "json") {
        err << "error: validate reports are text or json\n";
        return kExitError;
      }
      json_report = flags.format == "json";
      flags.format.clear();
      return CmdValidate(flags, json_report, out, err);
    }
    if (aggregate->parsed()) return CmdAggregate(flags, agg, out, err);
    if (metrics->parsed()) return CmdMetrics(flags, out, err);
    if (diff->parsed()) return CmdDiff(flags, against, out, err);
    if (serve_cmd->parsed()) return CmdServe(flags, serve, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace codewizard::cli
