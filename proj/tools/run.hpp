#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "kdp/solvers.hpp"

namespace kdp::cli {

enum ExitCode : int { kOk = 0, kParseError = 2, kHypothesisFailure = 3, kNonconvergence = 4 };

/// Executes the configured mode and writes its artifacts into the output
/// directory (created if needed). Progress goes to `log`.
int run(const RunConfig& config, std::ostream& log);

/// Artifact file names per mode.
std::vector<std::string> artifacts_for(Mode mode);

/// Key-value header, column header and one row of %.17g values.
void write_summary(std::ostream& os, const RunConfig& config, const SolveOutcome& out);
/// "# vertex,x,y,value" followed by one row per vertex.
void write_field(std::ostream& os, const MeshFunction& u);
void write_trace(std::ostream& os, const SolveOutcome& out);

/// A parsed summary file: header keys and the named columns of its row.
struct SummaryFile {
  std::map<std::string, std::string> header;
  std::map<std::string, std::string> row;
};

/// Throws std::runtime_error when the file cannot be read or has no row.
SummaryFile read_summary(const std::string& path);

struct Report {
  std::string text;
  std::vector<std::string> missing;
  bool complete() const { return missing.empty(); }
};

/// One-page summary of the solve artifacts found in `dir`. Missing files are
/// listed and the remaining sections are still rendered.
Report render_report(const std::string& dir);

}  // namespace kdp::cli
