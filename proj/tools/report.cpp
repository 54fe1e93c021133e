#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "run.hpp"

namespace kdp::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct KindEntry {
  std::string tag;
  std::string label;
  std::optional<SummaryFile> summary;
};

double field(const SummaryFile& s, const std::string& key) { return std::stod(s.row.at(key)); }

}  // namespace

SummaryFile read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  SummaryFile out;
  std::string line;
  std::vector<std::string> columns;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon != std::string::npos) out.header[line.substr(2, colon - 2)] = line.substr(colon + 2);
      continue;
    }
    const auto cells = split_csv(line);
    if (columns.empty()) {
      columns = cells;
    } else {
      for (std::size_t k = 0; k < columns.size() && k < cells.size(); ++k) out.row[columns[k]] = cells[k];
      return out;
    }
  }
  throw std::runtime_error(path + ": no data row");
}

Report render_report(const std::string& dir) {
  Report rep;
  std::ostringstream os;
  std::vector<KindEntry> kinds{{"positive", "m+ (u0 >= 0)", {}},
                               {"negative", "m- (v0 <= 0)", {}},
                               {"nodal", "m0 (y0 nodal)", {}}};
  for (auto& k : kinds) {
    for (const std::string prefix : {"summary_", "field_", "trace_"}) {
      const std::string name = prefix + k.tag + ".csv";
      if (!fs::exists(fs::path(dir) / name)) rep.missing.push_back(name);
    }
    const fs::path path = fs::path(dir) / ("summary_" + k.tag + ".csv");
    if (!fs::exists(path)) continue;
    try {
      k.summary = read_summary(path.string());
    } catch (const std::exception& e) {
      rep.missing.push_back("summary_" + k.tag + ".csv (unreadable: " + e.what() + ")");
    }
  }

  os << "kdp report for " << dir << "\n\n";
  os << "energies\n";
  for (const auto& k : kinds) {
    os << "  " << k.label << ": " << (k.summary ? fmt(field(*k.summary, "energy")) : "n/a") << '\n';
  }

  os << "\nsign verdicts\n";
  for (const auto& k : kinds) {
    if (!k.summary) {
      os << "  " << k.tag << ": n/a\n";
      continue;
    }
    const double lo = field(*k.summary, "min_value"), hi = field(*k.summary, "max_value");
    if (k.tag == "positive") {
      os << "  positive: min value " << fmt(lo) << " >= -1e-10: " << verdict(lo >= -1e-10) << '\n';
    } else if (k.tag == "negative") {
      os << "  negative: max value " << fmt(hi) << " <= 1e-10: " << verdict(hi <= 1e-10) << '\n';
    } else {
      os << "  nodal: values span [" << fmt(lo) << ", " << fmt(hi)
         << "]: " << verdict(lo < 0.0 && hi > 0.0) << '\n';
    }
  }

  os << "\ninvariant suite\n";
  os << "  kind       converged  residual<=tol  invariants  energy>0\n";
  for (const auto& k : kinds) {
    if (!k.summary) continue;
    const double tol = std::stod(k.summary->header.count("tol") ? k.summary->header.at("tol") : "1e-6");
    char line[128];
    std::snprintf(line, sizeof line, "  %-10s %-10s %-14s %-11s %s\n", k.tag.c_str(),
                  verdict(k.summary->row.at("converged") == "1").c_str(),
                  verdict(field(*k.summary, "residual") <= tol).c_str(),
                  verdict(k.summary->row.at("invariants") == "1").c_str(),
                  verdict(field(*k.summary, "energy") > 0.0).c_str());
    os << line;
  }

  if (kinds[2].summary) {
    const double m0 = field(*kinds[2].summary, "energy");
    os << "\nm0 > 0: " << verdict(m0 > 0.0) << '\n';
    if (kinds[0].summary && kinds[1].summary) {
      const double sum = field(*kinds[0].summary, "energy") + field(*kinds[1].summary, "energy");
      os << "observed: m0 " << (m0 >= sum ? ">=" : "<") << " m+ + m- (" << fmt(m0) << " vs "
         << fmt(sum) << "), not asserted\n";
    }
  }

  if (!rep.missing.empty()) {
    os << "\nwarning: partial report, missing files\n";
    for (const auto& m : rep.missing) os << "  " << m << '\n';
  }
  rep.text = os.str();
  return rep;
}

}  // namespace kdp::cli
