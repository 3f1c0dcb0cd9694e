#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/evaluation/closed_loop.hpp"
#include "forge/evaluation/metrics.hpp"
#include "forge/evaluation/search.hpp"

namespace forge::evaluation {

/// Version string stamped into manifests (git describe of the source tree at configure time).
std::string version_string();

struct PcaPoint {
  std::string set;  // "dataset", "candidates", ...
  double pc1 = 0, pc2 = 0;
};

struct PcaResult {
  std::vector<double> explained;
  std::vector<PcaPoint> points;
};

/// Everything a report can contain. Each CLI step writes one of these (partially filled) and
/// `report` merges them.
struct ReportInputs {
  std::vector<ErrorReport> full;     // full-input runs
  std::vector<ErrorReport> partial;  // masked runs
  std::optional<ClosedLoopReport> closed_loop;
  std::vector<SearchTrace> traces;
  std::optional<double> predict_error;  // phase error of the top predicted design, 0 calls
  std::vector<SweepPoint> sweep;
  std::optional<PcaResult> pca;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> config_hashes;

  /// Appends lists and fills empty optionals from `other`; conflicting seeds or hashes for
  /// the same key throw ConfigError.
  void merge(const ReportInputs& other);
};

std::string results_to_json(const ReportInputs& r);
ReportInputs results_from_json(const std::string& text);

/// Writes tableA.csv, tableB.csv, phase_errors.csv, search_trace.csv, sweep.csv, pca.csv, an
/// SVG plot for each non-empty curve or scatter, and manifest.json. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const ReportInputs& r, const std::filesystem::path& out_dir);

}  // namespace forge::evaluation
