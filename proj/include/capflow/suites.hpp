#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "capflow/config.hpp"

namespace capflow {

enum class VerdictStatus { pass, fail, recorded };

const char* to_string(VerdictStatus s);

struct Verdict {
  std::string id;
  VerdictStatus status = VerdictStatus::recorded;
  double measured = 0.0;
  std::string anchor;  // in-scope anchors joined with ';'
  std::string detail;
};

/// Contract constants. Loosening them is never done by the runner itself;
/// tightening one past what the numerics reach forces a fail.
struct SuiteTolerances {
  double lorentz_rel = 1e-9;
  double exact_rel = 1e-12;
  double gamma_slack = 1e-6;
  double gap = 1e-6;
  double equilibrium_factor = 50.0;
  double drift = 2.0;
  double pairing_gap_factor = 10.0;
  double kothe_rel = 1e-6;
  double trace_abs = 1e-9;
  double level_sum = 4.0;
  double block = 1e-12;
  double residual = 1e-9;
};

struct SuiteSpec {
  std::string name = "all";
  Config config;
  std::vector<std::pair<double, double>> lattice{{2.0, 2.0}, {1.5, 3.0}, {3.0, 1.5}, {4.0, 2.0}};
  std::vector<std::string> model_files;  // extra finite models for the capacity checks
  SuiteTolerances tol;

  /// Throws on an unknown suite, an empty lattice, or exponents outside (1, inf).
  void validate() const;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<Verdict> verdicts;                          // ordered by check id
  std::vector<std::pair<std::string, double>> calibration;  // ordered by key
  bool failed() const;
};

struct CheckInfo {
  std::string id;
  std::vector<std::string> suites;
  std::vector<std::string> anchors;
};

const std::vector<std::string>& suite_names();
const std::vector<std::string>& in_scope_anchors();
std::vector<CheckInfo> registered_checks();

/// Anchors no registered check covers.
std::vector<std::string> uncovered_anchors(const std::vector<CheckInfo>& checks);

SuiteReport run_suite(const SuiteSpec& spec);

enum class ReportFormat { json, csv };

ReportFormat parse_report_format(const std::string& name);
ReportFormat format_for_path(const std::string& path);
std::string render_report(const SuiteReport& report, ReportFormat format);
void emit_report(const SuiteReport& report, ReportFormat format, const std::string& path);

}  // namespace capflow
