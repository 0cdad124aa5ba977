#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace codesign::cli {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  /// Directory with example1.json, example2.json and example3.json.
  std::filesystem::path configs;
  unsigned threads = 1;
  /// Empty runs every criterion.
  std::vector<int> only;
  /// Called as each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// Checks the worked examples (criteria 1 to 7) against reference values
/// with the tolerances fixed in paper_suite.cpp.
std::vector<CriterionResult> run_paper_suite(const SuiteOptions& options);

/// "PASS [3] name (12.3 s): detail"
std::string format_result(const CriterionResult& r);

}  // namespace codesign::cli
