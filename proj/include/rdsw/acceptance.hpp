// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace rdsw::acceptance {

/// Outcome of one acceptance criterion. `files` holds the deterministic
/// output files (name -> bytes); timings live only in `seconds` and `detail`.
struct CaseResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  std::map<std::string, std::string> files;
  double seconds = 0.0;
};

inline constexpr int kCaseCount = 14;

/// FNV-1a digest over file names and contents in name order.
std::string digest(const CaseResult& r);

/// Runs criteria 1..14. Results of cases 1..13 at threads = 1 are cached so
/// case 14 can reuse them.
class Battery {
 public:
  explicit Battery(int threads = 1) : threads_(threads) {}
  CaseResult run(int id);
  /// Optional extra determinism probe for case 14 (the CLI byte-identity run);
  /// returns pass and appends a description to `detail`.
  void set_cli_probe(std::function<bool(std::string& detail)> probe) { probe_ = std::move(probe); }

 private:
  CaseResult run_uncached(int id, int threads);
  int threads_;
  std::map<int, CaseResult> cache_;
  std::function<bool(std::string&)> probe_;
};

/// "criterion NN: PASS|FAIL  title  (detail)"
std::string format_line(const CaseResult& r);

}  // namespace rdsw::acceptance
