// SPDX-License-Identifier: Apache-2.0
// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <vector>

#include "rdsw/acceptance.hpp"
#include "rdsw/cli.hpp"

int main(int argc, char** argv) {
  using namespace rdsw::acceptance;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) {
    for (int i = 1; i <= kCaseCount; ++i) ids.push_back(i);
  }
  Battery battery;
  battery.set_cli_probe(rdsw::cli::rerun_probe);
  int failed = 0;
  for (int id : ids) {
    const CaseResult r = battery.run(id);
    std::cout << format_line(r) << std::endl;
    std::fprintf(stderr, "  criterion %02d took %.2f s\n", id, r.seconds);
    failed += !r.pass;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
