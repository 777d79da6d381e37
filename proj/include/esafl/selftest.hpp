/**
 * @file selftest.hpp
 * @brief Operator-facing self-test suites: ring oracles, codec roundtrips,
 *        the scheme identity, negative aggregate behavior, golden vectors.
 */
#pragma once

#include <string>
#include <vector>

#include "esafl/params.hpp"

namespace esafl::selftest {

struct SuiteResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

/// Runs all suites; `trials` scales the randomized checks (0 is a vacuous
/// pass with a warning). golden_dir empty or missing skips the golden suite
/// with a warning.
std::vector<SuiteResult> run_all(const SchemeParams& params, uint32_t trials,
                                 const std::string& golden_dir, uint64_t seed);

bool all_passed(const std::vector<SuiteResult>& results);

}  // namespace esafl::selftest
