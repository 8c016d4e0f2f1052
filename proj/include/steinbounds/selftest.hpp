#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stein {

// One invariant suite's outcome. Failure messages are complete sentences
// naming the violated invariant and the offending values.
struct SuiteResult {
    std::string name;
    int checks = 0;
    int failures = 0;
    std::vector<std::string> messages;
};

// Runs all invariant suites on internally generated models (deterministic
// per seed): cross-route atom construction, closed-form vs exact moments,
// bound orderings, oracle agreement, and bitwise reproducibility. One check
// deliberately corrupts an atom table to prove the validators still bite.
std::vector<SuiteResult> run_selftest(std::uint64_t seed);

bool selftest_passed(const std::vector<SuiteResult>& results);
std::string render_selftest(const std::vector<SuiteResult>& results);

}  // namespace stein
