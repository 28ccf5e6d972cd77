#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rg {

// One acceptance criterion outcome. `detail` holds the measured numbers in a
// deterministic format; `seconds` is wall time and must stay out of any
// byte-stable report.
struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

// Runs the acceptance criteria with their tolerances pinned inside. `only`
// selects a single id ("A3"); empty runs all. `seed` feeds the randomized
// identity checks. `log` is called once per finished criterion.
std::vector<CriterionResult> run_criteria(
    const std::string& only = "", std::uint64_t seed = 12345,
    const std::function<void(const CriterionResult&)>& log = nullptr);

}  // namespace rg
