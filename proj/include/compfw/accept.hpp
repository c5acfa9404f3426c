#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Acceptance suites: each criterion runs at its pinned tolerance and prints
// one pass/fail line with the measured values.

namespace compfw {

enum class AcceptSuite { unit, lemmas, rates, all };

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

// Runs the requested suite; `fast` shrinks grids and widens bands for a quick
// smoke pass. Returns the number of failed criteria.
int run_acceptance(AcceptSuite suite, bool fast, std::ostream& out,
                   std::vector<CriterionResult>* results = nullptr);

AcceptSuite accept_suite_from_name(const std::string& name);

}  // namespace compfw
