#pragma once

#include <iosfwd>
#include <string>

/// Runs the oracle checks for one preset and prints a PASS/FAIL table.
/// Returns true when every check passes.
bool run_checks(const std::string& preset, std::ostream& out);
