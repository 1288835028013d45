#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gft {

/// Exit codes: 0 success, 1 invalid arguments or input, 2 runtime or stability failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct OpsCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick operator self-checks behind `gft ops-check`.
std::vector<OpsCheck> run_ops_checks();

}  // namespace gft
