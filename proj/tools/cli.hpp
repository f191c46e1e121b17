#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dynsmpc::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSafetyInfeasible = 2;
constexpr int kRuntimeViolation = 3;

// Runs `dynsmpc <args...>`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dynsmpc::cli
