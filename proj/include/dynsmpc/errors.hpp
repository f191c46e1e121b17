#pragma once

#include <stdexcept>
#include <string>

namespace dynsmpc {

// A numerical routine failed to produce an answer (divergence, singular solve,
// iteration limit).
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The problem is well posed but admits no solution: an empty tightened or
// terminal set, an infeasible safety step, or both MPC branches infeasible.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An output file or directory could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynsmpc
