#pragma once

#include <stdexcept>
#include <string>

namespace rwi {

// Raised when a numerical routine cannot meet its accuracy contract
// (quadrature non-convergence, degenerate splitting stage, ...). Carries a
// human-readable diagnostic; callers that map failures to process exit codes
// treat this class distinctly from validation errors.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rwi
