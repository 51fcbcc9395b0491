#pragma once

#include <stdexcept>
#include <string>

namespace nowcast {

/// Raised for every domain-level failure: malformed input, violated
/// preconditions, degenerate numerical problems.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nowcast
