#pragma once

#include <stdexcept>
#include <string>

namespace crowdnav {

// Bad input: missing files, malformed rows, invalid flags. The CLI maps
// these to exit code 1; anything else is an internal error (exit 2).
class UserError : public std::runtime_error {
public:
    explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace crowdnav
