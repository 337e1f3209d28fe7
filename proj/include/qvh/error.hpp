#pragma once

#include <stdexcept>
#include <string>

namespace qvh {

/// Raised when an argument violates an operation's precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace detail
} // namespace qvh
