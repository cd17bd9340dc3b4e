#pragma once

#include <stdexcept>
#include <string>

namespace tiap {

/// Malformed input, violated precondition, or an invariant a caller broke.
/// The CLI maps it to exit status 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written. CLI exit status 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A judge endpoint rejected our credentials. Always fatal for a judging run.
class AuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tiap
