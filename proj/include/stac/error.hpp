#pragma once

#include <stdexcept>
#include <string>

namespace stac {

/// Failure categories surfaced by the library. The CLI maps these to
/// process exit codes (see cli.hpp).
enum class ErrorKind {
    Parameter,              // bad argument or config value
    NonErgodic,             // induced chain has no unique mixing stationary law
    AssumptionOneViolated,  // A_theta not negative definite within tolerance
    Diverged,               // non-finite iterate detected during a run
    MixingTooSlow,          // mixing-time scan exceeded its cap
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::NonErgodic: return "non_ergodic";
    case ErrorKind::AssumptionOneViolated: return "assumption_one_violated";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::MixingTooSlow: return "mixing_too_slow";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

} // namespace stac
