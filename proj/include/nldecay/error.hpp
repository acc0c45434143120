#pragma once

#include <stdexcept>
#include <string>

namespace nldecay {

enum class ErrorKind {
    invalid_parameter,
    hypothesis_violated,
    unsupported,
    degenerate_kernel,
    step_rejected,
    insufficient_data,
    no_convergence,
    positivity_lost,
    out_of_range,
    io,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::hypothesis_violated: return "hypothesis-violated";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::degenerate_kernel: return "degenerate-kernel";
    case ErrorKind::step_rejected: return "step-rejected";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::positivity_lost: return "positivity-lost";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (tests, the CLI) can branch on it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

} // namespace nldecay
