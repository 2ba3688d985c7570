#pragma once

#include <atomic>
#include <stdexcept>
#include <string>

namespace imprs {

/// Malformed or inconsistent input (scenario files, CLI flags, observation files).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to produce a usable answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised from long-running loops once an interrupt has been requested.
class Interrupted : public std::runtime_error {
public:
    Interrupted() : std::runtime_error("interrupted") {}
};

namespace detail {
inline std::atomic<bool>& interrupt_flag()
{
    static std::atomic<bool> flag{false};
    return flag;
}
}  // namespace detail

inline void request_interrupt() { detail::interrupt_flag().store(true); }
inline bool interrupt_requested() { return detail::interrupt_flag().load(); }
inline void check_interrupt()
{
    if (interrupt_requested()) throw Interrupted();
}

}  // namespace imprs
