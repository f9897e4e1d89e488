#ifndef AFLSIM_ERRORS_HPP
#define AFLSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aflsim {

// Error categories map to CLI exit codes (see tools/aflsim.cpp).

// Bad user input: config file syntax, unknown keys, out-of-range values,
// dimension mismatches between model and data.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset file problems: missing file, bad magic, truncation, count mismatch.
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Server/client contract violations, e.g. an update whose base timestamp
// is newer than the server clock.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Engine-level failures: exhausted event queue, non-finite model values.
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Cross-run comparison on incompatible run logs.
class ComparisonError : public std::runtime_error {
public:
    explicit ComparisonError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace aflsim

#endif
