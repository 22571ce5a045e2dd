#pragma once

#include <stdexcept>
#include <string>

namespace cellsched {

// Bad or missing configuration input (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A solver exceeded its node/memory budget (CLI exit code 3).
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// A quantity the model guarantees failed to hold numerically (CLI exit code 4).
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cellsched
