#pragma once

#include <stdexcept>
#include <string>

namespace wce {

// Raised for malformed run configurations (CLI exit status 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an estimator cannot produce a usable value (CLI exit status 3).
struct estimator_error : std::runtime_error {
    estimator_error(const std::string& what, double ess, long long hits)
        : std::runtime_error(what), ess(ess), hits(hits) {}
    double ess = 0.0;
    long long hits = 0;
};

} // namespace wce
