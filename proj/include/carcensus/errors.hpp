#pragma once

#include <stdexcept>
#include <string>

namespace carcensus {

// Input text that does not conform to a file format.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed input that violates a domain invariant.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Operation applied to an object in the wrong state (e.g. uncalibrated record).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Statistic undefined for the given data (zero variance, no ground truth, ...).
struct DegenerateError : std::runtime_error {
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace carcensus
