#pragma once

#include <stdexcept>
#include <string>

namespace bevlat {

// Shape or layout mismatch between inputs (channel counts, grid sizes, anchors).
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value outside its documented domain (negative budget, empty sample, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite value produced inside a computation stage.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace bevlat
