#pragma once

#include <stdexcept>
#include <string>

namespace dnpr {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user-supplied configuration (bad spin number, dimension limit,
// malformed spec, out-of-range angle, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// An internal precondition was violated (e.g. a non-Hermitian matrix handed
// to the eigensolver).
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

// Geometry too degenerate to evaluate (defect pair below the lattice
// spacing, magic-angle preset, ...).
class DegenerateGeometry : public Error {
public:
    explicit DegenerateGeometry(const std::string& msg) : Error(msg) {}
};

// Step controller under-flowed while propagating.
class StiffnessError : public Error {
public:
    explicit StiffnessError(const std::string& msg) : Error(msg) {}
};

// Root bracket for the matching-field solve carries no sign change.
class NoMatchingField : public Error {
public:
    explicit NoMatchingField(const std::string& msg) : Error(msg) {}
};

// Transfer model is flat (zero amplitude); no optimum exists.
class DegenerateModel : public Error {
public:
    explicit DegenerateModel(const std::string& msg) : Error(msg) {}
};

// Fit input carries no usable signal.
class DegenerateData : public Error {
public:
    explicit DegenerateData(const std::string& msg) : Error(msg) {}
};

// Least-squares did not converge within the multistart budget.
class FitFailed : public Error {
public:
    explicit FitFailed(const std::string& msg) : Error(msg) {}
};

// Filesystem failure while emitting results.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace dnpr
