#ifndef REEBDYN_ERRORS_HPP
#define REEBDYN_ERRORS_HPP

#include <stdexcept>
#include <string>

#include "reebdyn/types.hpp"

namespace reebdyn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input that violates a documented precondition (bad parameters,
/// schedules that are not strictly increasing, offsets <= 0, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed or unknown configuration (bad JSON, unknown fields, wrong types).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a point where the defining function is not smooth or not defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A ray from the origin does not cross the level set inside the search bracket.
class StarshapedError : public Error {
public:
    using Error::Error;
};

/// <grad G(x), x> is not positive, so the Reeb field is undefined.
class DegeneratePointError : public Error {
public:
    using Error::Error;
};

/// A smoothing family member failed its sample checks.
class ConstructionError : public Error {
public:
    ConstructionError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Operation requested on data that does not support it (derivatives of a C0 factor).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Quadrature or grid resolution too coarse to certify a result.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Step-size underflow or step budget exhausted. Carries the last accepted state.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t, const Vec4& last_state)
        : Error(what), time_(t), state_(last_state) {}
    double time() const noexcept { return time_; }
    const Vec4& last_state() const noexcept { return state_; }

private:
    double time_;
    Vec4 state_;
};

}  // namespace reebdyn

#endif
