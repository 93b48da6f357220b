#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mechet {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration (bad field, violated invariant).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation called on inputs it was not designed for (e.g. a closed form
/// applied to a queue with the wrong type mix).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Requested model variant is not implemented (e.g. alpha != 4 closed forms).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed to converge or produced a non-finite value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sampling would exceed the configured resource cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A tier's queue has utilization >= 1 under the induced load.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(std::size_t tier, double utilization)
        : std::runtime_error("tier " + std::to_string(tier + 1) +
                             " is unstable: utilization rho = " + std::to_string(utilization) +
                             " >= 1"),
          tier_(tier),
          utilization_(utilization) {}

    std::size_t tier() const noexcept { return tier_; }
    double utilization() const noexcept { return utilization_; }

private:
    std::size_t tier_;
    double utilization_;
};

}  // namespace mechet
