#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace fgap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. The CLI maps these onto exit codes (see tools/fgap.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// H (or a derivative of it) requested at the origin, where it is not differentiable.
class DegeneratePointError : public Error {
public:
    using Error::Error;
};

/// Iterative procedure failed to reach its tolerance.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A geometric precondition (tangency, boundary membership, graph solve) does not hold.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

class NonEllipticNormError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mesh or solve would exceed a configured budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

} // namespace fgap
