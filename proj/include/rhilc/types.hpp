#pragma once

#include <concepts>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rhilc {

template <std::floating_point Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <std::floating_point Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plant matrices that are not conformable.
class InvalidModel : public Error {
public:
    using Error::Error;
};

/// Signals or operators with the wrong shape.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Rejected weight or experiment configuration. `field()` names the offender.
class InvalidConfig : public Error {
public:
    InvalidConfig(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// L_0 is too ill-conditioned to factor.
class SynthesisError : public Error {
public:
    SynthesisError(const std::string& what, double rcond) : Error(what), rcond_(rcond) {}
    [[nodiscard]] double rcond() const noexcept { return rcond_; }

private:
    double rcond_;
};

/// Eigen decomposition failed.
class AnalysisError : public Error {
public:
    using Error::Error;
};

/// The iteration-domain map has no attracting fixed point.
class NoFixedPoint : public Error {
public:
    NoFixedPoint(const std::string& what, double radius) : Error(what), radius_(radius) {}
    [[nodiscard]] double radius() const noexcept { return radius_; }

private:
    double radius_;
};

/// The KKT system of the converged problem is singular.
class SolveError : public Error {
public:
    SolveError(const std::string& what, double min_eigenvalue)
        : Error(what), min_eigenvalue_(min_eigenvalue) {}
    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

/// A closed-loop run produced non-finite values.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int iteration) : Error(what), iteration_(iteration) {}
    [[nodiscard]] int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw InvalidInput(what);
}

}  // namespace detail
}  // namespace rhilc
