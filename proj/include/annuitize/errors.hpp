#ifndef ANNUITIZE_ERRORS_HPP
#define ANNUITIZE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace annuitize {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A standing model assumption does not hold for the supplied parameters.
/// `name()` identifies the violated assumption ("well-posedness", "market.sigma", ...).
class AssumptionViolation : public Error {
public:
    AssumptionViolation(std::string name, const std::string& detail)
        : Error(name + ": " + detail), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// |delta - lambda_l| is below the degeneracy guard; the log-term solution
/// branch is out of scope and such inputs are rejected.
class NearDegenerateShock : public AssumptionViolation {
public:
    explicit NearDegenerateShock(const std::string& detail)
        : AssumptionViolation("near-degenerate-shock", detail) {}
};

/// A threshold equation was requested for a regime whose boundary is in closed form.
class RegimeMismatch : public Error {
public:
    explicit RegimeMismatch(const std::string& msg) : Error(msg) {}
};

/// Bracket expansion found no sign change.
class NoBracket : public Error {
public:
    explicit NoBracket(const std::string& msg) : Error(msg) {}
};

/// Neither or both threshold-ordering branches were self-consistent.
class BranchInconsistency : public Error {
public:
    explicit BranchInconsistency(const std::string& msg) : Error(msg) {}
};

/// Adaptive quadrature failed to reach the requested tolerance.
class QuadratureNonConvergence : public Error {
public:
    explicit QuadratureNonConvergence(const std::string& msg) : Error(msg) {}
};

/// An ODE-residual grid point coincides with a piece breakpoint.
class GridTouchesBreakpoint : public Error {
public:
    explicit GridTouchesBreakpoint(const std::string& msg) : Error(msg) {}
};

/// The quantity handed to a crossing search does not change sign on the range.
class NoSignChange : public Error {
public:
    explicit NoSignChange(const std::string& msg) : Error(msg) {}
};

/// Config parsing / validation failure (missing key, unknown key, bad value).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace annuitize

#endif  // ANNUITIZE_ERRORS_HPP
