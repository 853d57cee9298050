#ifndef ANNUITIZE_PIECEWISE_HPP
#define ANNUITIZE_PIECEWISE_HPP

#include <cmath>
#include <limits>
#include <vector>

namespace annuitize {

/// One additive term of a piece: coef * (x / xref)^power.
/// Terms are anchored at a reference scale so coefficients stay O(value)
/// even for large characteristic exponents.
struct PowerTerm {
    double coef = 0;
    double power = 0;
};

/// A polynomial-in-powers expression valid on one interval.
struct Piece {
    double xref = 1.0;            ///< scale anchor for the power terms
    std::vector<PowerTerm> terms;

    double value(double x) const {
        double v = 0;
        for (const auto& t : terms) {
            if (t.power == 0.0) v += t.coef;
            else if (t.power == 1.0) v += t.coef * (x / xref);
            else v += t.coef * std::pow(x / xref, t.power);
        }
        return v;
    }
    double derivative(double x) const {
        double v = 0;
        for (const auto& t : terms) {
            if (t.power == 0.0) continue;
            if (t.power == 1.0) v += t.coef / xref;
            else v += t.coef * t.power * std::pow(x / xref, t.power - 1.0) / xref;
        }
        return v;
    }
    double second_derivative(double x) const {
        double v = 0;
        for (const auto& t : terms)
            if (t.power != 0.0 && t.power != 1.0)
                v += t.coef * t.power * (t.power - 1.0) *
                     std::pow(x / xref, t.power - 2.0) / (xref * xref);
        return v;
    }

    Piece& add(double coef, double power) {
        terms.push_back({coef, power});
        return *this;
    }
};

/**
 * A value function stored as explicit pieces between sorted breakpoints, so
 * the verification oracles can introspect the per-piece powers/coefficients
 * and form analytic derivatives.
 *
 * Piece i applies on [breakpoints[i], breakpoints[i+1]) with implicit
 * endpoints 0 and +infinity; continuity across breakpoints is a construction
 * invariant, not enforced here.
 */
class PiecewiseValueFunction {
public:
    PiecewiseValueFunction() = default;

    /// Append a piece valid from `from` (inclusive) to the next piece's start.
    void append(double from, Piece piece) {
        breakpoints_.push_back(from);
        pieces_.push_back(std::move(piece));
    }

    std::size_t piece_index(double x) const {
        std::size_t i = breakpoints_.size();
        while (i > 0 && x < breakpoints_[i - 1]) --i;
        return i == 0 ? 0 : i - 1;
    }

    double value(double x) const { return pieces_[piece_index(x)].value(x); }
    double derivative(double x) const { return pieces_[piece_index(x)].derivative(x); }
    double second_derivative(double x) const {
        return pieces_[piece_index(x)].second_derivative(x);
    }

    /// Evaluate a specific piece regardless of x (for boundary-matching checks).
    double value_of_piece(std::size_t i, double x) const { return pieces_[i].value(x); }
    double derivative_of_piece(std::size_t i, double x) const {
        return pieces_[i].derivative(x);
    }

    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<Piece>& pieces() const noexcept { return pieces_; }
    std::size_t size() const noexcept { return pieces_.size(); }

private:
    std::vector<double> breakpoints_;  ///< start of each piece, strictly increasing
    std::vector<Piece> pieces_;
};

}  // namespace annuitize

#endif  // ANNUITIZE_PIECEWISE_HPP
