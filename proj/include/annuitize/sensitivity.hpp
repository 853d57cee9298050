#ifndef ANNUITIZE_SENSITIVITY_HPP
#define ANNUITIZE_SENSITIVITY_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "annuitize/shock_solver.hpp"

namespace annuitize {

enum class SweepParameter { Delta, Lambda };

inline const char* to_string(SweepParameter p) {
    return p == SweepParameter::Delta ? "delta" : "lambda_l";
}

struct SweepSpec {
    SweepParameter parameter = SweepParameter::Delta;
    double lo = 0;
    double hi = 0;
    std::size_t n_points = 2;
    ModelParams base;
};

inline void validate(const SweepSpec& s) {
    if (!(s.lo < s.hi)) throw ConfigError("sweep: lo must be < hi");
    if (s.n_points < 2) throw ConfigError("sweep: n_points must be >= 2");
}

enum class RowStatus { ok, skipped, failed };

inline const char* to_string(RowStatus s) {
    switch (s) {
        case RowStatus::ok: return "ok";
        case RowStatus::skipped: return "skipped";
        case RowStatus::failed: return "failed";
    }
    return "?";
}

struct SweepRow {
    double value = 0;  ///< swept parameter value
    double delta_l = std::numeric_limits<double>::quiet_NaN();
    double delta_h = std::numeric_limits<double>::quiet_NaN();
    double M_l = std::numeric_limits<double>::quiet_NaN();
    double M_h = std::numeric_limits<double>::quiet_NaN();
    double x_l = std::numeric_limits<double>::quiet_NaN();  ///< absent when no threshold
    double x_h = std::numeric_limits<double>::quiet_NaN();
    std::string regime;
    RowStatus status = RowStatus::failed;
    std::string message;
};

inline ModelParams with_sweep_value(const ModelParams& base, SweepParameter which,
                                    double v) {
    ModelParams p = base;
    (which == SweepParameter::Delta ? p.mortality.delta : p.mortality.lambda_l) = v;
    return p;
}

/// Relative half-width of the excluded band around delta == lambda_l. Wider
/// than the validation guard: sweep rows this close are marked, not solved.
inline constexpr double kSweepDegenerateBand = 1e-6;

/// Solve one grid point; degenerate or invalid points come back marked, never
/// fabricated.
inline SweepRow solve_row(const ModelParams& base, SweepParameter which, double v) {
    SweepRow row;
    row.value = v;
    ModelParams p = with_sweep_value(base, which, v);
    const double d = p.mortality.delta, l = p.mortality.lambda_l;
    if (std::abs(d - l) <= kSweepDegenerateBand * std::max(d, l)) {
        row.status = RowStatus::skipped;
        row.message = "delta within the degenerate band around lambda_l";
        return row;
    }
    try {
        validate(p);
    } catch (const AssumptionViolation& e) {
        row.status = RowStatus::skipped;
        row.message = e.what();
        return row;
    }
    try {
        const ShockSolution sol = solve_shock(p);
        row.delta_l = sol.coeffs.low.delta;
        row.delta_h = sol.coeffs.high.delta;
        row.M_l = sol.coeffs.M_l;
        row.M_h = sol.coeffs.M_h;
        if (sol.pre_region.has_threshold()) row.x_l = sol.pre_region.threshold;
        if (sol.post.region.has_threshold()) row.x_h = sol.post.region.threshold;
        row.regime = to_string(sol.regime);
        row.status = RowStatus::ok;
    } catch (const Error& e) {
        row.status = RowStatus::failed;
        row.message = e.what();
    }
    return row;
}

/// One row per grid point over [lo, hi].
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    validate(spec);
    std::vector<SweepRow> rows;
    rows.reserve(spec.n_points);
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        const double v = spec.lo + (spec.hi - spec.lo) * static_cast<double>(i) /
                                       static_cast<double>(spec.n_points - 1);
        rows.push_back(solve_row(spec.base, spec.parameter, v));
    }
    return rows;
}

/**
 * Locate a sign change of a row-derived quantity over the sweep range and
 * refine it by bisection (re-solving the full problem at each midpoint) to
 * 1e-6 absolute in the parameter. Rows without the quantity (NaN) are
 * treated as gaps. Throws NoSignChange when no adjacent valid pair brackets
 * a root.
 */
inline double find_crossing(const SweepSpec& spec,
                            const std::function<double(const SweepRow&)>& f,
                            double param_tol = 1e-6) {
    validate(spec);
    const auto eval = [&](double v) -> double {
        const SweepRow row = solve_row(spec.base, spec.parameter, v);
        if (row.status != RowStatus::ok) return std::numeric_limits<double>::quiet_NaN();
        return f(row);
    };

    double prev_v = spec.lo;
    double prev_f = eval(prev_v);
    for (std::size_t i = 1; i < spec.n_points; ++i) {
        const double v = spec.lo + (spec.hi - spec.lo) * static_cast<double>(i) /
                                       static_cast<double>(spec.n_points - 1);
        const double fv = eval(v);
        // strict sign change; rows where the quantity merely touches zero
        // (e.g. a zero-severity shock) do not count as crossings
        if (std::isfinite(prev_f) && std::isfinite(fv) && prev_f * fv < 0) {
            double a = prev_v, b = v, fa = prev_f;
            while (b - a > param_tol) {
                const double m = 0.5 * (a + b);
                const double fm = eval(m);
                if (!std::isfinite(fm)) break;  // degenerate band inside the bracket
                if ((fa > 0) != (fm > 0)) {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return 0.5 * (a + b);
        }
        if (std::isfinite(fv)) {
            prev_v = v;
            prev_f = fv;
        }
    }
    throw NoSignChange("quantity does not change sign on [" + std::to_string(spec.lo) +
                       ", " + std::to_string(spec.hi) + "]");
}

}  // namespace annuitize

#endif  // ANNUITIZE_SENSITIVITY_HPP
