#ifndef ANNUITIZE_ROOT_FINDING_HPP
#define ANNUITIZE_ROOT_FINDING_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "annuitize/errors.hpp"

namespace annuitize {

struct RootConfig {
    double f_tol = 0;          ///< absolute |F| tolerance (0: bracket-width only)
    double rel_x_tol = 1e-13;  ///< relative bracket-width tolerance
    int max_iter = 200;
};

/// Brent's method on a sign-changing bracket [a, b].
inline double brent(const std::function<double(double)>& f, double a, double b,
                    double fa_in, double fb_in, const RootConfig& cfg = {}) {
    double fa = fa_in, fb = fb_in;
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa > 0) == (fb > 0)) throw NoBracket("brent: endpoints have the same sign");

    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) { c = a; fc = fa; d = e = b - a; }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2 * std::numeric_limits<double>::epsilon() * std::abs(b) +
                           0.5 * cfg.rel_x_tol * std::abs(b);
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0 ||
            (cfg.f_tol > 0 && std::abs(fb) < cfg.f_tol && std::abs(m) <= 1e3 * tol))
            return b;
        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = e = m;  // bisect
        } else {
            double p, q;
            const double s = fb / fa;
            if (a == c) {  // secant
                p = 2 * m * s;
                q = 1 - s;
            } else {  // inverse quadratic
                const double qq = fa / fc, rr = fb / fc;
                p = s * (2 * m * qq * (qq - rr) - (b - a) * (rr - 1));
                q = (qq - 1) * (rr - 1) * (s - 1);
            }
            if (p > 0) q = -q; else p = -p;
            if (2 * p < std::min(3 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d; d = p / q;
            } else {
                d = e = m;
            }
        }
        a = b; fa = fb;
        b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
        fb = f(b);
    }
    return b;
}

inline double brent(const std::function<double(double)>& f, double a, double b,
                    const RootConfig& cfg = {}) {
    return brent(f, a, b, f(a), f(b), cfg);
}

/**
 * The threshold equations all have the shape
 *
 *     F(x) = c1 * x^p1 + c2 * x^p2 + c0,        x > 0,  p1 != p2,
 *
 * whose derivative has at most one positive zero, so F is monotone or
 * unimodal on (0, inf) and has at most two positive roots. Roots are
 * enumerated exactly by splitting at the analytic critical point.
 */
struct ThresholdEquation {
    double c1 = 0, p1 = 0;
    double c2 = 0, p2 = 0;
    double c0 = 0;
    double scale = 1.0;  ///< characteristic x-magnitude, used for expansion limits

    double operator()(double x) const {
        return c1 * std::pow(x, p1) + c2 * std::pow(x, p2) + c0;
    }

    /// Positive critical point of F, if any.
    std::optional<double> critical_point() const {
        const double a = c1 * p1, b = c2 * p2;
        if (a == 0 || b == 0 || (a > 0) == (b > 0)) return std::nullopt;
        // a x^(p1-1) + b x^(p2-1) = 0  =>  x = (-b/a)^(1/(p1-p2))
        return std::pow(-b / a, 1.0 / (p1 - p2));
    }
};

struct RootSearchResult {
    std::vector<double> roots;      ///< ascending
    bool multiple_roots = false;    ///< diagnostic: more than one sign change found
};

namespace detail {

/// Expand a bracket geometrically away from x0 in direction dir until the sign
/// of F changes or the limit is passed. Returns the root if found.
inline std::optional<double> expand_and_solve(const std::function<double(double)>& f,
                                              double x0, double f0, bool expand_up,
                                              double limit, const RootConfig& cfg) {
    double a = x0, fa = f0;
    double b = x0;
    const double factor = expand_up ? 10.0 : 0.1;
    for (int i = 0; i < 64; ++i) {
        b *= factor;
        if (expand_up ? b > limit : b < limit) break;
        const double fb = f(b);
        if (std::isfinite(fb) && (fa > 0) != (fb > 0))
            return expand_up ? brent(f, a, b, fa, fb, cfg) : brent(f, b, a, fb, fa, cfg);
        a = b;
        fa = fb;
    }
    return std::nullopt;
}

}  // namespace detail

/**
 * Enumerate the positive roots of a ThresholdEquation.
 *
 * Uses the analytic critical point when it exists (the function is then
 * strictly monotone on each side of it), otherwise a tenfold-expanding
 * log-scaled search from `scale`.
 */
inline RootSearchResult solve_threshold(const ThresholdEquation& eq,
                                        const RootConfig& cfg = {}) {
    RootSearchResult out;
    const auto f = [&eq](double x) { return eq(x); };
    const double lo_limit = 1e-12 * eq.scale;
    const double hi_limit = 1e12 * eq.scale;

    if (auto xc = eq.critical_point(); xc && *xc > lo_limit && *xc < hi_limit) {
        const double fc = f(*xc);
        if (fc == 0) {
            out.roots.push_back(*xc);
            return out;
        }
        if (auto r = detail::expand_and_solve(f, *xc, fc, false, lo_limit, cfg))
            out.roots.push_back(*r);
        if (auto r = detail::expand_and_solve(f, *xc, fc, true, hi_limit, cfg))
            out.roots.push_back(*r);
    } else {
        // monotone (or critical point out of range): one expanding scan
        double a = 1e-6 * eq.scale;
        const double fa = f(a);
        if (auto r = detail::expand_and_solve(f, a, fa, true, hi_limit, cfg))
            out.roots.push_back(*r);
    }
    out.multiple_roots = out.roots.size() > 1;
    return out;
}

/**
 * Solve a generic residual: expanding log-scaled bracket search over
 * [1e-6, 1e12] * scale in tenfold steps, then Brent on the first sign change.
 * Throws NoBracket when no sign change is found.
 */
inline double solve_residual(const std::function<double(double)>& f, double scale,
                             const RootConfig& cfg = {}) {
    const double lo = 1e-6 * scale;
    double prev_x = lo, prev_f = f(lo);
    for (double x = lo * 10; x <= 1e12 * scale * (1 + 1e-12); x *= 10) {
        const double fx = f(x);
        if (std::isfinite(prev_f) && std::isfinite(fx) && (prev_f > 0) != (fx > 0))
            return brent(f, prev_x, x, prev_f, fx, cfg);
        prev_x = x;
        prev_f = fx;
    }
    throw NoBracket("no sign change found in [" + std::to_string(lo) + ", " +
                    std::to_string(1e12 * scale) + "]");
}

}  // namespace annuitize

#endif  // ANNUITIZE_ROOT_FINDING_HPP
