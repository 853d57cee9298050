#ifndef ANNUITIZE_QUADRATURE_HPP
#define ANNUITIZE_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "annuitize/errors.hpp"

namespace annuitize {

struct QuadratureConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    std::size_t max_subdivisions = 4000;
};

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kGK15Nodes = {
    0.000000000000000000000000000000000e+00, 2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01, 5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01, 8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01, 9.914553711208126392068546975263285e-01};
inline constexpr std::array<double, 8> kGK15Weights = {
    2.094821410847278280129991748917143e-01, 2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01, 1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01, 1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02, 2.293532201052922496373200805896959e-02};
inline constexpr std::array<double, 4> kG7Weights = {
    4.179591836734693877551020408163265e-01, 3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01, 1.294849661688696932706114326790820e-01};

template <typename F>
inline std::pair<double, double> gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double f0 = f(c);
    double kron = kGK15Weights[0] * f0;
    double gauss = kG7Weights[0] * f0;
    for (std::size_t i = 1; i < 8; ++i) {
        const double fp = f(c + h * kGK15Nodes[i]);
        const double fm = f(c - h * kGK15Nodes[i]);
        kron += kGK15Weights[i] * (fp + fm);
        if (i % 2 == 0) gauss += kG7Weights[i / 2] * (fp + fm);
    }
    kron *= h;
    gauss *= h;
    const double diff = std::abs(kron - gauss);
    // standard conservative error model for the embedded pair
    const double err = diff > 0 ? std::pow(200.0 * diff, 1.5) : 0.0;
    return {kron, std::min(err, diff > 0 ? diff * 200.0 : 0.0) + diff * 1e-14};
}

}  // namespace detail

/**
 * Adaptive Gauss-Kronrod integration on [a, b]: worst-interval bisection
 * until the summed error estimate passes the tolerance.
 * Throws QuadratureNonConvergence when the subdivision budget runs out.
 */
template <typename F>
inline double integrate(const F& f, double a, double b, const QuadratureConfig& cfg = {}) {
    struct Interval {
        double a, b, value, error;
        bool operator<(const Interval& o) const { return error < o.error; }
    };
    auto [v0, e0] = detail::gk15(f, a, b);
    std::priority_queue<Interval> q;
    q.push({a, b, v0, e0});
    double total = v0, total_err = e0;
    std::size_t splits = 0;
    while (total_err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total))) {
        if (++splits > cfg.max_subdivisions)
            throw QuadratureNonConvergence("subdivision budget exhausted, err = " +
                                           std::to_string(total_err));
        Interval worst = q.top();
        q.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto [vl, el] = detail::gk15(f, worst.a, mid);
        auto [vr, er] = detail::gk15(f, mid, worst.b);
        total += vl + vr - worst.value;
        total_err += el + er - worst.error;
        q.push({worst.a, mid, vl, el});
        q.push({mid, worst.b, vr, er});
    }
    return total;
}

}  // namespace annuitize

#endif  // ANNUITIZE_QUADRATURE_HPP
