#ifndef ANNUITIZE_SHOCK_SOLVER_HPP
#define ANNUITIZE_SHOCK_SOLVER_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "annuitize/coefficients.hpp"
#include "annuitize/constant_solver.hpp"
#include "annuitize/piecewise.hpp"
#include "annuitize/root_finding.hpp"

namespace annuitize {

/// Ordering of the pre-shock boundary relative to the post-shock one, for the
/// regimes where both exist. "pre_wider" means the pre-shock stopping set
/// contains the post-shock one (single-piece continuation); "pre_narrower"
/// the reverse (the continuation region straddles the post-shock boundary).
enum class BoundaryOrder { none, unresolved, pre_wider, pre_narrower };

/**
 * Structural classification of the two-state solution: the shape of the
 * pre-shock stopping region, the shape of the post-shock one, and (when both
 * have thresholds) their ordering.
 */
struct ShockRegime {
    RegionKind pre = RegionKind::never_stop;
    RegionKind post = RegionKind::never_stop;
    BoundaryOrder order = BoundaryOrder::none;

    friend bool operator==(const ShockRegime&, const ShockRegime&) = default;
};

// comma-free so the tag can sit in a CSV column
inline std::string to_string(const ShockRegime& r) {
    std::string s = std::string("pre=") + to_string(r.pre);
    if (r.order == BoundaryOrder::pre_wider) s += "(wide)";
    if (r.order == BoundaryOrder::pre_narrower) s += "(narrow)";
    if (r.order == BoundaryOrder::unresolved) s += "(?)";
    s += std::string(";post=") + to_string(r.post);
    return s;
}

/**
 * Decide the regime from coefficient signs alone.
 *
 * The case split is: sign of K, order of delta_h vs beta_h (which fixes the
 * post-shock region), then the sign of M_l. Ties on M_l route to the
 * threshold-free side exactly as the weak inequalities of the case table
 * demand. For the two regimes with a pre-shock threshold on the same side as
 * the post-shock one, the boundary ordering is left unresolved here and
 * settled by solve_shock.
 */
inline ShockRegime classify(const DerivedCoefficients& c, double K) {
    ShockRegime r;
    const bool annuity_dominates = c.post_shock_annuity_dominates;  // delta_h >= beta_h
    if (K == 0.0) {
        r.post = annuity_dominates ? RegionKind::stop_everywhere : RegionKind::stop_only_at_zero;
        r.pre = c.M_l <= 0 ? RegionKind::stop_everywhere : RegionKind::stop_only_at_zero;
        return r;
    }
    if (K < 0.0) {
        if (annuity_dominates) {
            r.post = RegionKind::stop_everywhere;
            r.pre = c.M_l <= 0 ? RegionKind::stop_everywhere : RegionKind::stop_below;
        } else {
            r.post = RegionKind::stop_below;
            if (c.M_l <= 0) {
                r.pre = RegionKind::stop_everywhere;
            } else {
                r.pre = RegionKind::stop_below;
                r.order = BoundaryOrder::unresolved;
            }
        }
        return r;
    }
    // K > 0
    if (!annuity_dominates) {  // delta_h <= beta_h
        r.post = RegionKind::never_stop;
        r.pre = c.M_l < 0 ? RegionKind::stop_above : RegionKind::never_stop;
    } else {
        r.post = RegionKind::stop_above;
        if (c.M_l < 0) {
            r.pre = RegionKind::stop_above;
            r.order = BoundaryOrder::unresolved;
        } else {
            r.pre = RegionKind::never_stop;  // value function blends the alpha terms
        }
    }
    return r;
}

/**
 * Full two-state solution: the pre-shock piecewise value function, the
 * post-shock constant-force solution, and the region descriptors.
 */
struct ShockSolution {
    ShockRegime regime;
    DerivedCoefficients coeffs;
    double K = 0;

    StoppingRegion pre_region;
    ConstantSolution post;       ///< constant-force solution at mu_h
    PiecewiseValueFunction pre;  ///< V(., mu_l)

    double payoff_low(double x) const noexcept { return coeffs.low.delta * (x - K); }

    double value(double x, HealthState s) const {
        if (s == HealthState::high) return post.value(x);
        return pre_region.contains(x) ? payoff_low(x) : pre.value(x);
    }
    double derivative(double x, HealthState s) const {
        if (s == HealthState::high) return post.derivative(x);
        return pre_region.contains(x) ? coeffs.low.delta : pre.derivative(x);
    }
};

inline double eval_shock(const ShockSolution& sol, double x, HealthState s) {
    return sol.value(x, s);
}

namespace detail {

/// Particular parts of the Lagrange value W on the two source regions.
struct SourceSplit {
    double P_hat = 0;   ///< x-coefficient where the post-shock state stops
    double C_hat = 0;   ///< constant there
    double P_tld = 0;   ///< x-coefficient where the post-shock state continues
    double C_tld = 0;   ///< constant there
    double R_tld = 0;   ///< coefficient of (x/x_h)^{g_h} there (anchored at x_h)
    double g_h = 0;     ///< post-shock homogeneous exponent entering the source
    double x_h = 0;     ///< post-shock threshold (anchor), 0 if none
};

inline SourceSplit split_sources(const ModelParams& p, const DerivedCoefficients& c,
                                 const ConstantSolution& post) {
    const double A = c.low.r + p.market.alpha - p.market.theta;  // > 0
    const double lam = c.low.lambda;
    const double dl = c.low.delta;
    const double price = p.pricing.rho_hat + p.pricing.mu_hat;
    SourceSplit s;
    s.P_hat = c.M_delta_raw / A;
    s.C_hat = price * p.pricing.K / c.low.r;
    s.P_tld = c.M_beta_raw / A;
    s.C_tld = dl * p.pricing.K;
    if (post.region.has_threshold()) {
        s.x_h = post.region.threshold;
        s.g_h = post.region.kind == RegionKind::stop_below ? c.high.gamma_minus
                                                           : c.high.gamma_plus;
        // scaled coefficient of the post-shock homogeneous term at x = x_h
        const double zh_s = (c.high.delta - c.high.beta) * s.x_h / s.g_h;
        const double q2 = lam - (c.high.mu - c.low.mu);  // lambda_l - delta
        s.R_tld = lam * zh_s / q2;
    }
    return s;
}

struct BranchCandidate {
    double b = 0;                 ///< pre-shock boundary
    BoundaryOrder order = BoundaryOrder::none;
    Piece inner;                  ///< W piece adjacent to the boundary
    std::optional<Piece> outer;   ///< W piece across x_h (two-region branches)
    double w2 = 0;                ///< W''(b), must be > 0 at a valid boundary
};

}  // namespace detail

/**
 * Left-hand side of the implicit pre-shock boundary equation for the two
 * regimes whose boundary is not in closed form. `branch` selects the
 * ordering hypothesis (pre_wider: single-piece continuation; pre_narrower:
 * continuation straddles the post-shock boundary). The variable of the
 * returned equation is u = b / x_h.
 *
 * Throws RegimeMismatch for regimes with closed-form (or no) boundaries.
 */
inline ThresholdEquation threshold_equation(const ModelParams& p,
                                            const DerivedCoefficients& c,
                                            BoundaryOrder branch) {
    const ShockRegime reg = classify(c, p.pricing.K);
    if (reg.order == BoundaryOrder::none)
        throw RegimeMismatch("regime " + to_string(reg) + " has a closed-form boundary");
    const ConstantSolution post = solve_constant(p, p.mortality.mu_h());
    const detail::SourceSplit s = detail::split_sources(p, c, post);
    const double g = reg.pre == RegionKind::stop_below ? c.low.gamma_minus
                                                       : c.low.gamma_plus;
    ThresholdEquation eq;
    eq.scale = 1.0;  // u-units
    if (branch == BoundaryOrder::pre_wider) {
        eq.c1 = (g - 1.0) / g * s.P_tld * s.x_h;
        eq.p1 = 1.0;
        eq.c2 = (g - s.g_h) / g * s.R_tld;
        eq.p2 = s.g_h;
        eq.c0 = s.C_tld;
        return eq;
    }
    // pre_narrower: eliminate the boundary-piece free coefficient after the
    // C^1 junction at x_h fixes the other one.
    const double gp = c.low.gamma_plus, gm = c.low.gamma_minus;
    const double J0 = (s.P_tld - s.P_hat) * s.x_h + (s.C_tld - s.C_hat) + s.R_tld;
    const double J1 = (s.P_tld - s.P_hat) * s.x_h + s.R_tld * s.g_h;
    if (reg.pre == RegionKind::stop_below) {
        const double delta_plus = (J1 - gm * J0) / (gp - gm);  // gamma_plus coef of inner piece
        eq.c1 = (gm - gp) / gm * delta_plus;
        eq.p1 = gp;
        eq.c2 = (gm - 1.0) / gm * s.P_hat * s.x_h;
        eq.p2 = 1.0;
        eq.c0 = s.C_hat;
    } else {
        const double delta_minus = -(gp * (-J0) - (-J1)) / (gp - gm);  // = d_minus
        eq.c1 = (gp - gm) / gp * delta_minus;
        eq.p1 = gm;
        eq.c2 = (gp - 1.0) / gp * s.P_hat * s.x_h;
        eq.p2 = 1.0;
        eq.c0 = s.C_hat;
    }
    return eq;
}

namespace detail {

/// Build the candidate boundary + W pieces for one ordering branch; returns
/// nothing when the branch equation has no root satisfying its own ordering
/// hypothesis together with the local optimality condition W''(b) > 0.
inline std::vector<BranchCandidate> branch_candidates(const ModelParams& p,
                                                      const DerivedCoefficients& c,
                                                      const ShockRegime& reg,
                                                      const SourceSplit& s,
                                                      BoundaryOrder branch) {
    const bool below = reg.pre == RegionKind::stop_below;
    const double gp = c.low.gamma_plus, gm = c.low.gamma_minus;
    const double g = below ? gm : gp;

    ThresholdEquation eq = threshold_equation(p, c, branch);
    RootSearchResult rs = solve_threshold(eq);

    std::vector<BranchCandidate> out;
    for (double u : rs.roots) {
        const double b = u * s.x_h;
        const bool ordered = branch == BoundaryOrder::pre_wider
                                 ? (below ? b > s.x_h : b < s.x_h)
                                 : (below ? b <= s.x_h : b >= s.x_h);
        if (!ordered) continue;

        BranchCandidate cand;
        cand.b = b;
        cand.order = branch;
        if (branch == BoundaryOrder::pre_wider) {
            // single piece anchored at b
            const double R_b = s.R_tld * std::pow(u, s.g_h);
            const double zeta = -(s.P_tld * b + R_b * s.g_h) / g;
            Piece w;
            w.xref = b;
            w.add(zeta, g).add(s.P_tld * b, 1.0).add(s.C_tld, 0.0).add(R_b, s.g_h);
            cand.inner = w;
            cand.w2 = w.second_derivative(b);
        } else if (below) {
            // inner (b, x_h]: dp (x/xh)^gp + cm (x/xh)^gm + P_hat x + C_hat
            // outer (x_h, inf): dm (x/xh)^gm + P_tld x + C_tld + R_tld (x/xh)^gh
            const double J0 = (s.P_tld - s.P_hat) * s.x_h + (s.C_tld - s.C_hat) + s.R_tld;
            const double J1 = (s.P_tld - s.P_hat) * s.x_h + s.R_tld * s.g_h;
            const double dplus = (J1 - gm * J0) / (gp - gm);
            const double dminus_jump = (gp * J0 - J1) / (gp - gm);
            const double cm = -(dplus * gp * std::pow(u, gp) + s.P_hat * b) /
                              (gm * std::pow(u, gm));
            Piece inner;
            inner.xref = s.x_h;
            inner.add(dplus, gp).add(cm, gm).add(s.P_hat * s.x_h, 1.0).add(s.C_hat, 0.0);
            Piece outer;
            outer.xref = s.x_h;
            outer.add(cm - dminus_jump, gm)
                .add(s.P_tld * s.x_h, 1.0)
                .add(s.C_tld, 0.0)
                .add(s.R_tld, s.g_h);
            cand.inner = inner;
            cand.outer = outer;
            cand.w2 = inner.second_derivative(b);
        } else {
            // outer [0, x_h]: cp (x/xh)^gp + P_tld x + C_tld + R_tld (x/xh)^gh
            // inner (x_h, b): dp (x/xh)^gp + dm (x/xh)^gm + P_hat x + C_hat
            const double J0 = (s.P_hat - s.P_tld) * s.x_h + (s.C_hat - s.C_tld) - s.R_tld;
            const double J1 = (s.P_hat - s.P_tld) * s.x_h - s.R_tld * s.g_h;
            const double dplus_jump = (J1 - gm * J0) / (gp - gm);  // cp - dp
            const double dminus = -(gp * J0 - J1) / (gp - gm);     // dm
            const double dp = -(dminus * gm * std::pow(u, gm) + s.P_hat * b) /
                              (gp * std::pow(u, gp));
            Piece inner;
            inner.xref = s.x_h;
            inner.add(dp, gp).add(dminus, gm).add(s.P_hat * s.x_h, 1.0).add(s.C_hat, 0.0);
            Piece outer;
            outer.xref = s.x_h;
            outer.add(dp + dplus_jump, gp)
                .add(s.P_tld * s.x_h, 1.0)
                .add(s.C_tld, 0.0)
                .add(s.R_tld, s.g_h);
            cand.inner = inner;
            cand.outer = outer;
            cand.w2 = inner.second_derivative(b);
        }
        if (cand.w2 > 0) out.push_back(std::move(cand));
    }
    return out;
}

/// Append payoff + W as a V piece.
inline Piece v_piece(const Piece& w, double delta_l, double K) {
    Piece v = w;
    v.add(delta_l * v.xref, 1.0).add(-delta_l * K, 0.0);
    return v;
}

}  // namespace detail

/// Coefficient bundle of the blended never-stop value function (K > 0 with a
/// post-shock stop-above boundary). Exposed so the quadrature oracle can test
/// the three kernels independently of the assembled pieces.
struct AlphaFunctions {
    double rA = 0;     ///< r_l + alpha - theta
    double r_l = 0;
    double q2 = 0;     ///< lambda_l - delta
    double gp_l = 0, gm_l = 0, gp_h = 0;
    double x_h = 0;    ///< post-shock boundary
    double delta_h = 0, beta_h = 0;

    /// time-discounted split of the post-shock linear payoff around x_h
    double alpha1(double x) const {
        const double span = gp_l - gm_l;
        if (x >= x_h)
            return delta_h / rA +
                   (delta_h - beta_h) * (1 - gp_l) / (rA * span) * std::pow(x_h / x, 1 - gm_l);
        return beta_h / rA +
               (delta_h - beta_h) * (1 - gm_l) / (rA * span) * std::pow(x_h / x, 1 - gp_l);
    }
    /// discounted mass of the post-shock homogeneous term below x_h
    double alpha2(double x) const {
        const double span = gp_l - gm_l;
        if (x >= x_h)
            return -(gp_h - gp_l) / (q2 * span) * std::pow(x_h / x, gp_h - gm_l);
        return 1.0 / q2 - (gp_h - gm_l) / (q2 * span) * std::pow(x_h / x, gp_h - gp_l);
    }
    /// discounted probability-type kernel of the region above x_h
    double alpha3(double x) const {
        const double span = gp_l - gm_l;
        if (x >= x_h)
            return 1.0 / r_l - gp_l / (r_l * span) * std::pow(x_h / x, -gm_l);
        return -gm_l / (r_l * span) * std::pow(x_h / x, -gp_l);
    }
};

inline AlphaFunctions make_alpha_functions(const ModelParams& p,
                                           const DerivedCoefficients& c,
                                           const ConstantSolution& post) {
    AlphaFunctions a;
    a.rA = c.low.r + p.market.alpha - p.market.theta;
    a.r_l = c.low.r;
    a.q2 = c.low.lambda - p.mortality.delta;
    a.gp_l = c.low.gamma_plus;
    a.gm_l = c.low.gamma_minus;
    a.gp_h = c.high.gamma_plus;
    a.x_h = post.region.threshold;
    a.delta_h = c.high.delta;
    a.beta_h = c.high.beta;
    return a;
}

/**
 * Solve the full two-state problem: post-shock constant-force solution,
 * regime classification, boundary determination (closed form or implicit
 * with ordering-branch selection), and assembly of the pre-shock piecewise
 * value function.
 *
 * For the two implicit regimes exactly one ordering branch must produce a
 * boundary consistent with its own hypothesis; zero or two such candidates
 * raise BranchInconsistency with both candidate roots in the message.
 */
inline ShockSolution solve_shock(const ModelParams& params) {
    const ModelParams& p = validate(params);
    ShockSolution sol;
    sol.coeffs = derive_coefficients(p);
    sol.K = p.pricing.K;
    sol.post = solve_constant(p, p.mortality.mu_h());
    sol.regime = classify(sol.coeffs, p.pricing.K);

    const DerivedCoefficients& c = sol.coeffs;
    const double dl = c.low.delta;
    const double K = p.pricing.K;
    const double A = c.low.r + p.market.alpha - p.market.theta;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const detail::SourceSplit s = detail::split_sources(p, c, sol.post);

    auto payoff_piece = [&](double xref) {
        Piece pc;
        pc.xref = xref;
        pc.add(dl * xref, 1.0).add(-dl * K, 0.0);
        return pc;
    };
    auto linear_piece = [&](double slope) {
        Piece pc;
        pc.add(slope, 1.0);
        return pc;
    };

    switch (sol.regime.pre) {
        case RegionKind::stop_everywhere:
            sol.pre_region = {RegionKind::stop_everywhere, nan};
            sol.pre.append(0.0, payoff_piece(1.0));
            return sol;

        case RegionKind::never_stop:
            sol.pre_region = {RegionKind::never_stop, nan};
            if (sol.regime.post == RegionKind::stop_above) {
                // blended value: linear base plus the three alpha kernels
                const AlphaFunctions a = make_alpha_functions(p, c, sol.post);
                const double lam = c.low.lambda;
                const double zh_s = (c.high.delta - c.high.beta) * a.x_h / a.gp_h;
                const double span = a.gp_l - a.gm_l;
                Piece lo_piece, hi_piece;
                lo_piece.xref = a.x_h;
                lo_piece.add((c.low.beta + lam * c.high.beta / a.rA) * a.x_h, 1.0)
                    .add(lam * zh_s / a.q2, a.gp_h)
                    .add(lam * (c.high.delta - c.high.beta) * (1 - a.gm_l) * a.x_h / (a.rA * span) -
                             lam * zh_s * (a.gp_h - a.gm_l) / (a.q2 * span) +
                             lam * c.high.delta * K * a.gm_l / (a.r_l * span),
                         a.gp_l);
                hi_piece.xref = a.x_h;
                hi_piece.add((c.low.beta + lam * c.high.delta / a.rA) * a.x_h, 1.0)
                    .add(-lam * c.high.delta * K / a.r_l, 0.0)
                    .add(lam * (c.high.delta - c.high.beta) * (1 - a.gp_l) * a.x_h / (a.rA * span) -
                             lam * zh_s * (a.gp_h - a.gp_l) / (a.q2 * span) +
                             lam * c.high.delta * K * a.gp_l / (a.r_l * span),
                         a.gm_l);
                sol.pre.append(0.0, lo_piece);
                sol.pre.append(a.x_h, hi_piece);
            } else {
                sol.pre.append(0.0, linear_piece(dl + c.M_l / A));
            }
            return sol;

        case RegionKind::stop_only_at_zero:
            sol.pre_region = {RegionKind::stop_only_at_zero, nan};
            sol.pre.append(0.0, linear_piece(dl + c.M_l / A));
            return sol;

        default:
            break;  // threshold regimes handled below
    }

    const bool below = sol.regime.pre == RegionKind::stop_below;

    if (sol.regime.order != BoundaryOrder::unresolved) {
        // closed-form boundary against a single source region
        const double g = below ? c.low.gamma_minus : c.low.gamma_plus;
        const double P = below ? s.P_hat : s.P_tld;
        const double C = below ? s.C_hat : s.C_tld;
        const double b = -C * g / (P * (g - 1.0));
        const double zeta = -P * b / g;
        Piece w;
        w.xref = b;
        w.add(zeta, g).add(P * b, 1.0).add(C, 0.0);
        sol.pre_region = {sol.regime.pre, b};
        if (below) {
            sol.pre.append(0.0, payoff_piece(b));
            sol.pre.append(b, detail::v_piece(w, dl, K));
        } else {
            sol.pre.append(0.0, detail::v_piece(w, dl, K));
            sol.pre.append(b, payoff_piece(b));
        }
        return sol;
    }

    // implicit boundary: try both ordering branches
    std::vector<detail::BranchCandidate> cands;
    for (auto branch : {BoundaryOrder::pre_wider, BoundaryOrder::pre_narrower})
        for (auto& cand : detail::branch_candidates(p, c, sol.regime, s, branch))
            cands.push_back(std::move(cand));

    if (cands.size() != 1) {
        std::string msg = "boundary-branch selection found " +
                          std::to_string(cands.size()) + " consistent candidates:";
        for (const auto& cd : cands) msg += " " + std::to_string(cd.b);
        throw BranchInconsistency(msg);
    }
    const detail::BranchCandidate& cand = cands.front();
    sol.regime.order = cand.order;
    sol.pre_region = {sol.regime.pre, cand.b};

    if (below) {
        sol.pre.append(0.0, payoff_piece(cand.b));
        sol.pre.append(cand.b, detail::v_piece(cand.inner, dl, K));
        if (cand.outer) sol.pre.append(s.x_h, detail::v_piece(*cand.outer, dl, K));
    } else {
        if (cand.outer) {
            sol.pre.append(0.0, detail::v_piece(*cand.outer, dl, K));
            sol.pre.append(s.x_h, detail::v_piece(cand.inner, dl, K));
        } else {
            sol.pre.append(0.0, detail::v_piece(cand.inner, dl, K));
        }
        sol.pre.append(cand.b, payoff_piece(cand.b));
    }
    return sol;
}

}  // namespace annuitize

#endif  // ANNUITIZE_SHOCK_SOLVER_HPP
