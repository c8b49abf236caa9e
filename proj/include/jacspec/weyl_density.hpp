#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/recurrence.hpp"
#include "jacspec/special_functions.hpp"

namespace jacspec {

enum class TailSeed {
    reflecting,  // zero tail: exactly the dense (depth+1)-truncation
    outgoing     // transparent tail: Herglotz fixed point of the local recursion
};

/* Corner resolvent G_00(z) of the uncoupled operator with the first `strip`
 * rows removed, by the backward continued fraction
 *     T_k = d_k^2 / ((2k+1) mu - z - T_{k+1}).
 *
 * The reflecting seed T = 0 makes finite depth exactly a finite matrix, so
 * all Herglotz sign constraints hold at any depth, but near the essential
 * spectrum the truncation's discrete comb prevents depth convergence for
 * mu <= 1.  The outgoing seed starts from the Herglotz-branch root of the
 * local quadratic c T^2 - (a_D - z) T + d_D^2 = 0 (c = (D+1)/D drift), which
 * acts as a transparent boundary and restores depth convergence. */
template <typename Real>
ComplexT<Real> corner_resolvent_cf(Real mu, ComplexT<Real> z, Index depth,
                                   TailSeed seed = TailSeed::outgoing, Index strip = 0) {
    using C = ComplexT<Real>;
    if (depth < 1) throw DomainError("corner_resolvent_cf: depth must be positive");
    if (strip < 0) throw DomainError("corner_resolvent_cf: negative strip");
    C t(0, 0);
    if (seed == TailSeed::outgoing) {
        const Real n = static_cast<Real>(depth + strip);
        const Real a = (2 * n + 1) * mu;
        const Real c = (n + 1) / n;
        const Real dsq = n * std::sqrt(n * n - Real(0.25));
        const C disc = std::sqrt((a - z) * (a - z) - Real(4) * c * dsq);
        const C t1 = ((a - z) + disc) / (2 * c);
        const C t2 = ((a - z) - disc) / (2 * c);
        if (std::abs(z.imag()) > Real(1e-14)) {
            const Real s = z.imag() > 0 ? Real(1) : Real(-1);
            t = (t1.imag() * s > t2.imag() * s) ? t1 : t2;
        } else {
            t = (std::abs(t1) < std::abs(t2)) ? t1 : t2;
        }
    }
    for (Index k = depth; k >= 1; --k) {
        const Real kk = static_cast<Real>(k + strip);
        const Real dsq = kk * std::sqrt(kk * kk - Real(0.25));
        t = dsq / ((2 * kk + 1) * mu - z - t);
    }
    const Real row0 = static_cast<Real>(2 * strip + 1) * mu;
    return Real(1) / (row0 - z - t);
}

struct WeylOptions {
    double rtol = 1e-12;
    Index initial_depth = 256;
    Index max_depth = Index(1) << 22;
    bool auto_deepen = true;
    Index fixed_depth = 4096;  // used when auto_deepen is off
};

struct WeylResult {
    Complex m;      // boundary Weyl function of the once-stripped operator
    Complex g00;    // corner resolvent (mu - z + d_1 m)^{-1}
    Index depth = 0;
    bool converged = false;
};

/* Weyl function m(z) = -d_1 G^{(1)}_00(z) of the stripped operator, plus the
 * corner resolvent it determines.  Reflecting seeds keep every finite depth a
 * genuine matrix resolvent, so the Herglotz constraint Im g00 * Im z > 0
 * (equivalently Im m * Im z < 0) must hold; a violation indicates a branch
 * or indexing fault and throws.  Depth is doubled until g00 is stable to
 * rtol; for points where the truncation comb prevents convergence (mu <= 1
 * close to the real axis) the cap is reached and ConvergenceError is thrown
 * unless auto-deepening is disabled. */
inline WeylResult weyl_m(double mu, Complex z, const WeylOptions& opts = {}) {
    const double d1 = d_entry<double>(1);
    auto eval = [&](Index depth) {
        WeylResult r;
        r.depth = depth;
        const Complex g1 = corner_resolvent_cf(mu, z, depth, TailSeed::reflecting, 1);
        r.m = -d1 * g1;
        r.g00 = 1.0 / (mu - z + d1 * r.m);
        return r;
    };

    WeylResult res;
    if (!opts.auto_deepen) {
        res = eval(opts.fixed_depth);
        res.converged = true;  // caller owns the depth choice
    } else {
        res = eval(opts.initial_depth);
        for (Index depth = opts.initial_depth * 2; depth <= opts.max_depth; depth *= 2) {
            const WeylResult next = eval(depth);
            const double change = std::abs(next.g00 - res.g00);
            res = next;
            if (change <= opts.rtol * std::max(std::abs(next.g00), 1e-300)) {
                res.converged = true;
                break;
            }
        }
        if (!res.converged)
            throw ConvergenceError("weyl_m: continued fraction not stable at depth cap");
    }

    if (std::abs(z.imag()) > 1e-14) {
        if (res.g00.imag() * z.imag() <= 0)
            throw HerglotzViolation("weyl_m: corner resolvent has wrong half-plane");
        if (res.m.imag() * z.imag() >= 0)
            throw HerglotzViolation("weyl_m: boundary function has wrong half-plane");
    }
    return res;
}

struct DensityOptions {
    std::vector<double> eps_ladder = {1e-2, 1e-3, 1e-4};
    double cf_rtol = 1e-3;      // per-rung tolerance on Im G / pi
    double cf_floor = 1e-6;     // absolute scale below which rtol goes absolute
    Index initial_depth = Index(1) << 14;
    Index max_depth = Index(1) << 21;
    double stability_floor = 1e-3;
    double trust_threshold = 0.02;
};

struct DensityEstimate {
    double energy = 0;
    double tau = 0;             // clamped at 0
    std::vector<double> eps_ladder;
    double stability = 0;       // relative spread of successive extrapolations
    bool trusted = false;
};

/* Density of the boundary spectral measure at real energy E:
 * tau(E) = lim_{eps->0} Im G_00(E + i eps) / pi, evaluated on a ladder of
 * eps values with linear-in-eps Richardson extrapolation off the last two
 * rungs.  The extrapolation from the previous pair gives the stability
 * figure; estimates whose extrapolations disagree are flagged untrusted
 * rather than discarded. */
inline DensityEstimate tau_density(double mu, double E, const DensityOptions& opts = {}) {
    const auto& eps = opts.eps_ladder;
    if (eps.size() < 3) throw DomainError("tau_density: ladder needs at least 3 rungs");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0) || eps[i] < 1e-8)
            throw DomainError("tau_density: ladder values must lie in [1e-8, inf)");
        if (i > 0 && !(eps[i] < eps[i - 1]))
            throw DomainError("tau_density: ladder must decrease strictly");
    }

    bool all_rungs_converged = true;
    std::vector<double> x(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const Complex z(E, eps[i]);
        // Convergence is judged on Im G / pi, the only quantity the ladder
        // consumes; near the essential spectrum the full complex value keeps
        // an O(depth^{-1/2}) phase wobble long after Im G has settled.
        double xi =
            corner_resolvent_cf(mu, z, opts.initial_depth, TailSeed::outgoing).imag() / pi;
        bool converged = false;
        for (Index depth = opts.initial_depth * 2; depth <= opts.max_depth; depth *= 2) {
            const double next =
                corner_resolvent_cf(mu, z, depth, TailSeed::outgoing).imag() / pi;
            const double change = std::abs(next - xi);
            xi = next;
            if (change <= opts.cf_rtol * std::max(std::abs(next), opts.cf_floor)) {
                converged = true;
                break;
            }
        }
        all_rungs_converged = all_rungs_converged && converged;
        x[i] = xi;
    }

    auto extrapolate = [&](std::size_t j) {  // line through rungs j-1, j at eps = 0
        return (eps[j - 1] * x[j] - eps[j] * x[j - 1]) / (eps[j - 1] - eps[j]);
    };
    const std::size_t last = eps.size() - 1;
    const double x0 = extrapolate(last);
    const double x1 = extrapolate(last - 1);

    DensityEstimate est;
    est.energy = E;
    est.eps_ladder = eps;
    est.stability = std::abs(x0 - x1) / std::max(std::abs(x0), opts.stability_floor);
    est.trusted = all_rungs_converged && est.stability <= opts.trust_threshold;
    est.tau = std::max(x0, 0.0);
    return est;
}

enum class SubordinacyVerdict { no_subordinate, subordinate_found, inconclusive };

struct SubordinacyReport {
    SubordinacyVerdict verdict = SubordinacyVerdict::inconclusive;
    std::vector<Index> cutoffs;
    std::vector<double> log_ratio;  // log(||A||_L / ||B||_L) after normalization
    double wronskian_rel = 0;       // relative Wronskian of the two solutions
};

/* Compares the cumulative norms of a backward-generated solution A and the
 * forward solution B with (C_0, C_1) = (1, 0) of the uncoupled operator at
 * real energy E.  Both are normalized to unit norm over the first 100
 * entries; norms are accumulated in log space so growth over thousands of
 * orders of magnitude is representable.  If the ratio stays within [1/rho,
 * rho] across the last decade of cutoffs no subordinate solution is visible;
 * a ratio escaping those bounds monotonically is reported as subordinacy.
 * Degenerate pairs (vanishing Wronskian) are inconclusive by construction. */
inline SubordinacyReport subordinacy_probe(double mu, double E, Index max_length = 10000,
                                           double rho = 10.0) {
    if (max_length < 200) throw DomainError("subordinacy_probe: max_length too small");
    if (!(rho > 1)) throw DomainError("subordinacy_probe: rho must exceed 1");
    const auto rel = free_shifted_recurrence<double>(mu, E);

    MillerOptions mopts;
    mopts.fixed_buffer = true;
    mopts.initial_buffer = std::max<Index>(64, max_length / 4);
    const auto A = miller_minimal(rel, max_length + 1, mopts);
    const auto B = forward_solve(rel, 1.0, 0.0, max_length + 1);

    SubordinacyReport rep;
    const double wa = A.value(1) * B.value(0) - A.value(0) * B.value(1);
    const double ws = (std::abs(A.value(0)) + std::abs(A.value(1))) *
                      (std::abs(B.value(0)) + std::abs(B.value(1)));
    rep.wronskian_rel = std::abs(wa) / std::max(ws, 1e-300);

    // log-sum-exp accumulation of log sum_{n<L} |C_n|^2 at log-spaced cutoffs
    constexpr Index n_cut = 40;
    std::vector<Index> cutoffs;
    for (Index j = 0; j < n_cut; ++j) {
        const double t = 1.0 + (std::log10(static_cast<double>(max_length)) - 1.0) * j /
                                   static_cast<double>(n_cut - 1);
        const Index L = static_cast<Index>(std::llround(std::pow(10.0, t)));
        if (cutoffs.empty() || L > cutoffs.back()) cutoffs.push_back(std::min(L, max_length));
    }

    auto accumulate = [&](const SolutionSequence<double>& s, std::vector<double>& at_cut,
                          double& at_100) {
        double lsum = -std::numeric_limits<double>::infinity();
        std::size_t jc = 0;
        at_cut.assign(cutoffs.size(), 0.0);
        for (Index n = 0; n <= max_length; ++n) {
            const double l = 2.0 * s.log_abs(n);
            if (std::isfinite(l)) {
                if (lsum == -std::numeric_limits<double>::infinity())
                    lsum = l;
                else {
                    const double hi = std::max(lsum, l);
                    lsum = hi + std::log1p(std::exp(std::min(lsum, l) - hi));
                }
            }
            if (n + 1 == 100) at_100 = lsum;
            while (jc < cutoffs.size() && n + 1 == cutoffs[jc]) at_cut[jc++] = lsum;
        }
    };
    std::vector<double> la, lb;
    double la100 = 0, lb100 = 0;
    accumulate(A, la, la100);
    accumulate(B, lb, lb100);

    rep.cutoffs = cutoffs;
    rep.log_ratio.resize(cutoffs.size());
    for (std::size_t j = 0; j < cutoffs.size(); ++j)
        rep.log_ratio[j] = 0.5 * ((la[j] - la100) - (lb[j] - lb100));

    if (rep.wronskian_rel < 1e-12) {
        rep.verdict = SubordinacyVerdict::inconclusive;
        return rep;
    }

    const double bound = std::log(rho);
    std::size_t decade_start = 0;
    for (std::size_t j = 0; j < cutoffs.size(); ++j)
        if (cutoffs[j] * 10 >= max_length) { decade_start = j; break; }

    bool all_bounded = true;
    for (std::size_t j = decade_start; j < cutoffs.size(); ++j)
        if (std::abs(rep.log_ratio[j]) > bound) all_bounded = false;

    if (all_bounded) {
        rep.verdict = SubordinacyVerdict::no_subordinate;
    } else {
        const double r_end = rep.log_ratio.back();
        bool monotone = true;
        for (std::size_t j = decade_start + 1; j < cutoffs.size(); ++j) {
            const double step = rep.log_ratio[j] - rep.log_ratio[j - 1];
            if (r_end > 0 ? step < 0 : step > 0) monotone = false;
        }
        rep.verdict = (std::abs(r_end) > bound && monotone)
                          ? SubordinacyVerdict::subordinate_found
                          : SubordinacyVerdict::inconclusive;
    }
    return rep;
}

}  // namespace jacspec
