#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/spectral_point.hpp"
#include "jacspec/tridiagonal.hpp"
#include "jacspec/weyl_density.hpp"

namespace jacspec {

struct PointSpectrumOptions {
    Index truncation = 2048;
    double delta = 1e-6;          // window (delta, 1/2 - delta)
    double e_tol = 1e-12;         // bisection width for root location
    double tail_tol = 1e-6;       // eigenvector tail mass for genuineness
    double match_tol = 1e-8;      // root agreement between N and 2N
    Index inverse_iterations = 4;
};

struct PointSpectrumResult {
    ModelParameters params;
    std::vector<double> eigenvalues;  // genuine roots, ascending, from the 2N run
    Index count = 0;
    Index truncation = 0;             // truncation backing `eigenvalues`
    double method_agreement = 0;      // max gap between the two locator methods
};

namespace detail {

inline Index count_negative(double mu, double E, Index n) {
    return count_below(coupled_operator_real(mu, E, n), 0.0);
}

/* Fraction of eigenvector mass in the last 10% of entries, for the kernel
 * candidate at energy E.  Inverse iteration with shift 0; genuine square
 * summable eigenvectors concentrate at the head, truncation artifacts of the
 * essential spectrum live at the artificial boundary. */
inline double tail_fraction(double mu, double E, Index n, Index iters) {
    const auto op = coupled_operator_real(mu, E, n);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    for (Index k = 0; k < iters; ++k) {
        v = solve_tridiagonal(op, v);
        const double nv = v.norm();
        if (!(nv > 0) || !std::isfinite(nv)) return 0.0;  // exactly singular: genuine
        v /= nv;
    }
    const Index tail = std::max<Index>(1, n / 10);
    return v.tail(tail).squaredNorm() / v.squaredNorm();
}

struct RootScan {
    Index base_count = 0;                  // negative eigenvalues at E = delta
    std::vector<double> roots;             // all count jumps in the window
    std::vector<Index> indices;            // crossing eigenvalue index per root
    std::vector<double> genuine;           // subset passing the tail test
    std::vector<Index> genuine_indices;
};

inline RootScan scan_roots(double mu, Index n, const PointSpectrumOptions& opts) {
    RootScan scan;
    const double lo = opts.delta, hi = 0.5 - opts.delta;
    const Index clo = count_negative(mu, lo, n);
    const Index chi = count_negative(mu, hi, n);
    scan.base_count = clo;
    for (Index j = clo + 1; j <= chi; ++j) {
        double a = lo, b = hi;
        while (b - a > opts.e_tol) {
            const double m = 0.5 * (a + b);
            if (count_negative(mu, m, n) >= j)
                b = m;
            else
                a = m;
        }
        scan.roots.push_back(0.5 * (a + b));
        scan.indices.push_back(j - 1);  // 0-based eigenvalue index crossing zero
    }
    for (std::size_t k = 0; k < scan.roots.size(); ++k) {
        if (tail_fraction(mu, scan.roots[k], n, opts.inverse_iterations) < opts.tail_tol) {
            scan.genuine.push_back(scan.roots[k]);
            scan.genuine_indices.push_back(scan.indices[k]);
        }
    }
    return scan;
}

// Independent locator: bisection in E on the sign of the j-th eigenvalue.
inline double root_by_eigenvalue_sign(double mu, Index n, Index j, double lo, double hi,
                                      double e_tol) {
    while (hi - lo > e_tol) {
        const double m = 0.5 * (lo + hi);
        const double lam = eigenvalue_by_index(coupled_operator_real(mu, m, n), j, 1e-12);
        if (lam < 0)
            hi = m;
        else
            lo = m;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/* Kernel energies in (delta, 1/2 - delta): values E where the truncated
 * coupled operator at real E acquires a new negative eigenvalue.  Roots are
 * located twice (pivot-count bisection and eigenvalue-sign bisection),
 * filtered by the eigenvector tail test, and validated against the doubled
 * truncation; a genuine-root set that does not survive doubling throws
 * TruncationUnstable. */
inline PointSpectrumResult point_spectrum(double mu, const PointSpectrumOptions& opts = {}) {
    const Index n1 = opts.truncation;
    const Index n2 = 2 * n1;
    const auto scan1 = detail::scan_roots(mu, n1, opts);
    const auto scan2 = detail::scan_roots(mu, n2, opts);

    if (scan1.genuine.size() != scan2.genuine.size())
        throw TruncationUnstable("point_spectrum: genuine root count changed on doubling");
    for (std::size_t k = 0; k < scan1.genuine.size(); ++k)
        if (std::abs(scan1.genuine[k] - scan2.genuine[k]) > opts.match_tol)
            throw TruncationUnstable("point_spectrum: root moved on truncation doubling");

    PointSpectrumResult res;
    res.params = ModelParameters::from_mu(mu);
    res.eigenvalues = scan2.genuine;
    res.count = static_cast<Index>(res.eigenvalues.size());
    res.truncation = n2;
    for (std::size_t k = 0; k < scan2.genuine.size(); ++k) {
        const double via_sign = detail::root_by_eigenvalue_sign(
            mu, n2, scan2.genuine_indices[k], opts.delta, 0.5 - opts.delta, opts.e_tol);
        res.method_agreement =
            std::max(res.method_agreement, std::abs(via_sign - scan2.genuine[k]));
    }
    return res;
}

// Predicted number of kernel energies as mu decreases to 1: 1/(4 sqrt(2(mu-1))).
inline double counting_asymptotics(double mu) {
    if (!(mu > 1)) throw DomainError("counting_asymptotics: defined for mu > 1");
    return 1.0 / (4.0 * std::sqrt(2.0 * (mu - 1.0)));
}

struct MultiplicityMap {
    double energy = 0;
    Index base = 0;          // 2 per open channel
    Index extra = 0;         // borderline/weak-coupling singular addition
    Index total = 0;
    bool boundary_flag = false;  // E at a channel threshold n + 1/2
};

/* Expected spectral multiplicity at real energy E: two per open channel
 * (channel n is open when E > n + 1/2), plus one on the singular layer that
 * is present for mu < 1 everywhere and for mu = 1 at positive energies. */
inline MultiplicityMap predicted_multiplicity(double mu, double E) {
    MultiplicityMap m;
    m.energy = E;
    const double shifted = E + 0.5;
    const Index open = (shifted > 0) ? static_cast<Index>(std::floor(shifted)) : 0;
    m.base = 2 * open;
    m.extra = (mu < 1.0 || (mu == 1.0 && E > 0)) ? 1 : 0;
    const double frac = shifted - std::floor(shifted);
    m.boundary_flag = shifted > 0 && std::min(frac, 1.0 - frac) < 1e-9;
    m.total = m.base + m.extra;
    return m;
}

struct DeficiencyReport {
    std::vector<Index> truncations;
    std::vector<double> sigma_min;  // smallest singular value of J(i; mu) per N
    bool bounded_below = false;     // no decay toward 0 across the sweep
};

/* Smallest singular value of the coupled operator at lambda = i across a
 * truncation sweep.  A kernel direction at the spectral parameter i would
 * force sigma_min -> 0; staying bounded below is evidence of a trivial
 * deficiency space. */
inline DeficiencyReport deficiency_probe(double mu, std::vector<Index> truncations = {},
                                         double rtol = 1e-3) {
    DeficiencyReport rep;
    if (truncations.empty())
        for (Index k = 8; k <= 13; ++k) truncations.push_back(Index(1) << k);
    rep.truncations = truncations;
    for (Index n : truncations) {
        const auto op = coupled_operator(mu, SpectralPoint(0.0, 1.0), n);
        rep.sigma_min.push_back(smallest_singular_value(op, rtol, 5000));
    }
    const double first = rep.sigma_min.front();
    const double lowest = *std::min_element(rep.sigma_min.begin(), rep.sigma_min.end());
    rep.bounded_below = lowest >= 0.05 && rep.sigma_min.back() >= 0.5 * first;
    return rep;
}

struct NormDecayReport {
    std::vector<double> taus;
    std::vector<double> norms;  // || J(-i tau; mu)^{-1} e_0 ||
    double slope = 0;           // log-log fit, expected -1/2
    bool dissipative_decay = false;
};

/* Resolvent norm decay along the negative imaginary axis of the spectral
 * parameter: || J(-i tau)^{-1} e_0 || should fall off like tau^{-1/2}.  The
 * slope is fit over a tau ladder at fixed truncation. */
inline NormDecayReport norm_decay_probe(double mu, Index truncation = 10000,
                                        std::vector<double> taus = {}) {
    NormDecayReport rep;
    rep.taus = taus.empty() ? std::vector<double>{10.0, 100.0, 1000.0, 10000.0} : taus;
    if (rep.taus.size() < 2) throw DomainError("norm_decay_probe: need at least two taus");
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(truncation);
    e0[0] = 1.0;
    for (double t : rep.taus) {
        const auto op = coupled_operator(mu, SpectralPoint(0.0, -t), truncation);
        rep.norms.push_back(solve_tridiagonal(op, e0).norm());
    }
    const Index m = static_cast<Index>(rep.taus.size());
    Eigen::MatrixXd A(m, 2);
    Eigen::VectorXd y(m);
    for (Index i = 0; i < m; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = std::log(rep.taus[i]);
        y[i] = std::log(rep.norms[i]);
    }
    rep.slope = A.colPivHouseholderQr().solve(y)[1];
    rep.dissipative_decay = rep.slope <= -0.45;
    return rep;
}

struct StrippedCheckReport {
    Index stripped = 0;
    bool eigenvalue_mode = false;        // mu > 1: interlacing of discrete spectra
    bool pass = false;
    std::vector<double> original;        // eigenvalue mode: lowest eigenvalues
    std::vector<double> stripped_values; // eigenvalue mode: lowest of the stripped op
    std::vector<double> energies;        // density mode: sample energies
    std::vector<double> tau_values;      // density mode: stripped-op densities
};

/* Removing the first m rows must not create spectrum from nothing: for
 * mu > 1 the lowest eigenvalues of the stripped truncation interlace with
 * the original ones (lambda_k <= lambda^(m)_k <= lambda_{k+m}); for mu <= 1
 * the stripped corner density stays a trusted nonnegative measure on a
 * sample grid. */
inline StrippedCheckReport stripped_spectrum_check(double mu, Index m = 1,
                                                   Index truncation = 4096) {
    if (m < 1) throw DomainError("stripped_spectrum_check: strip count must be positive");
    StrippedCheckReport rep;
    rep.stripped = m;
    rep.eigenvalue_mode = mu > 1.0;
    if (rep.eigenvalue_mode) {
        const auto full = free_operator(mu, truncation);
        const auto sub = full.strip(m);
        const Index k = 5;
        const auto lo_full = lowest_eigenvalues(full, k + m);
        const auto lo_sub = lowest_eigenvalues(sub, k);
        rep.original.assign(lo_full.values.begin(), lo_full.values.end());
        rep.stripped_values.assign(lo_sub.values.begin(), lo_sub.values.end());
        rep.pass = true;
        const double slack = 1e-8;
        for (Index j = 0; j < k; ++j) {
            if (!(lo_full.values[j] <= lo_sub.values[j] + slack &&
                  lo_sub.values[j] <= lo_full.values[j + m] + slack))
                rep.pass = false;
        }
    } else {
        rep.energies = {-3.0, -1.0, 0.0, 1.0, 3.0};
        rep.pass = true;
        DensityOptions dopts;
        for (double E : rep.energies) {
            // stripped-corner ladder, same extrapolation as tau_density
            std::vector<double> x;
            for (double eps : dopts.eps_ladder) {
                Complex g = corner_resolvent_cf(mu, Complex(E, eps), dopts.initial_depth,
                                                TailSeed::outgoing, m);
                for (Index depth = dopts.initial_depth * 2; depth <= dopts.max_depth;
                     depth *= 2) {
                    const Complex next =
                        corner_resolvent_cf(mu, Complex(E, eps), depth, TailSeed::outgoing, m);
                    const double change = std::abs(next - g);
                    g = next;
                    if (change <= dopts.cf_rtol * std::max(std::abs(g), 1e-300)) break;
                }
                x.push_back(g.imag() / pi);
            }
            const std::size_t l = x.size() - 1;
            const auto& eps = dopts.eps_ladder;
            const double x0 =
                (eps[l - 1] * x[l] - eps[l] * x[l - 1]) / (eps[l - 1] - eps[l]);
            rep.tau_values.push_back(x0);
            if (!(x0 > -1e-6)) rep.pass = false;
        }
    }
    return rep;
}

}  // namespace jacspec
