#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/special_functions.hpp"
#include "jacspec/spectral_point.hpp"
#include "jacspec/tridiagonal.hpp"

namespace jacspec {

/* Uniform symmetric grid on [-X, X] with a doubled node at 0 so one-sided
 * limits are stored separately.  Node layout: 0..segment covers [-X, 0]
 * (index segment is "0-"), segment+1..2*segment+1 covers [0, X]. */
struct Grid {
    double x_max = 0;
    double h = 0;
    Index segment = 0;  // cells per half line

    static Grid make(double x_max, double h) {
        if (!(x_max > 0) || !(h > 0)) throw DomainError("Grid: x_max and h must be positive");
        Grid g;
        g.x_max = x_max;
        g.h = h;
        g.segment = static_cast<Index>(std::llround(x_max / h));
        if (g.segment < 8 || std::abs(g.segment * h - x_max) > 1e-9 * x_max)
            throw DomainError("Grid: step must divide the half-length, at least 8 cells");
        return g;
    }

    Index size() const { return 2 * segment + 2; }
    Index zero_left() const { return segment; }
    Index zero_right() const { return segment + 1; }
    double node(Index j) const {
        return j <= segment ? (j - segment) * h : (j - segment - 1) * h;
    }
};

struct GridFunctionBundle {
    Grid x_grid;
    std::vector<Eigen::VectorXcd> components;  // one grid function per n < M

    Index component_count() const { return static_cast<Index>(components.size()); }
};

namespace detail {

/* Cubic interpolation stencils in units of h.  Offset index o in {0,1,2}
 * means the four sample points sit at s/h = -o .. -o+3 relative to the cell
 * start, so interior cells use o=1 and cells at a segment edge shift to o=0
 * or o=2; stencils therefore never straddle the kink at x = 0. */
inline const std::array<Eigen::Matrix4d, 3>& stencil_inverses() {
    static const std::array<Eigen::Matrix4d, 3> inv = [] {
        std::array<Eigen::Matrix4d, 3> out;
        for (int o = 0; o < 3; ++o) {
            Eigen::Matrix4d v;
            for (int i = 0; i < 4; ++i) {
                const double s = static_cast<double>(i - o);
                v(i, 0) = 1.0;
                v(i, 1) = s;
                v(i, 2) = s * s;
                v(i, 3) = s * s * s;
            }
            out[o] = v.inverse();
        }
        return out;
    }();
    return inv;
}

/* Exponential moments over one cell, in scaled form:
 *   toward[m] = h^{-m-1} int_0^h s^m e^{-zeta (h-s)} ds = e^{-zeta h} sum_k (zeta h)^k / (k! (m+k+1))
 *   away[m]   = h^{-m-1} int_0^h s^m e^{-zeta s} ds    = sum_k (-zeta h)^k / (k! (m+k+1))
 * The series is evaluated directly; |zeta h| stays far below 1 for any
 * sensible grid, and failure to converge is a quadrature error. */
struct CellMoments {
    std::array<Complex, 4> toward;
    std::array<Complex, 4> away;
};

inline CellMoments cell_moments(Complex zeta_h) {
    if (std::abs(zeta_h) > 0.5)
        throw QuadratureError("cell_moments: step too coarse for the series expansion");
    CellMoments mom;
    const Complex damp = std::exp(-zeta_h);
    for (int m = 0; m < 4; ++m) {
        Complex sum_t = 0, sum_a = 0, term_t = 1, term_a = 1;
        bool ok = false;
        for (int k = 0; k < 40; ++k) {
            const Complex add_t = term_t / double(m + k + 1);
            const Complex add_a = term_a / double(m + k + 1);
            sum_t += add_t;
            sum_a += add_a;
            if (std::abs(add_t) < 1e-20 * std::abs(sum_t) &&
                std::abs(add_a) < 1e-20 * std::abs(sum_a)) {
                ok = true;
                break;
            }
            term_t *= zeta_h / double(k + 1);
            term_a *= -zeta_h / double(k + 1);
        }
        if (!ok) throw QuadratureError("cell_moments: series did not converge");
        mom.toward[m] = damp * sum_t;
        mom.away[m] = sum_a;
    }
    return mom;
}

// Cubic coefficients (in s/h) for the cell starting at node j inside [lo, hi].
inline Eigen::Vector4cd cell_cubic(const Eigen::VectorXcd& f, Index j, Index lo, Index hi) {
    int o = 1;
    if (j == lo) o = 0;
    if (j + 1 == hi) o = 2;
    Eigen::Vector4cd vals;
    for (int i = 0; i < 4; ++i) vals[i] = f[j + i - o];
    return stencil_inverses()[o].cast<Complex>() * vals;
}

inline Complex dot4(const Eigen::Vector4cd& c, const std::array<Complex, 4>& m) {
    return c[0] * m[0] + c[1] * m[1] + c[2] * m[2] + c[3] * m[3];
}

}  // namespace detail

/* Particular solution of -u'' + (n + 1/2 - lambda) u = f on [-X, X]:
 * u(x) = (2 zeta)^{-1} int e^{-zeta |x - t|} f(t) dt, by two directional
 * sweeps whose per-cell integrals pair a cubic interpolant of f with the
 * exact exponential moments.  C^1 at 0 by construction. */
inline Eigen::VectorXcd free_resolvent_component(Index n, const SpectralPoint& lam,
                                                 const Eigen::VectorXcd& f, const Grid& g) {
    if (f.size() != g.size()) throw DomainError("free_resolvent_component: size mismatch");
    const Complex zn = zeta(n, lam);
    const auto mom = detail::cell_moments(zn * g.h);
    const Complex decay = std::exp(-zn * g.h);
    const Index zl = g.zero_left(), zr = g.zero_right(), last = g.size() - 1;

    Eigen::VectorXcd l_acc(g.size()), r_acc(g.size());
    // Left-to-right: L(x) = int_{-X}^x e^{-zeta (x-t)} f(t) dt
    l_acc[0] = 0;
    for (Index j = 0; j < zl; ++j)
        l_acc[j + 1] =
            decay * l_acc[j] + g.h * detail::dot4(detail::cell_cubic(f, j, 0, zl), mom.toward);
    l_acc[zr] = l_acc[zl];
    for (Index j = zr; j < last; ++j)
        l_acc[j + 1] = decay * l_acc[j] +
                       g.h * detail::dot4(detail::cell_cubic(f, j, zr, last), mom.toward);
    // Right-to-left: R(x) = int_x^X e^{-zeta (t-x)} f(t) dt
    r_acc[last] = 0;
    for (Index j = last - 1; j >= zr; --j)
        r_acc[j] = decay * r_acc[j + 1] +
                   g.h * detail::dot4(detail::cell_cubic(f, j, zr, last), mom.away);
    r_acc[zl] = r_acc[zr];
    for (Index j = zl - 1; j >= 0; --j)
        r_acc[j] =
            decay * r_acc[j + 1] + g.h * detail::dot4(detail::cell_cubic(f, j, 0, zl), mom.away);

    return (l_acc + r_acc) / (2.0 * zn);
}

/* Overlap J_n = int f_n(t) eta_n(t; lambda) dt, accumulated cell by cell
 * with explicit exponential prefactors (bilinear pairing: eta carries the
 * same lambda, no conjugation).  Arithmetic is ordered differently from the
 * sweeps in free_resolvent_component, so the identity
 * 2 zeta_n a^{1/4} u_{0,n}(0) = J_n is a genuine cross-check. */
inline Complex overlap_integral(Index n, const SpectralPoint& lam, const Eigen::VectorXcd& f,
                                const Grid& g) {
    if (f.size() != g.size()) throw DomainError("overlap_integral: size mismatch");
    const Complex zn = zeta(n, lam);
    const auto mom = detail::cell_moments(zn * g.h);
    const Complex decay = std::exp(-zn * g.h);
    const double c4 = std::pow(static_cast<double>(n) + 0.5, 0.25);
    const Index zl = g.zero_left(), zr = g.zero_right(), last = g.size() - 1;

    Complex acc = 0;
    Complex w = 1;  // e^{-zeta |x_start|} for the cell about to be added
    for (Index j = zr; j < last; ++j) {
        acc += w * g.h * detail::dot4(detail::cell_cubic(f, j, zr, last), mom.away);
        w *= decay;
    }
    w = 1;
    for (Index j = zl - 1; j >= 0; --j) {  // cell [j, j+1], weight at its right end
        acc += w * g.h * detail::dot4(detail::cell_cubic(f, j, 0, zl), mom.toward);
        w *= decay;
    }
    return c4 * acc;
}

struct ResolventCheckReport {
    double ode_residual = 0;         // max over components and interior nodes
    double matching_residual = 0;    // max over n of the derivative-jump defect
    double continuity_residual = 0;  // max over components of |u(0-) - u(0+)|
    double rhs_norm = 0;             // sup norm of the source bundle
    double jacobi_residual = 0;      // relative residual of the mode solve
    Eigen::VectorXcd mode_values;    // X_n, full solve length
    Eigen::VectorXcd correction;     // C_n = X_n - J_n / (2 y_n), assembled range
    Eigen::VectorXcd overlaps;       // J_n, assembled range
};

struct AssembleOptions {
    Index extra_components = 8;  // assembled beyond the source truncation
};

/* Resolvent of the coupled model applied to a component bundle F:
 * per component, u_n = u_{0,n} + C_n eta_n with the corrections C obtained
 * from the tridiagonal mode system (coupled operator) X = mu J.  The report
 * carries residuals of the defining equations: component ODEs away from 0,
 * the derivative-jump matching at 0, and continuity; they measure numerics
 * only, since the matching condition is algebraically equivalent to the mode
 * system row by row. */
inline std::pair<GridFunctionBundle, ResolventCheckReport> assemble_resolvent(
    const ModelParameters& params, const SpectralPoint& lam, const GridFunctionBundle& f,
    Index n_jacobi, const AssembleOptions& opts = {}) {
    const Index m_src = f.component_count();
    if (m_src < 1 || m_src > 64)
        throw DomainError("assemble_resolvent: source truncation out of range (1..64)");
    if (n_jacobi < 4 * m_src)
        throw DomainError("assemble_resolvent: mode truncation below 4x source components");
    const Grid& g = f.x_grid;
    const Index m_tot = std::min(m_src + opts.extra_components, n_jacobi - 1);
    const double mu = params.mu;

    std::vector<Eigen::VectorXcd> u0(m_tot);
    Eigen::VectorXcd overlaps = Eigen::VectorXcd::Zero(m_tot);
    for (Index n = 0; n < m_tot; ++n) {
        if (n < m_src) {
            u0[n] = free_resolvent_component(n, lam, f.components[n], g);
            overlaps[n] = overlap_integral(n, lam, f.components[n], g);
        } else {
            u0[n] = Eigen::VectorXcd::Zero(g.size());
        }
    }

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n_jacobi);
    rhs.head(m_tot) = mu * overlaps;
    const auto op = coupled_operator(mu, lam, n_jacobi);
    SolveStats stats;
    const Eigen::VectorXcd modes = solve_tridiagonal(op, rhs, &stats);

    Eigen::VectorXcd corr(m_tot);
    for (Index n = 0; n < m_tot; ++n)
        corr[n] = modes[n] - overlaps[n] / (2.0 * y_entry(n, lam));

    GridFunctionBundle out;
    out.x_grid = g;
    out.components.resize(m_tot);
    for (Index n = 0; n < m_tot; ++n) {
        const Complex zn = zeta(n, lam);
        const double c4 = std::pow(static_cast<double>(n) + 0.5, 0.25);
        Eigen::VectorXcd u = u0[n];
        for (Index j = 0; j < g.size(); ++j)
            u[j] += corr[n] * c4 * std::exp(-zn * std::abs(g.node(j)));
        out.components[n] = std::move(u);
    }

    ResolventCheckReport rep;
    rep.jacobi_residual = stats.relative_residual;
    rep.mode_values = modes;
    rep.correction = corr;
    rep.overlaps = overlaps;
    for (Index n = 0; n < m_src; ++n)
        rep.rhs_norm = std::max(rep.rhs_norm, f.components[n].cwiseAbs().maxCoeff());
    const double scale = std::max(rep.rhs_norm, 1e-300);

    const Index zl = g.zero_left(), zr = g.zero_right(), last = g.size() - 1;
    const double h2 = g.h * g.h;
    for (Index n = 0; n < m_tot; ++n) {
        const Eigen::VectorXcd& u = out.components[n];
        const Complex pot = Complex(static_cast<double>(n) + 0.5, 0) - lam.value();
        const Eigen::VectorXcd& src = n < m_src ? f.components[n] : u0[n];
        // Fourth-order second-difference probe; the one-sided variants keep
        // the stencil inside a single segment next to the edges, so the probe
        // error stays below the quadrature error it is meant to expose.
        auto upp = [&](Index j, Index lo, Index hi) -> Complex {
            if (j >= lo + 2 && j + 2 <= hi)
                return (-u[j - 2] + 16.0 * u[j - 1] - 30.0 * u[j] + 16.0 * u[j + 1] -
                        u[j + 2]) /
                       (12.0 * h2);
            if (j == lo + 1)
                return (11.0 * u[j - 1] - 20.0 * u[j] + 6.0 * u[j + 1] + 4.0 * u[j + 2] -
                        u[j + 3]) /
                       (12.0 * h2);
            return (-u[j - 3] + 4.0 * u[j - 2] + 6.0 * u[j - 1] - 20.0 * u[j] +
                    11.0 * u[j + 1]) /
                   (12.0 * h2);
        };
        auto ode_at = [&](Index j, Index lo, Index hi) {
            const Complex r =
                -upp(j, lo, hi) + pot * u[j] - (n < m_src ? src[j] : Complex(0));
            rep.ode_residual = std::max(rep.ode_residual, std::abs(r) / scale);
        };
        for (Index j = 1; j < zl; ++j) ode_at(j, 0, zl);
        for (Index j = zr + 1; j < last; ++j) ode_at(j, zr, last);

        const double hd = 12.0 * g.h;
        const Complex dplus = (-25.0 * u[zr] + 48.0 * u[zr + 1] - 36.0 * u[zr + 2] +
                               16.0 * u[zr + 3] - 3.0 * u[zr + 4]) /
                              hd;
        const Complex dminus = (25.0 * u[zl] - 48.0 * u[zl - 1] + 36.0 * u[zl - 2] -
                                16.0 * u[zl - 3] + 3.0 * u[zl - 4]) /
                               hd;
        auto at_zero = [&](Index k) -> Complex {
            if (k < 0) return 0;
            if (k < m_tot) return out.components[k][zl];
            const double a4 = std::pow(static_cast<double>(k) + 0.5, 0.25);
            return k < modes.size() ? a4 * modes[k] : Complex(0);
        };
        const Complex match = mu * (dplus - dminus) -
                              (std::sqrt(static_cast<double>(n + 1)) * at_zero(n + 1) +
                               std::sqrt(static_cast<double>(n)) * at_zero(n - 1));
        rep.matching_residual = std::max(rep.matching_residual, std::abs(match) / scale);
        rep.continuity_residual =
            std::max(rep.continuity_residual, std::abs(u[zl] - u[zr]) / scale);
    }
    return {std::move(out), rep};
}

// Source bundle f_n(x) = 2^{-n} e^{-|x|} for n < m, the standard test load.
inline GridFunctionBundle decaying_exponential_source(const Grid& g, Index m) {
    GridFunctionBundle f;
    f.x_grid = g;
    f.components.resize(m);
    for (Index n = 0; n < m; ++n) {
        Eigen::VectorXcd v(g.size());
        for (Index j = 0; j < g.size(); ++j)
            v[j] = std::ldexp(1.0, -static_cast<int>(n)) * std::exp(-std::abs(g.node(j)));
        f.components[n] = std::move(v);
    }
    return f;
}

struct TransmissionCheckReport {
    double max_residual = 0;      // pointwise defect of the vertex condition
    double control_residual = 0;  // same after breaking one coefficient
    bool pass = false;
};

/* Consistency of the component matching condition with the transversal
 * vertex condition U'(0+,q) - U'(0-,q) = alpha q U(0,q): random boundary
 * values u_n(0) (n <= M) define jumps through the component relation; the
 * Hermite syntheses of both sides must then agree pointwise on q_grid,
 * because multiplication by q acts on the chi_n exactly through the ladder
 * recurrence.  Breaking one jump coefficient is the negative control. */
inline TransmissionCheckReport transmission_reduction_check(
    Index m, const std::vector<double>& q_grid, double mu = 1.0, unsigned seed = 20240817,
    double tol = 1e-8) {
    if (m < 2 || m > 60) throw DomainError("transmission_reduction_check: M out of range (2..60)");
    if (q_grid.empty()) throw DomainError("transmission_reduction_check: empty q grid");
    const double alpha = std::sqrt(2.0) / mu;  // two bonds: mu alpha / sqrt(2) = 1

    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<Complex> u(m + 1);
    for (auto& v : u) v = Complex(unif(gen), unif(gen));

    // jumps satisfying the component relation; index runs one past M
    std::vector<Complex> jump(m + 3, Complex(0));
    auto u_at = [&](Index k) { return (k >= 0 && k <= m) ? u[k] : Complex(0); };
    for (Index n = 0; n <= m + 1; ++n)
        jump[n] = (std::sqrt(static_cast<double>(n + 1)) * u_at(n + 1) +
                   std::sqrt(static_cast<double>(n)) * u_at(n - 1)) /
                  mu;

    auto residual = [&](const std::vector<Complex>& jumps) {
        double worst = 0, scale = 1;
        for (double q : q_grid) {
            Complex uq = 0, jq = 0;
            for (Index n = 0; n <= m + 1; ++n) {
                const double chi = hermite_chi(n, q);
                if (n <= m) uq += u[n] * chi;
                jq += jumps[n] * chi;
            }
            scale = std::max({scale, std::abs(jq), std::abs(alpha * q * uq)});
            worst = std::max(worst, std::abs(jq - alpha * q * uq));
        }
        return worst / scale;
    };

    TransmissionCheckReport rep;
    rep.max_residual = residual(jump);
    std::vector<Complex> broken = jump;
    broken[m / 2] += 1.0;
    rep.control_residual = residual(broken);
    rep.pass = rep.max_residual < tol && rep.control_residual > 1e3 * tol;
    return rep;
}

}  // namespace jacspec
