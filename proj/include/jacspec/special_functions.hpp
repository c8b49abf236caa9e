#pragma once

#include <cmath>
#include <complex>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/spectral_point.hpp"

namespace jacspec {

/* Off-diagonal entry d_n = n^(1/2) (n^2 - 1/4)^(1/4).
 * The n = 0 value is 0 by the vanishing sqrt(n) factor; it must be special
 * cased because pow(-1/4, 1/4) is NaN. */
template <typename Real = double>
Real d_entry(Index n) {
    if (n == 0) return Real(0);
    const Real x = static_cast<Real>(n);
    return std::sqrt(x) * std::pow(x * x - Real(0.25), Real(0.25));
}

/* zeta_n(L) = sqrt(n + 1/2 - L), the branch analytic off [n+1/2, oo) with
 * Re zeta > 0.  The principal square root of (n + 1/2 - L) is exactly that
 * branch: its real part is positive off the negative real half-axis of the
 * argument, and Im sqrt(w) has the sign of Im w, so Im zeta * Im L < 0. */
template <typename Real>
ComplexT<Real> zeta(Index n, const SpectralPointT<Real>& lam) {
    lam.require_branch(n);
    const Real a = static_cast<Real>(n) + Real(0.5);
    if (lam.is_real()) return {std::sqrt(a - lam.real()), Real(0)};
    return std::sqrt(ComplexT<Real>(a - lam.real(), -lam.imag()));
}

inline Complex zeta(Index n, Complex lam) { return zeta(n, SpectralPoint(lam)); }

/* y_n(L) = (n + 1/2)^(1/2) zeta_n(L), evaluated as the single square root
 * sqrt(a (a - L)) with a = n + 1/2.  Since a > 0, arg(a(a-L)) = arg(a-L),
 * so the principal root of the product is branch-identical to
 * sqrt(a)*zeta_n(L) but cancellation-free; for L = 0 it returns exactly a
 * (correctly rounded sqrt of the correctly rounded a^2 restores a). */
template <typename Real>
Real y_entry_real(Index n, Real E) {
    const Real a = static_cast<Real>(n) + Real(0.5);
    return std::sqrt(a * (a - E));
}

template <typename Real>
ComplexT<Real> y_entry(Index n, const SpectralPointT<Real>& lam) {
    lam.require_branch(n);
    const Real a = static_cast<Real>(n) + Real(0.5);
    if (lam.is_real()) return {y_entry_real(n, lam.real()), Real(0)};
    return std::sqrt(ComplexT<Real>(a * (a - lam.real()), -a * lam.imag()));
}

inline Complex y_entry(Index n, Complex lam) { return y_entry(n, SpectralPoint(lam)); }

/* psi_n(L) = y_n(L) - (n + 1/2 - L/2), computed by the algebraically equal
 * quotient  -L^2 / (4 (y_n(L) + n + 1/2 - L/2)).  The literal difference
 * loses all digits for large n (both terms are ~n, the result is O(1/n));
 * the quotient has no cancellation.  psi_n(0) = 0 exactly. */
template <typename Real>
ComplexT<Real> psi_entry(Index n, const SpectralPointT<Real>& lam) {
    const ComplexT<Real> y = y_entry(n, lam);
    const ComplexT<Real> L = lam.value();
    const Real a = static_cast<Real>(n) + Real(0.5);
    const ComplexT<Real> denom = Real(4) * (y + (a - L / Real(2)));
    return -L * L / denom;
}

inline Complex psi_entry(Index n, Complex lam) { return psi_entry(n, SpectralPoint(lam)); }

/* eta_n(x; L) = (n + 1/2)^(1/4) exp(-zeta_n(L) |x|): the decaying
 * solution of -u'' + (n + 1/2 - L) u = 0 on each half-line, glued evenly.
 * eta_n(0) = (n+1/2)^(1/4); the derivative jump across 0 is
 * -2 (n+1/2)^(1/4) zeta_n(L). */
template <typename Real>
ComplexT<Real> eta(Index n, Real x, const SpectralPointT<Real>& lam) {
    const Real a = static_cast<Real>(n) + Real(0.5);
    return std::pow(a, Real(0.25)) * std::exp(-zeta(n, lam) * std::abs(x));
}

inline Complex eta(Index n, double x, Complex lam) { return eta(n, x, SpectralPoint(lam)); }

/* Normalized harmonic-oscillator eigenfunctions chi_n(q), upward three-term
 * recurrence sqrt(k+1) chi_{k+1} = sqrt(2) q chi_k - sqrt(k) chi_{k-1}.
 *
 * The Gaussian seed exp(-q^2/2) underflows for |q| > 38.6, but chi_n(q) can
 * still be representable (and for q inside the classically allowed region
 * of a larger n it is O(n^-1/4)).  The seed is therefore carried as
 * mantissa * 2^scale with the exponent split off analytically, and the
 * recurrence rescales whenever the mantissa drifts out of range.  If the
 * final value still underflows, 0 is returned with `underflowed` set. */
struct HermiteValue {
    double value = 0.0;
    bool underflowed = false;
};

inline HermiteValue hermite_chi_checked(Index n, double q) {
    if (n < 0) throw DomainError("hermite_chi: negative index");
    constexpr double pi_quarter = 0.75112554446494248;  // pi^(-1/4)
    // chi_0 = pi^(-1/4) * 2^(-q^2 / (2 ln 2)), exponent split as int + frac
    const double t = -q * q / 2.0 * 1.4426950408889634;  // log2 e
    double ti = std::floor(t);
    double mant = pi_quarter * std::exp2(t - ti);
    long scale = static_cast<long>(ti);
    if (n == 0) {
        HermiteValue r;
        r.value = (scale < -1200) ? 0.0 : std::ldexp(mant, static_cast<int>(scale));
        r.underflowed = (r.value == 0.0 && mant != 0.0);
        return r;
    }
    double prev = mant;                      // chi_0 mantissa
    double cur = std::sqrt(2.0) * q * mant;  // chi_1 mantissa, same scale
    const double sqrt2q = std::sqrt(2.0) * q;
    for (Index k = 1; k < n; ++k) {
        const double next =
            (sqrt2q * cur - std::sqrt(static_cast<double>(k)) * prev) /
            std::sqrt(static_cast<double>(k + 1));
        prev = cur;
        cur = next;
        const double m = std::abs(cur) + std::abs(prev);
        if (m > 0x1p500) {
            prev = std::ldexp(prev, -500);
            cur = std::ldexp(cur, -500);
            scale += 500;
        } else if (m != 0.0 && m < 0x1p-500) {
            prev = std::ldexp(prev, 500);
            cur = std::ldexp(cur, 500);
            scale -= 500;
        }
    }
    HermiteValue r;
    if (scale > 1200) throw OverflowGuard("hermite_chi: scaled value overflows");
    r.value = (scale < -1200) ? 0.0 : std::ldexp(cur, static_cast<int>(scale));
    r.underflowed = (r.value == 0.0 && cur != 0.0);
    return r;
}

inline double hermite_chi(Index n, double q) { return hermite_chi_checked(n, q).value; }

}  // namespace jacspec
