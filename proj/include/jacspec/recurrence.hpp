#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/special_functions.hpp"
#include "jacspec/spectral_point.hpp"

namespace jacspec {

/* Three-term recurrence  d_n C_{n-1} + D_n C_n + d_{n+1} C_{n+1} = 0.
 * coupled:      D_n = 2 mu y_n(lambda)      (kernel problem, parameter inside y)
 * free_shifted: D_n = (2n+1) mu - z         (resolvent-side problem)            */
template <typename Scalar>
struct RecurrenceRelation {
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    enum class Kind { coupled, free_shifted };

    Kind kind = Kind::free_shifted;
    Real mu = Real(0);
    Scalar shift = Scalar(0);                     // free_shifted only
    SpectralPointT<Real> lambda{Real(0), Real(0)};  // coupled only

    Scalar diag_coeff(Index n) const {
        if (kind == Kind::coupled) {
            if constexpr (Eigen::NumTraits<Scalar>::IsComplex)
                return Real(2) * mu * y_entry(n, lambda);
            else
                return Real(2) * mu * y_entry_real(n, lambda.real());
        }
        return Real(2) * mu * (static_cast<Real>(n) + Real(0.5)) - shift;
    }

    Real off(Index n) const { return d_entry<Real>(n); }
};

template <typename Real>
RecurrenceRelation<ComplexT<Real>> coupled_recurrence(Real mu,
                                                      const SpectralPointT<Real>& lam) {
    RecurrenceRelation<ComplexT<Real>> rel;
    rel.kind = RecurrenceRelation<ComplexT<Real>>::Kind::coupled;
    rel.mu = mu;
    rel.lambda = lam;
    return rel;
}

template <typename Scalar>
RecurrenceRelation<Scalar> free_shifted_recurrence(
    typename Eigen::NumTraits<Scalar>::Real mu, Scalar z) {
    RecurrenceRelation<Scalar> rel;
    rel.kind = RecurrenceRelation<Scalar>::Kind::free_shifted;
    rel.mu = mu;
    rel.shift = z;
    return rel;
}

/* Recurrence solution stored entrywise as mantissa * 2^exponent so that
 * sequences growing or decaying over thousands of orders of magnitude stay
 * representable.  value() collapses to a plain scalar (infinity / zero when
 * out of double range); log_abs() and ratio() never overflow. */
template <typename Scalar>
class SolutionSequence {
  public:
    using Real = typename Eigen::NumTraits<Scalar>::Real;

    std::vector<Scalar> mant;
    std::vector<long> expo;
    bool converged = false;
    bool minimal_trusted = false;

    Index size() const { return static_cast<Index>(mant.size()); }

    static Scalar scale_by(Scalar v, long e) {
        const int ei = static_cast<int>(std::clamp(e, -100000L, 100000L));
        if constexpr (Eigen::NumTraits<Scalar>::IsComplex)
            return Scalar(std::ldexp(v.real(), ei), std::ldexp(v.imag(), ei));
        else
            return std::ldexp(v, ei);
    }

    Scalar value(Index n) const { return scale_by(mant[n], expo[n]); }

    Real log_abs(Index n) const {
        using std::abs;
        const Real a = abs(mant[n]);
        if (a == Real(0)) return -std::numeric_limits<Real>::infinity();
        return std::log(a) + static_cast<Real>(expo[n]) * Real(0.6931471805599453);
    }

    Scalar ratio(Index n) const {  // C_n / C_{n-1}
        return scale_by(mant[n] / mant[n - 1], expo[n] - expo[n - 1]);
    }

    // Rescales so the entry at index 0 becomes exactly 1.
    void normalize_front() {
        using std::abs;
        if (size() == 0 || abs(mant[0]) == Real(0))
            throw DomainError("normalize_front: leading entry vanishes");
        const Scalar m0 = mant[0];
        const long e0 = expo[0];
        for (Index n = 0; n < size(); ++n) {
            mant[n] /= m0;
            expo[n] -= e0;
            canonicalize(n);
        }
    }

  private:
    void canonicalize(Index n) {
        using std::abs;
        const Real a = abs(mant[n]);
        if (a == Real(0) || !std::isfinite(a)) return;
        const int k = std::ilogb(a);
        mant[n] = scale_by(mant[n], -k);
        expo[n] += k;
    }
};

namespace detail {

// Shared-exponent pair renormalization used by the forward and backward sweeps.
template <typename Scalar>
void renorm_pair(Scalar& p, Scalar& c, long& e) {
    using std::abs;
    const auto m = std::max(abs(p), abs(c));
    if (m > 0x1p500) {
        p *= Scalar(0x1p-500);
        c *= Scalar(0x1p-500);
        e += 500;
    } else if (m != 0 && m < 0x1p-500) {
        p *= Scalar(0x1p500);
        c *= Scalar(0x1p500);
        e -= 500;
    }
}

}  // namespace detail

/* Forward sweep from prescribed (C_0, C_1); returns entries 0..length-1.
 * Picks up the dominant branch, so it is the natural probe for non-minimal
 * behaviour. */
template <typename Scalar>
SolutionSequence<Scalar> forward_solve(const RecurrenceRelation<Scalar>& rel, Scalar c0,
                                       Scalar c1, Index length) {
    if (length < 2) throw DomainError("forward_solve: need at least two entries");
    SolutionSequence<Scalar> seq;
    seq.mant.resize(length);
    seq.expo.resize(length);
    Scalar p = c0, c = c1;
    long e = 0;
    seq.mant[0] = p; seq.expo[0] = e;
    seq.mant[1] = c; seq.expo[1] = e;
    for (Index n = 1; n + 1 < length; ++n) {
        const Scalar next = -(rel.diag_coeff(n) * c + rel.off(n) * p) / rel.off(n + 1);
        p = c;
        c = next;
        detail::renorm_pair(p, c, e);
        seq.mant[n + 1] = c;
        seq.expo[n + 1] = e;
    }
    seq.converged = true;
    return seq;
}

struct MillerOptions {
    double rtol = 1e-10;
    Index max_doublings = 8;
    Index initial_buffer = 0;       // 0: auto max(64, N/4)
    bool fixed_buffer = false;      // single pass at initial_buffer, no doubling
    bool require_converged = false; // throw instead of flagging
};

enum class GrowthClass { geometric_separated, power_separated, equal_modulus, critical };

template <typename Real>
struct BranchPredictionT {
    ComplexT<Real> rate;   // root lambda of the limit characteristic polynomial
    ComplexT<Real> power;  // exponent of the algebraic factor n^power
};

/* Large-n behaviour C_n ~ rate^n n^power per branch, from the 1/n expansion
 * of the normalized recurrence C_{n+1} + (a0 + a1/n) C_n + (b0 + b1/n) C_{n-1} = 0.
 * In the critical (double root) case growth is rate^n exp(+-sqrt_rate sqrt(n))
 * n^(-1/4) instead. */
template <typename Real>
struct AsymptoticPredictionT {
    GrowthClass cls = GrowthClass::equal_modulus;
    BranchPredictionT<Real> dominant, recessive;
    ComplexT<Real> sqrt_rate{Real(0), Real(0)};
    Real sqrt_power = Real(-0.25);
};
using AsymptoticPrediction = AsymptoticPredictionT<double>;

template <typename Scalar>
AsymptoticPredictionT<typename Eigen::NumTraits<Scalar>::Real> predict_asymptotics(
    const RecurrenceRelation<Scalar>& rel) {
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    using C = ComplexT<Real>;
    const Real mu = rel.mu;
    const C param = (rel.kind == RecurrenceRelation<Scalar>::Kind::coupled)
                        ? rel.lambda.value()
                        : C(rel.shift);
    // Normalized coefficients: both operator families give a0 = 2 mu, b0 = 1,
    // b1 = -1; a1 = -mu(1 + lambda) (coupled) resp. -(mu + z) (free).
    const C a0(2 * mu, 0);
    const C a1 = (rel.kind == RecurrenceRelation<Scalar>::Kind::coupled)
                     ? C(-mu) * (C(1) + param)
                     : -(C(mu) + param);
    const C b0(1, 0), b1(-1, 0);

    AsymptoticPredictionT<Real> pred;
    const C disc = std::sqrt(C(mu * mu - 1, 0));
    const C lam_plus = -C(mu) + disc;   // |.| <= 1
    const C lam_minus = -C(mu) - disc;  // |.| >= 1
    auto branch = [&](C lam) {
        BranchPredictionT<Real> b;
        b.rate = lam;
        b.power = (a1 * lam + b1) / (a0 * lam + Real(2) * b0);
        return b;
    };

    const Real tol = Real(1e-9);
    if (std::abs(mu - Real(1)) < tol) {
        pred.cls = GrowthClass::critical;
        pred.dominant = pred.recessive = BranchPredictionT<Real>{C(-1, 0), C(Real(-0.25), 0)};
        const C lam0 = -a0 / Real(2);
        pred.sqrt_rate = Real(2) * std::sqrt(lam0 * (a1 * lam0 + b1));
        return pred;
    }
    BranchPredictionT<Real> bp = branch(lam_plus), bm = branch(lam_minus);
    if (mu > Real(1)) {
        pred.cls = GrowthClass::geometric_separated;
        pred.dominant = bm;
        pred.recessive = bp;
        return pred;
    }
    // mu < 1: both roots on the unit circle, separation only through Re power.
    const Real sep = bp.power.real() - bm.power.real();
    if (std::abs(sep) > tol) {
        pred.cls = GrowthClass::power_separated;
        pred.dominant = sep > 0 ? bp : bm;
        pred.recessive = sep > 0 ? bm : bp;
    } else {
        pred.cls = GrowthClass::equal_modulus;
        pred.dominant = bp;
        pred.recessive = bm;
    }
    return pred;
}

// A backward sweep singles out a minimal solution only if the branches separate.
template <typename Real>
bool minimal_separation_holds(const AsymptoticPredictionT<Real>& pred) {
    switch (pred.cls) {
        case GrowthClass::geometric_separated:
        case GrowthClass::power_separated:
            return true;
        case GrowthClass::critical:
            return std::abs(pred.sqrt_rate.real()) > Real(1e-9);
        default:
            return false;
    }
}

/* Minimal solution by backward recursion from a (0,1) seed planted beyond a
 * safety buffer, entries 0..length-1 normalized to C_0 = 1.  The buffer is
 * doubled until a set of checkpoint ratios is stable to rtol; convergence is
 * reported through the flag (or an exception if require_converged). */
template <typename Scalar>
SolutionSequence<Scalar> miller_minimal(const RecurrenceRelation<Scalar>& rel, Index length,
                                        const MillerOptions& opts = {}) {
    if (length < 2) throw DomainError("miller_minimal: need at least two entries");
    const Index n_top = length - 1;
    Index buffer = opts.initial_buffer > 0 ? opts.initial_buffer
                                           : std::max<Index>(64, n_top / 4);

    std::vector<Index> checkpoints = {1, 2, n_top / 2, n_top - 1, n_top};
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    checkpoints.erase(std::remove_if(checkpoints.begin(), checkpoints.end(),
                                     [&](Index k) { return k < 1 || k > n_top; }),
                      checkpoints.end());

    auto sweep = [&](Index buf) {
        SolutionSequence<Scalar> seq;
        seq.mant.assign(length, Scalar(0));
        seq.expo.assign(length, 0L);
        const Index top = n_top + buf;
        Scalar above = Scalar(0);  // C_{n+1}
        Scalar here = Scalar(1);   // C_n
        long e = 0;
        for (Index n = top; n >= 1; --n) {
            if (n <= n_top) { seq.mant[n] = here; seq.expo[n] = e; }
            const Scalar below = -(rel.diag_coeff(n) * here + rel.off(n + 1) * above) / rel.off(n);
            above = here;
            here = below;
            detail::renorm_pair(above, here, e);
        }
        seq.mant[0] = here;
        seq.expo[0] = e;
        seq.normalize_front();
        return seq;
    };

    SolutionSequence<Scalar> seq = sweep(buffer);
    bool converged = false;
    if (!opts.fixed_buffer) {
        for (Index round = 0; round < opts.max_doublings && !converged; ++round) {
            buffer *= 2;
            SolutionSequence<Scalar> next = sweep(buffer);
            converged = true;
            for (Index k : checkpoints) {
                const Scalar ra = seq.ratio(k), rb = next.ratio(k);
                const auto denom = std::max<typename SolutionSequence<Scalar>::Real>(
                    std::abs(rb), std::numeric_limits<double>::min());
                if (std::abs(rb - ra) > opts.rtol * denom) { converged = false; break; }
            }
            seq = std::move(next);
        }
    }
    if (!converged && opts.require_converged)
        throw ConvergenceError("miller_minimal: checkpoint ratios did not stabilize");
    seq.converged = converged;
    seq.minimal_trusted = converged && minimal_separation_holds(predict_asymptotics(rel));
    return seq;
}

enum class GrowthModel { geometric, power_law, critical_sqrt };

struct GrowthFit {
    GrowthModel model = GrowthModel::geometric;
    double rate = 0;        // geometric: |C_n| ~ const * rate^n
    double log_rate = 0;
    double power = 0;       // power_law: exponent; critical_sqrt: log-term coefficient
    double sqrt_coeff = 0;  // critical_sqrt: coefficient of sqrt(n)
    double rel_residual = 0;
};

/* Least-squares fit of log |C_n| over [lo, hi] against the model's regressors.
 * envelope_pairs replaces |C_n| by sqrt(|C_n|^2 + |C_{n+1}|^2), which removes
 * the oscillatory factor of unit-circle branches before a power fit. */
template <typename Scalar>
GrowthFit fit_growth(const SolutionSequence<Scalar>& seq, GrowthModel model, Index lo,
                     Index hi, bool envelope_pairs = false) {
    const Index cols = (model == GrowthModel::critical_sqrt) ? 3 : 2;
    const Index min_lo = (model == GrowthModel::geometric) ? 0 : 1;
    if (lo < min_lo || hi >= seq.size() - (envelope_pairs ? 1 : 0) ||
        hi - lo + 1 < cols + 2)
        throw DegenerateFitError("fit_growth: window too small for model");
    const Index rows = hi - lo + 1;

    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd y(rows);
    for (Index i = 0; i < rows; ++i) {
        const Index n = lo + i;
        double la = static_cast<double>(seq.log_abs(n));
        if (envelope_pairs) {
            const double lb = static_cast<double>(seq.log_abs(n + 1));
            const double m = std::max(la, lb);
            if (std::isfinite(m))
                la = m + 0.5 * std::log1p(std::exp(2 * (std::min(la, lb) - m)));
        }
        if (!std::isfinite(la))
            throw DegenerateFitError("fit_growth: vanishing entry inside window");
        y[i] = la;
        A(i, 0) = 1.0;
        const double nd = static_cast<double>(n);
        if (model == GrowthModel::geometric) {
            A(i, 1) = nd;
        } else if (model == GrowthModel::power_law) {
            A(i, 1) = std::log(nd);
        } else {
            A(i, 1) = std::sqrt(nd);
            A(i, 2) = std::log(nd);
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < cols) throw DegenerateFitError("fit_growth: rank-deficient design");
    const Eigen::VectorXd beta = qr.solve(y);

    GrowthFit fit;
    fit.model = model;
    if (model == GrowthModel::geometric) {
        fit.log_rate = beta[1];
        fit.rate = std::exp(beta[1]);
    } else if (model == GrowthModel::power_law) {
        fit.power = beta[1];
    } else {
        fit.sqrt_coeff = beta[1];
        fit.power = beta[2];
    }
    const double spread = (y.array() - y.mean()).matrix().norm();
    fit.rel_residual = (A * beta - y).norm() / std::max(spread, 1e-30);
    return fit;
}

struct IdentityCheckReport {
    double lhs = 0;        // sum_{n<=N} |C_n|^2 Im D_n
    double rhs = 0;        // -d_{N+1} Im(C_{N+1} conj(C_N))
    double defect = 0;     // Im(conj(C_0) (D_0 C_0 + d_1 C_1)), row-0 residual
    double residual = 0;   // |lhs - defect - rhs| / scale
};

/* Energy-balance identity for the coupled recurrence: summing the relation
 * against conj(C_n) telescopes to a boundary term.  Sequences produced by a
 * backward sweep satisfy rows 1..N but not row 0, so the row-0 defect is
 * subtracted before comparing; for genuine kernel candidates it vanishes. */
template <typename Real>
IdentityCheckReport weighted_sum_identity_check(
    const RecurrenceRelation<ComplexT<Real>>& rel,
    const SolutionSequence<ComplexT<Real>>& seq, Index n_sum) {
    if (n_sum + 1 >= seq.size())
        throw DomainError("weighted_sum_identity_check: need entries through N+1");
    using C = ComplexT<Real>;
    IdentityCheckReport rep;
    double abs_sum = 0;
    for (Index n = 0; n <= n_sum; ++n) {
        const C cn = seq.value(n);
        const double term = std::norm(cn) * rel.diag_coeff(n).imag();
        rep.lhs += term;
        abs_sum += std::abs(term);
    }
    const C cN = seq.value(n_sum), cN1 = seq.value(n_sum + 1);
    rep.rhs = -rel.off(n_sum + 1) * (cN1 * std::conj(cN)).imag();
    const C c0 = seq.value(0), c1 = seq.value(1);
    const C row0 = rel.diag_coeff(0) * c0 + rel.off(1) * c1;
    rep.defect = (std::conj(c0) * row0).imag();
    const double scale = std::max({abs_sum, std::abs(rep.defect), std::abs(rep.rhs),
                                   std::numeric_limits<double>::min()});
    rep.residual = std::abs(rep.lhs - rep.defect - rep.rhs) / scale;
    return rep;
}

}  // namespace jacspec
