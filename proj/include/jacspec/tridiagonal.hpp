#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/special_functions.hpp"
#include "jacspec/spectral_point.hpp"

namespace jacspec {

/* Symmetric tridiagonal matrix with scalar-valued diagonal and real
 * off-diagonal.  The off-diagonal entries of both operator families are the
 * real couplings d_{k+1}; only the diagonal picks up complex values. */
template <typename Scalar>
struct TridiagonalOperator {
    using Real = typename Eigen::NumTraits<Scalar>::Real;

    Eigen::VectorX<Scalar> diag;    // size N
    Eigen::VectorX<Real> offdiag;   // size N-1, entry k couples rows k, k+1

    Index size() const { return diag.size(); }

    static constexpr bool real_symmetric() { return !Eigen::NumTraits<Scalar>::IsComplex; }

    // Drops the first m rows and columns.
    TridiagonalOperator strip(Index m) const {
        if (m < 0 || m >= size()) throw DomainError("strip: count out of range");
        TridiagonalOperator out;
        out.diag = diag.tail(size() - m);
        out.offdiag = offdiag.tail(size() - 1 - m);
        return out;
    }

    template <typename Shift>
    TridiagonalOperator<decltype(Scalar() - Shift())> shifted(Shift z) const {
        TridiagonalOperator<decltype(Scalar() - Shift())> out;
        out.diag = diag.template cast<decltype(Scalar() - Shift())>();
        out.diag.array() -= z;
        out.offdiag = offdiag;
        return out;
    }

    Eigen::VectorX<Scalar> apply(const Eigen::VectorX<Scalar>& v) const {
        const Index n = size();
        Eigen::VectorX<Scalar> w = diag.cwiseProduct(v);
        for (Index k = 0; k + 1 < n; ++k) {
            w[k] += offdiag[k] * v[k + 1];
            w[k + 1] += offdiag[k] * v[k];
        }
        return w;
    }

    Eigen::MatrixX<Scalar> to_dense() const {
        Eigen::MatrixX<Scalar> m = Eigen::MatrixX<Scalar>::Zero(size(), size());
        m.diagonal() = diag;
        for (Index k = 0; k + 1 < size(); ++k) {
            m(k, k + 1) = offdiag[k];
            m(k + 1, k) = offdiag[k];
        }
        return m;
    }
};

/* Uncoupled operator: diagonal (2n+1) mu, off-diagonal d_{k+1}.  The diagonal
 * is written 2*mu*(n+1/2) so that the coupled factory at lambda = 0 produces
 * bit-identical entries (y_n(0) evaluates to exactly n+1/2). */
template <typename Real>
TridiagonalOperator<Real> free_operator(Real mu, Index n) {
    if (n < 1) throw DomainError("free_operator: size must be positive");
    TridiagonalOperator<Real> op;
    op.diag.resize(n);
    op.offdiag.resize(n - 1);
    for (Index k = 0; k < n; ++k)
        op.diag[k] = Real(2) * mu * (static_cast<Real>(k) + Real(0.5));
    for (Index k = 0; k + 1 < n; ++k) op.offdiag[k] = d_entry<Real>(k + 1);
    return op;
}

// Coupled operator: diagonal 2 mu y_k(lambda), complex symmetric in general.
template <typename Real>
TridiagonalOperator<ComplexT<Real>> coupled_operator(Real mu,
                                                     const SpectralPointT<Real>& lam,
                                                     Index n) {
    if (n < 1) throw DomainError("coupled_operator: size must be positive");
    TridiagonalOperator<ComplexT<Real>> op;
    op.diag.resize(n);
    op.offdiag.resize(n - 1);
    for (Index k = 0; k < n; ++k) op.diag[k] = Real(2) * mu * y_entry(k, lam);
    for (Index k = 0; k + 1 < n; ++k) op.offdiag[k] = d_entry<Real>(k + 1);
    return op;
}

/* Real variant of the coupled operator, defined when every branch is open,
 * i.e. E < 1/2. */
template <typename Real>
TridiagonalOperator<Real> coupled_operator_real(Real mu, Real E, Index n) {
    if (!(E < Real(0.5))) throw BranchCutError("coupled_operator_real: E must lie below 1/2");
    if (n < 1) throw DomainError("coupled_operator_real: size must be positive");
    TridiagonalOperator<Real> op;
    op.diag.resize(n);
    op.offdiag.resize(n - 1);
    for (Index k = 0; k < n; ++k) op.diag[k] = Real(2) * mu * y_entry_real(k, E);
    for (Index k = 0; k + 1 < n; ++k) op.offdiag[k] = d_entry<Real>(k + 1);
    return op;
}

/* Number of eigenvalues strictly below x, by the signs of the LDL^T pivots
 * q_k = (a_k - x) - b_{k-1}^2 / q_{k-1}.  A vanishing pivot is replaced by
 * -pivmin, which counts the boundary eigenvalue as below x; callers bisect,
 * so the choice only shifts brackets by one ulp. */
template <typename Real>
Index count_below(const TridiagonalOperator<Real>& op, Real x) {
    static_assert(!Eigen::NumTraits<Real>::IsComplex,
                  "count_below requires a real symmetric operator");
    const Index n = op.size();
    Real maxb2 = Real(1);
    for (Index k = 0; k + 1 < n; ++k) maxb2 = std::max(maxb2, op.offdiag[k] * op.offdiag[k]);
    const Real pivmin = std::numeric_limits<Real>::min() * maxb2;

    Index count = 0;
    Real q = op.diag[0] - x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < Real(0)) ++count;
    for (Index k = 1; k < n; ++k) {
        q = (op.diag[k] - x) - op.offdiag[k - 1] * op.offdiag[k - 1] / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < Real(0)) ++count;
    }
    return count;
}

template <typename Real>
std::pair<Real, Real> gershgorin_bounds(const TridiagonalOperator<Real>& op) {
    const Index n = op.size();
    Real lo = std::numeric_limits<Real>::max();
    Real hi = std::numeric_limits<Real>::lowest();
    for (Index k = 0; k < n; ++k) {
        Real r = Real(0);
        if (k > 0) r += std::abs(op.offdiag[k - 1]);
        if (k + 1 < n) r += std::abs(op.offdiag[k]);
        lo = std::min(lo, op.diag[k] - r);
        hi = std::max(hi, op.diag[k] + r);
    }
    const Real pad = std::max(Real(1), std::abs(lo) + std::abs(hi)) *
                     std::numeric_limits<Real>::epsilon() * Real(16);
    return {lo - pad, hi + pad};
}

/* j-th eigenvalue (ascending, 0-based) by bisection on the pivot count.
 * Independent of any dense eigensolver; cost O(N log(range/tol)). */
template <typename Real>
Real eigenvalue_by_index(const TridiagonalOperator<Real>& op, Index j,
                         Real tol = Real(1e-10)) {
    if (j < 0 || j >= op.size()) throw DomainError("eigenvalue_by_index: index out of range");
    auto [lo, hi] = gershgorin_bounds(op);
    while (hi - lo > tol + std::numeric_limits<Real>::epsilon() *
                               Real(4) * std::max(std::abs(lo), std::abs(hi))) {
        const Real mid = lo + (hi - lo) / Real(2);
        if (mid <= lo || mid >= hi) break;
        if (count_below(op, mid) > j)
            hi = mid;
        else
            lo = mid;
    }
    return lo + (hi - lo) / Real(2);
}

template <typename Real>
struct EigenvalueBatchT {
    Eigen::VectorX<Real> values;   // ascending
    Index truncation = 0;          // matrix size used
    Real residual_bound = Real(0); // bisection interval half-width
};
using EigenvalueBatch = EigenvalueBatchT<double>;

// All eigenvalues in [lo, hi), each located by index bisection.
template <typename Real>
EigenvalueBatchT<Real> eigenvalues_sym(const TridiagonalOperator<Real>& op, Real lo,
                                       Real hi, Real tol = Real(1e-10)) {
    if (!(lo < hi)) throw DomainError("eigenvalues_sym: empty interval");
    const Index n_lo = count_below(op, lo);
    const Index n_hi = count_below(op, hi);
    EigenvalueBatchT<Real> batch;
    batch.truncation = op.size();
    batch.residual_bound = tol;
    batch.values.resize(n_hi - n_lo);
    for (Index j = n_lo; j < n_hi; ++j)
        batch.values[j - n_lo] = eigenvalue_by_index(op, j, tol);
    return batch;
}

template <typename Real>
EigenvalueBatchT<Real> lowest_eigenvalues(const TridiagonalOperator<Real>& op, Index k,
                                          Real tol = Real(1e-10)) {
    if (k < 1 || k > op.size()) throw DomainError("lowest_eigenvalues: bad count");
    EigenvalueBatchT<Real> batch;
    batch.truncation = op.size();
    batch.residual_bound = tol;
    batch.values.resize(k);
    for (Index j = 0; j < k; ++j) batch.values[j] = eigenvalue_by_index(op, j, tol);
    return batch;
}

struct SolveStats {
    double relative_residual = 0.0;
};

/* Direct solve of op x = rhs by tridiagonal LU with partial pivoting
 * (row swaps create a second superdiagonal, tracked in du2).  Works for real
 * and complex scalars; an exactly zero pivot throws with its index. */
template <typename Scalar>
Eigen::VectorX<Scalar> solve_tridiagonal(const TridiagonalOperator<Scalar>& op,
                                         const Eigen::VectorX<Scalar>& rhs,
                                         SolveStats* stats = nullptr) {
    const Index n = op.size();
    if (rhs.size() != n) throw DomainError("solve_tridiagonal: rhs size mismatch");
    using Real = typename Eigen::NumTraits<Scalar>::Real;

    Eigen::VectorX<Scalar> d = op.diag;
    Eigen::VectorX<Scalar> du(n > 1 ? n - 1 : 0), dl(n > 1 ? n - 1 : 0);
    for (Index k = 0; k + 1 < n; ++k) du[k] = dl[k] = Scalar(op.offdiag[k]);
    Eigen::VectorX<Scalar> du2 = Eigen::VectorX<Scalar>::Zero(n > 2 ? n - 2 : 0);
    Eigen::VectorX<Scalar> b = rhs;

    for (Index i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == Scalar(0)) throw SingularMatrixError("solve_tridiagonal: zero pivot", i);
            const Scalar m = dl[i] / d[i];
            d[i + 1] -= m * du[i];
            b[i + 1] -= m * b[i];
        } else {
            const Scalar m = d[i] / dl[i];
            d[i] = dl[i];
            const Scalar t = d[i + 1];
            d[i + 1] = du[i] - m * t;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -m * du2[i];
            }
            du[i] = t;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= m * b[i];
        }
    }
    if (d[n - 1] == Scalar(0)) throw SingularMatrixError("solve_tridiagonal: zero pivot", n - 1);

    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (Index i = n - 3; i >= 0; --i)
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];

    if (stats) {
        const Real bn = rhs.norm();
        const Real rn = (op.apply(b) - rhs).norm();
        stats->relative_residual =
            static_cast<double>(rn / std::max(bn, std::numeric_limits<Real>::min()));
    }
    return b;
}

// (0,0) entry of (op - z)^{-1}.
template <typename Scalar, typename Shift>
auto resolvent_element_00(const TridiagonalOperator<Scalar>& op, Shift z) {
    auto sh = op.shifted(z);
    using S = typename decltype(sh.diag)::Scalar;
    Eigen::VectorX<S> e0 = Eigen::VectorX<S>::Zero(op.size());
    e0[0] = S(1);
    return solve_tridiagonal(sh, e0)[0];
}

/* Smallest singular value by power iteration on (A^H A)^{-1}.  A is
 * symmetric (not Hermitian), so A^{-H} v = conj(A^{-1} conj(v)) reuses the
 * same factorization path.  Deterministic start; throws ConvergenceError if
 * the estimate has not settled to rtol within max_iter sweeps. */
template <typename Scalar>
double smallest_singular_value(const TridiagonalOperator<Scalar>& op,
                               double rtol = 1e-6, Index max_iter = 2000) {
    const Index n = op.size();
    Eigen::VectorX<Scalar> v(n);
    for (Index k = 0; k < n; ++k)
        v[k] = Scalar(1) / std::sqrt(static_cast<double>(n));
    double prev = -1.0;
    for (Index it = 0; it < max_iter; ++it) {
        Eigen::VectorX<Scalar> w = solve_tridiagonal(op, v.conjugate().eval()).conjugate();
        Eigen::VectorX<Scalar> u = solve_tridiagonal(op, w.eval());
        const double nu = u.norm();
        if (!(nu > 0) || !std::isfinite(nu))
            throw ConvergenceError("smallest_singular_value: iteration degenerated");
        const double sigma = 1.0 / std::sqrt(nu);
        v = u / Scalar(nu);
        if (prev >= 0 && std::abs(sigma - prev) <= rtol * sigma) return sigma;
        prev = sigma;
    }
    throw ConvergenceError("smallest_singular_value: no convergence within iteration cap");
}

}  // namespace jacspec
