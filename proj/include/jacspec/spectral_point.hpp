#pragma once

#include <cmath>
#include <string>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"

namespace jacspec {

/* A spectral parameter Lambda together with its position relative to the
 * branch cuts [n + 1/2, oo), n = 0, 1, 2, ...
 *
 * Classification:
 *   im > 0            upper half plane, every branch open
 *   im < 0            lower half plane, every branch open
 *   im = 0            real_below_cut(n0) with n0 the smallest n satisfying
 *                     re < n + 1/2; branches n >= n0 are open, branches
 *                     n < n0 would be evaluated on their cut and are refused.
 *
 * A point exactly at a branch point k + 1/2 gets n0 = k + 1 (strict
 * inequality), so branch k correctly refuses it.  on_cut() builds an
 * explicitly tagged boundary point that every branch-dependent operation
 * rejects; cut-adjacent limits are taken through the epsilon ladder in the
 * density code, never by evaluating on the cut itself.
 */
template <typename Real = double>
class SpectralPointT {
public:
    enum class Location { upper_half_plane, lower_half_plane, real_below_cut, on_cut };

    SpectralPointT(Real re, Real im) : re_(re), im_(im) {
        if (im > Real(0)) {
            loc_ = Location::upper_half_plane;
        } else if (im < Real(0)) {
            loc_ = Location::lower_half_plane;
        } else {
            loc_ = Location::real_below_cut;
            first_open_ = first_open_branch_of(re);
        }
    }

    explicit SpectralPointT(ComplexT<Real> v) : SpectralPointT(v.real(), v.imag()) {}

    static SpectralPointT on_cut(Real re) {
        if (re < Real(0.5)) throw DomainError("on_cut: no cut passes through re < 1/2");
        SpectralPointT p(re, Real(0));
        p.loc_ = Location::on_cut;
        return p;
    }

    Real real() const { return re_; }
    Real imag() const { return im_; }
    ComplexT<Real> value() const { return {re_, im_}; }
    Location location() const { return loc_; }

    // smallest branch index whose cut starts strictly above re (real points)
    Index first_open_branch() const { return first_open_; }

    bool is_real() const { return im_ == Real(0); }

    bool valid_for_branch(Index n) const {
        if (loc_ == Location::on_cut) return false;
        if (im_ != Real(0)) return true;
        return re_ < Real(n) + Real(0.5);
    }

    void require_branch(Index n) const {
        if (!valid_for_branch(n)) {
            throw BranchCutError("spectral point on the cut of branch " + std::to_string(n) +
                                 " (re = " + std::to_string(static_cast<double>(re_)) + ")");
        }
    }

    SpectralPointT conj() const { return SpectralPointT(re_, -im_); }

private:
    static Index first_open_branch_of(Real re) {
        if (re < Real(0.5)) return 0;
        // n0 = smallest n with re < n + 1/2; exact half-integers move up one
        auto n0 = static_cast<Index>(std::floor(static_cast<double>(re) + 0.5));
        while (!(re < Real(n0) + Real(0.5))) ++n0;
        return n0;
    }

    Real re_, im_;
    Location loc_;
    Index first_open_ = 0;
};

using SpectralPoint = SpectralPointT<double>;

/* Coupling-strength map.  A graph with `bonds` half-lines through the
 * oscillator and transmission coefficient alpha corresponds to
 * mu = bonds / (alpha sqrt 2); mu = 1 is the borderline coupling. */
inline double mu_from_alpha(double alpha, int bonds = 2) {
    if (!(alpha > 0.0)) throw DomainError("mu_from_alpha: alpha must be positive");
    if (bonds < 1) throw DomainError("mu_from_alpha: bonds must be >= 1");
    return static_cast<double>(bonds) / (alpha * std::sqrt(2.0));
}

inline double alpha_from_mu(double mu, int bonds = 2) {
    if (!(mu > 0.0)) throw DomainError("alpha_from_mu: mu must be positive");
    if (bonds < 1) throw DomainError("alpha_from_mu: bonds must be >= 1");
    return static_cast<double>(bonds) / (mu * std::sqrt(2.0));
}

struct ModelParameters {
    double alpha = 1.0;
    int bonds = 2;
    double mu = 0.0;

    static ModelParameters from_alpha(double alpha, int bonds = 2) {
        ModelParameters p;
        p.alpha = alpha;
        p.bonds = bonds;
        p.mu = mu_from_alpha(alpha, bonds);
        return p;
    }

    static ModelParameters from_mu(double mu, int bonds = 2) {
        ModelParameters p;
        p.mu = mu;
        p.bonds = bonds;
        p.alpha = alpha_from_mu(mu, bonds);
        return p;
    }

    bool borderline() const { return mu == 1.0; }
};

}  // namespace jacspec
