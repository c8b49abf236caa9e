#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "jacspec/resolvent_check.hpp"

using namespace jacspec;
using doctest::Approx;

namespace {
double rel_err(Complex got, Complex want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}
}  // namespace

TEST_CASE("grid construction and the doubled origin") {
    const Grid g = Grid::make(10.0, 0.01);
    CHECK(g.segment == 1000);
    CHECK(g.size() == 2002);
    CHECK(g.node(0) == Approx(-10.0));
    CHECK(g.node(g.zero_left()) == 0.0);
    CHECK(g.node(g.zero_right()) == 0.0);
    CHECK(g.node(g.size() - 1) == Approx(10.0));
    CHECK(g.node(g.zero_right() + 250) == Approx(2.5));

    CHECK_THROWS_AS((void)Grid::make(10.0, 0.0), DomainError);
    CHECK_THROWS_AS((void)Grid::make(1.0, 0.3), DomainError);   // no exact division
    CHECK_THROWS_AS((void)Grid::make(0.02, 0.01), DomainError); // too few cells
}

TEST_CASE("source bundle layout") {
    const Grid g = Grid::make(5.0, 0.01);
    const GridFunctionBundle f = decaying_exponential_source(g, 3);
    CHECK(f.component_count() == 3);
    CHECK(f.components[2][g.zero_left()].real() == Approx(0.25).epsilon(1e-15));
    CHECK(f.components[1][g.zero_right() + 100].real() ==
          Approx(0.5 * std::exp(-1.0)).epsilon(1e-13));
}

TEST_CASE("free resolvent of a decaying exponential source") {
    const Grid g = Grid::make(20.0, 1e-3);
    const GridFunctionBundle f = decaying_exponential_source(g, 1);
    const SpectralPoint lam(0.0, 1.0);
    const Eigen::VectorXcd u = free_resolvent_component(0, lam, f.components[0], g);

    // reference: mpmath quadrature of the exponential-kernel integral
    // (tools/oracles.py)
    CHECK(rel_err(u[g.zero_right()], Complex(0.31956297597914691, 0.35528562379886306)) <
          1e-9);
    CHECK(rel_err(u[g.zero_left()], Complex(0.31956297597914691, 0.35528562379886306)) <
          1e-9);
    CHECK(rel_err(u[g.zero_right() + 1000],
                  Complex(0.19695128422417327, 0.29510139563047519)) < 1e-9);
    CHECK(rel_err(u[g.zero_right() + 2500],
                  Complex(0.027011210823227981, 0.13191936195229557)) < 1e-9);
    // symmetric source, symmetric output
    CHECK(rel_err(u[g.zero_left() - 1000], u[g.zero_right() + 1000]) < 1e-11);

    const Complex j0 = overlap_integral(0, lam, f.components[0], g);
    CHECK(rel_err(j0, Complex(0.81555665467146804, 0.23868031445370329)) < 1e-9);
    // independent arithmetic routes, one identity
    const Complex z0 = zeta(0, lam);
    CHECK(rel_err(2.0 * z0 * std::pow(0.5, 0.25) * u[g.zero_right()], j0) < 1e-11);

    const Eigen::VectorXcd zero_f = Eigen::VectorXcd::Zero(g.size());
    CHECK(free_resolvent_component(0, lam, zero_f, g).norm() == 0.0);
    CHECK(std::abs(overlap_integral(0, lam, zero_f, g)) == 0.0);
}

TEST_CASE("assembled resolvent leaves only stencil-level residuals") {
    const Grid g = Grid::make(10.0, 5e-3);
    const GridFunctionBundle f = decaying_exponential_source(g, 4);
    const auto [bundle, rep] =
        assemble_resolvent(ModelParameters::from_mu(1.5), SpectralPoint(0.0, 1.0), f, 48);
    CHECK(rep.rhs_norm == Approx(1.0).epsilon(1e-12));
    CHECK(rep.ode_residual < 1e-5);
    CHECK(rep.matching_residual < 1e-8);
    CHECK(rep.continuity_residual < 1e-13);
    CHECK(rep.jacobi_residual < 1e-12);
    CHECK(bundle.component_count() == 12);
    CHECK(bundle.components[0].size() == g.size());
}

TEST_CASE("conjugating the spectral parameter conjugates the solution") {
    const Grid g = Grid::make(10.0, 1e-2);
    const GridFunctionBundle f = decaying_exponential_source(g, 4);
    const SpectralPoint lam(0.2, 0.6);
    const auto [up, rep_up] = assemble_resolvent(ModelParameters::from_mu(2.0), lam, f, 48);
    const auto [dn, rep_dn] =
        assemble_resolvent(ModelParameters::from_mu(2.0), lam.conj(), f, 48);
    (void)rep_up;
    (void)rep_dn;
    double worst = 0;
    for (Index n = 0; n < up.component_count(); ++n)
        worst = std::max(worst,
                         (dn.components[n] - up.components[n].conjugate()).lpNorm<Eigen::Infinity>());
    CHECK(worst < 1e-10);
}

TEST_CASE("residuals shrink at the expected grid order") {
    const SpectralPoint lam(0.0, 1.0);
    const ModelParameters p = ModelParameters::from_mu(1.5);
    const Grid coarse = Grid::make(10.0, 2e-2);
    const Grid fine = Grid::make(10.0, 1e-2);
    const auto [bc, rc] =
        assemble_resolvent(p, lam, decaying_exponential_source(coarse, 4), 48);
    const auto [bf, rf] = assemble_resolvent(p, lam, decaying_exponential_source(fine, 4), 48);
    (void)bc;
    (void)bf;
    const double order = std::log2(rc.ode_residual / rf.ode_residual);
    CHECK(order >= 1.8);
}

TEST_CASE("stiff coupling pushes the correction to zero") {
    const Grid g = Grid::make(10.0, 1e-2);
    const GridFunctionBundle f = decaying_exponential_source(g, 4);
    const auto [bundle, rep] =
        assemble_resolvent(ModelParameters::from_mu(1e6), SpectralPoint(0.0, 1.0), f, 48);
    (void)bundle;
    CHECK(rep.correction.lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("mode truncation is already converged at strong coupling") {
    // above critical coupling the mode tail decays geometrically, so doubling
    // the mode truncation is invisible; below it the tail is only algebraic
    // and the truncation must be chosen per target accuracy instead
    const Grid g = Grid::make(10.0, 1e-2);
    const GridFunctionBundle f = decaying_exponential_source(g, 4);
    const ModelParameters p = ModelParameters::from_mu(1.5);
    const SpectralPoint lam(-1.0, 0.5);
    const auto [small, rs] = assemble_resolvent(p, lam, f, 48);
    const auto [large, rl] = assemble_resolvent(p, lam, f, 96);
    (void)rs;
    (void)rl;
    double worst = 0;
    for (Index n = 0; n < small.component_count(); ++n)
        worst = std::max(worst, (large.components[n] - small.components[n])
                                    .lpNorm<Eigen::Infinity>());
    CHECK(worst < 1e-8);
}

TEST_CASE("oversized exponential rates are rejected, not mangled") {
    const Grid g = Grid::make(10.0, 1e-2);
    const GridFunctionBundle f = decaying_exponential_source(g, 2);
    CHECK_THROWS_AS((void)assemble_resolvent(ModelParameters::from_mu(1.5),
                                             SpectralPoint(-1e4, 0.5), f, 16),
                    QuadratureError);
}

TEST_CASE("input validation of the assembler") {
    const Grid g = Grid::make(10.0, 1e-2);
    const GridFunctionBundle f = decaying_exponential_source(g, 4);
    const ModelParameters p = ModelParameters::from_mu(1.5);
    CHECK_THROWS_AS((void)assemble_resolvent(p, SpectralPoint(0.0, 1.0), f, 8),
                    DomainError);  // below 4x source components
    const GridFunctionBundle empty;
    CHECK_THROWS_AS((void)assemble_resolvent(p, SpectralPoint(0.0, 1.0), empty, 48),
                    DomainError);
}

TEST_CASE("transversal reduction on random coefficient bundles") {
    std::vector<double> q;
    for (double x = -6.0; x <= 6.0 + 1e-12; x += 0.1) q.push_back(x);

    const TransmissionCheckReport rep = transmission_reduction_check(40, q);
    CHECK(rep.pass);
    CHECK(rep.max_residual < 1e-8);
    CHECK(rep.control_residual > 1e-5);

    // same seed, same numbers
    const TransmissionCheckReport again = transmission_reduction_check(40, q);
    CHECK(again.max_residual == rep.max_residual);

    // the bond weight tracks mu, so the identity is coupling independent
    const TransmissionCheckReport other = transmission_reduction_check(40, q, 1.37);
    CHECK(other.pass);

    CHECK_THROWS_AS((void)transmission_reduction_check(61, q), DomainError);
    CHECK_THROWS_AS((void)transmission_reduction_check(1, q), DomainError);
    CHECK_THROWS_AS((void)transmission_reduction_check(40, std::vector<double>{}),
                    DomainError);
}
