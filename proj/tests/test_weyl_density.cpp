#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "jacspec/tridiagonal.hpp"
#include "jacspec/weyl_density.hpp"

using namespace jacspec;
using doctest::Approx;

namespace {
double rel_err(Complex got, Complex want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}
}  // namespace

TEST_CASE("reflecting continued fraction equals the dense truncation") {
    const double mu = 1.3;
    const Complex z(0.7, 0.3);
    const Complex cf = corner_resolvent_cf(mu, z, 59, TailSeed::reflecting);
    const Complex dense = resolvent_element_00(free_operator(mu, 60), z);
    CHECK(rel_err(cf, dense) < 1e-13);

    const Complex cf1 = corner_resolvent_cf(mu, z, 58, TailSeed::reflecting, 1);
    const Complex dense1 = resolvent_element_00(free_operator(mu, 60).strip(1), z);
    CHECK(rel_err(cf1, dense1) < 1e-13);

    CHECK_THROWS_AS((void)corner_resolvent_cf(mu, z, 0), DomainError);
}

TEST_CASE("boundary Weyl function at pinned points") {
    // reference: mpmath 50-digit continued fraction, dense cross-check
    // at depth 499 (tools/oracles.py)
    const WeylResult a = weyl_m(1.5, Complex(0.0, 1.0));
    CHECK(a.converged);
    CHECK(rel_err(a.m, Complex(-0.21987941476901316, -0.061515908737176857)) < 1e-10);
    CHECK(rel_err(a.g00, Complex(0.46333399127714046, 0.37815837518826968)) < 1e-10);

    const WeylResult b = weyl_m(1.5, Complex(2.0, 0.5));
    CHECK(rel_err(b.m, Complex(-0.50340156288783595, -0.19877945384948743)) < 1e-10);
    CHECK(rel_err(b.g00, Complex(-0.68825528180112059, 0.48679425612524039)) < 1e-10);
}

TEST_CASE("Weyl function respects the Herglotz half-planes") {
    std::mt19937 rng(917);
    std::uniform_real_distribution<double> re(-2.0, 4.0), im(0.2, 1.5);
    for (int t = 0; t < 40; ++t) {
        const double mu = (t % 2) ? 1.2 : 1.7;
        const Complex z(re(rng), (t % 4 < 2 ? 1 : -1) * im(rng));
        const WeylResult r = weyl_m(mu, z);
        CHECK(r.g00.imag() * z.imag() > 0.0);
        CHECK(r.m.imag() * z.imag() < 0.0);
    }
    // conjugate argument gives the conjugate value
    const WeylResult up = weyl_m(1.4, Complex(0.3, 0.8));
    const WeylResult dn = weyl_m(1.4, Complex(0.3, -0.8));
    CHECK(rel_err(dn.m, std::conj(up.m)) < 1e-11);
    CHECK(rel_err(dn.g00, std::conj(up.g00)) < 1e-11);
}

TEST_CASE("reflecting seed at fixed depth is reproducible") {
    // reference: numpy continued fraction over rows 1..10^4 (tools/oracles.py);
    // fixed_depth counts the rows beyond the first, hence 9999
    WeylOptions opts;
    opts.auto_deepen = false;
    opts.fixed_depth = 9999;
    const WeylResult r = weyl_m(0.5, Complex(0.3, 0.1), opts);
    CHECK(rel_err(r.g00, Complex(0.7675533415681508, 1.1940448251785323)) < 1e-12);
    CHECK(rel_err(r.m, Complex(0.19443508665385878, -0.5293471425808285)) < 1e-12);
    CHECK(r.depth == 9999);
}

TEST_CASE("truncation comb blocks depth convergence at weak coupling") {
    WeylOptions opts;
    opts.max_depth = Index(1) << 14;
    CHECK_THROWS_AS((void)weyl_m(0.5, Complex(0.3, 0.1), opts), ConvergenceError);
}

TEST_CASE("density estimates on the weak-coupling grid") {
    // reference: mpmath ladder with outgoing tail at depth 10^5 (tools/oracles.py)
    struct Case { double e, tau, eps; };
    const Case cases[] = {
        {0.3, 0.5923222266808698, 1e-3},
        {0.0, 0.532134, 5e-4},
        {2.5, 0.0420797, 1e-3},
        {-2.5, 0.00182437, 1e-3},
        {-4.7, 9.032439492395235e-06, 1e-3},
        {5.0, 0.00194695, 1e-3},
    };
    for (const Case& c : cases) {
        const DensityEstimate est = tau_density(0.5, c.e);
        CHECK(est.trusted);
        CHECK(est.tau == Approx(c.tau).epsilon(c.eps));
    }
}

TEST_CASE("density estimates at critical coupling") {
    // reference: mpmath ladder with outgoing tail at depth 10^5 (tools/oracles.py)
    struct Case { double e, tau; };
    const Case inside[] = {
        {0.5, 0.7430011042770581},
        {1.0, 0.40761599},
        {2.0, 0.12855701829724903},
        {4.0, 0.01575808},
    };
    for (const Case& c : inside) {
        const DensityEstimate est = tau_density(1.0, c.e);
        CHECK(est.trusted);
        CHECK(est.tau > 0.0);
        CHECK(est.tau == Approx(c.tau).epsilon(0.01));
    }
    for (double e : {-0.5, -1.0, -2.0}) {
        const DensityEstimate est = tau_density(1.0, e);
        CHECK(est.trusted);
        CHECK(est.tau >= 0.0);
        CHECK(est.tau < 1e-4);
    }
}

TEST_CASE("density vanishes in the strong-coupling gap") {
    for (double e : {0.3, 2.0}) {
        const DensityEstimate est = tau_density(1.5, e);
        CHECK(est.trusted);
        CHECK(est.tau >= 0.0);
        CHECK(est.tau < 1e-8);
    }
}

TEST_CASE("ladder validation") {
    DensityOptions bad;
    bad.eps_ladder = {1e-2, 1e-3};
    CHECK_THROWS_AS((void)tau_density(0.5, 0.0, bad), DomainError);
    bad.eps_ladder = {1e-2, 1e-3, 1e-3};
    CHECK_THROWS_AS((void)tau_density(0.5, 0.0, bad), DomainError);
    bad.eps_ladder = {1e-2, 1e-3, 1e-9};
    CHECK_THROWS_AS((void)tau_density(0.5, 0.0, bad), DomainError);
}

TEST_CASE("unconverged rungs drop the trusted flag") {
    DensityOptions shallow;
    shallow.initial_depth = 256;
    shallow.max_depth = 512;
    const DensityEstimate est = tau_density(1.0, 0.5, shallow);
    CHECK_FALSE(est.trusted);
}

TEST_CASE("subordinacy probe distinguishes the coupling regimes") {
    const SubordinacyReport weak = subordinacy_probe(0.5, 0.7);
    CHECK(weak.verdict == SubordinacyVerdict::no_subordinate);
    CHECK(weak.cutoffs.size() == 40);
    CHECK(weak.wronskian_rel > 1e-12);

    const SubordinacyReport strong = subordinacy_probe(1.5, 0.7);
    CHECK(strong.verdict == SubordinacyVerdict::subordinate_found);
    // the backward solution keeps shrinking relative to the forward one
    CHECK(strong.log_ratio.back() < -100.0);
    CHECK(strong.log_ratio.front() > strong.log_ratio.back());
}
