#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "jacspec/recurrence.hpp"

using namespace jacspec;
using doctest::Approx;

namespace {
double rel_err(Complex got, Complex want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}
}  // namespace

TEST_CASE("normalized coefficients of the two relations") {
    const auto cpl = coupled_recurrence(1.3, SpectralPoint(0.2, 0.4));
    CHECK(rel_err(cpl.diag_coeff(7), 2.6 * y_entry(7, SpectralPoint(0.2, 0.4))) < 1e-15);
    CHECK(cpl.off(3) == d_entry<double>(3));

    const auto fre = free_shifted_recurrence(0.9, Complex(0.1, 0.2));
    CHECK(rel_err(fre.diag_coeff(4), Complex(2 * 0.9 * 4.5 - 0.1, -0.2)) < 1e-15);
}

TEST_CASE("branch prediction per coupling regime") {
    // mu > 1: two real roots -mu +- sqrt(mu^2 - 1), ratio separation
    const auto strong = predict_asymptotics(coupled_recurrence(2.0, SpectralPoint(0.25, 0.0)));
    CHECK(strong.cls == GrowthClass::geometric_separated);
    CHECK(rel_err(strong.recessive.rate, Complex(-2.0 + std::sqrt(3.0))) < 1e-13);
    CHECK(rel_err(strong.dominant.rate, Complex(-2.0 - std::sqrt(3.0))) < 1e-13);
    CHECK(minimal_separation_holds(strong));

    // mu = 1: double root, sqrt(n)-exponential branches with rate 2 sqrt(-lambda)
    const auto crit = predict_asymptotics(coupled_recurrence(1.0, SpectralPoint(-1.0, 0.0)));
    CHECK(crit.cls == GrowthClass::critical);
    CHECK(rel_err(crit.sqrt_rate, Complex(2.0)) < 1e-12);
    CHECK(crit.sqrt_power == -0.25);
    CHECK(minimal_separation_holds(crit));

    const auto criti = predict_asymptotics(coupled_recurrence(1.0, SpectralPoint(0.0, 1.0)));
    CHECK(criti.cls == GrowthClass::critical);
    const Complex root2(std::sqrt(2.0), -std::sqrt(2.0));  // 2 sqrt(-i)
    CHECK(rel_err(criti.sqrt_rate, root2) < 1e-12);

    // mu < 1: unit-circle roots, algebraic separation through the n^d factors
    const double mu = 0.5;
    const auto weak = predict_asymptotics(coupled_recurrence(mu, SpectralPoint(0.0, 1.0)));
    CHECK(weak.cls == GrowthClass::power_separated);
    const double s = std::sqrt(1.0 - mu * mu);
    const Complex lam_p(-mu, s), lam_m(-mu, -s);
    const Complex a1 = -mu * Complex(1.0, 1.0);
    auto power_of = [&](Complex lam) { return (a1 * lam - 1.0) / (2.0 * mu * lam + 2.0); };
    const Complex d_hi = power_of(lam_p), d_lo = power_of(lam_m);
    const Complex want_hi = d_hi.real() > d_lo.real() ? d_hi : d_lo;
    const Complex want_lo = d_hi.real() > d_lo.real() ? d_lo : d_hi;
    CHECK(rel_err(weak.dominant.power, want_hi) < 1e-12);
    CHECK(rel_err(weak.recessive.power, want_lo) < 1e-12);
    CHECK(minimal_separation_holds(weak));

    // lambda = -1 kills the 1/n diagonal correction: equal real parts
    const auto flat = predict_asymptotics(coupled_recurrence(0.5, SpectralPoint(-1.0, 0.0)));
    CHECK(flat.cls == GrowthClass::equal_modulus);
    CHECK_FALSE(minimal_separation_holds(flat));
}

TEST_CASE("forward solutions satisfy the three-term relation") {
    const auto rel = coupled_recurrence(0.5, SpectralPoint(0.3, 0.0));
    const auto seq = forward_solve(rel, Complex(1.0), Complex(-0.2, 0.1), 60);
    REQUIRE(seq.size() == 60);
    CHECK(std::abs(seq.value(0) - Complex(1.0)) == 0.0);
    for (Index n = 1; n + 1 < 60; ++n) {
        const Complex res = rel.off(n) * seq.value(n - 1) + rel.diag_coeff(n) * seq.value(n) +
                            rel.off(n + 1) * seq.value(n + 1);
        const double scale = std::abs(rel.diag_coeff(n) * seq.value(n)) + 1e-300;
        CHECK(std::abs(res) / scale < 1e-12);
    }
}

TEST_CASE("scaled storage survives growth past double range") {
    const auto rel = coupled_recurrence(2.5, SpectralPoint(0.1, 0.0));
    const auto seq = forward_solve(rel, Complex(1.0), Complex(1.0), 2000);
    // |C_n| ~ |dominant|^n overflows double by n ~ 200; log form stays finite
    CHECK(std::isfinite(seq.log_abs(1999)));
    CHECK(seq.log_abs(1999) > 1000.0);
    CHECK(std::isfinite(std::abs(seq.ratio(1999))));
}

TEST_CASE("backward sweep isolates the decaying solution") {
    const auto rel = coupled_recurrence(1.5, SpectralPoint(0.0, 1.0));
    const auto seq = miller_minimal(rel, 60);
    CHECK(seq.converged);
    CHECK(seq.minimal_trusted);
    CHECK(std::abs(seq.value(0) - Complex(1.0)) == 0.0);
    // reference: mpmath 50-digit backward recursion (tools/oracles.py)
    CHECK(rel_err(seq.ratio(1), Complex(-0.19543364243792678, -0.073086982902194188)) <
          1e-9);
    // decay consistent with the predicted recessive ratio
    const auto pred = predict_asymptotics(rel);
    CHECK(std::abs(seq.ratio(40)) ==
          Approx(std::abs(pred.recessive.rate)).epsilon(0.05));
}

TEST_CASE("backward sweep at a real sub-threshold energy") {
    // reference: mpmath 50-digit backward recursion (tools/oracles.py)
    const auto seq = miller_minimal(coupled_recurrence(2.0, SpectralPoint(0.3, 0.0)), 60);
    CHECK(seq.converged);
    CHECK(rel_err(seq.ratio(1), Complex(-0.18916223955815772, 0.0)) < 1e-9);

    // reference: mpmath 50-digit evaluation of -2 mu y_0 / d_1 (tools/oracles.py)
    const double seed1 = -4.0 * y_entry_real(0, 0.25) / d_entry<double>(1);
    CHECK(seed1 == Approx(-1.5196713713031851).epsilon(1e-13));
}

TEST_CASE("row-0 seeded forward solutions have vanishing defect") {
    const auto rel = coupled_recurrence(1.3, SpectralPoint(0.4, 0.6));
    const Complex c1 = -rel.diag_coeff(0) / rel.off(1);
    const auto seq = forward_solve(rel, Complex(1.0), c1, 44);
    const auto rep = weighted_sum_identity_check(rel, seq, 40);
    const double scale = std::max(std::abs(rep.lhs), std::abs(rep.rhs));
    CHECK(std::abs(rep.defect) < 1e-13 * scale);
    CHECK(rep.residual < 1e-12);
}

TEST_CASE("algebraically separated branches are flagged, not forced") {
    const auto rel = coupled_recurrence(0.5, SpectralPoint(0.0, 1.0));
    const auto seq = miller_minimal(rel, 200);
    // ratio refinement is only algebraic here; the strict flag must stay off
    CHECK_FALSE(seq.converged);
    CHECK_FALSE(seq.minimal_trusted);
    MillerOptions strict;
    strict.require_converged = true;
    strict.max_doublings = 2;
    CHECK_THROWS_AS((void)miller_minimal(rel, 200, strict), ConvergenceError);
    MillerOptions fixed;
    fixed.fixed_buffer = true;
    fixed.initial_buffer = 4096;
    const auto fseq = miller_minimal(rel, 200, fixed);
    CHECK(fseq.size() == 200);
    CHECK_FALSE(fseq.converged);
}

TEST_CASE("growth fits on synthetic sequences") {
    SolutionSequence<double> geo;
    for (int n = 0; n < 200; ++n) {
        geo.mant.push_back(std::pow(0.3, n));
        geo.expo.push_back(0);
    }
    const auto gfit = fit_growth(geo, GrowthModel::geometric, 10, 190);
    CHECK(gfit.rate == Approx(0.3).epsilon(1e-10));
    CHECK(gfit.rel_residual < 1e-10);

    SolutionSequence<double> pow_seq;
    for (int n = 0; n < 2000; ++n) {
        pow_seq.mant.push_back(n == 0 ? 1.0 : std::pow(double(n), -0.5));
        pow_seq.expo.push_back(0);
    }
    const auto pfit = fit_growth(pow_seq, GrowthModel::power_law, 20, 1990);
    CHECK(pfit.power == Approx(-0.5).epsilon(1e-10));

    SolutionSequence<double> crit;
    for (int n = 0; n < 1500; ++n) {
        const double v = n == 0 ? 1.0 : std::exp(2.0 * std::sqrt(double(n))) *
                                            std::pow(double(n), -0.25);
        crit.mant.push_back(v);
        crit.expo.push_back(0);
    }
    const auto cfit = fit_growth(crit, GrowthModel::critical_sqrt, 20, 1490);
    CHECK(cfit.sqrt_coeff == Approx(2.0).epsilon(1e-8));
    CHECK(cfit.power == Approx(-0.25).epsilon(1e-6));

    // pair envelope strips a unimodular oscillation before the power fit
    SolutionSequence<double> osc;
    for (int n = 0; n < 4000; ++n) {
        const double v = (n == 0 ? 1.0 : std::pow(double(n), -0.5)) * std::cos(1.1 * n);
        osc.mant.push_back(v);
        osc.expo.push_back(0);
    }
    const auto ofit = fit_growth(osc, GrowthModel::power_law, 50, 3990, true);
    CHECK(ofit.power == Approx(-0.5).epsilon(0.05));

    CHECK_THROWS((void)fit_growth(geo, GrowthModel::geometric, 50, 50));
}

TEST_CASE("fitted decay of the minimal solution, strong coupling") {
    const auto rel = coupled_recurrence(2.0, SpectralPoint(0.25, 0.0));
    const auto seq = miller_minimal(rel, 2048);
    const auto fit = fit_growth(seq, GrowthModel::geometric, 256, 1536);
    const double want = 2.0 - std::sqrt(3.0);
    CHECK(std::abs(fit.rate - want) / want < 0.02);
}

TEST_CASE("fitted envelope exponents, weak coupling") {
    const Index n = Index(1) << 14;
    // real energy: both branches carry the envelope n^{-1/2}
    const auto seq =
        forward_solve(coupled_recurrence(0.5, SpectralPoint(0.3, 0.0)), Complex(1.0),
                      Complex(0.0), n);
    const auto fit = fit_growth(seq, GrowthModel::power_law, n / 8, n - 2, true);
    CHECK(std::abs(fit.power - (-0.5)) < 0.02);

    // lambda = i: dominant branch exponent from the 1/n expansion
    const auto rel_i = coupled_recurrence(0.5, SpectralPoint(0.0, 1.0));
    const auto pred = predict_asymptotics(rel_i);
    const auto seq_i = forward_solve(rel_i, Complex(1.0), Complex(0.0), n);
    const auto fit_i = fit_growth(seq_i, GrowthModel::power_law, n / 8, n - 2, true);
    CHECK(std::abs(fit_i.power - pred.dominant.power.real()) <
          0.03 * std::abs(pred.dominant.power.real()));
}

TEST_CASE("fitted sqrt-rate at critical coupling") {
    const Index n = Index(1) << 14;
    const auto seq = forward_solve(coupled_recurrence(1.0, SpectralPoint(-1.0, 0.0)),
                                   Complex(1.0), Complex(0.0), n);
    const auto fit = fit_growth(seq, GrowthModel::critical_sqrt, Index(1) << 10, n - 2);
    CHECK(std::abs(fit.sqrt_coeff - 2.0) < 0.04);
}

TEST_CASE("weighted-sum identity with the row-0 defect removed") {
    const auto rel = coupled_recurrence(1.5, SpectralPoint(0.0, 1.0));
    const auto seq = miller_minimal(rel, 60);
    const auto rep10 = weighted_sum_identity_check(rel, seq, 10);
    // reference: mpmath 50-digit evaluation (tools/oracles.py)
    CHECK(rep10.defect == Approx(-1.247242168062029).epsilon(1e-9));
    CHECK(rep10.rhs == Approx(3.403264842419e-11).epsilon(1e-3));
    CHECK(rep10.residual < 1e-12);
    const auto rep50 = weighted_sum_identity_check(rel, seq, 50);
    CHECK(rep50.defect == Approx(-1.247242168062029).epsilon(1e-9));
    CHECK(rep50.residual < 1e-12);
    CHECK_THROWS_AS((void)weighted_sum_identity_check(rel, seq, 59), DomainError);
}

TEST_CASE("weighted-sum identity across random parameters") {
    std::mt19937 rng(31415);
    std::uniform_real_distribution<double> um(1.05, 2.5), ure(-2.0, 2.0), uim(0.1, 1.5);
    std::uniform_int_distribution<int> un(10, 500);
    for (int t = 0; t < 12; ++t) {
        const double mu = um(rng);
        const SpectralPoint lam(ure(rng), (t % 2 ? 1 : -1) * uim(rng));
        const int n = un(rng);
        const auto rel = coupled_recurrence(mu, lam);
        const auto seq = miller_minimal(rel, n + 2);
        const auto rep = weighted_sum_identity_check(rel, seq, n);
        CHECK(rep.residual < 1e-10);
    }
}
