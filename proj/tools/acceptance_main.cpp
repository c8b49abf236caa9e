// Acceptance gate: every release-blocking behaviour in one binary.  Each
// criterion prints its measurements indented, then a single [PASS]/[FAIL]
// verdict line.  Exit status is nonzero iff any criterion failed.
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "jacspec/cli.hpp"

using namespace jacspec;

namespace {

int failures = 0;

template <typename F>
void criterion(int id, const char* name, F&& fn) {
    bool ok = false;
    try {
        ok = fn();
    } catch (const std::exception& e) {
        std::printf("    aborted: %s\n", e.what());
    }
    std::printf("[%s] %2d %s\n", ok ? "PASS" : "FAIL", id, name);
    if (!ok) ++failures;
    std::fflush(stdout);
}

}  // namespace

int main() {
    std::printf("acceptance gate\n");

    criterion(1, "free operator: discrete below, density profile above the transition", [] {
        bool ok = true;
        const auto lo = lowest_eigenvalues(free_operator(1.5, 4096), 10);
        const auto hi = lowest_eigenvalues(free_operator(1.5, 8192), 10);
        double drift = 0;
        for (Index k = 0; k < 10; ++k) {
            drift = std::max(drift, std::abs(lo.values[k] - hi.values[k]));
            ok = ok && lo.values[k] > 0;
        }
        std::printf("    mu=1.5: lowest 10 positive, drift under N doubling %.2e (<= 1e-8)\n",
                    drift);
        ok = ok && drift <= 1e-8;

        int good = 0;
        for (int j = 0; j < 25; ++j) {
            const auto est = tau_density(0.5, -5.0 + 10.0 * j / 24.0);
            if (est.trusted && est.tau > 0) ++good;
        }
        std::printf("    mu=0.5: trusted positive density at %d/25 points of [-5,5]\n", good);
        ok = ok && good == 25;

        bool interior = true;
        for (double e : {0.5, 1.0, 2.0, 4.0}) {
            const auto est = tau_density(1.0, e);
            interior = interior && est.trusted && est.tau > 0;
        }
        double below = 0;
        bool below_trusted = true;
        for (double e : {-0.5, -1.0, -2.0}) {
            const auto est = tau_density(1.0, e);
            below_trusted = below_trusted && est.trusted;
            below = std::max(below, est.tau);
        }
        std::printf("    mu=1.0: interior positive %s, below threshold max %.2e (< 1e-4)\n",
                    interior ? "yes" : "NO", below);
        return ok && interior && below_trusted && below < 1e-4;
    });

    criterion(2, "eigenvalue count near critical coupling follows the asymptotic law", [] {
        bool ok = true;
        Index prev = -1;
        for (double mu : {1.08, 1.02, 1.005}) {
            PointSpectrumOptions opts;
            opts.truncation = 2048;
            const auto r = point_spectrum(mu, opts);
            std::printf("    mu=%g: count %lld (N=%lld, stable)\n", mu,
                        static_cast<long long>(r.count),
                        static_cast<long long>(r.truncation));
            ok = ok && r.count >= prev;
            prev = r.count;
        }
        PointSpectrumOptions opts;
        opts.truncation = 4096;
        const auto r = point_spectrum(1.00125, opts);
        std::printf("    mu=1.00125: count %lld vs asymptotic %.3f (need 4..6)\n",
                    static_cast<long long>(r.count), counting_asymptotics(1.00125));
        return ok && r.count >= 4 && r.count <= 6;
    });

    criterion(3, "point spectrum trichotomy across the coupling threshold", [] {
        const auto weak = point_spectrum(mu_from_alpha(1.0));
        bool window = weak.count >= 1;
        for (double e : weak.eigenvalues) window = window && e > 0 && e < 0.5;
        std::printf("    alpha=1: count %lld, all roots in (0, 1/2): %s\n",
                    static_cast<long long>(weak.count), window ? "yes" : "NO");
        bool empty = true;
        for (double a : {std::sqrt(2.0), 2.0}) {
            Index worst = 0;
            for (Index n : {1024, 2048, 4096}) {
                PointSpectrumOptions opts;
                opts.truncation = n;
                worst = std::max(worst, point_spectrum(mu_from_alpha(a), opts).count);
            }
            std::printf("    alpha=%.6g: max count %lld over N in {1024,2048,4096}\n", a,
                        static_cast<long long>(worst));
            empty = empty && worst == 0;
        }
        return window && empty;
    });

    criterion(4, "recurrence growth fits match the 1/n-expansion predictions", [] {
        bool ok = true;
        {
            const auto rel = coupled_recurrence(2.0, SpectralPoint(0.25, 0.0));
            const auto seq = miller_minimal(rel, 2048);
            const auto fit = fit_growth(seq, GrowthModel::geometric, 256, 1536);
            const double want = 2.0 - std::sqrt(3.0);
            const double err = std::abs(fit.rate - want) / want;
            const Complex sample = seq.ratio(1024);
            std::printf("    geometric: |rate| %.6f vs %.6f, rel %.4f; signed ratio %.6f\n",
                        fit.rate, want, err, sample.real());
            ok = ok && err < 0.02 && sample.real() < 0;
        }
        {
            const Index n = Index(1) << 14;
            const auto seq = forward_solve(coupled_recurrence(0.5, SpectralPoint(0.3, 0.0)),
                                           Complex(1.0), Complex(0.0), n);
            const auto fit = fit_growth(seq, GrowthModel::power_law, n / 8, n - 2, true);
            const double err = std::abs(fit.power + 0.5) / 0.5;
            std::printf("    envelope: power %.4f vs -0.5, rel %.4f\n", fit.power, err);
            ok = ok && err < 0.02;
        }
        {
            const Index n = Index(1) << 14;
            const auto seq = forward_solve(coupled_recurrence(1.0, SpectralPoint(-1.0, 0.0)),
                                           Complex(1.0), Complex(0.0), n);
            const auto fit = fit_growth(seq, GrowthModel::critical_sqrt, Index(1) << 10, n - 2);
            const double err = std::abs(fit.sqrt_coeff - 2.0) / 2.0;
            std::printf("    critical: sqrt coefficient %.4f vs 2, rel %.4f\n", fit.sqrt_coeff,
                        err);
            ok = ok && err < 0.02;
        }
        for (double mu : {0.3, 0.5, 0.8}) {
            const auto rel = coupled_recurrence(mu, SpectralPoint(0.0, 1.0));
            const auto pred = predict_asymptotics(rel);
            const Index n = Index(1) << 14;
            const auto fwd = forward_solve(rel, Complex(1.0), Complex(0.0), n);
            const auto fp = fit_growth(fwd, GrowthModel::power_law, n / 8, n - 2, true);
            const double pe =
                std::abs(fp.power - pred.dominant.power.real()) /
                std::abs(pred.dominant.power.real());
            MillerOptions mo;
            mo.fixed_buffer = true;
            mo.initial_buffer = (Index(1) << 20) - (Index(1) << 13);
            const auto back = miller_minimal(rel, Index(1) << 13, mo);
            const auto fm = fit_growth(back, GrowthModel::power_law, Index(1) << 10,
                                       (Index(1) << 13) - 2, true);
            const double me = std::abs(fm.power - pred.recessive.power.real()) /
                              std::abs(pred.recessive.power.real());
            std::printf("    exponents mu=%.1f: dominant rel %.4f, recessive rel %.4f\n", mu,
                        pe, me);
            ok = ok && pe < 0.03 && me < 0.03;
        }
        return ok;
    });

    criterion(5, "weighted-sum identity on random parameters", [] {
        std::mt19937 rng(271828);
        std::uniform_real_distribution<double> um(1.05, 2.5), ure(-2.0, 2.0), uim(0.1, 1.5);
        std::uniform_int_distribution<Index> un(10, 500);
        double worst = 0;
        for (int t = 0; t < 100; ++t) {
            const double mu = um(rng);
            const SpectralPoint lam(ure(rng), (t % 2 ? 1.0 : -1.0) * uim(rng));
            const Index n = un(rng);
            const auto rel = coupled_recurrence(mu, lam);
            const auto seq = miller_minimal(rel, n + 2);
            worst = std::max(worst, weighted_sum_identity_check(rel, seq, n).residual);
        }
        std::printf("    worst relative residual over 100 draws: %.3e (< 1e-10)\n", worst);
        return worst < 1e-10;
    });

    criterion(6, "continued fraction agrees with the truncated resolvent", [] {
        std::mt19937 rng(161803);
        std::uniform_real_distribution<double> ure(-5.0, 15.0), uim(0.1, 2.0);
        std::uniform_int_distribution<Index> un(50, 500);
        const double mus[] = {0.5, 1.0, 1.5};
        double worst = 0;
        for (int t = 0; t < 50; ++t) {
            const double mu = mus[t % 3];
            const Complex z(ure(rng), uim(rng));
            const Index n = un(rng);
            const Complex cf = corner_resolvent_cf(mu, z, n - 1, TailSeed::reflecting, 0);
            const Complex dense = resolvent_element_00(free_operator(mu, n), z);
            worst = std::max(worst, std::abs(cf - dense) / std::abs(dense));
        }
        std::printf("    worst relative gap over 50 draws: %.3e (<= 1e-8)\n", worst);
        return worst <= 1e-8;
    });

    criterion(7, "resolvent assembly residuals and grid convergence", [] {
        const std::pair<SpectralPoint, double> cases[] = {{SpectralPoint(0.0, 1.0), 1.5},
                                                          {SpectralPoint(0.2, 0.0), 2.0},
                                                          {SpectralPoint(-1.0, 0.5), 0.7}};
        bool ok = true;
        for (const auto& [lam, mu] : cases) {
            auto at = [&](double h) {
                const Grid g = Grid::make(20.0, h);
                const auto src = decaying_exponential_source(g, 8);
                return assemble_resolvent(ModelParameters::from_mu(mu), lam, src, 64).second;
            };
            const auto fine = at(1e-3);
            const double top = std::max(
                {fine.ode_residual, fine.matching_residual, fine.continuity_residual});
            const double order =
                std::log2(at(2e-2).ode_residual / at(1e-2).ode_residual);
            std::printf("    mu=%.1f: residuals max %.2e (< 1e-6), refinement order %.2f "
                        "(>= 1.8)\n",
                        mu, top, order);
            ok = ok && top < 1e-6 && order >= 1.8;
        }
        return ok;
    });

    criterion(8, "channel transmission condition reduces to the component relation", [] {
        std::vector<double> q;
        for (int j = 0; j <= 24; ++j) q.push_back(-6.0 + 0.5 * j);
        const auto rep = transmission_reduction_check(40, q);
        std::printf("    M=40: residual %.2e (< 1e-8), spoiled control %.2e (> 1e-5)\n",
                    rep.max_residual, rep.control_residual);
        return rep.pass;
    });

    criterion(9, "kernel, decay, and stripping probes", [] {
        bool ok = true;
        for (double mu : {0.7, 1.0, 1.3}) {
            const auto def = deficiency_probe(mu);
            const auto dec = norm_decay_probe(mu);
            const double sig =
                *std::min_element(def.sigma_min.begin(), def.sigma_min.end());
            std::printf("    mu=%.1f: sigma_min %.3f bounded %s, decay slope %.3f "
                        "(<= -0.45)\n",
                        mu, sig, def.bounded_below ? "yes" : "NO", dec.slope);
            ok = ok && def.bounded_below && dec.slope <= -0.45;
        }
        const auto weak = stripped_spectrum_check(0.5, 3);
        const auto strong = stripped_spectrum_check(1.5, 1);
        std::printf("    stripping: (mu=0.5, m=3) %s, (mu=1.5, m=1) %s\n",
                    weak.pass ? "pass" : "FAIL", strong.pass ? "pass" : "FAIL");
        return ok && weak.pass && strong.pass;
    });

    criterion(10, "worker count never changes the output bytes", [] {
        RunConfig density;
        density.command = "density";
        density.mu = {0.5, 1.5};
        density.energies = {-2.5, 0.3, 2.0};
        RunConfig spectrum;
        spectrum.command = "spectrum-j0";
        spectrum.mu = {0.75, 1.25, 1.5, 2.0};
        spectrum.truncation = 512;
        spectrum.count = 5;
        bool ok = true;
        for (RunConfig* cfg : {&density, &spectrum}) {
            cfg->threads = 1;
            const RunOutcome serial = run(*cfg);
            cfg->threads = 8;
            const RunOutcome pooled = run(*cfg);
            const bool same = serial.exit_code == 0 && pooled.exit_code == 0 &&
                              serial.rows_csv == pooled.rows_csv;
            std::printf("    %s: 1 vs 8 workers byte-identical: %s\n", cfg->command.c_str(),
                        same ? "yes" : "NO");
            ok = ok && same;
        }
        return ok;
    });

    if (failures == 0)
        std::printf("acceptance: all 10 criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
