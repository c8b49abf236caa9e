#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "jacspec/common.hpp"
#include "jacspec/errors.hpp"
#include "jacspec/model_spectrum.hpp"
#include "jacspec/recurrence.hpp"
#include "jacspec/resolvent_check.hpp"
#include "jacspec/spectral_point.hpp"
#include "jacspec/tridiagonal.hpp"
#include "jacspec/weyl_density.hpp"

namespace jacspec {

using OrderedJson = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";
inline constexpr const char* config_schema = "jacspec.config/1";
inline constexpr const char* result_schema = "jacspec.result/1";

// 17 significant digits: doubles round-trip exactly through the text form.
inline std::string format_significant(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunConfig {
    std::string command;
    std::vector<double> mu;
    std::vector<double> alpha;      // point-spectrum alternative; converted to mu
    std::vector<double> energies;   // E grid
    double lambda_re = 0, lambda_im = 0;
    Index truncation = 4096;        // N
    Index count = 10;               // spectrum-j0: eigenvalues per mu
    Index scan_grid = 64;           // point-spectrum scan resolution
    double tol = 1e-10;
    double delta = 1e-6;
    std::vector<double> eps_ladder = {1e-2, 1e-3, 1e-4};
    double h = 1e-3;
    double x_max = 20.0;
    Index components = 8;           // M
    Index n_jacobi = 0;             // 0: auto 4 (M + 8)
    std::string output;             // empty: no file
    std::string format = "csv";
    Index threads = 0;              // 0: hardware concurrency
};

inline const std::map<std::string, std::set<std::string>>& command_param_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"spectrum-j0", {"mu", "N", "count", "tol"}},
        {"density", {"mu", "E", "eps_ladder"}},
        {"point-spectrum", {"mu", "alpha", "N", "grid", "delta", "tol"}},
        {"recurrence", {"mu", "lambda_re", "lambda_im", "N"}},
        {"resolvent-check", {"mu", "lambda_re", "lambda_im", "h", "x_max", "M", "N_jacobi"}},
        {"multiplicity-map", {"mu", "E"}},
        {"probes", {"mu"}},
    };
    return keys;
}

namespace detail {

inline std::vector<double> as_real_list(const OrderedJson& v, const std::string& key) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number()) throw DomainError("config: '" + key + "' holds a non-number");
            out.push_back(e.get<double>());
        }
    } else {
        throw DomainError("config: '" + key + "' must be a number or array of numbers");
    }
    return out;
}

inline double as_real(const OrderedJson& v, const std::string& key) {
    if (!v.is_number()) throw DomainError("config: '" + key + "' must be a number");
    return v.get<double>();
}

inline Index as_index(const OrderedJson& v, const std::string& key) {
    if (!v.is_number_integer()) throw DomainError("config: '" + key + "' must be an integer");
    return v.get<Index>();
}

}  // namespace detail

inline RunConfig config_from_json(const OrderedJson& doc) {
    if (!doc.is_object()) throw DomainError("config: document must be a JSON object");
    static const std::set<std::string> top_keys = {"schema",  "command", "params",
                                                  "output",  "format",  "threads"};
    for (const auto& [k, v] : doc.items())
        if (!top_keys.count(k)) throw DomainError("config: unknown key '" + k + "'");

    RunConfig cfg;
    if (!doc.contains("command") || !doc["command"].is_string())
        throw DomainError("config: missing command");
    cfg.command = doc["command"].get<std::string>();
    const auto it = command_param_keys().find(cfg.command);
    if (it == command_param_keys().end())
        throw DomainError("config: unknown command '" + cfg.command + "'");

    if (doc.contains("output")) cfg.output = doc["output"].get<std::string>();
    if (doc.contains("format")) cfg.format = doc["format"].get<std::string>();
    if (doc.contains("threads")) cfg.threads = detail::as_index(doc["threads"], "threads");

    if (doc.contains("params")) {
        const auto& p = doc["params"];
        if (!p.is_object()) throw DomainError("config: params must be an object");
        for (const auto& [k, v] : p.items()) {
            if (!it->second.count(k))
                throw DomainError("config: unknown key '" + k + "' for " + cfg.command);
            if (k == "mu") cfg.mu = detail::as_real_list(v, k);
            else if (k == "alpha") cfg.alpha = detail::as_real_list(v, k);
            else if (k == "E") cfg.energies = detail::as_real_list(v, k);
            else if (k == "eps_ladder") cfg.eps_ladder = detail::as_real_list(v, k);
            else if (k == "N") cfg.truncation = detail::as_index(v, k);
            else if (k == "count") cfg.count = detail::as_index(v, k);
            else if (k == "grid") cfg.scan_grid = detail::as_index(v, k);
            else if (k == "M") cfg.components = detail::as_index(v, k);
            else if (k == "N_jacobi") cfg.n_jacobi = detail::as_index(v, k);
            else if (k == "tol") cfg.tol = detail::as_real(v, k);
            else if (k == "delta") cfg.delta = detail::as_real(v, k);
            else if (k == "lambda_re") cfg.lambda_re = detail::as_real(v, k);
            else if (k == "lambda_im") cfg.lambda_im = detail::as_real(v, k);
            else if (k == "h") cfg.h = detail::as_real(v, k);
            else if (k == "x_max") cfg.x_max = detail::as_real(v, k);
        }
    }
    return cfg;
}

// Canonical echo: every key the command accepts, with its effective value.
inline OrderedJson config_to_json(const RunConfig& cfg) {
    OrderedJson doc;
    doc["schema"] = config_schema;
    doc["command"] = cfg.command;
    OrderedJson p = OrderedJson::object();
    const auto& keys = command_param_keys().at(cfg.command);
    if (keys.count("mu")) p["mu"] = cfg.mu;
    if (keys.count("alpha") && !cfg.alpha.empty()) p["alpha"] = cfg.alpha;
    if (keys.count("E")) p["E"] = cfg.energies;
    if (keys.count("eps_ladder")) p["eps_ladder"] = cfg.eps_ladder;
    if (keys.count("N")) p["N"] = cfg.truncation;
    if (keys.count("count")) p["count"] = cfg.count;
    if (keys.count("grid")) p["grid"] = cfg.scan_grid;
    if (keys.count("M")) p["M"] = cfg.components;
    if (keys.count("N_jacobi")) p["N_jacobi"] = cfg.n_jacobi;
    if (keys.count("tol")) p["tol"] = cfg.tol;
    if (keys.count("delta")) p["delta"] = cfg.delta;
    if (keys.count("lambda_re")) p["lambda_re"] = cfg.lambda_re;
    if (keys.count("lambda_im")) p["lambda_im"] = cfg.lambda_im;
    if (keys.count("h")) p["h"] = cfg.h;
    if (keys.count("x_max")) p["x_max"] = cfg.x_max;
    doc["params"] = std::move(p);
    doc["output"] = cfg.output;
    doc["format"] = cfg.format;
    doc["threads"] = cfg.threads;
    return doc;
}

inline std::vector<std::string> validate_config(RunConfig& cfg) {
    std::vector<std::string> problems;
    auto sorted_strict = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1])) return false;
        return true;
    };

    if (!cfg.alpha.empty()) {
        if (!cfg.mu.empty()) problems.push_back("give either mu or alpha, not both");
        for (double a : cfg.alpha) {
            if (!(a > 0)) { problems.push_back("alpha values must be positive"); break; }
            cfg.mu.push_back(mu_from_alpha(a));
        }
        std::sort(cfg.mu.begin(), cfg.mu.end());
    }
    if (cfg.mu.empty()) problems.push_back("mu grid is empty");
    else if (!sorted_strict(cfg.mu)) problems.push_back("mu grid must be strictly increasing");
    for (double m : cfg.mu)
        if (!(m > 0)) { problems.push_back("mu values must be positive"); break; }

    const bool needs_e = cfg.command == "density" || cfg.command == "multiplicity-map";
    if (needs_e) {
        if (cfg.energies.empty()) problems.push_back("E grid is empty");
        else if (!sorted_strict(cfg.energies))
            problems.push_back("E grid must be strictly increasing");
    }
    if (!(cfg.tol > 0) || !(cfg.delta > 0)) problems.push_back("tolerances must be positive");
    if (cfg.truncation < 2) problems.push_back("N must be at least 2");
    if (cfg.count < 1) problems.push_back("count must be positive");
    if (cfg.scan_grid < 2) problems.push_back("grid must be at least 2");
    if (cfg.threads < 0) problems.push_back("threads must be nonnegative");
    if (cfg.format != "csv" && cfg.format != "json")
        problems.push_back("format must be csv or json");

    if (cfg.command == "density") {
        if (cfg.eps_ladder.size() < 3) problems.push_back("eps_ladder needs at least 3 rungs");
        for (std::size_t i = 0; i < cfg.eps_ladder.size(); ++i) {
            if (!(cfg.eps_ladder[i] >= 1e-8)) {
                problems.push_back("eps_ladder values must be at least 1e-8");
                break;
            }
            if (i > 0 && !(cfg.eps_ladder[i] < cfg.eps_ladder[i - 1])) {
                problems.push_back("eps_ladder must decrease strictly");
                break;
            }
        }
    }
    if (cfg.command == "resolvent-check") {
        if (cfg.components < 1 || cfg.components > 64)
            problems.push_back("M must lie in 1..64");
        if (cfg.n_jacobi == 0) cfg.n_jacobi = 4 * (cfg.components + 8);
        if (cfg.n_jacobi < 4 * cfg.components)
            problems.push_back("N_jacobi must be at least 4 M");
        try {
            Grid::make(cfg.x_max, cfg.h);
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    return problems;
}

template <typename F>
void parallel_for_indexed(Index n_tasks, Index n_threads, F&& fn) {
    if (n_threads <= 0) n_threads = static_cast<Index>(std::thread::hardware_concurrency());
    if (n_threads <= 1 || n_tasks <= 1) {
        for (Index i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_lock;
    auto worker = [&] {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(error_lock);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const Index n_workers = std::min(n_threads, n_tasks);
    pool.reserve(n_workers);
    for (Index t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct RunOutcome {
    OrderedJson envelope;
    std::vector<std::string> columns;
    std::vector<OrderedJson> rows;
    std::string rows_csv;  // header + rows, LF line endings
    int exit_code = 0;
};

namespace detail {

inline std::string csv_cell(const OrderedJson& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_float()) return format_significant(v.get<double>());
    if (v.is_number()) return std::to_string(v.get<long long>());
    return v.dump();
}

inline std::string rows_to_csv(const std::vector<std::string>& columns,
                               const std::vector<OrderedJson>& rows) {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += ',';
        out += columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += csv_cell(row.at(columns[c]));
        }
        out += '\n';
    }
    return out;
}

struct CommandOutput {
    std::vector<std::string> columns;
    std::vector<OrderedJson> rows;
    std::vector<std::string> diagnostics;
};

inline CommandOutput run_spectrum_j0(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu", "N", "k", "lambda_k", "converged"};
    std::vector<std::vector<OrderedJson>> slots(cfg.mu.size());
    parallel_for_indexed(static_cast<Index>(cfg.mu.size()), cfg.threads, [&](Index i) {
        const double mu = cfg.mu[i];
        const auto batch =
            lowest_eigenvalues(free_operator(mu, cfg.truncation), cfg.count, cfg.tol);
        for (Index k = 0; k < batch.values.size(); ++k) {
            OrderedJson row;
            row["mu"] = mu;
            row["N"] = cfg.truncation;
            row["k"] = k;
            row["lambda_k"] = batch.values[k];
            row["converged"] = true;
            slots[i].push_back(std::move(row));
        }
    });
    for (auto& s : slots)
        for (auto& r : s) out.rows.push_back(std::move(r));
    return out;
}

inline CommandOutput run_density(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu", "E", "tau", "stability", "trusted"};
    const Index n_mu = static_cast<Index>(cfg.mu.size());
    const Index n_e = static_cast<Index>(cfg.energies.size());
    std::vector<OrderedJson> slots(n_mu * n_e);
    DensityOptions opts;
    opts.eps_ladder = cfg.eps_ladder;
    parallel_for_indexed(n_mu * n_e, cfg.threads, [&](Index t) {
        const double mu = cfg.mu[t / n_e];
        const double e = cfg.energies[t % n_e];
        const DensityEstimate est = tau_density(mu, e, opts);
        OrderedJson row;
        row["mu"] = mu;
        row["E"] = e;
        row["tau"] = est.tau;
        row["stability"] = est.stability;
        row["trusted"] = est.trusted;
        slots[t] = std::move(row);
    });
    out.rows.assign(slots.begin(), slots.end());
    return out;
}

inline CommandOutput run_point_spectrum(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu", "alpha", "N", "k", "energy", "count", "method_agreement"};
    std::vector<std::vector<OrderedJson>> slots(cfg.mu.size());
    std::vector<std::string> notes(cfg.mu.size());
    parallel_for_indexed(static_cast<Index>(cfg.mu.size()), cfg.threads, [&](Index i) {
        const double mu = cfg.mu[i];
        PointSpectrumOptions opts;
        opts.truncation = cfg.truncation;
        opts.delta = cfg.delta;
        opts.e_tol = std::min(cfg.tol, 1e-10);
        const PointSpectrumResult res = point_spectrum(mu, opts);
        for (Index k = 0; k < res.count; ++k) {
            OrderedJson row;
            row["mu"] = mu;
            row["alpha"] = alpha_from_mu(mu);
            row["N"] = res.truncation;
            row["k"] = k;
            row["energy"] = res.eigenvalues[k];
            row["count"] = res.count;
            row["method_agreement"] = res.method_agreement;
            slots[i].push_back(std::move(row));
        }
        if (res.count == 0)
            notes[i] = "mu=" + format_significant(mu) + ": point spectrum empty";
    });
    for (auto& s : slots)
        for (auto& r : s) out.rows.push_back(std::move(r));
    for (auto& n : notes)
        if (!n.empty()) out.diagnostics.push_back(n);
    return out;
}

inline CommandOutput run_recurrence(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu",    "lambda_re", "lambda_im", "regime",       "solver",
                   "model", "fitted",    "predicted", "rel_error",    "fit_residual",
                   "converged"};
    std::vector<OrderedJson> slots(cfg.mu.size());
    std::vector<std::string> notes(cfg.mu.size());
    const SpectralPoint lam(cfg.lambda_re, cfg.lambda_im);
    parallel_for_indexed(static_cast<Index>(cfg.mu.size()), cfg.threads, [&](Index i) {
        const double mu = cfg.mu[i];
        const auto rel = coupled_recurrence(mu, lam);
        const auto pred = predict_asymptotics(rel);
        const Index n = std::max<Index>(cfg.truncation, 64);
        OrderedJson row;
        row["mu"] = mu;
        row["lambda_re"] = cfg.lambda_re;
        row["lambda_im"] = cfg.lambda_im;
        double fitted = std::numeric_limits<double>::quiet_NaN();
        double predicted = std::numeric_limits<double>::quiet_NaN();
        double residual = std::numeric_limits<double>::quiet_NaN();
        bool converged = false;
        std::string regime, solver = "none", model = "none";
        const Index lo = std::max<Index>(16, n / 8);
        const Index hi = n - 2;
        switch (pred.cls) {
            case GrowthClass::geometric_separated: {
                regime = "geometric";
                solver = "backward-minimal";
                model = "geometric";
                const auto seq = miller_minimal(rel, n);
                const auto fit = fit_growth(seq, GrowthModel::geometric, lo, hi);
                fitted = fit.rate;
                predicted = std::abs(pred.recessive.rate);
                residual = fit.rel_residual;
                converged = seq.converged;
                break;
            }
            case GrowthClass::critical: {
                regime = "critical";
                solver = "forward";
                model = "sqrt-exponential";
                const auto seq = forward_solve(rel, Complex(1), Complex(0), n);
                const auto fit = fit_growth(seq, GrowthModel::critical_sqrt, lo, hi);
                fitted = std::abs(fit.sqrt_coeff);
                predicted = std::abs(pred.sqrt_rate.real());
                residual = fit.rel_residual;
                converged = true;
                break;
            }
            case GrowthClass::power_separated: {
                regime = "power-separated";
                solver = "forward";
                model = "power-envelope";
                const auto seq = forward_solve(rel, Complex(1), Complex(0), n);
                const auto fit = fit_growth(seq, GrowthModel::power_law, lo, hi, true);
                fitted = fit.power;
                predicted = pred.dominant.power.real();
                residual = fit.rel_residual;
                converged = true;
                break;
            }
            case GrowthClass::equal_modulus: {
                regime = "equal-modulus";
                predicted = pred.dominant.power.real();
                notes[i] = "mu=" + format_significant(mu) +
                           ": equal-modulus regime, no separated branch to fit";
                break;
            }
        }
        row["regime"] = regime;
        row["solver"] = solver;
        row["model"] = model;
        row["fitted"] = fitted;
        row["predicted"] = predicted;
        row["rel_error"] = std::abs(fitted - predicted) / std::max(std::abs(predicted), 1e-12);
        row["fit_residual"] = residual;
        row["converged"] = converged;
        slots[i] = std::move(row);
    });
    out.rows.assign(slots.begin(), slots.end());
    for (auto& n : notes)
        if (!n.empty()) out.diagnostics.push_back(n);
    return out;
}

inline CommandOutput run_resolvent_check(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu",           "lambda_re",         "lambda_im",
                   "h",            "x_max",             "M",
                   "N_jacobi",     "ode_residual",      "matching_residual",
                   "continuity_residual", "jacobi_residual", "rhs_norm"};
    std::vector<OrderedJson> slots(cfg.mu.size());
    const SpectralPoint lam(cfg.lambda_re, cfg.lambda_im);
    const Grid grid = Grid::make(cfg.x_max, cfg.h);
    const GridFunctionBundle source = decaying_exponential_source(grid, cfg.components);
    parallel_for_indexed(static_cast<Index>(cfg.mu.size()), cfg.threads, [&](Index i) {
        const double mu = cfg.mu[i];
        const auto [bundle, rep] = assemble_resolvent(ModelParameters::from_mu(mu), lam,
                                                      source, cfg.n_jacobi);
        (void)bundle;
        OrderedJson row;
        row["mu"] = mu;
        row["lambda_re"] = cfg.lambda_re;
        row["lambda_im"] = cfg.lambda_im;
        row["h"] = cfg.h;
        row["x_max"] = cfg.x_max;
        row["M"] = cfg.components;
        row["N_jacobi"] = cfg.n_jacobi;
        row["ode_residual"] = rep.ode_residual;
        row["matching_residual"] = rep.matching_residual;
        row["continuity_residual"] = rep.continuity_residual;
        row["jacobi_residual"] = rep.jacobi_residual;
        row["rhs_norm"] = rep.rhs_norm;
        slots[i] = std::move(row);
    });
    out.rows.assign(slots.begin(), slots.end());
    return out;
}

inline CommandOutput run_multiplicity_map(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu", "E", "base", "extra", "total", "boundary"};
    const Index n_mu = static_cast<Index>(cfg.mu.size());
    const Index n_e = static_cast<Index>(cfg.energies.size());
    std::vector<OrderedJson> slots(n_mu * n_e);
    parallel_for_indexed(n_mu * n_e, cfg.threads, [&](Index t) {
        const double mu = cfg.mu[t / n_e];
        const double e = cfg.energies[t % n_e];
        const MultiplicityMap m = predicted_multiplicity(mu, e);
        OrderedJson row;
        row["mu"] = mu;
        row["E"] = e;
        row["base"] = m.base;
        row["extra"] = m.extra;
        row["total"] = m.total;
        row["boundary"] = m.boundary_flag;
        slots[t] = std::move(row);
    });
    out.rows.assign(slots.begin(), slots.end());
    return out;
}

inline CommandOutput run_probes(const RunConfig& cfg) {
    CommandOutput out;
    out.columns = {"mu", "probe", "value", "pass"};
    std::vector<std::vector<OrderedJson>> slots(cfg.mu.size());
    parallel_for_indexed(static_cast<Index>(cfg.mu.size()), cfg.threads, [&](Index i) {
        const double mu = cfg.mu[i];
        auto push = [&](const char* probe, double value, bool pass) {
            OrderedJson row;
            row["mu"] = mu;
            row["probe"] = probe;
            row["value"] = value;
            row["pass"] = pass;
            slots[i].push_back(std::move(row));
        };
        const auto def = deficiency_probe(mu);
        push("deficiency_sigma_min", *std::min_element(def.sigma_min.begin(),
                                                       def.sigma_min.end()),
             def.bounded_below);
        const auto decay = norm_decay_probe(mu);
        push("norm_decay_slope", decay.slope, decay.dissipative_decay);
        const Index strip = mu > 1.0 ? 1 : 3;
        const auto stripped = stripped_spectrum_check(mu, strip);
        push("stripped_spectrum", static_cast<double>(strip), stripped.pass);
    });
    for (auto& s : slots)
        for (auto& r : s) out.rows.push_back(std::move(r));
    return out;
}

}  // namespace detail

/* Executes the configured sweep and assembles the result envelope.  Exit
 * codes: 0 success, 2 config validation failure (no output file written),
 * 3 numerical failure or I/O failure, 4 truncation-unstable outcome.  Rows
 * are produced in sweep order regardless of worker count. */
inline RunOutcome run(RunConfig cfg) {
    RunOutcome outcome;
    const std::string started = utc_timestamp();
    std::vector<std::string> diagnostics;

    const std::vector<std::string> problems = validate_config(cfg);
    if (!problems.empty()) {
        for (const auto& p : problems) diagnostics.push_back("config: " + p);
        outcome.exit_code = 2;
    } else {
        try {
            detail::CommandOutput cmd;
            if (cfg.command == "spectrum-j0") cmd = detail::run_spectrum_j0(cfg);
            else if (cfg.command == "density") cmd = detail::run_density(cfg);
            else if (cfg.command == "point-spectrum") cmd = detail::run_point_spectrum(cfg);
            else if (cfg.command == "recurrence") cmd = detail::run_recurrence(cfg);
            else if (cfg.command == "resolvent-check") cmd = detail::run_resolvent_check(cfg);
            else if (cfg.command == "multiplicity-map") cmd = detail::run_multiplicity_map(cfg);
            else if (cfg.command == "probes") cmd = detail::run_probes(cfg);
            else throw DomainError("run: unknown command '" + cfg.command + "'");
            outcome.columns = std::move(cmd.columns);
            outcome.rows = std::move(cmd.rows);
            diagnostics.insert(diagnostics.end(), cmd.diagnostics.begin(),
                               cmd.diagnostics.end());
        } catch (const TruncationUnstable& e) {
            diagnostics.push_back(std::string("truncation-unstable: ") + e.what());
            outcome.exit_code = 4;
        } catch (const std::exception& e) {
            diagnostics.push_back(std::string("numerical failure: ") + e.what());
            outcome.exit_code = 3;
        }
    }

    outcome.rows_csv = detail::rows_to_csv(outcome.columns, outcome.rows);

    OrderedJson env;
    env["schema"] = result_schema;
    env["tool_version"] = tool_version;
    env["config_echo"] = config_to_json(cfg);
    env["started"] = started;
    env["finished"] = utc_timestamp();
    env["columns"] = outcome.columns;
    env["rows"] = outcome.rows;
    env["diagnostics"] = diagnostics;
    outcome.envelope = std::move(env);

    if (outcome.exit_code == 0 && !cfg.output.empty()) {
        try {
            std::ofstream os(cfg.output, std::ios::binary);
            if (!os) throw IoError("cannot open output file: " + cfg.output);
            if (cfg.format == "csv")
                os << outcome.rows_csv;
            else
                os << outcome.envelope.dump(2) << '\n';
            os.flush();
            if (!os) throw IoError("write failed: " + cfg.output);
        } catch (const std::exception& e) {
            outcome.envelope["diagnostics"].push_back(std::string("io: ") + e.what());
            outcome.exit_code = 3;
        }
    }
    return outcome;
}

}  // namespace jacspec
