#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jacspec/cli.hpp"

namespace {

using jacspec::OrderedJson;

struct FlagValues {
    std::vector<double> mu, alpha, energies, eps_ladder;
    double lambda_re = 0, lambda_im = 0, tol = 1e-10, delta = 1e-6, h = 1e-3, x_max = 20.0;
    long long truncation = 4096, count = 10, grid = 64, components = 8, n_jacobi = 0,
              threads = 0;
    std::string output, format, config_path;
};

struct BoundFlag {
    CLI::Option* option;
    std::function<OrderedJson()> value;
};

// Registers the option flags a subcommand accepts and remembers how to read
// them back, so provided flags can override the config file afterwards.
void bind_params(CLI::App* cmd, FlagValues& v,
                 std::map<std::string, BoundFlag>& bound,
                 const std::set<std::string>& keys) {
    auto bind = [&](const std::string& key, CLI::Option* opt,
                    std::function<OrderedJson()> get) {
        bound[key] = BoundFlag{opt, std::move(get)};
    };
    if (keys.count("mu"))
        bind("mu", cmd->add_option("--mu", v.mu, "coupling values"),
             [&v] { return OrderedJson(v.mu); });
    if (keys.count("alpha"))
        bind("alpha", cmd->add_option("--alpha", v.alpha, "vertex strength values"),
             [&v] { return OrderedJson(v.alpha); });
    if (keys.count("E"))
        bind("E", cmd->add_option("--E", v.energies, "energy grid"),
             [&v] { return OrderedJson(v.energies); });
    if (keys.count("eps_ladder"))
        bind("eps_ladder",
             cmd->add_option("--eps", v.eps_ladder, "regularization ladder (decreasing)"),
             [&v] { return OrderedJson(v.eps_ladder); });
    if (keys.count("N"))
        bind("N", cmd->add_option("--N", v.truncation, "truncation size"),
             [&v] { return OrderedJson(v.truncation); });
    if (keys.count("count"))
        bind("count", cmd->add_option("--count", v.count, "eigenvalues per mu"),
             [&v] { return OrderedJson(v.count); });
    if (keys.count("grid"))
        bind("grid", cmd->add_option("--grid", v.grid, "scan resolution"),
             [&v] { return OrderedJson(v.grid); });
    if (keys.count("tol"))
        bind("tol", cmd->add_option("--tol", v.tol, "bisection tolerance"),
             [&v] { return OrderedJson(v.tol); });
    if (keys.count("delta"))
        bind("delta", cmd->add_option("--delta", v.delta, "window margin"),
             [&v] { return OrderedJson(v.delta); });
    if (keys.count("lambda_re"))
        bind("lambda_re", cmd->add_option("--lambda-re", v.lambda_re, "Re of spectral point"),
             [&v] { return OrderedJson(v.lambda_re); });
    if (keys.count("lambda_im"))
        bind("lambda_im", cmd->add_option("--lambda-im", v.lambda_im, "Im of spectral point"),
             [&v] { return OrderedJson(v.lambda_im); });
    if (keys.count("h"))
        bind("h", cmd->add_option("--step", v.h, "grid spacing"),
             [&v] { return OrderedJson(v.h); });
    if (keys.count("x_max"))
        bind("x_max", cmd->add_option("--x-max", v.x_max, "half-line cutoff"),
             [&v] { return OrderedJson(v.x_max); });
    if (keys.count("M"))
        bind("M", cmd->add_option("--M", v.components, "source component count"),
             [&v] { return OrderedJson(v.components); });
    if (keys.count("N_jacobi"))
        bind("N_jacobi",
             cmd->add_option("--N-jacobi", v.n_jacobi, "mode-system truncation (0: auto)"),
             [&v] { return OrderedJson(v.n_jacobi); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jacspec: spectral analysis for a dissipative half-line Jacobi model"};
    app.require_subcommand(0, 1);

    FlagValues v;
    app.add_option("--config", v.config_path, "JSON config file (flags override it)");
    std::map<std::string, std::map<std::string, BoundFlag>> bound;
    std::map<std::string, CLI::Option*> out_opts, fmt_opts, thread_opts;

    for (const auto& [name, keys] : jacspec::command_param_keys()) {
        CLI::App* cmd = app.add_subcommand(name);
        bind_params(cmd, v, bound[name], keys);
        out_opts[name] = cmd->add_option("--output", v.output, "output file path");
        fmt_opts[name] = cmd->add_option("--format", v.format, "csv or json");
        thread_opts[name] = cmd->add_option("--threads", v.threads, "worker count (0: auto)");
        cmd->add_option("--config", v.config_path, "JSON config file (flags override it)");
    }

    CLI11_PARSE(app, argc, argv);

    OrderedJson doc = OrderedJson::object();
    if (!v.config_path.empty()) {
        std::ifstream is(v.config_path);
        if (!is) {
            std::cerr << "error: cannot read config file: " << v.config_path << "\n";
            return 2;
        }
        try {
            is >> doc;
        } catch (const std::exception& e) {
            std::cerr << "error: config parse: " << e.what() << "\n";
            return 2;
        }
    }

    const auto subs = app.get_subcommands();
    if (subs.empty() && !doc.contains("command")) {
        std::cerr << "error: no command given (use a subcommand or a config file)\n";
        std::cerr << app.help();
        return 2;
    }
    if (!subs.empty()) {
        const std::string name = subs.front()->get_name();
        doc["command"] = name;
        if (!doc.contains("params")) doc["params"] = OrderedJson::object();
        for (const auto& [key, flag] : bound[name])
            if (flag.option->count() > 0) doc["params"][key] = flag.value();
        if (out_opts[name]->count() > 0) doc["output"] = v.output;
        if (fmt_opts[name]->count() > 0) doc["format"] = v.format;
        if (thread_opts[name]->count() > 0) doc["threads"] = v.threads;
    }

    jacspec::RunConfig cfg;
    try {
        cfg = jacspec::config_from_json(doc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const jacspec::RunOutcome outcome = jacspec::run(cfg);
    for (const auto& d : outcome.envelope["diagnostics"])
        std::cerr << "note: " << d.get<std::string>() << "\n";
    if (outcome.exit_code == 0 && cfg.output.empty()) {
        if (cfg.format == "csv")
            std::cout << outcome.rows_csv;
        else
            std::cout << outcome.envelope.dump(2) << "\n";
    }
    return outcome.exit_code;
}
