#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "jacspec/cli.hpp"

using namespace jacspec;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& stem) {
    return fs::temp_directory_path() / (stem + "_" + std::to_string(::getpid()));
}

std::string read_all(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing fills defaults and the echo round-trips") {
    const auto doc = OrderedJson::parse(R"({
        "command": "density",
        "params": {"mu": [0.5], "E": [-1.0, 0.0, 1.0]}
    })");
    RunConfig cfg = config_from_json(doc);
    CHECK(cfg.command == "density");
    REQUIRE(cfg.mu.size() == 1);
    CHECK(cfg.mu[0] == 0.5);
    CHECK(cfg.energies.size() == 3);
    CHECK(cfg.eps_ladder.size() == 3);
    CHECK(cfg.format == "csv");
    CHECK(cfg.threads == 0);
    CHECK(cfg.output.empty());

    // The canonical echo must re-parse to the same canonical echo.
    const OrderedJson echo = config_to_json(cfg);
    CHECK(echo["schema"] == config_schema);
    CHECK(config_to_json(config_from_json(echo)) == echo);

    // Scalars are promoted to one-element grids.
    const auto scalar = OrderedJson::parse(R"({"command":"probes","params":{"mu":0.7}})");
    CHECK(config_from_json(scalar).mu == std::vector<double>{0.7});
}

TEST_CASE("unknown keys and malformed values are rejected") {
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(
                        R"({"command":"probes","seed":1,"params":{"mu":1.0}})")),
                    DomainError);
    // N is not a density parameter.
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(
                        R"({"command":"density","params":{"mu":[1.0],"N":64}})")),
                    DomainError);
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(R"({"params":{"mu":1.0}})")),
                    DomainError);
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(R"({"command":"spectra"})")),
                    DomainError);
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(
                        R"({"command":"probes","params":{"mu":["a"]}})")),
                    DomainError);
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(
                        R"({"command":"probes","params":{"mu":1.0},"threads":1.5})")),
                    DomainError);
    CHECK_THROWS_AS(config_from_json(OrderedJson::parse(
                        R"({"command":"probes","params":[1]})")),
                    DomainError);
    CHECK_THROWS_AS(config_from_json(OrderedJson(3)), DomainError);
}

TEST_CASE("validation failures exit 2 and write nothing") {
    const fs::path out = temp_file("reject.csv");
    fs::remove(out);

    RunConfig cfg;
    cfg.command = "spectrum-j0";
    cfg.output = out.string();
    RunOutcome r = run(cfg);  // empty mu grid
    CHECK(r.exit_code == 2);
    CHECK_FALSE(r.envelope["diagnostics"].empty());
    CHECK_FALSE(fs::exists(out));

    cfg.mu = {1.0, 0.5};  // not increasing
    CHECK(run(cfg).exit_code == 2);

    cfg.mu = {1.5};
    cfg.format = "xml";
    CHECK(run(cfg).exit_code == 2);
    cfg.format = "csv";

    cfg.command = "density";  // E grid missing
    CHECK(run(cfg).exit_code == 2);

    cfg.energies = {0.5};
    cfg.eps_ladder = {1e-2, 1e-3};  // too short
    CHECK(run(cfg).exit_code == 2);
    cfg.eps_ladder = {1e-2, 1e-2, 1e-3};  // not strictly decreasing
    CHECK(run(cfg).exit_code == 2);
    cfg.eps_ladder = {1e-2, 1e-3, 1e-12};  // below the floor
    CHECK(run(cfg).exit_code == 2);

    RunConfig rc;
    rc.command = "resolvent-check";
    rc.mu = {1.5};
    rc.components = 0;
    CHECK(run(rc).exit_code == 2);
    rc.components = 8;
    rc.h = 0.3;  // does not divide x_max
    CHECK(run(rc).exit_code == 2);

    RunConfig ps;
    ps.command = "point-spectrum";
    ps.mu = {1.5};
    ps.alpha = {1.0};  // both grids given
    CHECK(run(ps).exit_code == 2);
}

TEST_CASE("alpha grids convert to coupling values") {
    RunConfig cfg;
    cfg.command = "point-spectrum";
    cfg.alpha = {2.0, 1.0};
    CHECK(validate_config(cfg).empty());
    REQUIRE(cfg.mu.size() == 2);
    CHECK(cfg.mu[0] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    CHECK(cfg.mu[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(cfg.mu[0] < cfg.mu[1]);
}

TEST_CASE("spectrum rows match the library and survive the text format") {
    RunConfig cfg;
    cfg.command = "spectrum-j0";
    cfg.mu = {1.5};
    cfg.truncation = 512;
    cfg.count = 4;
    cfg.threads = 1;
    const RunOutcome r = run(cfg);
    REQUIRE(r.exit_code == 0);
    CHECK(r.columns == std::vector<std::string>{"mu", "N", "k", "lambda_k", "converged"});
    REQUIRE(r.rows.size() == 4);

    const auto batch = lowest_eigenvalues(free_operator(1.5, 512), 4, 1e-10);
    for (Index k = 0; k < 4; ++k) {
        CHECK(r.rows[k]["k"].get<Index>() == k);
        CHECK(r.rows[k]["lambda_k"].get<double>() == batch.values[k]);
    }

    // CSV text must reproduce the doubles bit for bit.
    std::istringstream lines(r.rows_csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "mu,N,k,lambda_k,converged");
    std::getline(lines, line);
    std::istringstream fields(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) std::getline(fields, cell, ',');
    CHECK(std::stod(cell) == batch.values[0]);
    std::getline(fields, cell, ',');
    CHECK(cell == "1");
}

TEST_CASE("worker count does not change the output bytes") {
    RunConfig cfg;
    cfg.command = "density";
    cfg.mu = {1.5};
    cfg.energies = {0.3, 2.0};

    cfg.threads = 1;
    const RunOutcome serial = run(cfg);
    cfg.threads = 8;
    const RunOutcome pooled = run(cfg);
    REQUIRE(serial.exit_code == 0);
    REQUIRE(pooled.exit_code == 0);
    CHECK(serial.rows_csv == pooled.rows_csv);
    CHECK(serial.envelope["rows"] == pooled.envelope["rows"]);

    RunConfig sp;
    sp.command = "spectrum-j0";
    sp.mu = {0.75, 1.25, 1.5, 2.0};
    sp.truncation = 256;
    sp.count = 3;
    sp.threads = 1;
    const std::string a = run(sp).rows_csv;
    sp.threads = 8;
    const std::string b = run(sp).rows_csv;
    CHECK(a == b);
    CHECK(a.find("0.75,256,0,") != std::string::npos);
}

TEST_CASE("density rows carry the trust verdict") {
    RunConfig cfg;
    cfg.command = "density";
    cfg.mu = {1.0};
    cfg.energies = {-1.0};
    const RunOutcome r = run(cfg);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 1);
    const auto& row = r.rows[0];
    CHECK(row["tau"].get<double>() >= 0.0);
    CHECK(row["tau"].get<double>() < 1e-4);
    CHECK(row["trusted"].get<bool>());
    CHECK(r.rows_csv.back() == '\n');
    CHECK(r.rows_csv.find(",1\n") != std::string::npos);
}

TEST_CASE("unstable truncation surfaces as exit code four") {
    const fs::path out = temp_file("unstable.csv");
    fs::remove(out);
    RunConfig cfg;
    cfg.command = "point-spectrum";
    cfg.mu = {1.005};
    cfg.truncation = 128;  // doubling reveals a spurious root at this size
    cfg.output = out.string();
    const RunOutcome r = run(cfg);
    CHECK(r.exit_code == 4);
    CHECK_FALSE(fs::exists(out));
    bool flagged = false;
    for (const auto& d : r.envelope["diagnostics"])
        if (d.get<std::string>().find("truncation-unstable") != std::string::npos)
            flagged = true;
    CHECK(flagged);
}

TEST_CASE("unwritable output path exits with io failure") {
    RunConfig cfg;
    cfg.command = "multiplicity-map";
    cfg.mu = {1.5};
    cfg.energies = {1.0};
    cfg.output = "/jacspec_no_such_dir/out.csv";
    const RunOutcome r = run(cfg);
    CHECK(r.exit_code == 3);
    bool flagged = false;
    for (const auto& d : r.envelope["diagnostics"])
        if (d.get<std::string>().find("io:") != std::string::npos) flagged = true;
    CHECK(flagged);
}

TEST_CASE("multiplicity rows reproduce the counting table") {
    RunConfig cfg;
    cfg.command = "multiplicity-map";
    cfg.mu = {0.7};
    cfg.energies = {2.5};
    const RunOutcome r = run(cfg);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 1);
    const MultiplicityMap m = predicted_multiplicity(0.7, 2.5);
    CHECK(r.rows[0]["base"].get<Index>() == m.base);
    CHECK(r.rows[0]["extra"].get<Index>() == m.extra);
    CHECK(r.rows[0]["total"].get<Index>() == m.total);
    CHECK(r.rows[0]["boundary"].get<bool>() == m.boundary_flag);
    CHECK(m.base == 6);
    CHECK(m.extra == 1);
    CHECK(m.total == 7);
}

TEST_CASE("recurrence rows dispatch on the growth class") {
    RunConfig cfg;
    cfg.command = "recurrence";
    cfg.mu = {0.5, 1.0, 2.0};
    cfg.lambda_re = 0.0;
    cfg.lambda_im = 1.0;
    cfg.truncation = 2048;
    cfg.threads = 2;
    const RunOutcome r = run(cfg);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 3);

    CHECK(r.rows[0]["regime"] == "power-separated");
    CHECK(r.rows[0]["solver"] == "forward");
    CHECK(r.rows[0]["converged"].get<bool>());
    CHECK(r.rows[0]["rel_error"].get<double>() < 0.01);

    CHECK(r.rows[1]["regime"] == "critical");
    CHECK(r.rows[1]["model"] == "sqrt-exponential");
    CHECK(r.rows[1]["predicted"].get<double>() ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.rows[1]["rel_error"].get<double>() < 0.01);

    CHECK(r.rows[2]["regime"] == "geometric");
    CHECK(r.rows[2]["solver"] == "backward-minimal");
    CHECK(r.rows[2]["predicted"].get<double>() ==
          doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.rows[2]["rel_error"].get<double>() < 0.01);
}

TEST_CASE("recurrence reports the unfittable regime honestly") {
    RunConfig cfg;
    cfg.command = "recurrence";
    cfg.mu = {0.5};
    cfg.lambda_re = -1.0;
    cfg.lambda_im = 0.0;
    const RunOutcome r = run(cfg);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0]["regime"] == "equal-modulus");
    CHECK(r.rows[0]["solver"] == "none");
    CHECK(std::isnan(r.rows[0]["fitted"].get<double>()));
    CHECK_FALSE(r.rows[0]["converged"].get<bool>());
    REQUIRE(r.envelope["diagnostics"].size() == 1);
    CHECK(r.rows_csv.find("nan") != std::string::npos);
}

TEST_CASE("probe summary runs end to end") {
    RunConfig cfg;
    cfg.command = "probes";
    cfg.mu = {1.3};
    const RunOutcome r = run(cfg);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0]["probe"] == "deficiency_sigma_min");
    CHECK(r.rows[0]["value"].get<double>() > 0.05);
    CHECK(r.rows[0]["pass"].get<bool>());
    CHECK(r.rows[1]["probe"] == "norm_decay_slope");
    CHECK(r.rows[1]["value"].get<double>() > -0.60);
    CHECK(r.rows[1]["value"].get<double>() < -0.45);
    CHECK(r.rows[1]["pass"].get<bool>());
    CHECK(r.rows[2]["probe"] == "stripped_spectrum");
    CHECK(r.rows[2]["value"].get<double>() == 1.0);
    CHECK(r.rows[2]["pass"].get<bool>());
}

TEST_CASE("output files land on disk in both formats") {
    const fs::path csv_path = temp_file("map.csv");
    const fs::path json_path = temp_file("map.json");
    RunConfig cfg;
    cfg.command = "multiplicity-map";
    cfg.mu = {1.5};
    cfg.energies = {1.0, 3.0};
    cfg.output = csv_path.string();
    const RunOutcome rc = run(cfg);
    REQUIRE(rc.exit_code == 0);
    CHECK(read_all(csv_path) == rc.rows_csv);

    cfg.format = "json";
    cfg.output = json_path.string();
    const RunOutcome rj = run(cfg);
    REQUIRE(rj.exit_code == 0);
    const OrderedJson doc = OrderedJson::parse(read_all(json_path));
    CHECK(doc["schema"] == result_schema);
    CHECK(doc["tool_version"] == tool_version);
    CHECK(doc["rows"] == rj.envelope["rows"]);
    CHECK(doc["columns"] == rj.envelope["columns"]);
    // The echoed config is itself a loadable config.
    CHECK(config_to_json(config_from_json(doc["config_echo"])) == doc["config_echo"]);
    CHECK(doc["started"].get<std::string>().size() == 20);

    fs::remove(csv_path);
    fs::remove(json_path);
}
