#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string err_path =
        "/tmp/pfcomb_cli_err_" + std::to_string(counter++) + ".txt";
    const std::string cmd =
        std::string("\"") + PFCOMB_CLI_PATH + "\" " + args + " 2>" + err_path;
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        result.out.append(buf.data(), n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream err(err_path);
    std::stringstream ss;
    ss << err.rdbuf();
    result.err = ss.str();
    std::remove(err_path.c_str());
    return result;
}

// Pulls the numbers out of one table row identified by its leading label.
std::vector<double> row_numbers(const std::string& text, const std::string& label) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const size_t at = line.find(label);
        if (at == std::string::npos) continue;
        std::istringstream fields(line.substr(at + label.size()));
        std::vector<double> numbers;
        double v;
        while (fields >> v) numbers.push_back(v);
        return numbers;
    }
    return {};
}

const std::string kRespireArgs =
    "--null 0 --t1 -0.4942 --se1 0.1833 --t2 -0.1847 --se2 0.1738 "
    "--alternative less --level 0.95";

}  // namespace

TEST_CASE("analyze text output reproduces the published block") {
    const RunResult r = run_cli("analyze " + kRespireArgs);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("INDIVIDUAL RESULTS") != std::string::npos);
    CHECK(r.out.find("COMBINED RESULTS") != std::string::npos);
    CHECK(r.out.find("Alternative: less") != std::string::npos);

    const struct { const char* label; double lo, est, hi, p; } rows[] = {
        {"Trial 1", -0.85, -0.49, -0.13, 0.00351},
        {"Trial 2", -0.53, -0.18, 0.16, 0.14400},
        {"Two-trials rule", -0.57, -0.28, -0.011, 0.0207},
        {"Meta-analysis", -0.58, -0.33, -0.084, 0.0043},
        {"Tippett", -0.68, -0.39, -0.084, 0.0070},
        {"Fisher", -0.64, -0.35, -0.087, 0.0043},
        {"Pearson", -0.58, -0.32, -0.044, 0.0114},
        {"Edgington", -0.64, -0.34, -0.048, 0.0109},
    };
    for (const auto& row : rows) {
        const std::vector<double> numbers = row_numbers(r.out, row.label);
        REQUIRE_MESSAGE(numbers.size() == 4, row.label);
        CHECK(std::fabs(numbers[0] - row.lo) <= 5e-3);
        CHECK(std::fabs(numbers[1] - row.est) <= 5e-3);
        CHECK(std::fabs(numbers[2] - row.hi) <= 5e-3);
        CHECK(std::fabs(numbers[3] - row.p) <= 1e-4);
    }
}

TEST_CASE("analyze honors --digits and --two-sided") {
    const RunResult r = run_cli("analyze " + kRespireArgs + " --digits 4 --two-sided");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("P-value (two-sided)") != std::string::npos);
    const std::vector<double> tworule = row_numbers(r.out, "Two-trials rule");
    REQUIRE(tworule.size() == 4);
    CHECK(std::fabs(tworule[1] - (-0.2794)) <= 5e-4);  // 4 decimals survive
    CHECK(std::fabs(tworule[3] - 2 * 0.02072) <= 2e-4);  // centrality of 0.0207
}

TEST_CASE("analyze --level is repeatable and prints nested columns") {
    const RunResult r = run_cli(
        "analyze --null 0 --t1 -0.4942 --se1 0.1833 --t2 -0.1847 --se2 0.1738 "
        "--alternative less --level 0.95 --level 0.99875");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Lower 99.875%") != std::string::npos);
    CHECK(r.out.find("Lower 95%") != std::string::npos);
    CHECK(r.out.find("Upper 99.875%") != std::string::npos);
    const std::vector<double> ma = row_numbers(r.out, "Meta-analysis");
    REQUIRE(ma.size() == 6);  // two nested lowers, estimate, two uppers, p
    CHECK(std::fabs(ma[0] - (-0.74)) <= 5e-3);
    CHECK(std::fabs(ma[1] - (-0.58)) <= 5e-3);
    CHECK(std::fabs(ma[2] - (-0.33)) <= 5e-3);
    CHECK(std::fabs(ma[3] - (-0.08)) <= 5e-3);
    CHECK(std::fabs(ma[4] - 0.08) <= 5e-3);
}

TEST_CASE("analyze --methods filters the combined block") {
    const RunResult r =
        run_cli("analyze " + kRespireArgs + " --methods fisher,edgington");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Fisher") != std::string::npos);
    CHECK(r.out.find("Edgington") != std::string::npos);
    CHECK(r.out.find("Tippett") == std::string::npos);
    const RunResult bad = run_cli("analyze " + kRespireArgs + " --methods nope");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("missing flags and bad values exit 2 with a named message") {
    const RunResult r = run_cli(
        "analyze --null 0 --t1 -0.4942 --se1 0.1833 --t2 -0.1847 --alternative less");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("--se2") != std::string::npos);

    const RunResult bad_level = run_cli("analyze " + kRespireArgs + " --level 1.5");
    CHECK(bad_level.exit_code == 2);

    const RunResult bad_se = run_cli(
        "analyze --null 0 --t1 1 --se1 0 --t2 1 --se2 1 --alternative less");
    CHECK(bad_se.exit_code == 2);
    CHECK(bad_se.err.find("std_err") != std::string::npos);
}

TEST_CASE("analyze JSON and CSV outputs carry full precision") {
    const RunResult j = run_cli("analyze " + kRespireArgs + " --format json");
    CHECK(j.exit_code == 0);
    const nlohmann::json parsed = nlohmann::json::parse(j.out);
    CHECK(parsed["request"]["trials"][0]["estimate"].get<double>() == -0.4942);
    bool found = false;
    for (const auto& m : parsed["methods"]) {
        if (m["method"] == "meta_analysis") {
            found = true;
            CHECK(std::fabs(m["median_estimate"].get<double>() - (-0.331222)) <= 1e-5);
            CHECK(m["intervals"].contains("0.95"));
            CHECK(std::fabs(m["p_at_null"].get<double>() - 0.004317) <= 1e-5);
        }
    }
    CHECK(found);

    const RunResult c = run_cli("analyze " + kRespireArgs + " --format csv");
    CHECK(c.exit_code == 0);
    CHECK(c.out.rfind("name,level,lower,estimate,upper,p_at_null", 0) == 0);
    CHECK(c.out.find("meta_analysis") != std::string::npos);
}

TEST_CASE("analyze from CSV file, k = 4") {
    const std::string csv_path = "/tmp/pfcomb_respire4.csv";
    {
        std::ofstream csv(csv_path);
        csv << "trial,estimate,std_err\n";
        csv << "RESPIRE 1 14d,-0.4942,0.1833\n";
        csv << "RESPIRE 2 14d,-0.1847,0.1738\n";
        csv << "RESPIRE 1 28d,-0.02,0.1862245\n";
        csv << "RESPIRE 2 28d,-0.60,0.1862245\n";
    }
    const RunResult r = run_cli("analyze --null 0 --input " + csv_path +
                                " --alternative less --level 0.99875 --format json");
    CHECK(r.exit_code == 0);
    const nlohmann::json parsed = nlohmann::json::parse(r.out);
    CHECK(parsed["trials"].size() == 4);
    for (const auto& m : parsed["methods"]) {
        const double upper = m["intervals"]["0.99875"]["upper"].get<double>();
        const std::string name = m["method"].get<std::string>();
        if (name == "meta_analysis" || name == "fisher") {
            CHECK(upper < 0.0);  // efficacy flagged at the two-trials-rule level
        } else {
            CHECK(upper > 0.0);
        }
    }
    std::remove(csv_path.c_str());
}

TEST_CASE("curves CSV has the expected columns and reproduces the p at 0") {
    const RunResult r = run_cli(
        "curves --t1 -0.4942 --se1 0.1833 --t2 -0.1847 --se2 0.1738 "
        "--alternative less --from -1 --to 1 --points 201");
    CHECK(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header.rfind("mu,trial1_p,trial1_centrality,trial2_p", 0) == 0);
    CHECK(header.find("edgington_p,edgington_centrality") != std::string::npos);
    // 201 points on [-1, 1] passes through 0 exactly
    std::string line;
    bool checked = false;
    while (std::getline(lines, line)) {
        if (line.rfind("0,", 0) == 0 || line.rfind("-0,", 0) == 0) {
            std::vector<double> vals;
            std::stringstream fields(line);
            std::string field;
            while (std::getline(fields, field, ',')) vals.push_back(std::stod(field));
            REQUIRE(vals.size() == 1 + 2 * 8);
            CHECK(std::fabs(vals[1] - 0.00351) <= 5e-5);   // trial 1 one-sided p
            CHECK(std::fabs(vals[5] - 0.02072) <= 5e-5);   // two-trials rule
            CHECK(std::fabs(vals[7] - 0.00432) <= 5e-5);   // meta-analysis
            checked = true;
        }
    }
    CHECK(checked);

    const RunResult inverted = run_cli(
        "curves --t1 0 --se1 1 --t2 0 --se2 1 --from 2 --to -2 --points 10");
    CHECK(inverted.exit_code == 2);
}

TEST_CASE("curves default grid covers the pooled estimate") {
    const RunResult r = run_cli(
        "curves --t1 -0.4942 --se1 0.1833 --t2 -0.1847 --se2 0.1738 "
        "--alternative less --points 11");
    CHECK(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    std::vector<double> mus;
    while (std::getline(lines, line)) {
        mus.push_back(std::stod(line.substr(0, line.find(','))));
    }
    REQUIRE(mus.size() == 11);
    CHECK(mus.front() < -0.33);
    CHECK(mus.back() > -0.33);
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
    const std::string scen_path = "/tmp/pfcomb_scen.json";
    {
        std::ofstream scen(scen_path);
        scen << R"({"theta1": 0, "theta2": 0.4, "sigma1": 0.8, "sigma2": 0.5,
                    "alternative": "greater", "levels": [0.9, 0.95],
                    "replicates": 6000, "seed": 31337, "target": "ma_weighted"})";
    }
    const RunResult a = run_cli("simulate --scenario " + scen_path + " --threads 1");
    const RunResult b = run_cli("simulate --scenario " + scen_path + " --threads 7");
    const RunResult c = run_cli("simulate --scenario " + scen_path);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    CHECK(!a.out.empty());

    // --seed overrides the scenario seed
    const RunResult d = run_cli("simulate --scenario " + scen_path + " --seed 1");
    CHECK(d.exit_code == 0);
    CHECK(d.out != a.out);

    const RunResult csv = run_cli("simulate --scenario " + scen_path + " --format csv");
    CHECK(csv.exit_code == 0);
    CHECK(csv.out.rfind("method,level,", 0) == 0);
    std::remove(scen_path.c_str());
}

TEST_CASE("simulate rejects malformed scenarios with exit 2") {
    const std::string bad_path = "/tmp/pfcomb_bad_scen.json";
    {
        std::ofstream bad(bad_path);
        bad << "{not json";
    }
    const RunResult r = run_cli("simulate --scenario " + bad_path);
    CHECK(r.exit_code == 2);
    std::remove(bad_path.c_str());
    const RunResult missing = run_cli("simulate --scenario /tmp/does_not_exist.json");
    CHECK(missing.exit_code == 2);
    const RunResult noarg = run_cli("simulate");
    CHECK(noarg.exit_code == 2);
}

TEST_CASE("unknown subcommand or flags exit 2") {
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("analyze --no-such-flag 1").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);
}
