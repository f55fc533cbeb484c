// pfcomb: combined p-value function inference for two or more trials.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfcomb/combine.hpp"
#include "pfcomb/estimate.hpp"
#include "pfcomb/simulate.hpp"
#include "pfcomb/trial_model.hpp"

namespace {

using namespace pfcomb;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct TrialFlags {
    double t1 = 0.0, se1 = 0.0, t2 = 0.0, se2 = 0.0;
    bool has_t1 = false, has_se1 = false, has_t2 = false, has_se2 = false;
    std::string input;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open input file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file '" + path + "'");
    out << text;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<TrialResult> trials_from_flags_or_file(const TrialFlags& flags) {
    const bool any_flag = flags.has_t1 || flags.has_se1 || flags.has_t2 || flags.has_se2;
    if (!flags.input.empty() && any_flag) {
        throw std::invalid_argument(
            "give either --input or --t1/--se1/--t2/--se2, not both");
    }
    if (!flags.input.empty()) {
        if (ends_with(flags.input, ".json")) {
            return request_from_json(read_file(flags.input)).trials;
        }
        std::ifstream in(flags.input);
        if (!in) throw std::invalid_argument("cannot open input file '" + flags.input + "'");
        return trials_from_csv(in);
    }
    const std::pair<bool, const char*> required[] = {{flags.has_t1, "--t1"},
                                                     {flags.has_se1, "--se1"},
                                                     {flags.has_t2, "--t2"},
                                                     {flags.has_se2, "--se2"}};
    for (const auto& [present, name] : required) {
        if (!present) {
            throw std::invalid_argument(std::string("missing ") + name);
        }
    }
    return {{flags.t1, flags.se1}, {flags.t2, flags.se2}};
}

std::vector<CombinedMethod> parse_methods(const std::string& list) {
    if (list.empty()) return {kAllMethods, kAllMethods + 6};
    std::vector<CombinedMethod> methods;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) methods.push_back(method_from_name(item));
    }
    if (methods.empty()) throw std::invalid_argument("--methods list is empty");
    return methods;
}

std::string format_level_percent(double level) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g%%", level * 100.0);
    return buf;
}

std::string format_fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

// Appendix-style text table: nested lower limits, estimate, nested upper
// limits, p-value. All columns right-aligned.
std::string render_table(const std::vector<std::string>& names,
                         const std::vector<std::vector<double>>& lowers,
                         const std::vector<double>& estimates,
                         const std::vector<std::vector<double>>& uppers,
                         const std::vector<double>& pvalues,
                         const std::vector<double>& levels,
                         const std::string& name_header, int digits, bool two_sided) {
    std::vector<std::string> headers{name_header};
    const bool single = levels.size() == 1;
    for (size_t l = levels.size(); l-- > 0;) {
        headers.push_back(single ? "Lower CI" : "Lower " + format_level_percent(levels[l]));
    }
    headers.push_back("Estimate");
    for (size_t l = 0; l < levels.size(); ++l) {
        headers.push_back(single ? "Upper CI" : "Upper " + format_level_percent(levels[l]));
    }
    headers.push_back(two_sided ? "P-value (two-sided)" : "P-value");

    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < names.size(); ++i) {
        std::vector<std::string> row{names[i]};
        for (size_t l = levels.size(); l-- > 0;) {
            row.push_back(format_fixed(lowers[i][l], digits));
        }
        row.push_back(format_fixed(estimates[i], digits));
        for (size_t l = 0; l < levels.size(); ++l) {
            row.push_back(format_fixed(uppers[i][l], digits));
        }
        row.push_back(format_fixed(pvalues[i], 5));
        rows.push_back(std::move(row));
    }

    std::vector<size_t> widths(headers.size());
    for (size_t c = 0; c < headers.size(); ++c) {
        widths[c] = headers[c].size();
        for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c) {
            out << ' ' << std::string(widths[c] - row[c].size(), ' ') << row[c];
        }
        out << '\n';
    };
    emit_row(headers);
    for (const auto& row : rows) emit_row(row);
    return out.str();
}

std::string render_text(const AnalysisResult& result,
                        const std::vector<CombinedMethod>& methods, int digits,
                        bool two_sided) {
    const std::vector<double>& levels = result.request.levels;
    std::ostringstream out;

    std::vector<std::string> names;
    std::vector<std::vector<double>> lowers, uppers;
    std::vector<double> estimates, pvalues;
    for (const TrialRow& row : result.trials) {
        names.push_back(row.label);
        std::vector<double> lo, hi;
        for (double level : levels) {
            lo.push_back(row.intervals.at(level).lower);
            hi.push_back(row.intervals.at(level).upper);
        }
        lowers.push_back(lo);
        uppers.push_back(hi);
        estimates.push_back(row.median_estimate);
        pvalues.push_back(two_sided ? combine::centrality(row.p_at_null).value()
                                    : row.p_at_null);
    }
    out << "INDIVIDUAL RESULTS\n"
        << render_table(names, lowers, estimates, uppers, pvalues, levels, "Trial",
                        digits, two_sided);

    names.clear();
    lowers.clear();
    uppers.clear();
    estimates.clear();
    pvalues.clear();
    for (CombinedMethod method : methods) {
        for (const MethodResult& m : result.methods) {
            if (m.method != method) continue;
            names.push_back(method_label(method));
            std::vector<double> lo, hi;
            for (double level : levels) {
                lo.push_back(m.intervals.at(level).lower);
                hi.push_back(m.intervals.at(level).upper);
            }
            lowers.push_back(lo);
            uppers.push_back(hi);
            estimates.push_back(m.median_estimate);
            pvalues.push_back(two_sided ? combine::centrality(m.p_at_null).value()
                                        : m.p_at_null);
        }
    }
    out << "\nCOMBINED RESULTS\n"
        << render_table(names, lowers, estimates, uppers, pvalues, levels, "Method",
                        digits, two_sided);

    out << "\nNOTES\n";
    out << "Confidence level" << (levels.size() > 1 ? "s" : "") << ": ";
    for (size_t l = 0; l < levels.size(); ++l) {
        out << (l ? ", " : "") << format_level_percent(levels[l]);
    }
    out << "\nNull value: " << result.request.null_value << '\n'
        << "Alternative: " << alternative_name(result.request.alternative) << '\n';
    return out.str();
}

AnalysisResult filter_methods(AnalysisResult result,
                              const std::vector<CombinedMethod>& methods) {
    std::vector<MethodResult> kept;
    for (CombinedMethod method : methods) {
        for (MethodResult& m : result.methods) {
            if (m.method == method) kept.push_back(std::move(m));
        }
    }
    result.methods = std::move(kept);
    return result;
}

int run(int argc, char** argv) {
    CLI::App app{"Combined p-value functions, estimates and confidence intervals "
                 "for evidence from two or more trials"};
    app.require_subcommand(1);

    CLI::App* analyze = app.add_subcommand(
        "analyze", "Combined p-values, median estimates and confidence intervals");
    TrialFlags aflags;
    double null_value = 0.0;
    std::string alternative = "greater";
    std::vector<double> levels;
    int digits = 2;
    std::string format = "text";
    std::string methods_list;
    std::string output;
    bool two_sided = false;
    analyze->add_option("--null", null_value, "Null value the p-values refer to");
    analyze->add_option("--t1", aflags.t1, "Estimate of trial 1")
        ->each([&aflags](const std::string&) { aflags.has_t1 = true; });
    analyze->add_option("--se1", aflags.se1, "Standard error of trial 1")
        ->each([&aflags](const std::string&) { aflags.has_se1 = true; });
    analyze->add_option("--t2", aflags.t2, "Estimate of trial 2")
        ->each([&aflags](const std::string&) { aflags.has_t2 = true; });
    analyze->add_option("--se2", aflags.se2, "Standard error of trial 2")
        ->each([&aflags](const std::string&) { aflags.has_se2 = true; });
    analyze->add_option("--input", aflags.input,
                        "Trials from file (.csv: trial,estimate,std_err; .json: request)");
    analyze->add_option("--alternative", alternative,
                        "One-sided alternative: greater|less");
    analyze->add_option("--level", levels, "Confidence level, repeatable")->expected(-1);
    analyze->add_option("--digits", digits, "Decimal places for estimates (default 2)");
    analyze->add_option("--format", format, "Output format: text|csv|json");
    analyze->add_option("--methods", methods_list,
                        "Comma list of methods (default: all six)");
    analyze->add_option("--output", output, "Write to file instead of standard output");
    analyze->add_flag("--two-sided", two_sided,
                      "Print two-sided p-values 2*min(p, 1-p) in text tables");

    CLI::App* curves = app.add_subcommand(
        "curves", "Tabulate one-sided p-value and centrality curves over a mu grid");
    TrialFlags cflags;
    std::string c_alternative = "greater";
    double from = 0.0, to = 0.0;
    bool has_from = false, has_to = false;
    int points = 401;
    std::string c_format = "csv";
    std::string c_output;
    curves->add_option("--t1", cflags.t1, "Estimate of trial 1")
        ->each([&cflags](const std::string&) { cflags.has_t1 = true; });
    curves->add_option("--se1", cflags.se1, "Standard error of trial 1")
        ->each([&cflags](const std::string&) { cflags.has_se1 = true; });
    curves->add_option("--t2", cflags.t2, "Estimate of trial 2")
        ->each([&cflags](const std::string&) { cflags.has_t2 = true; });
    curves->add_option("--se2", cflags.se2, "Standard error of trial 2")
        ->each([&cflags](const std::string&) { cflags.has_se2 = true; });
    curves->add_option("--input", cflags.input, "Trials from file");
    curves->add_option("--alternative", c_alternative, "greater|less");
    curves->add_option("--from", from, "Grid start")
        ->each([&has_from](const std::string&) { has_from = true; });
    curves->add_option("--to", to, "Grid end")
        ->each([&has_to](const std::string&) { has_to = true; });
    curves->add_option("--points", points, "Grid size (default 401)");
    curves->add_option("--format", c_format, "csv|json");
    curves->add_option("--output", c_output, "Write to file instead of standard output");

    CLI::App* simulate_cmd = app.add_subcommand(
        "simulate", "Monte Carlo operating characteristics of the combined methods");
    std::string scenario_path;
    std::uint64_t seed = 0;
    bool has_seed = false;
    unsigned threads = 0;
    std::string s_format = "json";
    std::string s_output;
    simulate_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")
        ->required();
    simulate_cmd->add_option("--seed", seed, "Override the scenario seed")
        ->each([&has_seed](const std::string&) { has_seed = true; });
    simulate_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    simulate_cmd->add_option("--format", s_format, "json|csv");
    simulate_cmd->add_option("--output", s_output,
                             "Write to file instead of standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*analyze) {
            AnalysisRequest request;
            if (!aflags.input.empty() && ends_with(aflags.input, ".json")) {
                request = request_from_json(read_file(aflags.input));
            } else {
                request.trials = trials_from_flags_or_file(aflags);
            }
            request.null_value = null_value;
            request.alternative = alternative_from_name(alternative);
            if (!levels.empty()) request.levels = levels;
            const std::vector<CombinedMethod> methods = parse_methods(methods_list);
            const AnalysisResult result = estimate::analyze(request);
            if (format == "text") {
                write_output(output, render_text(result, methods, digits, two_sided));
            } else if (format == "json") {
                write_output(output,
                             result_to_json(filter_methods(result, methods)) + "\n");
            } else if (format == "csv") {
                write_output(output, result_to_csv(filter_methods(result, methods)));
            } else {
                throw std::invalid_argument("--format must be text, csv or json");
            }
            return 0;
        }
        if (*curves) {
            AnalysisRequest request;
            if (!cflags.input.empty() && ends_with(cflags.input, ".json")) {
                request = request_from_json(read_file(cflags.input));
            } else {
                request.trials = trials_from_flags_or_file(cflags);
            }
            request.alternative = alternative_from_name(c_alternative);
            if (!has_from || !has_to) {
                // default window: pooled estimate +- 4 pooled standard errors
                const combine::Pooled pool = combine::pooled(validate(request).trials);
                if (!has_from) from = pool.estimate - 4.0 * pool.std_err;
                if (!has_to) to = pool.estimate + 4.0 * pool.std_err;
            }
            const CurveGrid grid = estimate::curves(request, from, to, points);
            if (c_format == "csv") {
                write_output(c_output, curve_grid_to_csv(grid));
            } else if (c_format == "json") {
                write_output(c_output, curve_grid_to_json(grid) + "\n");
            } else {
                throw std::invalid_argument("--format must be csv or json");
            }
            return 0;
        }
        if (*simulate_cmd) {
            simulate::SimScenario scenario =
                simulate::scenario_from_json(read_file(scenario_path));
            if (has_seed) scenario.seed = seed;
            const simulate::SimSummary summary =
                simulate::run_simulation(scenario, threads);
            if (s_format == "json") {
                write_output(s_output, simulate::summary_to_json(summary) + "\n");
            } else if (s_format == "csv") {
                write_output(s_output, simulate::summary_to_csv(summary));
            } else {
                throw std::invalid_argument("--format must be json or csv");
            }
            return 0;
        }
    } catch (const estimate::BracketError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    return run(argc, argv);
}
