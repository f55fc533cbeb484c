#include "pfcomb/trial_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pfcomb {

namespace {

using nlohmann::json;

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\r\n") != std::string::npos;
}

std::string csv_quote(const std::string& field) {
    if (!needs_quoting(field)) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Splits one CSV record, honoring RFC-4180 quoting.
std::vector<std::string> split_csv_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_real(const std::string& text, const std::string& what) {
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse " + what + " from '" + text + "'");
    }
}

json interval_map_to_json(const std::map<double, Interval>& intervals) {
    json out = json::object();
    for (const auto& [level, interval] : intervals) {
        out[real_to_string(level)] = {{"lower", interval.lower}, {"upper", interval.upper}};
    }
    return out;
}

}  // namespace

std::string real_to_string(double x) {
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

std::string method_name(CombinedMethod method) {
    switch (method) {
        case CombinedMethod::two_trials_rule: return "two_trials_rule";
        case CombinedMethod::meta_analysis: return "meta_analysis";
        case CombinedMethod::tippett: return "tippett";
        case CombinedMethod::fisher: return "fisher";
        case CombinedMethod::pearson: return "pearson";
        case CombinedMethod::edgington: return "edgington";
    }
    throw std::logic_error("unreachable method");
}

std::string method_label(CombinedMethod method) {
    switch (method) {
        case CombinedMethod::two_trials_rule: return "Two-trials rule";
        case CombinedMethod::meta_analysis: return "Meta-analysis";
        case CombinedMethod::tippett: return "Tippett";
        case CombinedMethod::fisher: return "Fisher";
        case CombinedMethod::pearson: return "Pearson";
        case CombinedMethod::edgington: return "Edgington";
    }
    throw std::logic_error("unreachable method");
}

CombinedMethod method_from_name(const std::string& name) {
    for (CombinedMethod m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    throw std::invalid_argument("unknown method '" + name + "'");
}

std::string alternative_name(Alternative alt) {
    return alt == Alternative::greater ? "greater" : "less";
}

Alternative alternative_from_name(const std::string& name) {
    if (name == "greater") return Alternative::greater;
    if (name == "less") return Alternative::less;
    throw std::invalid_argument("alternative must be 'greater' or 'less', got '" +
                                name + "'");
}

AnalysisRequest validate(AnalysisRequest request) {
    if (request.trials.size() < 2) {
        throw std::invalid_argument("trials: at least 2 trials required, got " +
                                    std::to_string(request.trials.size()));
    }
    for (size_t i = 0; i < request.trials.size(); ++i) {
        const TrialResult& t = request.trials[i];
        if (!std::isfinite(t.estimate)) {
            throw std::invalid_argument("estimate of trial " + std::to_string(i + 1) +
                                        " must be finite");
        }
        if (!(t.std_err > 0.0) || !std::isfinite(t.std_err)) {
            throw std::invalid_argument("std_err must be positive (trial " +
                                        std::to_string(i + 1) + ")");
        }
    }
    if (!std::isfinite(request.null_value)) {
        throw std::invalid_argument("null_value must be finite");
    }
    if (request.levels.empty()) {
        throw std::invalid_argument("levels: at least one confidence level required");
    }
    for (double level : request.levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw std::invalid_argument("levels: confidence level must lie in (0, 1), got " +
                                        real_to_string(level));
        }
    }
    std::sort(request.levels.begin(), request.levels.end());
    request.levels.erase(std::unique(request.levels.begin(), request.levels.end()),
                         request.levels.end());
    return request;
}

std::vector<TrialResult> trials_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("empty CSV input");
    }
    if (!line.empty() && line.front() == '\xef') {
        // strip UTF-8 BOM
        if (line.size() >= 3 && line[1] == '\xbb' && line[2] == '\xbf') line = line.substr(3);
    }
    std::vector<std::string> header = split_csv_record(line);
    if (header.size() < 3 || header[0] != "trial" || header[1] != "estimate" ||
        header[2] != "std_err") {
        throw std::invalid_argument("CSV header must be 'trial,estimate,std_err'");
    }
    std::vector<TrialResult> trials;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_csv_record(line);
        if (fields.size() < 3) {
            throw std::invalid_argument("CSV row needs 3 fields: '" + line + "'");
        }
        TrialResult t;
        t.estimate = parse_real(fields[1], "estimate");
        t.std_err = parse_real(fields[2], "std_err");
        trials.push_back(t);
    }
    return trials;
}

AnalysisRequest request_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
    AnalysisRequest request;
    if (!j.contains("trials") || !j["trials"].is_array()) {
        throw std::invalid_argument("JSON request needs a 'trials' array");
    }
    for (const auto& jt : j["trials"]) {
        TrialResult t;
        t.estimate = jt.at("estimate").get<double>();
        t.std_err = jt.at("std_err").get<double>();
        request.trials.push_back(t);
    }
    if (j.contains("null_value")) request.null_value = j["null_value"].get<double>();
    if (j.contains("alternative")) {
        request.alternative = alternative_from_name(j["alternative"].get<std::string>());
    }
    if (j.contains("levels")) {
        request.levels = j["levels"].get<std::vector<double>>();
    }
    return request;
}

std::string request_to_json(const AnalysisRequest& request) {
    json jt = json::array();
    for (const TrialResult& t : request.trials) {
        jt.push_back({{"estimate", t.estimate}, {"std_err", t.std_err}});
    }
    json j{{"trials", jt},
           {"null_value", request.null_value},
           {"alternative", alternative_name(request.alternative)},
           {"levels", request.levels}};
    return j.dump(2);
}

std::string result_to_json(const AnalysisResult& result) {
    json jtrials = json::array();
    for (const TrialRow& row : result.trials) {
        jtrials.push_back({{"label", row.label},
                           {"median_estimate", row.median_estimate},
                           {"intervals", interval_map_to_json(row.intervals)},
                           {"p_at_null", row.p_at_null}});
    }
    json jmethods = json::array();
    for (const MethodResult& m : result.methods) {
        jmethods.push_back({{"method", method_name(m.method)},
                            {"median_estimate", m.median_estimate},
                            {"intervals", interval_map_to_json(m.intervals)},
                            {"p_at_null", m.p_at_null}});
    }
    json j{{"request", json::parse(request_to_json(result.request))},
           {"trials", jtrials},
           {"methods", jmethods}};
    return j.dump(2);
}

std::string result_to_csv(const AnalysisResult& result) {
    std::ostringstream out;
    out << "name,level,lower,estimate,upper,p_at_null\n";
    auto emit = [&out](const std::string& name, const std::map<double, Interval>& intervals,
                       double estimate, double p) {
        for (const auto& [level, interval] : intervals) {
            out << csv_quote(name) << ',' << real_to_string(level) << ','
                << real_to_string(interval.lower) << ',' << real_to_string(estimate) << ','
                << real_to_string(interval.upper) << ',' << real_to_string(p) << '\n';
        }
    };
    for (const TrialRow& row : result.trials) {
        emit(row.label, row.intervals, row.median_estimate, row.p_at_null);
    }
    for (const MethodResult& m : result.methods) {
        emit(method_name(m.method), m.intervals, m.median_estimate, m.p_at_null);
    }
    return out.str();
}

std::string curve_grid_to_csv(const CurveGrid& grid) {
    std::ostringstream out;
    out << "mu";
    for (const std::string& label : grid.labels) {
        out << ',' << csv_quote(label + "_p") << ',' << csv_quote(label + "_centrality");
    }
    out << '\n';
    for (size_t j = 0; j < grid.mu_grid.size(); ++j) {
        out << real_to_string(grid.mu_grid[j]);
        for (size_t i = 0; i < grid.labels.size(); ++i) {
            out << ',' << real_to_string(grid.one_sided[i][j]) << ','
                << real_to_string(grid.centrality[i][j]);
        }
        out << '\n';
    }
    return out.str();
}

std::string curve_grid_to_json(const CurveGrid& grid) {
    json cols = json::object();
    for (size_t i = 0; i < grid.labels.size(); ++i) {
        cols[grid.labels[i]] = {{"one_sided", grid.one_sided[i]},
                                {"centrality", grid.centrality[i]}};
    }
    json j{{"mu_grid", grid.mu_grid}, {"curves", cols}};
    return j.dump(2);
}

}  // namespace pfcomb
