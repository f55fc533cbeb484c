#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pfcomb {

// Effect estimate and standard error of one trial, both on the analysis
// scale (e.g. log rate ratio). Values are taken as-is; no transformation
// is ever applied.
struct TrialResult {
    double estimate = 0.0;
    double std_err = 1.0;
};

// Orientation of the one-sided alternative hypothesis.
enum class Alternative { greater, less };

// The six supported combination rules.
enum class CombinedMethod {
    two_trials_rule,
    meta_analysis,
    tippett,
    fisher,
    pearson,
    edgington,
};

inline constexpr CombinedMethod kAllMethods[] = {
    CombinedMethod::two_trials_rule, CombinedMethod::meta_analysis,
    CombinedMethod::tippett,         CombinedMethod::fisher,
    CombinedMethod::pearson,         CombinedMethod::edgington,
};

// Machine name as used in JSON/CSV and on the command line.
std::string method_name(CombinedMethod method);
// Human-readable label as used in text tables.
std::string method_label(CombinedMethod method);
CombinedMethod method_from_name(const std::string& name);

std::string alternative_name(Alternative alt);
Alternative alternative_from_name(const std::string& name);

struct AnalysisRequest {
    std::vector<TrialResult> trials;
    double null_value = 0.0;
    Alternative alternative = Alternative::greater;
    std::vector<double> levels{0.95, 0.99875};
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

// Median estimate, confidence intervals and p-value at the null for one
// combined method (or, with the same shape, for one individual trial).
struct MethodResult {
    CombinedMethod method = CombinedMethod::two_trials_rule;
    double median_estimate = 0.0;
    std::map<double, Interval> intervals;  // level -> interval
    double p_at_null = 0.0;
};

struct TrialRow {
    std::string label;
    double median_estimate = 0.0;  // the trial estimate itself
    std::map<double, Interval> intervals;  // Wald intervals
    double p_at_null = 0.0;
};

struct AnalysisResult {
    AnalysisRequest request;
    std::vector<TrialRow> trials;
    std::vector<MethodResult> methods;
};

// Tabulated one-sided p and centrality values over a mu grid, one column
// pair per trial and per method.
struct CurveGrid {
    std::vector<double> mu_grid;
    std::vector<std::string> labels;  // trial labels then method names
    // columns[i][j] = {one-sided p, centrality} of labels[i] at mu_grid[j]
    std::vector<std::vector<double>> one_sided;
    std::vector<std::vector<double>> centrality;
};

// Checks invariants and returns the normalized request (levels sorted and
// deduplicated). Throws std::invalid_argument naming the offending field.
AnalysisRequest validate(AnalysisRequest request);

// Shortest decimal string that parses back to exactly the same double.
std::string real_to_string(double x);

// --- serialization -------------------------------------------------------

// CSV with header "trial,estimate,std_err", UTF-8, '.' decimal separator.
std::vector<TrialResult> trials_from_csv(std::istream& in);

AnalysisRequest request_from_json(const std::string& text);
std::string request_to_json(const AnalysisRequest& request);
std::string result_to_json(const AnalysisResult& result);
std::string result_to_csv(const AnalysisResult& result);
std::string curve_grid_to_csv(const CurveGrid& grid);
std::string curve_grid_to_json(const CurveGrid& grid);

}  // namespace pfcomb
