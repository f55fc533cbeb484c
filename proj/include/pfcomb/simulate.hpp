#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfcomb/trial_model.hpp"

namespace pfcomb::simulate {

// Estimand the coverage/bias statistics are measured against. The methods
// target different population quantities under heterogeneity, so the target
// is declared explicitly rather than inferred.
enum class TargetKind {
    value,                // a fixed user-supplied number
    min_effect,           // min{theta1, theta2}
    max_effect,           // max{theta1, theta2}
    ma_weighted,          // inverse-variance weighted average
    edgington_weighted,   // inverse-standard-error weighted average
};

struct Target {
    TargetKind kind = TargetKind::ma_weighted;
    double value = 0.0;  // used when kind == value
};

struct SimScenario {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    Alternative alternative = Alternative::greater;
    std::vector<CombinedMethod> methods{kAllMethods, kAllMethods + 6};
    std::vector<double> levels{0.95};
    std::uint64_t replicates = 10000;
    std::uint64_t seed = 0;
    Target target;
};

struct LevelStats {
    double coverage = 0.0;
    double coverage_se = 0.0;
    double mean_width = 0.0;
    double mean_width_se = 0.0;
    // fraction of replicates whose CI contains both true effects
    double contains_both_true = 0.0;
    double contains_both_true_se = 0.0;
    // fraction whose CI contains both observed trial estimates
    double contains_both_estimates = 0.0;
    double contains_both_estimates_se = 0.0;
};

struct MethodSummary {
    CombinedMethod method = CombinedMethod::two_trials_rule;
    double mean_bias = 0.0;  // mean(median estimate) - target
    double mean_bias_se = 0.0;
    double prob_above_target = 0.0;  // P(median estimate > target)
    double prob_above_target_se = 0.0;
    std::map<double, LevelStats> levels;
};

struct SimSummary {
    SimScenario scenario;
    double target_value = 0.0;
    std::vector<MethodSummary> methods;
};

double resolve_target(const SimScenario& scenario);

// Runs the scenario. Bit-identical output for a fixed scenario (including
// seed) regardless of the number of worker threads; replicate r draws from
// a counter-based substream of (seed, r). threads = 0 picks the hardware
// concurrency.
SimSummary run_simulation(const SimScenario& scenario, unsigned threads = 0);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// Simulates the combined p-value at the common true effect (requires
// theta1 == theta2) and tests it against Uniform(0,1) per method.
// Needs at least 2 replicates.
std::map<CombinedMethod, KsResult> null_uniformity(const SimScenario& scenario,
                                                   unsigned threads = 0);

// Kolmogorov-Smirnov one-sample test against Uniform(0,1); asymptotic
// p-value. Exposed for reuse in tests.
KsResult ks_uniform(std::vector<double> sample);

SimScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const SimScenario& scenario);
std::string summary_to_json(const SimSummary& summary);
std::string summary_to_csv(const SimSummary& summary);

// Counter-based substream: value j of replicate r is a pure function of
// (seed, r, j), so parallel and serial runs agree bit for bit.
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t seed, std::uint64_t replicate);

    std::uint64_t next_u64();
    // uniform in the open interval (0, 1)
    double next_uniform();
    // standard normal via inverse-CDF transform
    double next_normal();

private:
    std::uint64_t state_;
};

}  // namespace pfcomb::simulate
