#include "pfcomb/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pfcomb/combine.hpp"
#include "pfcomb/estimate.hpp"
#include "pfcomb/statdist.hpp"

namespace pfcomb::simulate {

namespace {

using nlohmann::json;

constexpr std::uint64_t kBlockSize = 4096;

// splitmix64 avalanche
std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void check_scenario(const SimScenario& s) {
    if (!(s.sigma1 > 0.0 && s.sigma2 > 0.0)) {
        throw std::invalid_argument("sigma1 and sigma2 must be positive");
    }
    if (!std::isfinite(s.theta1) || !std::isfinite(s.theta2)) {
        throw std::invalid_argument("theta1 and theta2 must be finite");
    }
    if (s.replicates < 1) {
        throw std::invalid_argument("replicates must be at least 1");
    }
    if (s.methods.empty()) {
        throw std::invalid_argument("methods must not be empty");
    }
    for (double level : s.levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw std::invalid_argument("levels must lie in (0, 1)");
        }
    }
    if (s.target.kind == TargetKind::value && !std::isfinite(s.target.value)) {
        throw std::invalid_argument("target value must be finite");
    }
}

unsigned effective_threads(unsigned requested, std::uint64_t blocks) {
    unsigned n = requested == 0 ? std::thread::hardware_concurrency() : requested;
    if (n == 0) n = 1;
    return static_cast<unsigned>(std::min<std::uint64_t>(n, blocks));
}

// Runs fn(block_index) over all blocks on the requested number of threads.
template <typename Fn>
void for_each_block(std::uint64_t blocks, unsigned threads, Fn fn) {
    if (threads <= 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&next, blocks, &fn] {
            for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
                fn(b);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

struct LevelAccum {
    std::uint64_t cover = 0;
    double width_sum = 0.0;
    double width_sum_sq = 0.0;
    std::uint64_t contains_true = 0;
    std::uint64_t contains_est = 0;

    void add(const LevelAccum& other) {
        cover += other.cover;
        width_sum += other.width_sum;
        width_sum_sq += other.width_sum_sq;
        contains_true += other.contains_true;
        contains_est += other.contains_est;
    }
};

struct MethodAccum {
    double median_sum = 0.0;
    double median_sum_sq = 0.0;
    std::uint64_t above_target = 0;
    std::vector<LevelAccum> levels;

    void add(const MethodAccum& other) {
        median_sum += other.median_sum;
        median_sum_sq += other.median_sum_sq;
        above_target += other.above_target;
        for (size_t i = 0; i < levels.size(); ++i) levels[i].add(other.levels[i]);
    }
};

double proportion_se(double p, double n) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
}

double mean_se(double sum, double sum_sq, double n) {
    if (n < 2.0) return std::numeric_limits<double>::quiet_NaN();
    const double mean = sum / n;
    const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
    return std::sqrt(var / n);
}

std::string target_kind_name(TargetKind kind) {
    switch (kind) {
        case TargetKind::value: return "value";
        case TargetKind::min_effect: return "min";
        case TargetKind::max_effect: return "max";
        case TargetKind::ma_weighted: return "ma_weighted";
        case TargetKind::edgington_weighted: return "edgington_weighted";
    }
    throw std::logic_error("unreachable target kind");
}

TargetKind target_kind_from_name(const std::string& name) {
    if (name == "value") return TargetKind::value;
    if (name == "min") return TargetKind::min_effect;
    if (name == "max") return TargetKind::max_effect;
    if (name == "ma_weighted") return TargetKind::ma_weighted;
    if (name == "edgington_weighted") return TargetKind::edgington_weighted;
    throw std::invalid_argument("unknown target '" + name + "'");
}

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t replicate)
    : state_(mix64(seed ^ mix64(replicate * 0xd1b54a32d192ed03ull +
                                0x8cb92ba72f3d8dd7ull))) {}

std::uint64_t SubstreamRng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
}

double SubstreamRng::next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SubstreamRng::next_normal() {
    return statdist::norm_quantile(next_uniform());
}

double resolve_target(const SimScenario& s) {
    switch (s.target.kind) {
        case TargetKind::value:
            return s.target.value;
        case TargetKind::min_effect:
            return std::min(s.theta1, s.theta2);
        case TargetKind::max_effect:
            return std::max(s.theta1, s.theta2);
        case TargetKind::ma_weighted: {
            const double w1 = 1.0 / (s.sigma1 * s.sigma1);
            const double w2 = 1.0 / (s.sigma2 * s.sigma2);
            return (w1 * s.theta1 + w2 * s.theta2) / (w1 + w2);
        }
        case TargetKind::edgington_weighted: {
            const double w1 = 1.0 / s.sigma1;
            const double w2 = 1.0 / s.sigma2;
            return (w1 * s.theta1 + w2 * s.theta2) / (w1 + w2);
        }
    }
    throw std::logic_error("unreachable target kind");
}

SimSummary run_simulation(const SimScenario& scenario, unsigned threads) {
    check_scenario(scenario);
    const double target = resolve_target(scenario);
    const std::uint64_t n = scenario.replicates;
    const std::uint64_t blocks = (n + kBlockSize - 1) / kBlockSize;
    const size_t n_methods = scenario.methods.size();
    const size_t n_levels = scenario.levels.size();

    MethodAccum empty;
    empty.levels.resize(n_levels);
    std::vector<std::vector<MethodAccum>> per_block(
        blocks, std::vector<MethodAccum>(n_methods, empty));

    for_each_block(blocks, effective_threads(threads, blocks), [&](std::uint64_t b) {
        std::vector<MethodAccum>& accum = per_block[b];
        const std::uint64_t lo = b * kBlockSize;
        const std::uint64_t hi = std::min(n, lo + kBlockSize);
        std::vector<TrialResult> trials(2);
        for (std::uint64_t r = lo; r < hi; ++r) {
            SubstreamRng rng(scenario.seed, r);
            trials[0] = {scenario.theta1 + scenario.sigma1 * rng.next_normal(),
                         scenario.sigma1};
            trials[1] = {scenario.theta2 + scenario.sigma2 * rng.next_normal(),
                         scenario.sigma2};
            for (size_t m = 0; m < n_methods; ++m) {
                const CombinedMethod method = scenario.methods[m];
                const double median =
                    estimate::mu_combined(method, trials, 0.5, scenario.alternative);
                MethodAccum& acc = accum[m];
                acc.median_sum += median;
                acc.median_sum_sq += median * median;
                if (median > target) ++acc.above_target;
                for (size_t l = 0; l < n_levels; ++l) {
                    const double a_low = 0.5 * (1.0 - scenario.levels[l]);
                    const double end1 = estimate::mu_combined(method, trials, a_low,
                                                              scenario.alternative);
                    const double end2 = estimate::mu_combined(method, trials, 1.0 - a_low,
                                                              scenario.alternative);
                    const double lower = std::min(end1, end2);
                    const double upper = std::max(end1, end2);
                    LevelAccum& lacc = acc.levels[l];
                    if (lower <= target && target <= upper) ++lacc.cover;
                    const double width = upper - lower;
                    lacc.width_sum += width;
                    lacc.width_sum_sq += width * width;
                    if (lower <= scenario.theta1 && scenario.theta1 <= upper &&
                        lower <= scenario.theta2 && scenario.theta2 <= upper) {
                        ++lacc.contains_true;
                    }
                    if (lower <= trials[0].estimate && trials[0].estimate <= upper &&
                        lower <= trials[1].estimate && trials[1].estimate <= upper) {
                        ++lacc.contains_est;
                    }
                }
            }
        }
    });

    // combine blocks in index order so the result is thread-count independent
    std::vector<MethodAccum> total(n_methods, empty);
    for (std::uint64_t b = 0; b < blocks; ++b) {
        for (size_t m = 0; m < n_methods; ++m) total[m].add(per_block[b][m]);
    }

    SimSummary summary;
    summary.scenario = scenario;
    summary.target_value = target;
    const double dn = static_cast<double>(n);
    for (size_t m = 0; m < n_methods; ++m) {
        MethodSummary ms;
        ms.method = scenario.methods[m];
        ms.mean_bias = total[m].median_sum / dn - target;
        ms.mean_bias_se = mean_se(total[m].median_sum, total[m].median_sum_sq, dn);
        ms.prob_above_target = static_cast<double>(total[m].above_target) / dn;
        ms.prob_above_target_se = proportion_se(ms.prob_above_target, dn);
        for (size_t l = 0; l < n_levels; ++l) {
            const LevelAccum& lacc = total[m].levels[l];
            LevelStats stats;
            stats.coverage = static_cast<double>(lacc.cover) / dn;
            stats.coverage_se = proportion_se(stats.coverage, dn);
            stats.mean_width = lacc.width_sum / dn;
            stats.mean_width_se = mean_se(lacc.width_sum, lacc.width_sum_sq, dn);
            stats.contains_both_true = static_cast<double>(lacc.contains_true) / dn;
            stats.contains_both_true_se = proportion_se(stats.contains_both_true, dn);
            stats.contains_both_estimates = static_cast<double>(lacc.contains_est) / dn;
            stats.contains_both_estimates_se =
                proportion_se(stats.contains_both_estimates, dn);
            ms.levels[scenario.levels[l]] = stats;
        }
        summary.methods.push_back(std::move(ms));
    }
    return summary;
}

KsResult ks_uniform(std::vector<double> sample) {
    if (sample.size() < 2) {
        throw std::invalid_argument("KS test needs at least 2 observations");
    }
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double cdf = sample[i];  // Uniform(0,1) CDF
        d = std::max(d, std::fabs((i + 1.0) / n - cdf));
        d = std::max(d, std::fabs(cdf - i / n));
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        p += sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    p = std::clamp(2.0 * p, 0.0, 1.0);
    return {d, p};
}

std::map<CombinedMethod, KsResult> null_uniformity(const SimScenario& scenario,
                                                   unsigned threads) {
    check_scenario(scenario);
    if (scenario.theta1 != scenario.theta2) {
        throw std::invalid_argument("null_uniformity requires theta1 == theta2");
    }
    if (scenario.replicates < 2) {
        throw std::invalid_argument("null_uniformity needs at least 2 replicates");
    }
    const double mu0 = scenario.theta1;
    const std::uint64_t n = scenario.replicates;
    const std::uint64_t blocks = (n + kBlockSize - 1) / kBlockSize;
    const size_t n_methods = scenario.methods.size();
    std::vector<std::vector<double>> pvals(n_methods, std::vector<double>(n));

    for_each_block(blocks, effective_threads(threads, blocks), [&](std::uint64_t b) {
        const std::uint64_t lo = b * kBlockSize;
        const std::uint64_t hi = std::min(n, lo + kBlockSize);
        std::vector<TrialResult> trials(2);
        for (std::uint64_t r = lo; r < hi; ++r) {
            SubstreamRng rng(scenario.seed, r);
            trials[0] = {scenario.theta1 + scenario.sigma1 * rng.next_normal(),
                         scenario.sigma1};
            trials[1] = {scenario.theta2 + scenario.sigma2 * rng.next_normal(),
                         scenario.sigma2};
            for (size_t m = 0; m < n_methods; ++m) {
                pvals[m][r] = combine::p_combined(scenario.methods[m], trials, mu0,
                                                  scenario.alternative)
                                  .value();
            }
        }
    });

    std::map<CombinedMethod, KsResult> out;
    for (size_t m = 0; m < n_methods; ++m) {
        out[scenario.methods[m]] = ks_uniform(std::move(pvals[m]));
    }
    return out;
}

SimScenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
    SimScenario s;
    s.theta1 = j.at("theta1").get<double>();
    s.theta2 = j.at("theta2").get<double>();
    s.sigma1 = j.at("sigma1").get<double>();
    s.sigma2 = j.at("sigma2").get<double>();
    if (j.contains("alternative")) {
        s.alternative = alternative_from_name(j["alternative"].get<std::string>());
    }
    if (j.contains("methods")) {
        s.methods.clear();
        for (const auto& name : j["methods"]) {
            s.methods.push_back(method_from_name(name.get<std::string>()));
        }
    }
    if (j.contains("levels")) s.levels = j["levels"].get<std::vector<double>>();
    if (j.contains("replicates")) s.replicates = j["replicates"].get<std::uint64_t>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("target")) {
        if (j["target"].is_number()) {
            s.target = {TargetKind::value, j["target"].get<double>()};
        } else {
            s.target = {target_kind_from_name(j["target"].get<std::string>()), 0.0};
        }
    }
    check_scenario(s);
    return s;
}

std::string scenario_to_json(const SimScenario& s) {
    json methods = json::array();
    for (CombinedMethod m : s.methods) methods.push_back(method_name(m));
    json target;
    if (s.target.kind == TargetKind::value) {
        target = s.target.value;
    } else {
        target = target_kind_name(s.target.kind);
    }
    json j{{"theta1", s.theta1},
           {"theta2", s.theta2},
           {"sigma1", s.sigma1},
           {"sigma2", s.sigma2},
           {"alternative", alternative_name(s.alternative)},
           {"methods", methods},
           {"levels", s.levels},
           {"replicates", s.replicates},
           {"seed", s.seed},
           {"target", target}};
    return j.dump(2);
}

std::string summary_to_json(const SimSummary& summary) {
    json jm = json::array();
    for (const MethodSummary& ms : summary.methods) {
        json levels = json::object();
        for (const auto& [level, stats] : ms.levels) {
            levels[real_to_string(level)] = {
                {"coverage", stats.coverage},
                {"coverage_se", stats.coverage_se},
                {"mean_width", stats.mean_width},
                {"mean_width_se", stats.mean_width_se},
                {"contains_both_true", stats.contains_both_true},
                {"contains_both_true_se", stats.contains_both_true_se},
                {"contains_both_estimates", stats.contains_both_estimates},
                {"contains_both_estimates_se", stats.contains_both_estimates_se},
            };
        }
        jm.push_back({{"method", method_name(ms.method)},
                      {"mean_bias", ms.mean_bias},
                      {"mean_bias_se", ms.mean_bias_se},
                      {"prob_above_target", ms.prob_above_target},
                      {"prob_above_target_se", ms.prob_above_target_se},
                      {"levels", levels}});
    }
    json j{{"scenario", json::parse(scenario_to_json(summary.scenario))},
           {"target_value", summary.target_value},
           {"methods", jm}};
    return j.dump(2);
}

std::string summary_to_csv(const SimSummary& summary) {
    std::string out =
        "method,level,mean_bias,mean_bias_se,prob_above_target,prob_above_target_se,"
        "coverage,coverage_se,mean_width,mean_width_se,contains_both_true,"
        "contains_both_true_se,contains_both_estimates,contains_both_estimates_se\n";
    for (const MethodSummary& ms : summary.methods) {
        for (const auto& [level, stats] : ms.levels) {
            const double fields[] = {level,
                                     ms.mean_bias,
                                     ms.mean_bias_se,
                                     ms.prob_above_target,
                                     ms.prob_above_target_se,
                                     stats.coverage,
                                     stats.coverage_se,
                                     stats.mean_width,
                                     stats.mean_width_se,
                                     stats.contains_both_true,
                                     stats.contains_both_true_se,
                                     stats.contains_both_estimates,
                                     stats.contains_both_estimates_se};
            out += method_name(ms.method);
            for (double field : fields) {
                out += ',';
                out += real_to_string(field);
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace pfcomb::simulate
