#include "pfcomb/combine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfcomb::combine {

namespace {

void check_inputs(std::span<const TrialResult> trials, double mu) {
    if (trials.size() < 2) {
        throw std::invalid_argument("combined p-value needs at least 2 trials");
    }
    if (!std::isfinite(mu)) {
        throw std::domain_error("null value mu must be finite");
    }
}

double zscore(const TrialResult& trial, double mu) {
    return (trial.estimate - mu) / trial.std_err;
}

}  // namespace

Probability p_one_sided(const TrialResult& trial, double mu, Alternative alt) {
    if (!(trial.std_err > 0.0)) {
        throw std::invalid_argument("std_err must be positive");
    }
    if (!std::isfinite(mu)) {
        throw std::domain_error("null value mu must be finite");
    }
    const double z = zscore(trial, mu);
    return alt == Alternative::greater ? statdist::norm_cdf(-z) : statdist::norm_cdf(z);
}

double log_p_one_sided(const TrialResult& trial, double mu, Alternative alt) {
    const double z = zscore(trial, mu);
    return alt == Alternative::greater ? statdist::norm_logcdf(-z)
                                       : statdist::norm_logcdf(z);
}

Probability p_2tr(std::span<const TrialResult> trials, double mu, Alternative alt) {
    check_inputs(trials, mu);
    double pmax = 0.0;
    for (const TrialResult& t : trials) {
        pmax = std::max(pmax, p_one_sided(t, mu, alt).value());
    }
    return std::pow(pmax, static_cast<double>(trials.size()));
}

Probability p_tippett(std::span<const TrialResult> trials, double mu, Alternative alt) {
    check_inputs(trials, mu);
    double pmin = 1.0;
    for (const TrialResult& t : trials) {
        pmin = std::min(pmin, p_one_sided(t, mu, alt).value());
    }
    return 1.0 - std::pow(1.0 - pmin, static_cast<double>(trials.size()));
}

Pooled pooled(std::span<const TrialResult> trials) {
    double weight_sum = 0.0;
    double weighted_estimate = 0.0;
    for (const TrialResult& t : trials) {
        const double w = 1.0 / (t.std_err * t.std_err);
        weight_sum += w;
        weighted_estimate += w * t.estimate;
    }
    return {weighted_estimate / weight_sum, 1.0 / std::sqrt(weight_sum)};
}

Probability p_ma(std::span<const TrialResult> trials, double mu, Alternative alt) {
    check_inputs(trials, mu);
    const Pooled pool = pooled(trials);
    const double z = (pool.estimate - mu) / pool.std_err;
    return alt == Alternative::greater ? statdist::norm_cdf(-z) : statdist::norm_cdf(z);
}

Probability p_fisher(std::span<const TrialResult> trials, double mu, Alternative alt) {
    check_inputs(trials, mu);
    double log_sum = 0.0;
    for (const TrialResult& t : trials) {
        log_sum += log_p_one_sided(t, mu, alt);
    }
    const double statistic = -2.0 * log_sum;
    return statdist::chisq_sf(statistic, 2 * static_cast<int>(trials.size()));
}

Probability p_pearson(std::span<const TrialResult> trials, double mu, Alternative alt) {
    check_inputs(trials, mu);
    // log(1 - p_i) is the log one-sided p of the opposite alternative
    const Alternative flipped =
        alt == Alternative::greater ? Alternative::less : Alternative::greater;
    double log_sum = 0.0;
    for (const TrialResult& t : trials) {
        log_sum += log_p_one_sided(t, mu, flipped);
    }
    const double statistic = -2.0 * log_sum;
    return statdist::chisq_cdf(statistic, 2 * static_cast<int>(trials.size()));
}

Probability p_edgington(std::span<const TrialResult> trials, double mu, Alternative alt) {
    check_inputs(trials, mu);
    double sum = 0.0;
    for (const TrialResult& t : trials) {
        sum += p_one_sided(t, mu, alt).value();
    }
    return statdist::irwin_hall_cdf(sum, static_cast<int>(trials.size()));
}

Probability p_combined(CombinedMethod method, std::span<const TrialResult> trials,
                       double mu, Alternative alt) {
    switch (method) {
        case CombinedMethod::two_trials_rule: return p_2tr(trials, mu, alt);
        case CombinedMethod::meta_analysis: return p_ma(trials, mu, alt);
        case CombinedMethod::tippett: return p_tippett(trials, mu, alt);
        case CombinedMethod::fisher: return p_fisher(trials, mu, alt);
        case CombinedMethod::pearson: return p_pearson(trials, mu, alt);
        case CombinedMethod::edgington: return p_edgington(trials, mu, alt);
    }
    throw std::logic_error("unreachable method");
}

Probability centrality(Probability p) {
    return 2.0 * std::min(p.value(), 1.0 - p.value());
}

PValueFunction::PValueFunction(CombinedMethod method, std::vector<TrialResult> trials,
                               Alternative alternative)
    : method_(method), trials_(std::move(trials)), alternative_(alternative) {
    if (trials_.size() < 2) {
        throw std::invalid_argument("PValueFunction needs at least 2 trials");
    }
}

Probability PValueFunction::operator()(double mu) const {
    return p_combined(method_, trials_, mu, alternative_);
}

}  // namespace pfcomb::combine
