#pragma once

#include <span>
#include <vector>

#include "pfcomb/statdist.hpp"
#include "pfcomb/trial_model.hpp"

namespace pfcomb::combine {

using statdist::Probability;

// One-sided p-value of a single trial for null value mu:
//   greater: 1 - Phi((estimate - mu) / std_err)
//   less:        Phi((estimate - mu) / std_err)
Probability p_one_sided(const TrialResult& trial, double mu, Alternative alt);

// log of p_one_sided, evaluated directly in log space so Fisher's method
// stays accurate where the p-value underflows.
double log_p_one_sided(const TrialResult& trial, double mu, Alternative alt);

// Two-trials rule: max{p_i}^k (Wilkinson with r = k).
Probability p_2tr(std::span<const TrialResult> trials, double mu, Alternative alt);

// Fixed-effect meta-analysis: Stouffer's method with inverse standard error
// weights, equal to the Wald p-value of the pooled estimate.
Probability p_ma(std::span<const TrialResult> trials, double mu, Alternative alt);

// Tippett: 1 - (1 - min{p_i})^k (Wilkinson with r = 1).
Probability p_tippett(std::span<const TrialResult> trials, double mu, Alternative alt);

// Fisher: 1 - Pr(chi^2_{2k} <= -2 sum log p_i).
Probability p_fisher(std::span<const TrialResult> trials, double mu, Alternative alt);

// Pearson: Pr(chi^2_{2k} <= -2 sum log(1 - p_i)).
Probability p_pearson(std::span<const TrialResult> trials, double mu, Alternative alt);

// Edgington: Irwin-Hall CDF of sum p_i.
Probability p_edgington(std::span<const TrialResult> trials, double mu, Alternative alt);

Probability p_combined(CombinedMethod method, std::span<const TrialResult> trials,
                       double mu, Alternative alt);

// Two-sided transform 2 min{p, 1 - p}; peaks at the median estimate.
Probability centrality(Probability p);

// Pooled (inverse-variance) estimate and standard error, Stouffer weights.
struct Pooled {
    double estimate;
    double std_err;
};
Pooled pooled(std::span<const TrialResult> trials);

// An evaluable combined p-value function mu -> p. Monotone in mu:
// nondecreasing for alternative "greater", nonincreasing for "less".
class PValueFunction {
public:
    PValueFunction(CombinedMethod method, std::vector<TrialResult> trials,
                   Alternative alternative);

    Probability operator()(double mu) const;

    CombinedMethod method() const { return method_; }
    const std::vector<TrialResult>& trials() const { return trials_; }
    Alternative alternative() const { return alternative_; }
    bool increasing() const { return alternative_ == Alternative::greater; }

private:
    CombinedMethod method_;
    std::vector<TrialResult> trials_;
    Alternative alternative_;
};

}  // namespace pfcomb::combine
