#pragma once

#include <span>
#include <stdexcept>

#include "pfcomb/combine.hpp"
#include "pfcomb/trial_model.hpp"

namespace pfcomb::estimate {

using statdist::Probability;

// Raised when bracket expansion cannot enclose the requested p-value level.
class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Combined estimation functions mu(a): the null value at which the combined
// p-value function equals a. Medians come from a = 1/2, the limits of a
// (1 - alpha) CI from a = alpha/2 and 1 - alpha/2.

// Two-trials rule, closed form: min/max over trials of
// estimate -+ std_err * z_{a^{1/k}}.
double mu_2tr(std::span<const TrialResult> trials, Probability a, Alternative alt);

// Meta-analysis, closed form: pooled estimate +- pooled std err * z_a.
double mu_ma(std::span<const TrialResult> trials, Probability a, Alternative alt);

// Tippett, closed form with z_{(1-a)^{1/k}}.
double mu_tippett(std::span<const TrialResult> trials, Probability a, Alternative alt);

// Fisher and Pearson have no closed form in general; these invert the
// combined p-value function numerically.
double mu_fisher(std::span<const TrialResult> trials, Probability a, Alternative alt);
double mu_pearson(std::span<const TrialResult> trials, Probability a, Alternative alt);

// Edgington: closed-form weighted average (inverse standard error weights)
// for a = 1/2 with two trials, numeric inversion otherwise.
double mu_edgington(std::span<const TrialResult> trials, Probability a, Alternative alt);

double mu_combined(CombinedMethod method, std::span<const TrialResult> trials,
                   Probability a, Alternative alt);

// Closed forms for two trials with identical estimate and standard error.
// They exist only in this degenerate configuration and double as soundness
// checks for the numeric inversion.
double mu_fisher_identical(double estimate, double std_err, Probability a, Alternative alt);
double mu_pearson_identical(double estimate, double std_err, Probability a, Alternative alt);
double mu_edgington_identical(double estimate, double std_err, Probability a, Alternative alt);

// Inverse-standard-error weighted average of two estimates: Edgington's
// closed-form median for exactly two trials.
double edgington_median_two(const TrialResult& first, const TrialResult& second);

// Generic monotone inversion: finds mu with |p(mu) - a| <= 1e-10. Starts
// from [min estimate - 10 max se, max estimate + 10 max se] and doubles the
// bracket up to 60 times before giving up with BracketError.
double invert_pfun(const combine::PValueFunction& pfun, Probability a);

// Full analysis: per-trial rows (Wald intervals, one-sided p at the null)
// plus one MethodResult per combination method.
AnalysisResult analyze(const AnalysisRequest& request);

// Evaluates one-sided p and centrality curves over [from, to] with the given
// number of points, for each trial and each method.
CurveGrid curves(const AnalysisRequest& request, double from, double to, int points);

}  // namespace pfcomb::estimate
