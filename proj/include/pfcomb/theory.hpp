#pragma once

#include <span>

#include "pfcomb/statdist.hpp"
#include "pfcomb/trial_model.hpp"

namespace pfcomb::theory {

using statdist::Probability;

// Query for the exact expectation of a min/max-type combined estimator under
// the Gaussian model theta_hat_i ~ N(theta_i, sigma_i^2).
struct MomentQuery {
    CombinedMethod method = CombinedMethod::two_trials_rule;
    double a = 0.5;
    Alternative alternative = Alternative::greater;
    double theta1 = 0.0;
    double theta2 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
};

// Exact expectation of the combined estimation function, using the
// closed-form moments of bivariate Gaussian minima/maxima. Supported for the
// two-trials rule and Tippett (exact estimators) and Fisher, Pearson and
// Edgington (their well-separated approximate estimators). Meta-analysis and
// Edgington's a = 1/2 are normally distributed; use expected_estimate_normal
// for those (requesting them here is an error).
double expected_estimate(const MomentQuery& query);

// Mean of the normally distributed estimators: meta-analysis (any a) and
// Edgington's median (a must be 1/2).
double expected_estimate_normal(CombinedMethod method, double a, double theta1,
                                double theta2, double sigma1, double sigma2,
                                Alternative alternative);

// Probability limit of the combined estimation function as both standard
// errors shrink to zero with variance ratio c = sigma1^2/sigma2^2 held fixed.
double limiting_mu(CombinedMethod method, double a, double theta1, double theta2,
                   double c, Alternative alternative);

// Closed-form approximations to the combined estimation functions of
// Fisher's, Pearson's and Edgington's methods, accurate when the two
// p-value functions are well-separated. Diagnostic only; analyze() always
// uses exact inversion.
double approx_mu(CombinedMethod method, std::span<const TrialResult> trials,
                 Probability a, Alternative alternative);

}  // namespace pfcomb::theory
