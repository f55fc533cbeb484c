#include "pfcomb/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfcomb::theory {

namespace {

using statdist::chisq_quantile;
using statdist::norm_cdf;
using statdist::norm_pdf;
using statdist::norm_quantile;

// E[max{theta1_hat - sigma1 q, theta2_hat - sigma2 q}] for independent
// normal estimates (Nadarajah & Kotz moments of bivariate extremes).
double expected_shifted_max(double theta1, double theta2, double sigma1, double sigma2,
                            double q) {
    const double spread = std::sqrt(sigma1 * sigma1 + sigma2 * sigma2);
    const double arg1 = (theta1 - theta2 + q * (sigma2 - sigma1)) / spread;
    const double arg2 = (theta2 - theta1 + q * (sigma1 - sigma2)) / spread;
    return (theta1 - sigma1 * q) * norm_cdf(arg1).value() +
           (theta2 - sigma2 * q) * norm_cdf(arg2).value() + spread * norm_pdf(arg1);
}

// E[min{theta1_hat + sigma1 q, theta2_hat + sigma2 q}], same source.
double expected_shifted_min(double theta1, double theta2, double sigma1, double sigma2,
                            double q) {
    const double spread = std::sqrt(sigma1 * sigma1 + sigma2 * sigma2);
    const double arg1 = (theta2 - theta1 + q * (sigma2 - sigma1)) / spread;
    const double arg2 = (theta1 - theta2 + q * (sigma1 - sigma2)) / spread;
    return (theta1 + sigma1 * q) * norm_cdf(arg1).value() +
           (theta2 + sigma2 * q) * norm_cdf(arg2).value() - spread * norm_pdf(arg1);
}

enum class Extreme { shifted_min, shifted_max };

struct EstimatorForm {
    Extreme extreme;
    double q;
};

// Maps (method, a, alternative) to the min/max representation of its
// (possibly approximate) combined estimation function.
EstimatorForm estimator_form(CombinedMethod method, double a, Alternative alt) {
    const bool greater = alt == Alternative::greater;
    switch (method) {
        case CombinedMethod::two_trials_rule: {
            const double q = norm_quantile(std::sqrt(a));
            return {greater ? Extreme::shifted_min : Extreme::shifted_max, q};
        }
        case CombinedMethod::tippett: {
            const double q = norm_quantile(std::sqrt(1.0 - a));
            return {greater ? Extreme::shifted_max : Extreme::shifted_min, q};
        }
        case CombinedMethod::fisher: {
            const double q = -norm_quantile(std::exp(-chisq_quantile(1.0 - a, 4) / 2.0));
            return {greater ? Extreme::shifted_max : Extreme::shifted_min, q};
        }
        case CombinedMethod::pearson: {
            const double q = -norm_quantile(std::exp(-chisq_quantile(a, 4) / 2.0));
            return {greater ? Extreme::shifted_min : Extreme::shifted_max, q};
        }
        case CombinedMethod::edgington: {
            if (a == 0.5) {
                throw std::invalid_argument(
                    "Edgington's median is normally distributed; use "
                    "expected_estimate_normal");
            }
            if (a < 0.5) {
                const double q = norm_quantile(std::sqrt(2.0 * a));
                return {greater ? Extreme::shifted_min : Extreme::shifted_max, q};
            }
            const double q = norm_quantile(std::sqrt(2.0 * (1.0 - a)));
            return {greater ? Extreme::shifted_max : Extreme::shifted_min, q};
        }
        case CombinedMethod::meta_analysis:
            throw std::invalid_argument(
                "meta-analysis estimator is normally distributed; use "
                "expected_estimate_normal");
    }
    throw std::logic_error("unreachable method");
}

}  // namespace

double expected_estimate(const MomentQuery& query) {
    if (!(query.a > 0.0 && query.a < 1.0)) {
        throw std::domain_error("a must lie in (0, 1)");
    }
    if (!(query.sigma1 > 0.0 && query.sigma2 > 0.0)) {
        throw std::invalid_argument("sigma1 and sigma2 must be positive");
    }
    const EstimatorForm form = estimator_form(query.method, query.a, query.alternative);
    return form.extreme == Extreme::shifted_min
               ? expected_shifted_min(query.theta1, query.theta2, query.sigma1,
                                      query.sigma2, form.q)
               : expected_shifted_max(query.theta1, query.theta2, query.sigma1,
                                      query.sigma2, form.q);
}

double expected_estimate_normal(CombinedMethod method, double a, double theta1,
                                double theta2, double sigma1, double sigma2,
                                Alternative alternative) {
    if (!(sigma1 > 0.0 && sigma2 > 0.0)) {
        throw std::invalid_argument("sigma1 and sigma2 must be positive");
    }
    const double c = (sigma1 * sigma1) / (sigma2 * sigma2);
    if (method == CombinedMethod::meta_analysis) {
        if (!(a > 0.0 && a < 1.0)) {
            throw std::domain_error("a must lie in (0, 1)");
        }
        const double mean = theta1 / (1.0 + c) + theta2 / (1.0 + 1.0 / c);
        if (a == 0.5) return mean;
        const double pooled_se =
            1.0 / std::sqrt(1.0 / (sigma1 * sigma1) + 1.0 / (sigma2 * sigma2));
        const double shift = norm_quantile(a) * pooled_se;
        return alternative == Alternative::greater ? mean + shift : mean - shift;
    }
    if (method == CombinedMethod::edgington) {
        if (a != 0.5) {
            throw std::invalid_argument(
                "Edgington's estimator is normal only at a = 1/2; use "
                "expected_estimate for other a");
        }
        const double root_c = std::sqrt(c);
        return theta1 / (1.0 + root_c) + theta2 / (1.0 + 1.0 / root_c);
    }
    throw std::invalid_argument("expected_estimate_normal supports meta_analysis and "
                                "edgington (median) only");
}

double limiting_mu(CombinedMethod method, double a, double theta1, double theta2,
                   double c, Alternative alternative) {
    const bool greater = alternative == Alternative::greater;
    const double lo = std::min(theta1, theta2);
    const double hi = std::max(theta1, theta2);
    switch (method) {
        case CombinedMethod::two_trials_rule:
            return greater ? lo : hi;
        case CombinedMethod::tippett:
            return greater ? hi : lo;
        case CombinedMethod::fisher:
            return greater ? hi : lo;
        case CombinedMethod::pearson:
            return greater ? lo : hi;
        case CombinedMethod::meta_analysis: {
            if (!(c > 0.0)) throw std::invalid_argument("variance ratio c must be positive");
            return theta1 / (1.0 + c) + theta2 / (1.0 + 1.0 / c);
        }
        case CombinedMethod::edgington: {
            if (!(c > 0.0)) throw std::invalid_argument("variance ratio c must be positive");
            if (a == 0.5) {
                const double root_c = std::sqrt(c);
                return theta1 / (1.0 + root_c) + theta2 / (1.0 + 1.0 / root_c);
            }
            const bool lower_branch = (a < 0.5) == greater;
            return lower_branch ? lo : hi;
        }
    }
    throw std::logic_error("unreachable method");
}

double approx_mu(CombinedMethod method, std::span<const TrialResult> trials,
                 Probability a, Alternative alternative) {
    if (trials.size() != 2) {
        throw std::invalid_argument("approx_mu is defined for exactly 2 trials");
    }
    if (!(a.value() > 0.0 && a.value() < 1.0)) {
        throw std::domain_error("a must lie in (0, 1)");
    }
    if (method != CombinedMethod::fisher && method != CombinedMethod::pearson &&
        method != CombinedMethod::edgington) {
        throw std::invalid_argument(
            "approx_mu covers fisher, pearson and edgington; the other methods have "
            "exact closed forms");
    }
    if (method == CombinedMethod::edgington && a.value() == 0.5) {
        // weighted average, exact
        return (trials[0].estimate / trials[0].std_err +
                trials[1].estimate / trials[1].std_err) /
               (1.0 / trials[0].std_err + 1.0 / trials[1].std_err);
    }
    const EstimatorForm form = estimator_form(method, a.value(), alternative);
    if (form.extreme == Extreme::shifted_min) {
        return std::min(trials[0].estimate + trials[0].std_err * form.q,
                        trials[1].estimate + trials[1].std_err * form.q);
    }
    return std::max(trials[0].estimate - trials[0].std_err * form.q,
                    trials[1].estimate - trials[1].std_err * form.q);
}

}  // namespace pfcomb::theory
