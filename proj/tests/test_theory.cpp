#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pfcomb/estimate.hpp"
#include "pfcomb/statdist.hpp"
#include "pfcomb/theory.hpp"
#include "test_oracles.hpp"

using namespace pfcomb;
using namespace pfcomb::theory;

namespace {

// The min/max estimator written out directly from the estimation-function
// equations, used as the Monte Carlo oracle for expected_estimate.
double draw_estimator(CombinedMethod method, double a, Alternative alt, double t1_hat,
                      double s1, double t2_hat, double s2) {
    using statdist::chisq_quantile;
    using statdist::norm_quantile;
    const bool greater = alt == Alternative::greater;
    auto smin = [&](double q) { return std::min(t1_hat + s1 * q, t2_hat + s2 * q); };
    auto smax = [&](double q) { return std::max(t1_hat - s1 * q, t2_hat - s2 * q); };
    switch (method) {
        case CombinedMethod::two_trials_rule: {
            const double q = norm_quantile(std::sqrt(a));
            return greater ? smin(q) : smax(q);
        }
        case CombinedMethod::tippett: {
            const double q = norm_quantile(std::sqrt(1.0 - a));
            return greater ? smax(q) : smin(q);
        }
        case CombinedMethod::fisher: {
            const double z = norm_quantile(std::exp(-chisq_quantile(1.0 - a, 4) / 2.0));
            return greater ? smax(-z) : smin(-z);
        }
        case CombinedMethod::pearson: {
            const double z = norm_quantile(std::exp(-chisq_quantile(a, 4) / 2.0));
            return greater ? smin(-z) : smax(-z);
        }
        case CombinedMethod::edgington: {
            if (a < 0.5) {
                const double q = norm_quantile(std::sqrt(2.0 * a));
                return greater ? smin(q) : smax(q);
            }
            if (a > 0.5) {
                const double q = norm_quantile(std::sqrt(2.0 * (1.0 - a)));
                return greater ? smax(q) : smin(q);
            }
            return (t1_hat / s1 + t2_hat / s2) / (1.0 / s1 + 1.0 / s2);
        }
        case CombinedMethod::meta_analysis: {
            const double w1 = 1.0 / (s1 * s1);
            const double w2 = 1.0 / (s2 * s2);
            const double pooled = (w1 * t1_hat + w2 * t2_hat) / (w1 + w2);
            if (a == 0.5) return pooled;
            const double shift = norm_quantile(a) / std::sqrt(w1 + w2);
            return greater ? pooled + shift : pooled - shift;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("expected_estimate reproduces the homogeneous bias constants") {
    // two-trials rule: theta + sigma (z_{sqrt(1/2)} - 1/sqrt(pi)), about -0.019
    const double bias_const = -0.019237447930395953;
    for (double sigma : {0.3, 1.0}) {
        const MomentQuery q{CombinedMethod::two_trials_rule, 0.5, Alternative::greater,
                            1.2, 1.2, sigma, sigma};
        CHECK(expected_estimate(q) ==
              doctest::Approx(1.2 + sigma * bias_const).epsilon(1e-12));
        // Tippett mirrors the two-trials rule under homogeneity
        const MomentQuery t{CombinedMethod::tippett, 0.5, Alternative::greater, 1.2, 1.2,
                            sigma, sigma};
        CHECK(expected_estimate(t) ==
              doctest::Approx(1.2 - sigma * bias_const).epsilon(1e-12));
    }
}

TEST_CASE("expected_estimate in the separated regime follows the active trial") {
    // theta2 far above theta1: the minimum is trial 1's arm almost surely
    const MomentQuery q{CombinedMethod::two_trials_rule, 0.5, Alternative::greater,
                        0.0, 10.0, 1.0, 1.0};
    CHECK(expected_estimate(q) == doctest::Approx(0.5449521356173603).epsilon(1e-6));
}

TEST_CASE("expected_estimate rejects the normally distributed estimators") {
    MomentQuery q;
    q.method = CombinedMethod::meta_analysis;
    CHECK_THROWS_AS(expected_estimate(q), std::invalid_argument);
    q.method = CombinedMethod::edgington;
    q.a = 0.5;
    CHECK_THROWS_AS(expected_estimate(q), std::invalid_argument);
    q.method = CombinedMethod::two_trials_rule;
    q.a = 0.0;
    CHECK_THROWS_AS(expected_estimate(q), std::domain_error);
}

TEST_CASE("expected_estimate_normal means") {
    CHECK(expected_estimate_normal(CombinedMethod::meta_analysis, 0.5, 0.7, 0.7, 0.4,
                                   0.9, Alternative::greater) == doctest::Approx(0.7));
    // equal variances: Edgington's median targets the plain average
    CHECK(expected_estimate_normal(CombinedMethod::edgington, 0.5, 0.0, 1.0, 0.3, 0.3,
                                   Alternative::greater) == doctest::Approx(0.5));
    // c = 2: the weighted average leans toward trial 2
    const double mean = expected_estimate_normal(CombinedMethod::meta_analysis, 0.5, 0.0,
                                                 1.0, std::sqrt(2.0), 1.0,
                                                 Alternative::greater);
    CHECK(mean > 0.5);
    CHECK(mean == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(expected_estimate_normal(CombinedMethod::edgington, 0.25, 0.0, 1.0,
                                             1.0, 1.0, Alternative::greater),
                    std::invalid_argument);
    CHECK_THROWS_AS(expected_estimate_normal(CombinedMethod::fisher, 0.5, 0.0, 1.0, 1.0,
                                             1.0, Alternative::greater),
                    std::invalid_argument);
}

TEST_CASE("expected_estimate matches Monte Carlo means within 4 standard errors") {
    constexpr int kReps = 1000000;
    const CombinedMethod methods[] = {CombinedMethod::two_trials_rule,
                                      CombinedMethod::tippett, CombinedMethod::fisher,
                                      CombinedMethod::pearson, CombinedMethod::edgington};
    oracles::TestRng rng(101);
    for (double delta : {0.0, 0.5, 2.0}) {
        for (double sigma : {0.1, 1.0}) {
            for (double a : {0.025, 0.5, 0.975}) {
                const double theta1 = 0.2;
                const double theta2 = 0.2 + delta;
                // one shared set of draws per configuration
                std::vector<double> sums(std::size(methods) + 1, 0.0);
                std::vector<double> sums_sq(std::size(methods) + 1, 0.0);
                for (int r = 0; r < kReps; ++r) {
                    const double t1_hat = theta1 + sigma * rng.normal();
                    const double t2_hat = theta2 + sigma * rng.normal();
                    for (size_t m = 0; m < std::size(methods); ++m) {
                        const double v = draw_estimator(methods[m], a,
                                                        Alternative::greater, t1_hat,
                                                        sigma, t2_hat, sigma);
                        sums[m] += v;
                        sums_sq[m] += v * v;
                    }
                    const double ma = draw_estimator(CombinedMethod::meta_analysis, a,
                                                     Alternative::greater, t1_hat, sigma,
                                                     t2_hat, sigma);
                    sums.back() += ma;
                    sums_sq.back() += ma * ma;
                }
                for (size_t m = 0; m <= std::size(methods); ++m) {
                    const bool is_ma = m == std::size(methods);
                    const CombinedMethod method =
                        is_ma ? CombinedMethod::meta_analysis : methods[m];
                    double expected;
                    if (is_ma) {
                        expected = expected_estimate_normal(method, a, theta1, theta2,
                                                            sigma, sigma,
                                                            Alternative::greater);
                    } else if (method == CombinedMethod::edgington && a == 0.5) {
                        expected = expected_estimate_normal(method, 0.5, theta1, theta2,
                                                            sigma, sigma,
                                                            Alternative::greater);
                    } else {
                        expected = expected_estimate({method, a, Alternative::greater,
                                                      theta1, theta2, sigma, sigma});
                    }
                    const double mc_mean = sums[m] / kReps;
                    const double var =
                        std::max(sums_sq[m] / kReps - mc_mean * mc_mean, 0.0);
                    const double se = std::sqrt(var / kReps);
                    INFO("method ", method_name(method), " delta ", delta, " sigma ",
                         sigma, " a ", a);
                    CHECK(std::fabs(mc_mean - expected) <= 4.0 * se + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("expected_estimate also matches Monte Carlo under alternative less") {
    constexpr int kReps = 400000;
    oracles::TestRng rng(103);
    for (CombinedMethod method : {CombinedMethod::two_trials_rule, CombinedMethod::fisher,
                                  CombinedMethod::edgington}) {
        for (double a : {0.025, 0.975}) {
            const double theta1 = -0.3, theta2 = 0.4, s1 = 0.5, s2 = 0.8;
            double sum = 0.0, sum_sq = 0.0;
            for (int r = 0; r < kReps; ++r) {
                const double t1_hat = theta1 + s1 * rng.normal();
                const double t2_hat = theta2 + s2 * rng.normal();
                const double v = draw_estimator(method, a, Alternative::less, t1_hat, s1,
                                                t2_hat, s2);
                sum += v;
                sum_sq += v * v;
            }
            const double expected = expected_estimate(
                {method, a, Alternative::less, theta1, theta2, s1, s2});
            const double mc_mean = sum / kReps;
            const double se = std::sqrt(
                std::max(sum_sq / kReps - mc_mean * mc_mean, 0.0) / kReps);
            INFO("method ", method_name(method), " a ", a);
            CHECK(std::fabs(mc_mean - expected) <= 4.0 * se + 1e-12);
        }
    }
}

TEST_CASE("limiting_mu per-method targets") {
    const double t1 = -0.4, t2 = 1.3;
    CHECK(limiting_mu(CombinedMethod::two_trials_rule, 0.5, t1, t2, 1.0,
                      Alternative::greater) == t1);
    CHECK(limiting_mu(CombinedMethod::two_trials_rule, 0.5, t1, t2, 1.0,
                      Alternative::less) == t2);
    CHECK(limiting_mu(CombinedMethod::tippett, 0.3, t1, t2, 1.0, Alternative::greater) ==
          t2);
    CHECK(limiting_mu(CombinedMethod::fisher, 0.9, t1, t2, 1.0, Alternative::greater) ==
          t2);
    CHECK(limiting_mu(CombinedMethod::pearson, 0.1, t1, t2, 1.0, Alternative::greater) ==
          t1);
    // Edgington brackets both effects; meta-analysis sits at the weighted average
    CHECK(limiting_mu(CombinedMethod::edgington, 0.025, t1, t2, 1.0,
                      Alternative::greater) == t1);
    CHECK(limiting_mu(CombinedMethod::edgington, 0.975, t1, t2, 1.0,
                      Alternative::greater) == t2);
    const double c = 2.0;
    CHECK(limiting_mu(CombinedMethod::meta_analysis, 0.123, t1, t2, c,
                      Alternative::greater) ==
          doctest::Approx(t1 / (1.0 + c) + t2 / (1.0 + 1.0 / c)).epsilon(1e-14));
    CHECK(limiting_mu(CombinedMethod::edgington, 0.5, t1, t2, c, Alternative::greater) ==
          doctest::Approx(t1 / (1.0 + std::sqrt(c)) + t2 / (1.0 + 1.0 / std::sqrt(c)))
              .epsilon(1e-14));
}

TEST_CASE("simulated medians approach limiting_mu as the standard errors shrink") {
    constexpr int kReps = 4000;
    const double theta1 = 0.0, theta2 = 1.0;
    oracles::TestRng rng(107);
    // shared standardized draws across the sigma ladder
    std::vector<double> z1(kReps), z2(kReps);
    for (int r = 0; r < kReps; ++r) {
        z1[r] = rng.normal();
        z2[r] = rng.normal();
    }
    for (CombinedMethod method : {CombinedMethod::two_trials_rule, CombinedMethod::tippett,
                                  CombinedMethod::meta_analysis, CombinedMethod::edgington,
                                  CombinedMethod::fisher, CombinedMethod::pearson}) {
        for (double a : {0.3, 0.5}) {
            const double limit =
                limiting_mu(method, a, theta1, theta2, 1.0, Alternative::greater);
            double prev_dev = std::numeric_limits<double>::infinity();
            for (double sigma : {0.2, 0.1, 0.05}) {
                std::vector<double> medians(kReps);
                std::vector<TrialResult> trials(2);
                for (int r = 0; r < kReps; ++r) {
                    trials[0] = {theta1 + sigma * z1[r], sigma};
                    trials[1] = {theta2 + sigma * z2[r], sigma};
                    medians[r] =
                        estimate::mu_combined(method, trials, a, Alternative::greater);
                }
                std::nth_element(medians.begin(), medians.begin() + kReps / 2,
                                 medians.end());
                const double sample_median = medians[kReps / 2];
                const double dev = std::fabs(sample_median - limit);
                INFO("method ", method_name(method), " a ", a, " sigma ", sigma);
                CHECK(dev < prev_dev + 1e-9);
                prev_dev = dev;
            }
        }
    }
}

TEST_CASE("approx_mu matches exact inversion in the well-separated regime") {
    const std::vector<TrialResult> trials = {{0.3, 0.05}, {0.6, 0.07}};
    for (CombinedMethod method : {CombinedMethod::fisher, CombinedMethod::pearson,
                                  CombinedMethod::edgington}) {
        for (double a : {0.025, 0.975}) {
            const double approx = approx_mu(method, trials, a, Alternative::greater);
            const double exact =
                estimate::mu_combined(method, trials, a, Alternative::greater);
            INFO("method ", method_name(method), " a ", a);
            CHECK(std::fabs(approx - exact) <= 1e-3);
        }
    }
}

TEST_CASE("approx_mu error shrinks as the p-value functions separate") {
    for (CombinedMethod method : {CombinedMethod::fisher, CombinedMethod::pearson,
                                  CombinedMethod::edgington}) {
        double prev_worst = std::numeric_limits<double>::infinity();
        for (double scale : {1.0, 0.5, 0.25}) {
            const std::vector<TrialResult> trials = {{0.3, 0.05 * scale},
                                                     {0.6, 0.07 * scale}};
            double worst = 0.0;
            for (double a : {0.025, 0.1, 0.3, 0.7, 0.9, 0.975}) {
                const double approx = approx_mu(method, trials, a, Alternative::greater);
                const double exact =
                    estimate::mu_combined(method, trials, a, Alternative::greater);
                worst = std::max(worst, std::fabs(approx - exact));
            }
            // decreases until it reaches the inversion tolerance floor
            CHECK(worst < prev_worst + 1e-9);
            prev_worst = worst;
        }
    }
}

TEST_CASE("approx_mu Edgington specifics") {
    const std::vector<TrialResult> trials = {{-0.2, 0.3}, {0.9, 0.15}};
    // a = 1/2 is the exact weighted average, no approximation involved
    CHECK(approx_mu(CombinedMethod::edgington, trials, 0.5, Alternative::greater) ==
          estimate::edgington_median_two(trials[0], trials[1]));
    // the approximate 95% CI strictly contains both estimates
    for (Alternative alt : {Alternative::greater, Alternative::less}) {
        const double e1 = approx_mu(CombinedMethod::edgington, trials, 0.025, alt);
        const double e2 = approx_mu(CombinedMethod::edgington, trials, 0.975, alt);
        CHECK(std::min(e1, e2) < -0.2);
        CHECK(std::max(e1, e2) > 0.9);
    }
    CHECK_THROWS_AS(approx_mu(CombinedMethod::two_trials_rule, trials, 0.5,
                              Alternative::greater),
                    std::invalid_argument);
    const std::vector<TrialResult> three = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(approx_mu(CombinedMethod::fisher, three, 0.5, Alternative::greater),
                    std::invalid_argument);
}
