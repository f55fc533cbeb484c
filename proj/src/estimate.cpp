#include "pfcomb/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfcomb::estimate {

namespace {

using statdist::norm_quantile;

void check_query(std::span<const TrialResult> trials, double a) {
    if (trials.size() < 2) {
        throw std::invalid_argument("estimation needs at least 2 trials");
    }
    if (!(a > 0.0 && a < 1.0)) {
        throw std::domain_error("estimation level a must lie in (0, 1)");
    }
}

double shifted_min(std::span<const TrialResult> trials, double q) {
    double best = std::numeric_limits<double>::infinity();
    for (const TrialResult& t : trials) best = std::min(best, t.estimate + t.std_err * q);
    return best;
}

double shifted_max(std::span<const TrialResult> trials, double q) {
    double best = -std::numeric_limits<double>::infinity();
    for (const TrialResult& t : trials) best = std::max(best, t.estimate - t.std_err * q);
    return best;
}

}  // namespace

double mu_2tr(std::span<const TrialResult> trials, Probability a, Alternative alt) {
    check_query(trials, a);
    const double k = static_cast<double>(trials.size());
    const double q = norm_quantile(std::pow(a.value(), 1.0 / k));
    return alt == Alternative::greater ? shifted_min(trials, q) : shifted_max(trials, q);
}

double mu_tippett(std::span<const TrialResult> trials, Probability a, Alternative alt) {
    check_query(trials, a);
    const double k = static_cast<double>(trials.size());
    const double q = norm_quantile(std::pow(1.0 - a.value(), 1.0 / k));
    return alt == Alternative::greater ? shifted_max(trials, q) : shifted_min(trials, q);
}

double mu_ma(std::span<const TrialResult> trials, Probability a, Alternative alt) {
    check_query(trials, a);
    const combine::Pooled pool = combine::pooled(trials);
    if (a.value() == 0.5) return pool.estimate;
    const double z = norm_quantile(a);
    return alt == Alternative::greater ? pool.estimate + pool.std_err * z
                                       : pool.estimate - pool.std_err * z;
}

double mu_fisher(std::span<const TrialResult> trials, Probability a, Alternative alt) {
    check_query(trials, a);
    return invert_pfun(combine::PValueFunction(CombinedMethod::fisher,
                                               {trials.begin(), trials.end()}, alt),
                       a);
}

double mu_pearson(std::span<const TrialResult> trials, Probability a, Alternative alt) {
    check_query(trials, a);
    return invert_pfun(combine::PValueFunction(CombinedMethod::pearson,
                                               {trials.begin(), trials.end()}, alt),
                       a);
}

double edgington_median_two(const TrialResult& first, const TrialResult& second) {
    return (first.estimate / first.std_err + second.estimate / second.std_err) /
           (1.0 / first.std_err + 1.0 / second.std_err);
}

double mu_edgington(std::span<const TrialResult> trials, Probability a, Alternative alt) {
    check_query(trials, a);
    if (a.value() == 0.5 && trials.size() == 2) {
        return edgington_median_two(trials[0], trials[1]);
    }
    return invert_pfun(combine::PValueFunction(CombinedMethod::edgington,
                                               {trials.begin(), trials.end()}, alt),
                       a);
}

double mu_combined(CombinedMethod method, std::span<const TrialResult> trials,
                   Probability a, Alternative alt) {
    switch (method) {
        case CombinedMethod::two_trials_rule: return mu_2tr(trials, a, alt);
        case CombinedMethod::meta_analysis: return mu_ma(trials, a, alt);
        case CombinedMethod::tippett: return mu_tippett(trials, a, alt);
        case CombinedMethod::fisher: return mu_fisher(trials, a, alt);
        case CombinedMethod::pearson: return mu_pearson(trials, a, alt);
        case CombinedMethod::edgington: return mu_edgington(trials, a, alt);
    }
    throw std::logic_error("unreachable method");
}

double mu_fisher_identical(double estimate, double std_err, Probability a,
                           Alternative alt) {
    const double z = norm_quantile(std::exp(-statdist::chisq_quantile(1.0 - a.value(), 4) / 4.0));
    return alt == Alternative::greater ? estimate + std_err * z : estimate - std_err * z;
}

double mu_pearson_identical(double estimate, double std_err, Probability a,
                            Alternative alt) {
    // sign mirrors Fisher's form: inverting the Pearson p-value function gives
    // estimate - std_err * z for "greater" (the shift moves opposite Fisher's)
    const double z = norm_quantile(std::exp(-statdist::chisq_quantile(a, 4) / 4.0));
    return alt == Alternative::greater ? estimate - std_err * z : estimate + std_err * z;
}

double mu_edgington_identical(double estimate, double std_err, Probability a,
                              Alternative alt) {
    const double sign = alt == Alternative::greater ? 1.0 : -1.0;
    if (a.value() <= 0.5) {
        return estimate + sign * std_err * norm_quantile(std::sqrt(a.value() / 2.0));
    }
    return estimate - sign * std_err * norm_quantile(std::sqrt((1.0 - a.value()) / 2.0));
}

double invert_pfun(const combine::PValueFunction& pfun, Probability a) {
    if (!(a.value() > 0.0 && a.value() < 1.0)) {
        throw std::domain_error("inversion level a must lie in (0, 1)");
    }
    const std::vector<TrialResult>& trials = pfun.trials();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double max_se = 0.0;
    for (const TrialResult& t : trials) {
        lo = std::min(lo, t.estimate);
        hi = std::max(hi, t.estimate);
        max_se = std::max(max_se, t.std_err);
    }
    lo -= 10.0 * max_se;
    hi += 10.0 * max_se;

    auto f = [&](double mu) { return pfun(mu).value() - a.value(); };

    double flo = f(lo);
    double fhi = f(hi);
    int expansions = 0;
    while (flo * fhi > 0.0) {
        if (++expansions > 60) {
            throw BracketError("no sign change for method " + method_name(pfun.method()) +
                               " at a = " + std::to_string(a.value()) +
                               " after 60 bracket expansions");
        }
        const double width = hi - lo;
        lo -= width;
        hi += width;
        flo = f(lo);
        fhi = f(hi);
    }
    // A monotone p-value function can be constant equal to a over a whole
    // interval (well-separated trials, p flat at machine precision). The
    // canonical inverse is then the midpoint of the zero plateau; locate its
    // edges by bisection against the nearest points with nonzero residual.
    auto plateau_midpoint = [&](double inside) {
        double l_out = std::min(lo, inside);
        double r_out = std::max(hi, inside);
        const double width = std::max(r_out - l_out, 1.0);
        for (int i = 0; i < 60 && f(l_out) == 0.0; ++i) l_out -= width;
        for (int i = 0; i < 60 && f(r_out) == 0.0; ++i) r_out += width;
        double l_in = inside;
        for (int i = 0; i < 100 && l_in - l_out > 1e-12 * (1.0 + std::fabs(l_in)); ++i) {
            const double mid = 0.5 * (l_out + l_in);
            (f(mid) == 0.0 ? l_in : l_out) = mid;
        }
        double r_in = inside;
        for (int i = 0; i < 100 && r_out - r_in > 1e-12 * (1.0 + std::fabs(r_in)); ++i) {
            const double mid = 0.5 * (r_in + r_out);
            (f(mid) == 0.0 ? r_in : r_out) = mid;
        }
        return 0.5 * (l_in + r_in);
    };

    if (flo == 0.0) return plateau_midpoint(lo);
    if (fhi == 0.0) return plateau_midpoint(hi);

    // Brent: bisection safeguarded by secant / inverse quadratic steps.
    double b = hi, fb = fhi;     // current best
    double a_ = lo, fa = flo;    // other bracket end
    double c = a_, fc = fa;      // previous iterate
    double d = b - a_, e = d;
    constexpr double kResidualTol = 1e-10;
    for (int iter = 0; iter < 200; ++iter) {
        if (fb * fc > 0.0) {
            c = a_;
            fc = fa;
            d = e = b - a_;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a_ = b; b = c; c = a_;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 1e-10 * (1.0 + std::fabs(b)) * 0.5;
        const double xm = 0.5 * (c - b);
        if (fb == 0.0) return plateau_midpoint(b);
        if (std::fabs(xm) <= tol && std::fabs(fb) <= kResidualTol) {
            return b;
        }
        if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a_ == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a_) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a_ = b;
        fa = fb;
        b += (std::fabs(d) > tol) ? d : (xm > 0.0 ? tol : -tol);
        fb = f(b);
    }
    return b;
}

AnalysisResult analyze(const AnalysisRequest& raw_request) {
    const AnalysisRequest request = validate(raw_request);
    AnalysisResult result;
    result.request = request;

    for (size_t i = 0; i < request.trials.size(); ++i) {
        const TrialResult& t = request.trials[i];
        TrialRow row;
        row.label = "Trial " + std::to_string(i + 1);
        row.median_estimate = t.estimate;
        for (double level : request.levels) {
            const double z = norm_quantile(0.5 * (1.0 + level));
            row.intervals[level] = {t.estimate - z * t.std_err, t.estimate + z * t.std_err};
        }
        row.p_at_null =
            combine::p_one_sided(t, request.null_value, request.alternative).value();
        result.trials.push_back(std::move(row));
    }

    for (CombinedMethod method : kAllMethods) {
        MethodResult m;
        m.method = method;
        m.median_estimate = mu_combined(method, request.trials, 0.5, request.alternative);
        for (double level : request.levels) {
            const double a_low = 0.5 * (1.0 - level);
            const double end1 = mu_combined(method, request.trials, a_low, request.alternative);
            const double end2 =
                mu_combined(method, request.trials, 1.0 - a_low, request.alternative);
            m.intervals[level] = {std::min(end1, end2), std::max(end1, end2)};
        }
        m.p_at_null = combine::p_combined(method, request.trials, request.null_value,
                                          request.alternative)
                          .value();
        result.methods.push_back(std::move(m));
    }
    return result;
}

CurveGrid curves(const AnalysisRequest& raw_request, double from, double to, int points) {
    const AnalysisRequest request = validate(raw_request);
    if (!(from < to) || points < 2) {
        throw std::invalid_argument("curve grid needs from < to and points >= 2");
    }
    CurveGrid grid;
    grid.mu_grid.resize(points);
    const double step = (to - from) / (points - 1);
    for (int j = 0; j < points; ++j) {
        grid.mu_grid[j] = from + step * j;
    }
    grid.mu_grid.back() = to;

    auto add_column = [&grid](const std::string& label, auto&& eval) {
        std::vector<double> one_sided(grid.mu_grid.size());
        std::vector<double> central(grid.mu_grid.size());
        for (size_t j = 0; j < grid.mu_grid.size(); ++j) {
            const Probability p = eval(grid.mu_grid[j]);
            one_sided[j] = p.value();
            central[j] = combine::centrality(p).value();
        }
        grid.labels.push_back(label);
        grid.one_sided.push_back(std::move(one_sided));
        grid.centrality.push_back(std::move(central));
    };

    for (size_t i = 0; i < request.trials.size(); ++i) {
        const TrialResult trial = request.trials[i];
        add_column("trial" + std::to_string(i + 1), [trial, &request](double mu) {
            return combine::p_one_sided(trial, mu, request.alternative);
        });
    }
    for (CombinedMethod method : kAllMethods) {
        add_column(method_name(method), [method, &request](double mu) {
            return combine::p_combined(method, request.trials, mu, request.alternative);
        });
    }
    return grid;
}

}  // namespace pfcomb::estimate
