#include "pfcomb/statdist.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pfcomb::statdist {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw std::domain_error(std::string(what) + " must be finite");
    }
}

// Mills-ratio asymptotic for log Phi(z), z << 0:
//   Phi(z) = phi(z)/(-z) * [1 - 1/z^2 + 3/z^4 - 15/z^6 + ...]
double logcdf_tail(double z) {
    const double zsq = z * z;
    double term = 1.0;
    double sum = 0.0;
    for (int k = 1; k < 40; ++k) {
        term *= -(2.0 * k - 1.0) / zsq;
        if (std::fabs(term) < 1e-18) break;
        sum += term;
    }
    return -0.5 * zsq - kLogSqrt2Pi - std::log(-z) + std::log1p(sum);
}

// Regularized lower incomplete gamma P(a, x) by power series (x < a + 1).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction
// (modified Lentz), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Returns {P(a,x), Q(a,x)} with P + Q = 1 exact to rounding.
struct GammaPq {
    double p;
    double q;
};

GammaPq gamma_pq(double a, double x) {
    if (x <= 0.0) return {0.0, 1.0};
    if (x < a + 1.0) {
        const double p = gamma_p_series(a, x);
        return {p, 1.0 - p};
    }
    const double q = gamma_q_cf(a, x);
    return {1.0 - q, q};
}

double clamp01(double p) {
    if (p < 0.0) return 0.0;
    if (p > 1.0) return 1.0;
    return p;
}

}  // namespace

Probability::Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::domain_error("probability must lie in [0, 1], got " +
                                std::to_string(value));
    }
}

double norm_pdf(double z) {
    require_finite(z, "norm_pdf argument");
    return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

Probability norm_cdf(double z) {
    require_finite(z, "norm_cdf argument");
    return clamp01(0.5 * std::erfc(-z * kInvSqrt2));
}

double norm_logcdf(double z) {
    require_finite(z, "norm_logcdf argument");
    if (z > -37.0) {
        // erfc stays away from underflow down to here
        return std::log(0.5 * std::erfc(-z * kInvSqrt2));
    }
    return logcdf_tail(z);
}

double norm_log_sf(double z) {
    return norm_logcdf(-z);
}

double norm_quantile(Probability p) {
    // Wichura's algorithm AS241 (PPND16), Appl. Statist. 37 (1988) 477-484.
    const double u = p.value();
    if (u <= 0.0 || u >= 1.0) {
        throw std::domain_error("norm_quantile requires 0 < p < 1");
    }
    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                    3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                  4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                  2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                  5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

Probability chisq_cdf(double x, int df) {
    if (df < 1) throw std::domain_error("chisq_cdf requires df >= 1");
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    require_finite(x, "chisq_cdf argument");
    if (x < 0.0) throw std::domain_error("chisq_cdf requires x >= 0");
    return clamp01(gamma_pq(0.5 * df, 0.5 * x).p);
}

Probability chisq_sf(double x, int df) {
    if (df < 1) throw std::domain_error("chisq_sf requires df >= 1");
    if (x == std::numeric_limits<double>::infinity()) return 0.0;
    require_finite(x, "chisq_sf argument");
    if (x < 0.0) throw std::domain_error("chisq_sf requires x >= 0");
    return clamp01(gamma_pq(0.5 * df, 0.5 * x).q);
}

double chisq_quantile(Probability p, int df) {
    if (df < 1) throw std::domain_error("chisq_quantile requires df >= 1");
    const double target = p.value();
    if (target >= 1.0) {
        throw std::domain_error("chisq_quantile requires p < 1");
    }
    if (target == 0.0) return 0.0;

    // Wilson-Hilferty starting point
    const double n = df;
    const double z = norm_quantile(target);
    const double h = 2.0 / (9.0 * n);
    double x = n * std::pow(1.0 - h + z * std::sqrt(h), 3);
    if (!(x > 0.0)) x = 0.5 * n;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
        const double cdf = chisq_cdf(x, df);
        const double err = cdf - target;
        if (err > 0.0) hi = x; else lo = x;
        if (std::fabs(err) < 1e-15 * (target + 1e-300)) break;
        // chi-squared density at x
        const double logpdf = (0.5 * n - 1.0) * std::log(x) - 0.5 * x -
                              0.5 * n * std::log(2.0) - std::lgamma(0.5 * n);
        const double pdf = std::exp(logpdf);
        double next = (pdf > 0.0) ? x - err / pdf : x;
        if (!(next > lo && next < hi)) {
            next = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) < 1e-14 * (1.0 + x) && std::fabs(err) < 1e-12) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

Probability irwin_hall_cdf(double s, int k) {
    if (k < 1) throw std::domain_error("irwin_hall_cdf requires k >= 1");
    if (k > 25) {
        throw std::domain_error(
            "irwin_hall_cdf limited to k <= 25 (alternating sum cancels beyond)");
    }
    require_finite(s, "irwin_hall_cdf argument");
    if (s <= 0.0) return 0.0;
    if (s >= k) return 1.0;
    if (2.0 * s > k) {
        return 1.0 - irwin_hall_cdf(k - s, k).value();
    }
    // F(s) = (1/k!) sum_{j=0}^{floor(s)} (-1)^j C(k,j) (s-j)^k, Neumaier summed
    double sum = 0.0;
    double comp = 0.0;
    double binom = 1.0;  // C(k, j)
    double sign = 1.0;
    const int jmax = static_cast<int>(s);
    for (int j = 0; j <= jmax; ++j) {
        const double term = sign * binom * std::pow(s - j, k);
        const double t = sum + term;
        if (std::fabs(sum) >= std::fabs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        binom *= static_cast<double>(k - j) / (j + 1);
        sign = -sign;
    }
    sum += comp;
    double factorial = 1.0;
    for (int j = 2; j <= k; ++j) factorial *= j;
    return clamp01(sum / factorial);
}

}  // namespace pfcomb::statdist
