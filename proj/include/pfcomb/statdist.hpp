#pragma once

namespace pfcomb::statdist {

// Probability value constrained to [0, 1]. Construction rejects NaN and
// out-of-range inputs so that downstream formulas never see an invalid p.
class Probability {
public:
    Probability(double value);  // throws std::domain_error outside [0, 1]

    double value() const { return value_; }
    operator double() const { return value_; }

private:
    double value_;
};

// Standard normal density.
double norm_pdf(double z);

// Standard normal CDF, absolute error below 1e-15 (erfc based, with an
// asymptotic tail expansion where erfc would lose accuracy).
Probability norm_cdf(double z);

// log of the standard normal CDF, usable far into the lower tail where the
// CDF itself underflows (z around -4e4 and beyond still returns finite).
double norm_logcdf(double z);

// log of the standard normal survival function, i.e. log(1 - Phi(z)).
double norm_log_sf(double z);

// Standard normal quantile (AS241), relative error about 1e-16.
// Requires 0 < p < 1; the quantile is infinite at the endpoints.
double norm_quantile(Probability p);

// Chi-squared CDF/survival for df >= 1 via the regularized incomplete gamma
// function (series / continued fraction switch). Absolute error ~1e-14.
Probability chisq_cdf(double x, int df);
Probability chisq_sf(double x, int df);

// Chi-squared quantile for 0 <= p < 1 (Wilson-Hilferty start, safeguarded
// Newton refinement). chisq_cdf(chisq_quantile(p, df), df) = p to ~1e-12.
double chisq_quantile(Probability p, int df);

// CDF of the sum of k independent Uniform(0,1) variables, k in [1, 25].
// The alternating binomial sum loses all precision for larger k, so those
// are rejected. The upper half is evaluated by reflection, which keeps
// irwin_hall_cdf(s, k) + irwin_hall_cdf(k - s, k) = 1 exact.
Probability irwin_hall_cdf(double s, int k);

}  // namespace pfcomb::statdist
