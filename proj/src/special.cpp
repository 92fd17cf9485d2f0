#include "vibrancy/special.hpp"

#include <cmath>
#include <limits>

#include "vibrancy/errors.hpp"

namespace vibrancy {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-16;
    const double fpmin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double inc_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw InvalidInput("inc_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                       b * std::log1p(-x);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
    if (df <= 0.0) throw InvalidInput("t_two_sided_p: df must be positive");
    if (std::isinf(t)) return 0.0;
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    return inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

double t_cdf(double t, double df) {
    const double p = t_two_sided_p(t, df);
    return t >= 0.0 ? 1.0 - p / 2.0 : p / 2.0;
}

double t_quantile(double p, double df) {
    if (p <= 0.0 || p >= 1.0) throw InvalidInput("t_quantile: p must be in (0,1)");
    if (p == 0.5) return 0.0;
    // Bisection on the CDF; symmetric so solve for the upper half.
    const bool upper = p > 0.5;
    const double target = upper ? p : 1.0 - p;
    double lo = 0.0, hi = 1.0;
    while (t_cdf(hi, df) < target) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (t_cdf(mid, df) < target) lo = mid;
        else hi = mid;
    }
    const double q = 0.5 * (lo + hi);
    return upper ? q : -q;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }

double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / 1.4142135623730950488); }

double digamma(double x) {
    if (x <= 0.0) throw InvalidInput("digamma: x must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double f = 1.0 / (x * x);
    result += std::log(x) - 0.5 / x -
              f * (1.0 / 12.0 -
                   f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))));
    return result;
}

double trigamma(double x) {
    if (x <= 0.0) throw InvalidInput("trigamma: x must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double f = 1.0 / (x * x);
    result += 1.0 / x + f / 2.0 +
              (f / x) * (1.0 / 6.0 - f * (1.0 / 30.0 - f * (1.0 / 42.0 - f * (1.0 / 30.0))));
    return result;
}

}  // namespace vibrancy
