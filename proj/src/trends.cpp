#include "vibrancy/trends.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "vibrancy/errors.hpp"
#include "vibrancy/special.hpp"

namespace vibrancy::trends {

const char* to_string(TrendClass c) {
    switch (c) {
        case TrendClass::Positive: return "positive";
        case TrendClass::Negative: return "negative";
        default: return "none";
    }
}

TrendResult fit_yearly_trend(const std::vector<std::pair<int, double>>& series, double alpha) {
    std::set<int> distinct;
    for (const auto& [year, value] : series) {
        (void)value;
        distinct.insert(year);
    }
    if (distinct.size() < 3) {
        throw InvalidInput("fit_yearly_trend: need at least 3 distinct years, got " +
                           std::to_string(distinct.size()));
    }
    const double n = static_cast<double>(series.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [year, value] : series) {
        mean_x += year;
        mean_y += value;
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, sxy = 0.0, syy = 0.0, scale = 0.0;
    for (const auto& [year, value] : series) {
        const double dx = year - mean_x;
        const double dy = value - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        scale = std::max(scale, std::fabs(value));
    }

    TrendResult out;
    out.n_years = static_cast<int>(series.size());

    const double tss_floor = 1e-24 * std::max(1.0, scale * scale);
    if (syy <= tss_floor) {
        // Constant series.
        out.slope = 0.0;
        out.p_value = 1.0;
        out.classification = TrendClass::None;
        return out;
    }
    out.slope = sxy / sxx;
    const double rss = std::max(0.0, syy - out.slope * sxy);
    const double df = n - 2.0;
    if (rss <= 1e-12 * syy) {
        // Perfect line with nonzero slope.
        out.slope_se = 0.0;
        out.t_stat = out.slope > 0.0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
    } else {
        out.slope_se = std::sqrt(rss / df / sxx);
        out.t_stat = out.slope / out.slope_se;
        out.p_value = t_two_sided_p(out.t_stat, df);
    }
    if (out.p_value < alpha && out.slope > 0.0) out.classification = TrendClass::Positive;
    else if (out.p_value < alpha && out.slope < 0.0) out.classification = TrendClass::Negative;
    else out.classification = TrendClass::None;
    return out;
}

ClassifyAllResult classify_all(
    const std::map<std::string, std::map<std::string, std::vector<std::pair<int, double>>>>&
        series_by_unit,
    double alpha) {
    ClassifyAllResult out;
    for (const auto& [id, measures] : series_by_unit) {
        for (const auto& [measure, series] : measures) {
            std::set<int> distinct;
            for (const auto& [year, value] : series) {
                (void)value;
                distinct.insert(year);
            }
            if (distinct.size() < 3) continue;
            TrendResult r = fit_yearly_trend(series, alpha);
            r.blockgroup_id = id;
            r.measure = measure;
            switch (r.classification) {
                case TrendClass::Positive: ++out.summary.positive[measure]; break;
                case TrendClass::Negative: ++out.summary.negative[measure]; break;
                default: ++out.summary.none[measure]; break;
            }
            out.results.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace vibrancy::trends
