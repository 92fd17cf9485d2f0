#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vibrancy::trends {

enum class TrendClass { Positive, Negative, None };

const char* to_string(TrendClass c);

struct TrendResult {
    std::string blockgroup_id;
    std::string measure;
    double slope = 0.0;     // units per year
    double slope_se = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    TrendClass classification = TrendClass::None;
    int n_years = 0;
};

// Simple linear regression of value on centered year. Needs at least three
// distinct years. A perfect line (zero residual variance) gets p = 0 when the
// slope is nonzero and p = 1 otherwise.
TrendResult fit_yearly_trend(const std::vector<std::pair<int, double>>& series,
                             double alpha = 0.05);

struct TrendSummary {
    std::map<std::string, std::int64_t> positive;
    std::map<std::string, std::int64_t> negative;
    std::map<std::string, std::int64_t> none;
};

// Fits one trend per (block group, measure) series; series with fewer than
// three defined years are skipped. Returns results plus per-measure class
// counts.
struct ClassifyAllResult {
    std::vector<TrendResult> results;
    TrendSummary summary;
};

// series keyed by blockgroup_id, each a (year, value) list.
ClassifyAllResult classify_all(
    const std::map<std::string, std::map<std::string, std::vector<std::pair<int, double>>>>&
        series_by_unit,
    double alpha = 0.05);

}  // namespace vibrancy::trends
