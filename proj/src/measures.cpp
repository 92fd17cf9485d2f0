#include "vibrancy/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vibrancy/errors.hpp"

namespace vibrancy::measures {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const BlockGroupMeasures* MeasureTable::find(const std::string& id) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), id,
                               [](const BlockGroupMeasures& m, const std::string& key) {
                                   return m.blockgroup_id < key;
                               });
    if (it == rows.end() || it->blockgroup_id != id) return nullptr;
    return &*it;
}

namespace {

void zero_fill_years(std::map<int, std::int64_t>& series, const DateWindow& window) {
    for (int y = window.begin.year; y <= window.end.year; ++y) series.emplace(y, 0);
}

}  // namespace

MeasureTable build_measure_table(const std::vector<PointEvent>& permits,
                                 const std::vector<std::optional<std::string>>& permit_assignment,
                                 const std::vector<PointEvent>& crimes,
                                 const std::vector<std::optional<std::string>>& crime_assignment,
                                 const std::vector<NeighborhoodProfile>& profiles,
                                 const EventTaxonomy& event_taxonomy,
                                 const CrimeTaxonomy& crime_taxonomy,
                                 const DateWindow& permit_window, const DateWindow& crime_window) {
    if (permit_assignment.size() != permits.size() || crime_assignment.size() != crimes.size()) {
        throw InvalidInput("build_measure_table: assignment vectors must parallel the events");
    }

    std::set<std::string> ids;
    for (const auto& p : profiles) ids.insert(p.blockgroup_id);
    for (const auto& a : permit_assignment) {
        if (a) ids.insert(*a);
    }
    for (const auto& a : crime_assignment) {
        if (a) ids.insert(*a);
    }

    MeasureTable table;
    table.rows.reserve(ids.size());
    std::map<std::string, std::size_t> index;
    for (const auto& id : ids) {
        index.emplace(id, table.rows.size());
        BlockGroupMeasures m;
        m.blockgroup_id = id;
        zero_fill_years(m.yearly_events, permit_window);
        zero_fill_years(m.yearly_spontaneous, permit_window);
        zero_fill_years(m.yearly_crimes, crime_window);
        zero_fill_years(m.yearly_crimes_violent, crime_window);
        zero_fill_years(m.yearly_crimes_nonviolent, crime_window);
        zero_fill_years(m.yearly_crimes_vice, crime_window);
        table.rows.push_back(std::move(m));
    }

    for (std::size_t i = 0; i < permits.size(); ++i) {
        if (!permit_assignment[i]) {
            ++table.dropped_unassigned_events;
            continue;
        }
        BlockGroupMeasures& m = table.rows[index.at(*permit_assignment[i])];
        const PointEvent& ev = permits[i];
        ++m.n_events;
        ++m.yearly_events[ev.date.year];
        ++m.monthly_events[{ev.date.year, ev.date.month}];
        if (event_taxonomy.classify(ev.raw_type) == EventCategory::Spontaneous) {
            ++m.n_spontaneous;
            ++m.yearly_spontaneous[ev.date.year];
        } else {
            ++m.n_regular;
        }
    }

    for (std::size_t i = 0; i < crimes.size(); ++i) {
        if (!crime_assignment[i]) {
            ++table.dropped_unassigned_crimes;
            continue;
        }
        BlockGroupMeasures& m = table.rows[index.at(*crime_assignment[i])];
        const PointEvent& ev = crimes[i];
        ++m.crime_total;
        ++m.yearly_crimes[ev.date.year];
        switch (crime_taxonomy.classify(ev.raw_type)) {
            case CrimeCategory::Violent:
                ++m.crime_violent;
                ++m.yearly_crimes_violent[ev.date.year];
                break;
            case CrimeCategory::NonViolent:
                ++m.crime_nonviolent;
                ++m.yearly_crimes_nonviolent[ev.date.year];
                break;
            case CrimeCategory::Vice:
                ++m.crime_vice;
                ++m.yearly_crimes_vice[ev.date.year];
                break;
            case CrimeCategory::Other:
                break;
        }
    }

    for (auto& m : table.rows) {
        if (m.n_events > 0) {
            m.spontaneous_proportion =
                static_cast<double>(m.n_spontaneous) / static_cast<double>(m.n_events);
        }
        auto log_or_none = [](std::int64_t count) -> std::optional<double> {
            if (count <= 0) return std::nullopt;
            return std::log(static_cast<double>(count));
        };
        m.log_crime_total = log_or_none(m.crime_total);
        m.log_crime_violent = log_or_none(m.crime_violent);
        m.log_crime_nonviolent = log_or_none(m.crime_nonviolent);
        m.log_crime_vice = log_or_none(m.crime_vice);
    }
    return table;
}

std::map<int, std::int64_t> yearly_series(const std::vector<PointEvent>& events,
                                          const std::function<bool(const PointEvent&)>& filter,
                                          const DateWindow& window) {
    std::map<int, std::int64_t> series;
    zero_fill_years(series, window);
    for (const auto& ev : events) {
        if (!window.contains(ev.date)) continue;
        if (filter && !filter(ev)) continue;
        ++series[ev.date.year];
    }
    return series;
}

std::vector<int> complete_years(const DateWindow& window) {
    std::vector<int> years;
    for (int y = window.begin.year; y <= window.end.year; ++y) {
        const bool full_start = window.begin <= Date{y, 1, 1};
        const bool full_end = Date{y, 12, 31} <= window.end;
        if (full_start && full_end) years.push_back(y);
    }
    return years;
}

CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) {
        throw InvalidInput("correlation_matrix: names and columns must align");
    }
    const std::size_t k = columns.size();
    std::size_t n = k == 0 ? 0 : columns[0].size();
    for (const auto& c : columns) {
        if (c.size() != n) throw InvalidInput("correlation_matrix: ragged columns");
    }
    if (n < 2) throw InvalidInput("correlation_matrix: need at least 2 rows");

    CorrelationMatrix out;
    out.names = names;
    out.r.assign(k, std::vector<double>(k, kNaN));
    for (std::size_t i = 0; i < k; ++i) out.r[i][i] = 1.0;

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            // Pairwise-complete Pearson correlation.
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            std::size_t m = 0;
            for (std::size_t row = 0; row < n; ++row) {
                const double x = columns[i][row];
                const double y = columns[j][row];
                if (std::isnan(x) || std::isnan(y)) continue;
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
                ++m;
            }
            double value = kNaN;
            if (m >= 2) {
                const double mn = static_cast<double>(m);
                const double vx = sxx - sx * sx / mn;
                const double vy = syy - sy * sy / mn;
                const double cxy = sxy - sx * sy / mn;
                if (vx > 0.0 && vy > 0.0) value = cxy / std::sqrt(vx * vy);
            }
            out.r[i][j] = value;
            out.r[j][i] = value;
        }
    }
    return out;
}

}  // namespace vibrancy::measures
