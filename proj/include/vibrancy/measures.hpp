#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vibrancy/calendar.hpp"
#include "vibrancy/taxonomy.hpp"
#include "vibrancy/types.hpp"

namespace vibrancy::measures {

// Whole-window vibrancy and crime aggregates for one block group, plus the
// yearly/monthly series the trend analyses consume.
struct BlockGroupMeasures {
    std::string blockgroup_id;
    std::int64_t n_events = 0;
    std::int64_t n_spontaneous = 0;
    std::int64_t n_regular = 0;
    std::optional<double> spontaneous_proportion;  // undefined when n_events == 0
    std::int64_t crime_total = 0;
    std::int64_t crime_violent = 0;
    std::int64_t crime_nonviolent = 0;
    std::int64_t crime_vice = 0;
    std::optional<double> log_crime_total;  // ln(count), undefined when 0
    std::optional<double> log_crime_violent;
    std::optional<double> log_crime_nonviolent;
    std::optional<double> log_crime_vice;
    std::map<int, std::int64_t> yearly_events;
    std::map<int, std::int64_t> yearly_spontaneous;
    std::map<int, std::int64_t> yearly_crimes;
    std::map<int, std::int64_t> yearly_crimes_violent;
    std::map<int, std::int64_t> yearly_crimes_nonviolent;
    std::map<int, std::int64_t> yearly_crimes_vice;
    std::map<std::pair<int, int>, std::int64_t> monthly_events;
};

struct MeasureTable {
    std::vector<BlockGroupMeasures> rows;  // sorted by blockgroup_id
    std::size_t dropped_unassigned_events = 0;
    std::size_t dropped_unassigned_crimes = 0;

    const BlockGroupMeasures* find(const std::string& id) const;
};

// Aggregates assigned permits and crimes over the study windows. The row set
// is the union of profile ids and assigned ids; yearly maps carry an entry
// (possibly zero) for every year intersecting the relevant window. Events
// with no assignment are dropped and counted.
MeasureTable build_measure_table(const std::vector<PointEvent>& permits,
                                 const std::vector<std::optional<std::string>>& permit_assignment,
                                 const std::vector<PointEvent>& crimes,
                                 const std::vector<std::optional<std::string>>& crime_assignment,
                                 const std::vector<NeighborhoodProfile>& profiles,
                                 const EventTaxonomy& event_taxonomy,
                                 const CrimeTaxonomy& crime_taxonomy,
                                 const DateWindow& permit_window, const DateWindow& crime_window);

// City-wide count per calendar year for events passing `filter`; every year
// intersecting the window is present, zero-filled.
std::map<int, std::int64_t> yearly_series(const std::vector<PointEvent>& events,
                                          const std::function<bool(const PointEvent&)>& filter,
                                          const DateWindow& window);

// Years fully contained in the window (partial first/last years excluded),
// the year set trend fits run on.
std::vector<int> complete_years(const DateWindow& window);

// Pearson correlation matrix over the supplied columns. Undefined values
// (NaN) are skipped pairwise; constant columns yield NaN entries. Diagonal is
// exactly 1 and the matrix is symmetric by construction.
struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> r;
};

CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& columns);

}  // namespace vibrancy::measures
