#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vibrancy/calendar.hpp"

namespace vibrancy {

enum class EventKind { Permit, Crime };

// A dated, typed point record: one block-party permit or one reported crime.
// Carries either WGS84 coordinates or a pre-resolved block-group id.
struct PointEvent {
    Date date;
    std::optional<TimeOfDay> time;
    std::optional<double> lat;
    std::optional<double> lon;
    std::optional<std::string> blockgroup_id;
    std::string raw_type;
    EventKind kind = EventKind::Permit;

    bool has_coordinates() const { return lat.has_value() && lon.has_value(); }
};

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

// Census block group: one or more closed rings (lon/lat vertices, first == last)
// plus its land area in square meters.
struct BlockGroup {
    std::string id;
    std::vector<std::vector<LonLat>> rings;
    double area_sqm = 0.0;
};

// Per-block-group covariates: demographics, economics and land-use mix.
struct NeighborhoodProfile {
    std::string blockgroup_id;
    double population = 0.0;
    double prop_white = 0.0;
    double prop_black = 0.0;
    double prop_asian = 0.0;
    double prop_hispanic = 0.0;
    double prop_other = 0.0;
    double mean_income = 0.0;
    double poverty_index = 0.0;  // 0 = poorest, 1 = wealthiest
    double total_area_sqm = 0.0;
    double prop_commercial = 0.0;
    double prop_residential = 0.0;
    double prop_vacant = 0.0;
    double prop_transportation = 0.0;
    double prop_industrial = 0.0;
    double prop_park = 0.0;
    double prop_civic = 0.0;
};

}  // namespace vibrancy
