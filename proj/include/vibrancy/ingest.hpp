#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vibrancy/calendar.hpp"
#include "vibrancy/types.hpp"

namespace vibrancy::ingest {

// Default study windows; both configurable through RunConfig.
DateWindow default_crime_window();   // 2006-01-01 .. 2015-12-31
DateWindow default_permit_window();  // 2006-01-01 .. 2016-05-31

struct ParseStats {
    std::size_t rows = 0;            // data rows seen
    std::size_t kept = 0;            // records produced
    std::size_t skipped_window = 0;  // rows outside the study window
};

struct EventParseResult {
    std::vector<PointEvent> events;
    ParseStats stats;
};

// permits.csv: `date,lat,lon,event_type` or `date,blockgroup_id,event_type`.
// Consecutive-day rows stay separate events. Malformed dates/coordinates raise
// ParseError with the line number; out-of-window rows are counted and skipped.
EventParseResult parse_permits(const std::string& path, const DateWindow& window);

// crimes.csv: `date,time,lat,lon,crime_type`; time may be empty.
EventParseResult parse_crimes(const std::string& path, const DateWindow& window);

// blockgroups.geojson: RFC 7946 FeatureCollection of Polygon/MultiPolygon
// features carrying property "id". Rings must be closed (first == last, at
// least 4 vertices); duplicate ids are an error. Area comes from an optional
// "area_sqm" property or the equirectangular shoelace formula (holes
// subtracted).
std::vector<BlockGroup> parse_blockgroups(const std::string& path);

// acs.csv + landuse.csv joined by blockgroup_id. Land-use proportions are
// category lot area over total lot area; block groups with no lots get zero
// for every land-use field.
std::vector<NeighborhoodProfile> parse_profiles(const std::string& acs_path,
                                                const std::string& landuse_path);

struct AssignResult {
    // Parallel to the input events; nullopt when outside every block group.
    std::vector<std::optional<std::string>> blockgroup_ids;
    std::size_t assigned = 0;
    std::size_t unassigned = 0;
    std::size_t bypassed = 0;  // events that arrived with a blockgroup_id
};

// Point-in-polygon spatial join. Containment ties on shared boundaries go to
// the lexicographically smallest id. Events carrying a blockgroup_id bypass
// the join. Output is independent of event order and of `jobs`.
AssignResult assign_points(const std::vector<PointEvent>& events,
                           const std::vector<BlockGroup>& groups, int jobs = 1);

}  // namespace vibrancy::ingest
