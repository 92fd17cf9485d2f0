#include "vibrancy/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "vibrancy/csv.hpp"
#include "vibrancy/errors.hpp"
#include "vibrancy/geometry.hpp"

namespace vibrancy::ingest {

namespace {

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

[[noreturn]] void row_error(const CsvReader& reader, const std::string& what) {
    throw ParseError(reader.path() + ": " + what + ", line " + std::to_string(reader.line()));
}

Date require_date(const CsvReader& reader, const std::string& text) {
    auto d = parse_date(text);
    if (!d) row_error(reader, "malformed date '" + text + "'");
    return *d;
}

LonLat require_lonlat(const CsvReader& reader, const std::string& lat_text,
                      const std::string& lon_text) {
    auto lat = parse_double(lat_text);
    auto lon = parse_double(lon_text);
    if (!lat) row_error(reader, "malformed latitude '" + lat_text + "'");
    if (!lon) row_error(reader, "malformed longitude '" + lon_text + "'");
    if (*lat < -90.0 || *lat > 90.0) row_error(reader, "latitude out of range");
    if (*lon < -180.0 || *lon > 180.0) row_error(reader, "longitude out of range");
    return LonLat{*lon, *lat};
}

}  // namespace

DateWindow default_crime_window() { return {Date{2006, 1, 1}, Date{2015, 12, 31}}; }
DateWindow default_permit_window() { return {Date{2006, 1, 1}, Date{2016, 5, 31}}; }

EventParseResult parse_permits(const std::string& path, const DateWindow& window) {
    CsvReader reader(path);
    reader.read_header({"date", "event_type"});
    const bool by_id = reader.has_column("blockgroup_id");
    if (!by_id && !(reader.has_column("lat") && reader.has_column("lon"))) {
        throw ParseError(path + ": need either lat,lon or blockgroup_id columns");
    }
    EventParseResult out;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        ++out.stats.rows;
        PointEvent ev;
        ev.kind = EventKind::Permit;
        ev.date = require_date(reader, reader.field(fields, "date"));
        if (!window.contains(ev.date)) {
            ++out.stats.skipped_window;
            continue;
        }
        ev.raw_type = reader.field(fields, "event_type");
        if (by_id) {
            const std::string& bg = reader.field(fields, "blockgroup_id");
            if (bg.empty()) row_error(reader, "empty blockgroup_id");
            ev.blockgroup_id = bg;
        } else {
            LonLat p = require_lonlat(reader, reader.field(fields, "lat"),
                                      reader.field(fields, "lon"));
            ev.lat = p.lat;
            ev.lon = p.lon;
        }
        out.events.push_back(std::move(ev));
        ++out.stats.kept;
    }
    return out;
}

EventParseResult parse_crimes(const std::string& path, const DateWindow& window) {
    CsvReader reader(path);
    reader.read_header({"date", "time", "lat", "lon", "crime_type"});
    EventParseResult out;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        ++out.stats.rows;
        PointEvent ev;
        ev.kind = EventKind::Crime;
        ev.date = require_date(reader, reader.field(fields, "date"));
        if (!window.contains(ev.date)) {
            ++out.stats.skipped_window;
            continue;
        }
        const std::string& time_text = reader.field(fields, "time");
        if (!time_text.empty()) {
            auto t = parse_time(time_text);
            if (!t) row_error(reader, "malformed time '" + time_text + "'");
            ev.time = t;
        }
        LonLat p = require_lonlat(reader, reader.field(fields, "lat"), reader.field(fields, "lon"));
        ev.lat = p.lat;
        ev.lon = p.lon;
        ev.raw_type = reader.field(fields, "crime_type");
        out.events.push_back(std::move(ev));
        ++out.stats.kept;
    }
    return out;
}

namespace {

std::vector<LonLat> read_ring(const nlohmann::json& coords, const std::string& path,
                              const std::string& id) {
    std::vector<LonLat> ring;
    ring.reserve(coords.size());
    for (const auto& v : coords) {
        if (!v.is_array() || v.size() < 2) {
            throw ParseError(path + ": feature '" + id + "' has a malformed coordinate");
        }
        ring.push_back(LonLat{v[0].get<double>(), v[1].get<double>()});
    }
    if (ring.size() < 4) {
        throw ParseError(path + ": feature '" + id + "' has a ring with fewer than 4 vertices");
    }
    if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat) {
        throw ParseError(path + ": feature '" + id + "' has an unclosed ring");
    }
    return ring;
}

}  // namespace

std::vector<BlockGroup> parse_blockgroups(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + std::string(e.what()));
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw ParseError(path + ": expected a GeoJSON FeatureCollection");
    }
    std::vector<BlockGroup> groups;
    std::set<std::string> seen;
    for (const auto& feature : doc["features"]) {
        const auto& props = feature.value("properties", nlohmann::json::object());
        std::string id;
        if (props.contains("id")) {
            id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
        }
        if (id.empty()) throw ParseError(path + ": feature without an 'id' property");
        if (!seen.insert(id).second) throw ParseError(path + ": duplicate block-group id '" + id + "'");

        const auto& geom = feature.value("geometry", nlohmann::json::object());
        const std::string type = geom.value("type", "");
        BlockGroup bg;
        bg.id = id;
        double outer_area = 0.0, hole_area = 0.0;
        auto add_polygon = [&](const nlohmann::json& poly_rings) {
            for (std::size_t r = 0; r < poly_rings.size(); ++r) {
                std::vector<LonLat> ring = read_ring(poly_rings[r], path, id);
                const double a = std::fabs(ring_area_sqm(ring));
                (r == 0 ? outer_area : hole_area) += a;
                bg.rings.push_back(std::move(ring));
            }
        };
        if (type == "Polygon") {
            add_polygon(geom["coordinates"]);
        } else if (type == "MultiPolygon") {
            for (const auto& poly : geom["coordinates"]) add_polygon(poly);
        } else {
            throw ParseError(path + ": feature '" + id + "' has unsupported geometry '" + type + "'");
        }
        if (props.contains("area_sqm")) {
            bg.area_sqm = props["area_sqm"].get<double>();
        } else {
            bg.area_sqm = outer_area - hole_area;
        }
        if (!(bg.area_sqm > 0.0)) {
            throw ParseError(path + ": feature '" + id + "' has non-positive area");
        }
        groups.push_back(std::move(bg));
    }
    return groups;
}

namespace {

const std::vector<std::string>& landuse_categories() {
    static const std::vector<std::string> cats = {"commercial", "residential", "vacant",
                                                  "transportation", "industrial", "park",
                                                  "civic", "other"};
    return cats;
}

double require_fraction(const CsvReader& reader, const std::string& text, const std::string& what) {
    auto v = parse_double(text);
    if (!v || *v < 0.0 || *v > 1.0) {
        throw ParseError(reader.path() + ": " + what + " must be a fraction in [0,1], line " +
                         std::to_string(reader.line()));
    }
    return *v;
}

}  // namespace

std::vector<NeighborhoodProfile> parse_profiles(const std::string& acs_path,
                                                const std::string& landuse_path) {
    // Land-use areas first: blockgroup_id -> per-category area.
    struct LandUse {
        double total = 0.0;
        std::unordered_map<std::string, double> by_category;
    };
    std::unordered_map<std::string, LandUse> landuse;
    {
        CsvReader reader(landuse_path);
        reader.read_header({"blockgroup_id", "area_sqm", "category"});
        std::vector<std::string> fields;
        while (reader.next(fields)) {
            const std::string& bg = reader.field(fields, "blockgroup_id");
            auto area = parse_double(reader.field(fields, "area_sqm"));
            if (!area) row_error(reader, "malformed area_sqm");
            if (*area < 0.0) row_error(reader, "negative area_sqm");
            const std::string& cat = reader.field(fields, "category");
            const auto& cats = landuse_categories();
            if (std::find(cats.begin(), cats.end(), cat) == cats.end()) {
                std::string allowed;
                for (const auto& c : cats) allowed += (allowed.empty() ? "" : ", ") + c;
                throw ParseError(landuse_path + ": unknown land-use category '" + cat +
                                 "' (allowed: " + allowed + "), line " +
                                 std::to_string(reader.line()));
            }
            LandUse& lu = landuse[bg];
            lu.total += *area;
            lu.by_category[cat] += *area;
        }
    }

    std::vector<NeighborhoodProfile> profiles;
    CsvReader reader(acs_path);
    reader.read_header({"blockgroup_id", "population", "prop_white", "prop_black", "prop_asian",
                        "prop_hispanic", "prop_other", "mean_income", "poverty_index"});
    std::vector<std::string> fields;
    std::set<std::string> seen;
    while (reader.next(fields)) {
        NeighborhoodProfile p;
        p.blockgroup_id = reader.field(fields, "blockgroup_id");
        if (p.blockgroup_id.empty()) row_error(reader, "empty blockgroup_id");
        if (!seen.insert(p.blockgroup_id).second) {
            row_error(reader, "duplicate blockgroup_id '" + p.blockgroup_id + "'");
        }
        auto pop = parse_double(reader.field(fields, "population"));
        if (!pop || *pop < 0.0) row_error(reader, "population must be a count >= 0");
        p.population = *pop;
        p.prop_white = require_fraction(reader, reader.field(fields, "prop_white"), "prop_white");
        p.prop_black = require_fraction(reader, reader.field(fields, "prop_black"), "prop_black");
        p.prop_asian = require_fraction(reader, reader.field(fields, "prop_asian"), "prop_asian");
        p.prop_hispanic =
            require_fraction(reader, reader.field(fields, "prop_hispanic"), "prop_hispanic");
        p.prop_other = require_fraction(reader, reader.field(fields, "prop_other"), "prop_other");
        const double race_sum =
            p.prop_white + p.prop_black + p.prop_asian + p.prop_hispanic + p.prop_other;
        if (std::fabs(race_sum - 1.0) > 1e-6) {
            row_error(reader, "race proportions sum to " + std::to_string(race_sum) +
                                  ", expected 1");
        }
        auto income = parse_double(reader.field(fields, "mean_income"));
        if (!income || !(*income > 0.0)) row_error(reader, "mean_income must be positive");
        p.mean_income = *income;
        p.poverty_index =
            require_fraction(reader, reader.field(fields, "poverty_index"), "poverty_index");

        auto lu = landuse.find(p.blockgroup_id);
        if (lu != landuse.end() && lu->second.total > 0.0) {
            const LandUse& use = lu->second;
            p.total_area_sqm = use.total;
            auto frac = [&](const char* cat) {
                auto it = use.by_category.find(cat);
                return it == use.by_category.end() ? 0.0 : it->second / use.total;
            };
            p.prop_commercial = frac("commercial");
            p.prop_residential = frac("residential");
            p.prop_vacant = frac("vacant");
            p.prop_transportation = frac("transportation");
            p.prop_industrial = frac("industrial");
            p.prop_park = frac("park");
            p.prop_civic = frac("civic");
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

AssignResult assign_points(const std::vector<PointEvent>& events,
                           const std::vector<BlockGroup>& groups, int jobs) {
    if (groups.empty()) throw InvalidInput("assign_points: no block groups supplied");
    SpatialIndex index(groups);
    AssignResult out;
    out.blockgroup_ids.resize(events.size());

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const PointEvent& ev = events[i];
            if (ev.blockgroup_id) {
                out.blockgroup_ids[i] = ev.blockgroup_id;
                continue;
            }
            if (!ev.has_coordinates()) {
                throw InvalidInput("assign_points: event without coordinates or blockgroup_id");
            }
            const std::size_t g = index.locate(LonLat{*ev.lon, *ev.lat});
            if (g != SpatialIndex::npos) out.blockgroup_ids[i] = groups[g].id;
        }
    };

    const std::size_t n = events.size();
    if (jobs <= 1 || n < 2048) {
        work(0, n);
    } else {
        const std::size_t workers = std::min<std::size_t>(jobs, 32);
        std::vector<std::thread> threads;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back(work, begin, end);
        }
        for (auto& t : threads) t.join();
    }

    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].blockgroup_id) ++out.bypassed;
        if (out.blockgroup_ids[i]) ++out.assigned;
        else ++out.unassigned;
    }
    return out;
}

}  // namespace vibrancy::ingest
