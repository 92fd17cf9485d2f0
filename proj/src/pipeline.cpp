#include "vibrancy/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "vibrancy/csv.hpp"
#include "vibrancy/glm.hpp"
#include "vibrancy/measures.hpp"
#include "vibrancy/psm.hpp"
#include "vibrancy/taxonomy.hpp"
#include "vibrancy/trends.hpp"

namespace vibrancy::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double value, const char* spec = "%.10g") {
    if (std::isnan(value)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, value);
    return buf;
}

double parse_or_nan(const std::string& text) {
    if (text.empty()) return kNaN;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return kNaN;
    return v;
}

void require_input(const std::string& path, const std::string& what) {
    if (path.empty()) throw MissingFile("no " + what + " path configured");
    if (!fs::exists(path)) throw MissingFile(what + " file not found: " + path);
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw MissingFile("missing " + path.string() + "; run `vibrancy " + producer + "` first");
    }
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

DateWindow parse_window(const nlohmann::json& arr, const std::string& which) {
    if (!arr.is_array() || arr.size() != 2) {
        throw ParseError("config: window '" + which + "' must be [begin, end]");
    }
    auto begin = parse_date(arr[0].get<std::string>());
    auto end = parse_date(arr[1].get<std::string>());
    if (!begin || !end || *end < *begin) {
        throw ParseError("config: window '" + which + "' has invalid dates");
    }
    return {*begin, *end};
}

std::map<std::string, double> parse_coefs(const nlohmann::json& obj) {
    std::map<std::string, double> out;
    for (auto it = obj.begin(); it != obj.end(); ++it) out[it.key()] = it.value().get<double>();
    return out;
}

synth::CityConfig parse_synth_config(const nlohmann::json& doc) {
    synth::CityConfig c;
    c.grid_rows = doc.value("grid_rows", c.grid_rows);
    c.grid_cols = doc.value("grid_cols", c.grid_cols);
    c.seed = doc.value("seed", c.seed);
    c.first_year = doc.value("first_year", c.first_year);
    c.last_year = doc.value("last_year", c.last_year);
    c.origin_lon = doc.value("origin_lon", c.origin_lon);
    c.origin_lat = doc.value("origin_lat", c.origin_lat);
    c.cell_deg = doc.value("cell_deg", c.cell_deg);
    c.log_income_mean = doc.value("log_income_mean", c.log_income_mean);
    c.log_income_sd = doc.value("log_income_sd", c.log_income_sd);
    c.log_population_mean = doc.value("log_population_mean", c.log_population_mean);
    c.log_population_sd = doc.value("log_population_sd", c.log_population_sd);
    c.poverty_income_loading = doc.value("poverty_income_loading", c.poverty_income_loading);
    if (doc.contains("race_alpha")) c.race_alpha = doc["race_alpha"].get<std::vector<double>>();
    if (doc.contains("landuse_alpha")) {
        c.landuse_alpha = doc["landuse_alpha"].get<std::vector<double>>();
    }
    c.event_intercept = doc.value("event_intercept", c.event_intercept);
    if (doc.contains("event_coefs")) c.event_coefs = parse_coefs(doc["event_coefs"]);
    c.spont_intercept = doc.value("spont_intercept", c.spont_intercept);
    if (doc.contains("spont_coefs")) c.spont_coefs = parse_coefs(doc["spont_coefs"]);
    c.treat_intercept = doc.value("treat_intercept", c.treat_intercept);
    if (doc.contains("treat_coefs")) c.treat_coefs = parse_coefs(doc["treat_coefs"]);
    c.crime_intercept = doc.value("crime_intercept", c.crime_intercept);
    if (doc.contains("crime_coefs")) c.crime_coefs = parse_coefs(doc["crime_coefs"]);
    c.tau = doc.value("tau", c.tau);
    c.noise = doc.value("noise", c.noise);
    c.theta = doc.value("theta", c.theta);
    c.frac_event_trend_pos = doc.value("frac_event_trend_pos", c.frac_event_trend_pos);
    c.frac_event_trend_neg = doc.value("frac_event_trend_neg", c.frac_event_trend_neg);
    c.event_trend_mag = doc.value("event_trend_mag", c.event_trend_mag);
    c.frac_spont_trend_pos = doc.value("frac_spont_trend_pos", c.frac_spont_trend_pos);
    c.frac_spont_trend_neg = doc.value("frac_spont_trend_neg", c.frac_spont_trend_neg);
    c.spont_trend_mag = doc.value("spont_trend_mag", c.spont_trend_mag);
    c.frac_crime_trend_pos = doc.value("frac_crime_trend_pos", c.frac_crime_trend_pos);
    c.frac_crime_trend_neg = doc.value("frac_crime_trend_neg", c.frac_crime_trend_neg);
    c.crime_trend_mag = doc.value("crime_trend_mag", c.crime_trend_mag);
    c.warm_month_multiplier = doc.value("warm_month_multiplier", c.warm_month_multiplier);
    c.permits_by_blockgroup = doc.value("permits_by_blockgroup", c.permits_by_blockgroup);
    return c;
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("config file not found: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + std::string(e.what()));
    }
    RunConfig config;
    config.schema_version = doc.value("schema_version", 1);
    if (config.schema_version != 1) {
        throw ParseError(path + ": unsupported schema_version " +
                         std::to_string(config.schema_version));
    }
    if (doc.contains("inputs")) {
        const auto& inputs = doc["inputs"];
        config.permits_path = inputs.value("permits", "");
        config.crimes_path = inputs.value("crimes", "");
        config.blockgroups_path = inputs.value("blockgroups", "");
        config.acs_path = inputs.value("acs", "");
        config.landuse_path = inputs.value("landuse", "");
    }
    if (doc.contains("windows")) {
        const auto& w = doc["windows"];
        if (w.contains("permits")) config.permit_window = parse_window(w["permits"], "permits");
        if (w.contains("crimes")) config.crime_window = parse_window(w["crimes"], "crimes");
    }
    if (doc.contains("whitelists")) {
        config.event_types_path = doc["whitelists"].value("events", "");
        config.crime_types_path = doc["whitelists"].value("crimes", "");
    }
    config.out_dir = doc.value("out", config.out_dir);
    config.alpha = doc.value("alpha", config.alpha);
    config.caliper = doc.value("caliper", config.caliper);
    config.match_on_logit = doc.value("match_on_logit", config.match_on_logit);
    config.seed = doc.value("seed", config.seed);
    config.jobs = doc.value("jobs", config.jobs);
    if (doc.contains("synth")) config.synth_config = parse_synth_config(doc["synth"]);
    return config;
}

namespace {

measures::EventTaxonomy event_taxonomy_for(const RunConfig& config) {
    if (config.event_types_path.empty()) return measures::EventTaxonomy::defaults();
    require_input(config.event_types_path, "event whitelist");
    return measures::EventTaxonomy::from_json_file(config.event_types_path);
}

measures::CrimeTaxonomy crime_taxonomy_for(const RunConfig& config) {
    if (config.crime_types_path.empty()) return measures::CrimeTaxonomy::defaults();
    require_input(config.crime_types_path, "crime whitelist");
    return measures::CrimeTaxonomy::from_json_file(config.crime_types_path);
}

// Resolves input paths against the synth bundle when `synth` feeds `all`.
RunConfig with_synth_inputs(RunConfig config) {
    const fs::path base(config.out_dir);
    if (config.permits_path.empty()) config.permits_path = (base / "permits.csv").string();
    if (config.crimes_path.empty()) config.crimes_path = (base / "crimes.csv").string();
    if (config.blockgroups_path.empty()) {
        config.blockgroups_path = (base / "blockgroups.geojson").string();
    }
    if (config.acs_path.empty()) config.acs_path = (base / "acs.csv").string();
    if (config.landuse_path.empty()) config.landuse_path = (base / "landuse.csv").string();
    return config;
}

}  // namespace

void cmd_synth(const RunConfig& config) {
    if (!config.synth_config) throw Error("config has no `synth` section");
    synth::CityConfig city_config = *config.synth_config;
    const synth::SynthCity city = synth::generate_city(city_config);
    const synth::EventBundle events = synth::materialize_events(city);
    synth::write_bundle(city, events, config.out_dir);
}

void cmd_ingest(const RunConfig& config) {
    require_input(config.permits_path, "permits");
    require_input(config.crimes_path, "crimes");
    require_input(config.blockgroups_path, "blockgroups");
    require_input(config.acs_path, "acs");
    require_input(config.landuse_path, "landuse");

    const auto permits = ingest::parse_permits(config.permits_path, config.permit_window);
    const auto crimes = ingest::parse_crimes(config.crimes_path, config.crime_window);
    const auto groups = ingest::parse_blockgroups(config.blockgroups_path);
    const auto profiles = ingest::parse_profiles(config.acs_path, config.landuse_path);

    const auto permit_assignment =
        ingest::assign_points(permits.events, groups, config.jobs);
    const auto crime_assignment = ingest::assign_points(crimes.events, groups, config.jobs);

    std::string csv = "kind,date,blockgroup_id,raw_type\n";
    auto append = [&csv](const char* kind, const std::vector<PointEvent>& events,
                         const ingest::AssignResult& assignment) {
        for (std::size_t i = 0; i < events.size(); ++i) {
            csv += std::string(kind) + "," + format_date(events[i].date) + "," +
                   (assignment.blockgroup_ids[i] ? *assignment.blockgroup_ids[i] : "") + "," +
                   csv_escape(events[i].raw_type) + "\n";
        }
    };
    append("permit", permits.events, permit_assignment);
    append("crime", crimes.events, crime_assignment);
    write_file(fs::path(config.out_dir) / "assigned.csv", csv);

    nlohmann::json report;
    auto stats_json = [](const ingest::ParseStats& stats, const ingest::AssignResult& assignment) {
        return nlohmann::json{{"rows", stats.rows},
                              {"kept", stats.kept},
                              {"skipped_window", stats.skipped_window},
                              {"assigned", assignment.assigned},
                              {"unassigned", assignment.unassigned},
                              {"bypassed", assignment.bypassed}};
    };
    report["permits"] = stats_json(permits.stats, permit_assignment);
    report["crimes"] = stats_json(crimes.stats, crime_assignment);
    report["blockgroups"] = groups.size();
    report["profiles"] = profiles.size();
    write_file(fs::path(config.out_dir) / "ingest_report.json", report.dump(2) + "\n");
}

namespace {

struct AssignedEvents {
    std::vector<PointEvent> permits, crimes;
    std::vector<std::optional<std::string>> permit_assignment, crime_assignment;
};

AssignedEvents read_assigned(const RunConfig& config) {
    const fs::path path = fs::path(config.out_dir) / "assigned.csv";
    require_artifact(path, "ingest");
    CsvReader reader(path.string());
    reader.read_header({"kind", "date", "blockgroup_id", "raw_type"});
    AssignedEvents out;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        PointEvent ev;
        auto date = parse_date(reader.field(fields, "date"));
        if (!date) throw ParseError(path.string() + ": malformed date");
        ev.date = *date;
        ev.raw_type = reader.field(fields, "raw_type");
        const std::string& bg = reader.field(fields, "blockgroup_id");
        std::optional<std::string> assignment =
            bg.empty() ? std::nullopt : std::optional<std::string>(bg);
        if (reader.field(fields, "kind") == "permit") {
            ev.kind = EventKind::Permit;
            out.permits.push_back(std::move(ev));
            out.permit_assignment.push_back(std::move(assignment));
        } else {
            ev.kind = EventKind::Crime;
            out.crimes.push_back(std::move(ev));
            out.crime_assignment.push_back(std::move(assignment));
        }
    }
    return out;
}

std::vector<NeighborhoodProfile> read_profiles_sorted(const RunConfig& config) {
    require_input(config.acs_path, "acs");
    require_input(config.landuse_path, "landuse");
    auto profiles = ingest::parse_profiles(config.acs_path, config.landuse_path);
    std::sort(profiles.begin(), profiles.end(),
              [](const NeighborhoodProfile& a, const NeighborhoodProfile& b) {
                  return a.blockgroup_id < b.blockgroup_id;
              });
    return profiles;
}

std::string opt_fmt(const std::optional<double>& v, const char* spec = "%.10g") {
    return v ? fmt(*v, spec) : "";
}

}  // namespace

void cmd_measures(const RunConfig& config) {
    const AssignedEvents assigned = read_assigned(config);
    const auto profiles = read_profiles_sorted(config);
    const auto event_tax = event_taxonomy_for(config);
    const auto crime_tax = crime_taxonomy_for(config);

    const measures::MeasureTable table = measures::build_measure_table(
        assigned.permits, assigned.permit_assignment, assigned.crimes, assigned.crime_assignment,
        profiles, event_tax, crime_tax, config.permit_window, config.crime_window);

    std::string csv =
        "blockgroup_id,n_events,n_spontaneous,n_regular,spontaneous_proportion,"
        "crime_total,crime_violent,crime_nonviolent,crime_vice,log_crime_total,"
        "log_crime_violent,log_crime_nonviolent,log_crime_vice\n";
    for (const auto& m : table.rows) {
        csv += m.blockgroup_id + "," + std::to_string(m.n_events) + "," +
               std::to_string(m.n_spontaneous) + "," + std::to_string(m.n_regular) + "," +
               opt_fmt(m.spontaneous_proportion) + "," + std::to_string(m.crime_total) + "," +
               std::to_string(m.crime_violent) + "," + std::to_string(m.crime_nonviolent) + "," +
               std::to_string(m.crime_vice) + "," + opt_fmt(m.log_crime_total) + "," +
               opt_fmt(m.log_crime_violent) + "," + opt_fmt(m.log_crime_nonviolent) + "," +
               opt_fmt(m.log_crime_vice) + "\n";
    }
    write_file(fs::path(config.out_dir) / "measures.csv", csv);

    std::string series =
        "blockgroup_id,year,events,events_spontaneous,crimes_total,crimes_violent,"
        "crimes_nonviolent,crimes_vice\n";
    const int first_year = std::min(config.permit_window.begin.year, config.crime_window.begin.year);
    const int last_year = std::max(config.permit_window.end.year, config.crime_window.end.year);
    for (const auto& m : table.rows) {
        for (int year = first_year; year <= last_year; ++year) {
            auto value = [&](const std::map<int, std::int64_t>& map) -> std::string {
                auto it = map.find(year);
                return it == map.end() ? "" : std::to_string(it->second);
            };
            series += m.blockgroup_id + "," + std::to_string(year) + "," +
                      value(m.yearly_events) + "," + value(m.yearly_spontaneous) + "," +
                      value(m.yearly_crimes) + "," + value(m.yearly_crimes_violent) + "," +
                      value(m.yearly_crimes_nonviolent) + "," + value(m.yearly_crimes_vice) + "\n";
        }
    }
    write_file(fs::path(config.out_dir) / "series.csv", series);

    // Correlations over vibrancy, crime and profile covariates (Fig-S5-style).
    {
        std::vector<std::string> names = {"n_events", "spontaneous_proportion", "crime_total",
                                          "crime_violent", "crime_nonviolent", "crime_vice"};
        std::vector<std::vector<double>> cols(names.size());
        for (const auto& p : profiles) {
            const auto* m = table.find(p.blockgroup_id);
            cols[0].push_back(m ? static_cast<double>(m->n_events) : kNaN);
            cols[1].push_back(m && m->spontaneous_proportion ? *m->spontaneous_proportion : kNaN);
            cols[2].push_back(m ? static_cast<double>(m->crime_total) : kNaN);
            cols[3].push_back(m ? static_cast<double>(m->crime_violent) : kNaN);
            cols[4].push_back(m ? static_cast<double>(m->crime_nonviolent) : kNaN);
            cols[5].push_back(m ? static_cast<double>(m->crime_vice) : kNaN);
        }
        for (const auto& name : glm::profile_covariates()) {
            names.push_back(name);
            std::vector<double> col;
            for (const auto& p : profiles) {
                double v = kNaN;
                if (name == "log_income") v = p.mean_income > 0 ? std::log(p.mean_income) : kNaN;
                else if (name == "poverty") v = p.poverty_index;
                else if (name == "log_population") {
                    v = p.population > 0 ? std::log(p.population) : kNaN;
                } else if (name == "black") v = p.prop_black;
                else if (name == "hispanic") v = p.prop_hispanic;
                else if (name == "area_1e6") v = p.total_area_sqm * 1e-6;
                else if (name == "commercial") v = p.prop_commercial;
                else if (name == "residential") v = p.prop_residential;
                else if (name == "vacant") v = p.prop_vacant;
                else if (name == "transportation") v = p.prop_transportation;
                else if (name == "industrial") v = p.prop_industrial;
                else if (name == "park") v = p.prop_park;
                else if (name == "civic") v = p.prop_civic;
                col.push_back(v);
            }
            cols.push_back(std::move(col));
        }
        const auto corr = measures::correlation_matrix(names, cols);
        std::string corr_csv = "measure";
        for (const auto& name : corr.names) corr_csv += "," + name;
        corr_csv += "\n";
        for (std::size_t i = 0; i < corr.names.size(); ++i) {
            corr_csv += corr.names[i];
            for (std::size_t j = 0; j < corr.names.size(); ++j) {
                corr_csv += "," + fmt(corr.r[i][j], "%.6f");
            }
            corr_csv += "\n";
        }
        write_file(fs::path(config.out_dir) / "correlations.csv", corr_csv);
    }

    // City-wide monthly event counts (seasonality plot data).
    {
        std::map<std::pair<int, int>, std::int64_t> monthly;
        for (const auto& m : table.rows) {
            for (const auto& [key, count] : m.monthly_events) monthly[key] += count;
        }
        std::string monthly_csv = "year,month,events\n";
        for (const auto& [key, count] : monthly) {
            monthly_csv += std::to_string(key.first) + "," + std::to_string(key.second) + "," +
                           std::to_string(count) + "\n";
        }
        write_file(fs::path(config.out_dir) / "city_monthly.csv", monthly_csv);
    }

    nlohmann::json report;
    report["blockgroups"] = table.rows.size();
    report["dropped_unassigned_events"] = table.dropped_unassigned_events;
    report["dropped_unassigned_crimes"] = table.dropped_unassigned_crimes;
    std::size_t undefined_spont = 0, zero_crime = 0;
    for (const auto& m : table.rows) {
        if (!m.spontaneous_proportion) ++undefined_spont;
        if (m.crime_total == 0) ++zero_crime;
    }
    report["undefined_spontaneous_proportion"] = undefined_spont;
    report["zero_crime_blockgroups"] = zero_crime;
    write_file(fs::path(config.out_dir) / "measures_report.json", report.dump(2) + "\n");
}

namespace {

struct SeriesTable {
    // blockgroup -> year -> (events, spont, crimes by category); missing = NaN
    struct Row {
        double events = kNaN, spontaneous = kNaN, crimes = kNaN, violent = kNaN,
               nonviolent = kNaN, vice = kNaN;
    };
    std::map<std::string, std::map<int, Row>> data;
};

SeriesTable read_series(const RunConfig& config) {
    const fs::path path = fs::path(config.out_dir) / "series.csv";
    require_artifact(path, "measures");
    CsvReader reader(path.string());
    reader.read_header({"blockgroup_id", "year", "events", "events_spontaneous", "crimes_total",
                        "crimes_violent", "crimes_nonviolent", "crimes_vice"});
    SeriesTable out;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const std::string id = reader.field(fields, "blockgroup_id");
        const int year = static_cast<int>(parse_or_nan(reader.field(fields, "year")));
        SeriesTable::Row row;
        row.events = parse_or_nan(reader.field(fields, "events"));
        row.spontaneous = parse_or_nan(reader.field(fields, "events_spontaneous"));
        row.crimes = parse_or_nan(reader.field(fields, "crimes_total"));
        row.violent = parse_or_nan(reader.field(fields, "crimes_violent"));
        row.nonviolent = parse_or_nan(reader.field(fields, "crimes_nonviolent"));
        row.vice = parse_or_nan(reader.field(fields, "crimes_vice"));
        out.data[id][year] = row;
    }
    return out;
}

}  // namespace

void cmd_trends(const RunConfig& config) {
    const SeriesTable series = read_series(config);
    const std::vector<int> permit_years = measures::complete_years(config.permit_window);
    const std::vector<int> crime_years = measures::complete_years(config.crime_window);

    std::map<std::string, std::map<std::string, std::vector<std::pair<int, double>>>> by_unit;
    for (const auto& [id, years] : series.data) {
        auto& unit = by_unit[id];
        for (int y : permit_years) {
            auto it = years.find(y);
            if (it == years.end()) continue;
            if (!std::isnan(it->second.events)) {
                unit["events"].push_back({y, it->second.events});
                // Spontaneous proportion defined only for years with events.
                if (it->second.events > 0 && !std::isnan(it->second.spontaneous)) {
                    unit["spontaneous_proportion"].push_back(
                        {y, it->second.spontaneous / it->second.events});
                }
            }
        }
        for (int y : crime_years) {
            auto it = years.find(y);
            if (it == years.end()) continue;
            if (!std::isnan(it->second.crimes)) unit["crime_total"].push_back({y, it->second.crimes});
            if (!std::isnan(it->second.violent)) {
                unit["crime_violent"].push_back({y, it->second.violent});
            }
            if (!std::isnan(it->second.nonviolent)) {
                unit["crime_nonviolent"].push_back({y, it->second.nonviolent});
            }
            if (!std::isnan(it->second.vice)) unit["crime_vice"].push_back({y, it->second.vice});
        }
    }

    const trends::ClassifyAllResult result = trends::classify_all(by_unit, config.alpha);

    std::string csv = "blockgroup_id,measure,slope,slope_se,t_stat,p_value,class,n_years\n";
    for (const auto& r : result.results) {
        csv += r.blockgroup_id + "," + r.measure + "," + fmt(r.slope) + "," + fmt(r.slope_se) +
               "," + fmt(std::isinf(r.t_stat) ? (r.t_stat > 0 ? 1e308 : -1e308) : r.t_stat) + "," +
               fmt(r.p_value) + "," + trends::to_string(r.classification) + "," +
               std::to_string(r.n_years) + "\n";
    }
    write_file(fs::path(config.out_dir) / "trends.csv", csv);

    nlohmann::json report;
    for (const auto& [measure, count] : result.summary.positive) {
        report[measure]["positive"] = count;
    }
    for (const auto& [measure, count] : result.summary.negative) {
        report[measure]["negative"] = count;
    }
    for (const auto& [measure, count] : result.summary.none) report[measure]["none"] = count;
    report["alpha"] = config.alpha;
    write_file(fs::path(config.out_dir) / "trends_report.json", report.dump(2) + "\n");
}

namespace {

struct MeasureRow {
    double n_events = kNaN, spontaneous_proportion = kNaN;
    double crime_total = kNaN, crime_violent = kNaN, crime_nonviolent = kNaN, crime_vice = kNaN;
};

std::map<std::string, MeasureRow> read_measures(const RunConfig& config) {
    const fs::path path = fs::path(config.out_dir) / "measures.csv";
    require_artifact(path, "measures");
    CsvReader reader(path.string());
    reader.read_header({"blockgroup_id", "n_events", "spontaneous_proportion", "crime_total",
                        "crime_violent", "crime_nonviolent", "crime_vice"});
    std::map<std::string, MeasureRow> out;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        MeasureRow row;
        row.n_events = parse_or_nan(reader.field(fields, "n_events"));
        row.spontaneous_proportion = parse_or_nan(reader.field(fields, "spontaneous_proportion"));
        row.crime_total = parse_or_nan(reader.field(fields, "crime_total"));
        row.crime_violent = parse_or_nan(reader.field(fields, "crime_violent"));
        row.crime_nonviolent = parse_or_nan(reader.field(fields, "crime_nonviolent"));
        row.crime_vice = parse_or_nan(reader.field(fields, "crime_vice"));
        out[reader.field(fields, "blockgroup_id")] = row;
    }
    return out;
}

struct TrendRow {
    double slope = kNaN;
    trends::TrendClass classification = trends::TrendClass::None;
};

// (blockgroup, measure) -> trend row
std::map<std::pair<std::string, std::string>, TrendRow> read_trends(const RunConfig& config) {
    const fs::path path = fs::path(config.out_dir) / "trends.csv";
    require_artifact(path, "trends");
    CsvReader reader(path.string());
    reader.read_header({"blockgroup_id", "measure", "slope", "class"});
    std::map<std::pair<std::string, std::string>, TrendRow> out;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        TrendRow row;
        row.slope = parse_or_nan(reader.field(fields, "slope"));
        const std::string klass = reader.field(fields, "class");
        row.classification = klass == "positive" ? trends::TrendClass::Positive
                             : klass == "negative" ? trends::TrendClass::Negative
                                                   : trends::TrendClass::None;
        out[{reader.field(fields, "blockgroup_id"), reader.field(fields, "measure")}] = row;
    }
    return out;
}

// Assembles the named-column analysis table joining profiles, measures and
// trend indicators over the profile id set.
glm::ColumnTable build_analysis_table(
    const std::vector<NeighborhoodProfile>& profiles,
    const std::map<std::string, MeasureRow>& measure_rows,
    const std::map<std::pair<std::string, std::string>, TrendRow>* trend_rows) {
    glm::ColumnTable table;
    auto& cols = table.columns;
    const std::size_t n = profiles.size();
    for (const char* name :
         {"mean_income", "population", "poverty", "black", "hispanic", "total_area_sqm",
          "commercial", "residential", "vacant", "transportation", "industrial", "park", "civic",
          "n_events", "spontaneous_proportion", "crime_total", "crime_violent",
          "crime_nonviolent", "crime_vice"}) {
        cols[name].reserve(n);
    }
    for (const auto& p : profiles) {
        table.row_ids.push_back(p.blockgroup_id);
        cols["mean_income"].push_back(p.mean_income);
        cols["population"].push_back(p.population);
        cols["poverty"].push_back(p.poverty_index);
        cols["black"].push_back(p.prop_black);
        cols["hispanic"].push_back(p.prop_hispanic);
        cols["total_area_sqm"].push_back(p.total_area_sqm);
        cols["commercial"].push_back(p.prop_commercial);
        cols["residential"].push_back(p.prop_residential);
        cols["vacant"].push_back(p.prop_vacant);
        cols["transportation"].push_back(p.prop_transportation);
        cols["industrial"].push_back(p.prop_industrial);
        cols["park"].push_back(p.prop_park);
        cols["civic"].push_back(p.prop_civic);
        auto it = measure_rows.find(p.blockgroup_id);
        const MeasureRow row = it == measure_rows.end() ? MeasureRow{} : it->second;
        cols["n_events"].push_back(row.n_events);
        cols["spontaneous_proportion"].push_back(row.spontaneous_proportion);
        cols["crime_total"].push_back(row.crime_total);
        cols["crime_violent"].push_back(row.crime_violent);
        cols["crime_nonviolent"].push_back(row.crime_nonviolent);
        cols["crime_vice"].push_back(row.crime_vice);
    }
    if (trend_rows != nullptr) {
        auto indicator = [&](const std::string& measure, trends::TrendClass which) {
            std::vector<double> col;
            col.reserve(n);
            for (const auto& p : profiles) {
                auto it = trend_rows->find({p.blockgroup_id, measure});
                if (it == trend_rows->end()) {
                    col.push_back(kNaN);
                } else {
                    col.push_back(it->second.classification == which ? 1.0 : 0.0);
                }
            }
            return col;
        };
        cols["permits_trend_pos"] = indicator("events", trends::TrendClass::Positive);
        cols["permits_trend_neg"] = indicator("events", trends::TrendClass::Negative);
        cols["spont_trend_pos"] =
            indicator("spontaneous_proportion", trends::TrendClass::Positive);
        cols["spont_trend_neg"] =
            indicator("spontaneous_proportion", trends::TrendClass::Negative);
        cols["crimes_trend_pos"] = indicator("crime_total", trends::TrendClass::Positive);
        cols["crimes_trend_neg"] = indicator("crime_total", trends::TrendClass::Negative);
        std::vector<double> slope;
        slope.reserve(n);
        for (const auto& p : profiles) {
            auto it = trend_rows->find({p.blockgroup_id, "crime_total"});
            slope.push_back(it == trend_rows->end() ? kNaN : it->second.slope);
        }
        cols["crime_trend_slope"] = std::move(slope);
    }
    return table;
}

struct ModelJob {
    std::string id;
    glm::ModelSpec spec;
};

std::string regression_rows(const glm::ColumnTable& table, const ModelJob& job) {
    std::string rows;
    auto summary_row = [&](const glm::FitResult* fit, const std::string& status,
                           std::size_t n_obs) {
        rows += job.id + "," + to_string(job.spec.family) + "," + job.spec.outcome + ",,,,,,," +
                std::to_string(n_obs) + "," + (fit ? fmt(fit->r_squared) : "") + "," +
                (fit ? fmt(fit->adj_r_squared) : "") + "," + (fit ? fmt(fit->log_likelihood) : "") +
                "," + (fit ? fmt(fit->aic) : "") + "," + (fit ? fmt(fit->rmse) : "") + "," +
                (fit ? fmt(fit->theta) : "") + "," +
                (fit ? (fit->converged ? "true" : "false") : "") + "," + status + "\n";
    };
    try {
        const glm::Design design = glm::build_design(table, job.spec);
        const glm::FitResult fit = glm::fit(design, job.spec);
        for (std::size_t t = 0; t < fit.terms.size(); ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            rows += job.id + "," + to_string(job.spec.family) + "," + job.spec.outcome + "," +
                    fit.terms[t] + "," + fmt(fit.coefficients[i]) + "," + fmt(fit.std_errors[i]) +
                    "," + fmt(fit.test_statistics[i]) + "," + fmt(fit.p_values[i]) + "," +
                    glm::significance_stars(fit.p_values[i]) + ",,,,,,,,,\n";
        }
        std::string status = "ok";
        if (fit.theta_at_boundary) status = "ok:theta_at_boundary";
        summary_row(&fit, status, fit.n_obs);
    } catch (const glm::NonConvergence& e) {
        summary_row(nullptr, std::string("nonconverged:") + e.what(), 0);
    } catch (const Error& e) {
        summary_row(nullptr, std::string("skipped:") + e.what(), 0);
    }
    return rows;
}

}  // namespace

void cmd_regress(const RunConfig& config) {
    const auto profiles = read_profiles_sorted(config);
    const auto measure_rows = read_measures(config);
    const auto trend_rows = read_trends(config);
    const glm::ColumnTable table = build_analysis_table(profiles, measure_rows, &trend_rows);

    std::vector<ModelJob> jobs;
    const auto& covariates = glm::profile_covariates();
    const std::vector<std::pair<std::string, std::string>> outcomes = {
        {"total", "crime_total"},
        {"violent", "crime_violent"},
        {"nonviolent", "crime_nonviolent"},
        {"vice", "crime_vice"}};
    const std::vector<std::pair<std::string, std::string>> vibrancy_measures = {
        {"permits", "n_events"}, {"spont", "spontaneous_proportion"}};
    for (const auto& [outcome_tag, outcome_col] : outcomes) {
        for (const auto& [measure_tag, measure_col] : vibrancy_measures) {
            glm::ModelSpec ols;
            ols.outcome = outcome_col;
            ols.transform = glm::Transform::Log;
            ols.family = glm::Family::OLS;
            ols.predictors.push_back(measure_col);
            ols.predictors.insert(ols.predictors.end(), covariates.begin(), covariates.end());
            jobs.push_back({"ols_log_" + outcome_tag + "_" + measure_tag, ols});

            glm::ModelSpec nb = ols;
            nb.transform = glm::Transform::Identity;
            nb.family = glm::Family::NegativeBinomial;
            jobs.push_back({"nb_" + outcome_tag + "_" + measure_tag, nb});
        }
    }
    const std::vector<std::pair<std::string, std::string>> trend_pairs = {
        {"permits", "permits_trend"}, {"spont", "spont_trend"}};
    for (const auto& [tag, stem] : trend_pairs) {
        for (const char* direction : {"pos", "neg"}) {
            glm::ModelSpec spec;
            spec.outcome = stem + std::string("_") + direction;
            spec.family = glm::Family::Logistic;
            spec.predictors.assign(covariates.begin(), covariates.end());
            spec.predictors.push_back("crimes_trend_pos");
            spec.predictors.push_back("crimes_trend_neg");
            jobs.push_back({"logit_" + tag + "_trend_" + direction, spec});
        }
        for (const char* direction : {"pos", "neg"}) {
            glm::ModelSpec spec;
            spec.outcome = std::string("crimes_trend_") + direction;
            spec.family = glm::Family::Logistic;
            spec.predictors.assign(covariates.begin(), covariates.end());
            spec.predictors.push_back(stem + "_pos");
            spec.predictors.push_back(stem + "_neg");
            jobs.push_back({"logit_crimes_trend_" + std::string(direction) + "_vs_" + tag, spec});
        }
    }

    std::vector<std::string> blocks(jobs.size());
    if (config.jobs > 1) {
        std::vector<std::future<std::string>> futures;
        futures.reserve(jobs.size());
        for (const auto& job : jobs) {
            futures.push_back(std::async(std::launch::async,
                                         [&table, &job] { return regression_rows(table, job); }));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) blocks[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < jobs.size(); ++i) blocks[i] = regression_rows(table, jobs[i]);
    }

    std::string csv =
        "model,family,outcome,term,estimate,std_error,statistic,p_value,stars,n_obs,"
        "r_squared,adj_r_squared,log_likelihood,aic,rmse,theta,converged,status\n";
    for (const auto& block : blocks) csv += block;
    write_file(fs::path(config.out_dir) / "regression_report.csv", csv);
}

namespace {

struct ExperimentJob {
    std::string name;      // stable identifier, also the balance file suffix
    std::string treatment; // human-readable description
    std::string outcome;
    std::vector<signed char> treated;
    std::vector<double> outcome_values;
};

std::string experiment_row(const RunConfig& config, const ExperimentJob& job,
                           const std::vector<std::string>& ids, const Eigen::MatrixXd& covariates,
                           const std::vector<std::string>& covariate_names) {
    auto line = [&](const psm::ExperimentResult* r, const std::string& status) {
        std::string row = job.name + "," + job.treatment + "," + job.outcome + ",";
        if (r != nullptr) {
            const auto& inf = r->inference;
            row += std::string(psm::to_string(r->mode)) + "," + std::to_string(r->n_units) + "," +
                   std::to_string(r->n_excluded) + "," + std::to_string(r->n_treated) + "," +
                   std::to_string(r->n_control) + "," + std::to_string(inf.n_pairs) + "," +
                   std::to_string(r->match.dropped_treated.size()) + "," + fmt(r->naive_diff) +
                   "," + fmt(inf.mean_diff) + "," + fmt(inf.ci_lo) + "," + fmt(inf.ci_hi) + "," +
                   fmt(inf.t_p) + "," + fmt(inf.wilcoxon_p) + ",";
            if (inf.has_odds_ratio && !inf.or_undefined) {
                row += fmt(inf.odds_ratio) + "," + fmt(inf.or_ci_lo) + "," + fmt(inf.or_ci_hi);
            } else if (inf.has_odds_ratio) {
                row += "undefined,,";
            } else {
                row += ",,";
            }
            row += "," + status;
        } else {
            row += ",,,,,,,,,,,,,," + status;
        }
        return row + "\n";
    };
    try {
        psm::ExperimentOptions options;
        options.on_logit = config.match_on_logit;
        options.caliper = config.caliper;
        const psm::ExperimentResult result = psm::run_experiment(
            ids, covariates, covariate_names, job.treated, job.outcome_values, options);
        std::string balance = "covariate,smd_before,smd_after\n";
        for (const auto& b : result.balance) {
            balance += b.covariate + "," + fmt(b.smd_before, "%.6f") + "," +
                       fmt(b.smd_after, "%.6f") + "\n";
        }
        write_file(fs::path(config.out_dir) / ("balance_" + job.name + ".csv"), balance);
        return line(&result, "ok");
    } catch (const Error& e) {
        return line(nullptr, std::string("skipped:") + e.what());
    }
}

}  // namespace

void cmd_match(const RunConfig& config) {
    const auto profiles = read_profiles_sorted(config);
    const auto measure_rows = read_measures(config);
    const auto trend_rows = read_trends(config);
    const glm::ColumnTable table = build_analysis_table(profiles, measure_rows, &trend_rows);

    const auto& covariate_names = glm::profile_covariates();
    const Eigen::MatrixXd covariates = glm::column_matrix(table, covariate_names);
    const std::vector<std::string>& ids = table.row_ids;
    const std::size_t n = ids.size();

    std::vector<ExperimentJob> jobs;

    // Two aggregate experiments: above-median vibrancy, log total crime.
    for (const auto& [tag, column] : std::vector<std::pair<std::string, std::string>>{
             {"agg_permits", "n_events"}, {"agg_spont", "spontaneous_proportion"}}) {
        ExperimentJob job;
        job.name = tag;
        job.treatment = "above_median_" + column;
        job.outcome = "log_crime_total";
        const auto& values = table.at(column);
        std::vector<double> defined;
        for (double v : values) {
            if (!std::isnan(v)) defined.push_back(v);
        }
        job.treated.assign(n, -1);
        if (!defined.empty()) {
            bool contrast = false;
            const double m = psm::median(defined);
            for (std::size_t i = 0; i < n; ++i) {
                if (std::isnan(values[i])) continue;
                job.treated[i] = values[i] > m ? 1 : 0;
                contrast = contrast || job.treated[i] == 1;
            }
            (void)contrast;
        }
        const auto& crime = table.at("crime_total");
        job.outcome_values.assign(n, kNaN);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isnan(crime[i]) && crime[i] > 0) job.outcome_values[i] = std::log(crime[i]);
        }
        jobs.push_back(std::move(job));
    }

    // Twelve trend experiments: four treatments x three crime-trend outcomes.
    const std::vector<std::tuple<std::string, std::string, trends::TrendClass>> treatments = {
        {"permits_pos", "events", trends::TrendClass::Positive},
        {"permits_neg", "events", trends::TrendClass::Negative},
        {"spont_pos", "spontaneous_proportion", trends::TrendClass::Positive},
        {"spont_neg", "spontaneous_proportion", trends::TrendClass::Negative}};
    const std::vector<std::pair<std::string, std::string>> outcomes = {
        {"crime_slope", "crime_trend_slope"},
        {"crime_pos", "crimes_trend_pos"},
        {"crime_neg", "crimes_trend_neg"}};
    for (const auto& [treat_tag, measure, which] : treatments) {
        std::vector<signed char> treated(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = trend_rows.find({ids[i], measure});
            if (it == trend_rows.end()) continue;  // no trend fit: excluded
            treated[i] = it->second.classification == which ? 1 : 0;
        }
        for (const auto& [outcome_tag, outcome_col] : outcomes) {
            ExperimentJob job;
            job.name = "trend_" + treat_tag + "_x_" + outcome_tag;
            job.treatment = "significant_trend_" + treat_tag;
            job.outcome = outcome_col;
            job.treated = treated;
            job.outcome_values = table.at(outcome_col);
            jobs.push_back(std::move(job));
        }
    }

    std::vector<std::string> rows(jobs.size());
    if (config.jobs > 1) {
        std::vector<std::future<std::string>> futures;
        futures.reserve(jobs.size());
        for (const auto& job : jobs) {
            futures.push_back(std::async(std::launch::async, [&] {
                return experiment_row(config, job, ids, covariates, covariate_names);
            }));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            rows[i] = experiment_row(config, jobs[i], ids, covariates, covariate_names);
        }
    }

    std::string csv =
        "experiment,treatment,outcome,mode,n_units,n_excluded,n_treated,n_control,"
        "n_pairs,n_dropped_treated,naive_diff,estimate,ci_lo,ci_hi,t_p,wilcoxon_p,"
        "odds_ratio,or_ci_lo,or_ci_hi,status\n";
    for (const auto& row : rows) csv += row;
    write_file(fs::path(config.out_dir) / "experiments.csv", csv);
}

void cmd_report(const RunConfig& config) {
    require_input(config.blockgroups_path, "blockgroups");
    const auto groups = ingest::parse_blockgroups(config.blockgroups_path);
    const fs::path measures_path = fs::path(config.out_dir) / "measures.csv";
    require_artifact(measures_path, "measures");

    // Re-read the full measure rows (not just the regression columns).
    std::map<std::string, std::vector<std::string>> raw_rows;
    std::vector<std::string> header;
    {
        CsvReader reader(measures_path.string());
        reader.read_header({"blockgroup_id"});
        std::vector<std::string> fields;
        CsvReader header_reader(measures_path.string());
        header_reader.next(header);
        while (reader.next(fields)) {
            if (!fields.empty()) raw_rows[fields[0]] = fields;
        }
    }

    nlohmann::json features = nlohmann::json::array();
    for (const auto& bg : groups) {
        nlohmann::json props;
        props["id"] = bg.id;
        auto it = raw_rows.find(bg.id);
        if (it != raw_rows.end()) {
            for (std::size_t c = 1; c < header.size() && c < it->second.size(); ++c) {
                const std::string& text = it->second[c];
                if (text.empty()) {
                    props[header[c]] = nullptr;
                } else {
                    props[header[c]] = parse_or_nan(text);
                }
            }
        }
        // Geometry: every stored ring becomes a polygon ring set.
        nlohmann::json coords = nlohmann::json::array();
        for (const auto& ring : bg.rings) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& v : ring) r.push_back({v.lon, v.lat});
            coords.push_back(nlohmann::json::array({r}));
        }
        features.push_back({{"type", "Feature"},
                            {"properties", props},
                            {"geometry", {{"type", "MultiPolygon"}, {"coordinates", coords}}}});
    }
    nlohmann::json doc = {{"type", "FeatureCollection"}, {"features", features}};
    write_file(fs::path(config.out_dir) / "report.geojson", doc.dump(2) + "\n");

    // City-wide yearly series (plot data for the time-trend figures).
    const SeriesTable series = read_series(config);
    std::map<int, std::array<double, 6>> totals;  // events, spont, crimes, violent, nonviol, vice
    for (const auto& [id, years] : series.data) {
        (void)id;
        for (const auto& [year, row] : years) {
            auto& t = totals[year];
            auto add = [](double& acc, double v) {
                if (!std::isnan(v)) acc += v;
            };
            add(t[0], row.events);
            add(t[1], row.spontaneous);
            add(t[2], row.crimes);
            add(t[3], row.violent);
            add(t[4], row.nonviolent);
            add(t[5], row.vice);
        }
    }
    std::string csv =
        "year,events,events_spontaneous,spontaneous_proportion,crimes_total,"
        "crimes_violent,crimes_nonviolent,crimes_vice\n";
    for (const auto& [year, t] : totals) {
        const double prop = t[0] > 0 ? t[1] / t[0] : kNaN;
        csv += std::to_string(year) + "," + fmt(t[0], "%.0f") + "," + fmt(t[1], "%.0f") + "," +
               fmt(prop, "%.6f") + "," + fmt(t[2], "%.0f") + "," + fmt(t[3], "%.0f") + "," +
               fmt(t[4], "%.0f") + "," + fmt(t[5], "%.0f") + "\n";
    }
    write_file(fs::path(config.out_dir) / "city_yearly.csv", csv);
}

void cmd_all(const RunConfig& config) {
    RunConfig effective = config;
    if (config.synth_config) {
        cmd_synth(config);
        effective = with_synth_inputs(std::move(effective));
    }
    cmd_ingest(effective);
    cmd_measures(effective);
    cmd_trends(effective);
    cmd_regress(effective);
    cmd_match(effective);
    cmd_report(effective);
}

}  // namespace vibrancy::pipeline
