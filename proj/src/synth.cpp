#include "vibrancy/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "vibrancy/errors.hpp"
#include "vibrancy/geometry.hpp"
#include "vibrancy/special.hpp"
#include "vibrancy/taxonomy.hpp"

namespace vibrancy::synth {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Regressor values the linear models run on; see CityConfig.
struct Regressors {
    double income_z = 0.0;
    double population_z = 0.0;
    double poverty_z = 0.0;
    double black = 0.0;
    double hispanic = 0.0;
    double commercial = 0.0;
    double residential = 0.0;
    double vacant = 0.0;

    double value(const std::string& name) const {
        if (name == "income") return income_z;
        if (name == "population") return population_z;
        if (name == "poverty") return poverty_z;
        if (name == "black") return black;
        if (name == "hispanic") return hispanic;
        if (name == "commercial") return commercial;
        if (name == "residential") return residential;
        if (name == "vacant") return vacant;
        throw InvalidInput("unknown synth covariate: " + name);
    }
};

double linear(double intercept, const std::map<std::string, double>& coefs,
              const Regressors& reg) {
    double out = intercept;
    for (const auto& [name, coef] : coefs) out += coef * reg.value(name);
    return out;
}

std::string unit_id(int index, int total) {
    int width = 1;
    for (int v = total; v >= 10; v /= 10) ++width;
    width = std::min(width, 9);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "BG%0*d", width, index + 1);
    return buf;
}

std::int64_t draw_count(Rng& rng, double log_mean, const std::string& noise, double theta) {
    const double mu = std::exp(log_mean);
    if (noise == "negbin") {
        const double rate = rng.gamma(theta, mu / theta);
        return rng.poisson(rate);
    }
    return rng.poisson(mu);
}

}  // namespace

std::int64_t UnitData::event_total() const {
    return std::accumulate(yearly_regular.begin(), yearly_regular.end(), std::int64_t{0}) +
           std::accumulate(yearly_spontaneous.begin(), yearly_spontaneous.end(), std::int64_t{0});
}

std::int64_t UnitData::crime_total() const {
    return std::accumulate(yearly_crimes.begin(), yearly_crimes.end(), std::int64_t{0});
}

SynthCity generate_city(const CityConfig& config) {
    if (config.grid_rows < 1 || config.grid_cols < 1) {
        throw InvalidInput("generate_city: grid must be at least 1x1");
    }
    if (config.last_year < config.first_year) {
        throw InvalidInput("generate_city: year range is empty");
    }
    if (config.race_alpha.size() != 5 || config.landuse_alpha.size() != 8) {
        throw InvalidInput("generate_city: race_alpha needs 5 entries, landuse_alpha needs 8");
    }
    if (config.noise != "poisson" && config.noise != "negbin") {
        throw InvalidInput("generate_city: noise must be 'poisson' or 'negbin'");
    }

    SynthCity city;
    city.config = config;
    for (int y = config.first_year; y <= config.last_year; ++y) city.years.push_back(y);
    const double year_center =
        0.5 * (config.first_year + config.last_year);

    Rng rng(config.seed);
    const int n = config.n_blockgroups();
    const double loading = config.poverty_income_loading;
    const double residual = std::sqrt(std::max(0.0, 1.0 - loading * loading));

    for (int i = 0; i < n; ++i) {
        const int row = i / config.grid_cols;
        const int col = i % config.grid_cols;
        const double lon0 = config.origin_lon + col * config.cell_deg;
        const double lat0 = config.origin_lat + row * config.cell_deg;

        BlockGroup bg;
        bg.id = unit_id(i, n);
        bg.rings.push_back({LonLat{lon0, lat0},
                            LonLat{lon0 + config.cell_deg, lat0},
                            LonLat{lon0 + config.cell_deg, lat0 + config.cell_deg},
                            LonLat{lon0, lat0 + config.cell_deg},
                            LonLat{lon0, lat0}});
        bg.area_sqm = std::fabs(ring_area_sqm(bg.rings[0]));

        UnitData unit;
        unit.id = bg.id;

        Regressors reg;
        reg.income_z = rng.normal();
        reg.population_z = rng.normal();
        reg.poverty_z = loading * reg.income_z + residual * rng.normal();

        NeighborhoodProfile& p = unit.profile;
        p.blockgroup_id = bg.id;
        p.mean_income = std::exp(config.log_income_mean + config.log_income_sd * reg.income_z);
        p.population = std::max(
            1.0, std::round(std::exp(config.log_population_mean +
                                     config.log_population_sd * reg.population_z)));
        p.poverty_index = normal_cdf(reg.poverty_z);

        const std::vector<double> race = rng.dirichlet(config.race_alpha);
        p.prop_white = race[0];
        p.prop_black = race[1];
        p.prop_asian = race[2];
        p.prop_hispanic = race[3];
        p.prop_other = 1.0 - race[0] - race[1] - race[2] - race[3];

        const std::vector<double> landuse = rng.dirichlet(config.landuse_alpha);
        p.total_area_sqm = bg.area_sqm;
        p.prop_commercial = landuse[0];
        p.prop_residential = landuse[1];
        p.prop_vacant = landuse[2];
        p.prop_transportation = landuse[3];
        p.prop_industrial = landuse[4];
        p.prop_park = landuse[5];
        p.prop_civic = landuse[6];

        reg.black = p.prop_black;
        reg.hispanic = p.prop_hispanic;
        reg.commercial = p.prop_commercial;
        reg.residential = p.prop_residential;
        reg.vacant = p.prop_vacant;

        unit.treated = rng.bernoulli(sigmoid(linear(config.treat_intercept, config.treat_coefs,
                                                    reg)))
                           ? 1
                           : 0;

        auto planted = [&](double frac_pos, double frac_neg, double magnitude) {
            const double u = rng.uniform();
            if (u < frac_pos) return magnitude;
            if (u < frac_pos + frac_neg) return -magnitude;
            return 0.0;
        };
        unit.event_trend = planted(config.frac_event_trend_pos, config.frac_event_trend_neg,
                                   config.event_trend_mag);
        unit.spont_trend = planted(config.frac_spont_trend_pos, config.frac_spont_trend_neg,
                                   config.spont_trend_mag);
        unit.crime_trend = planted(config.frac_crime_trend_pos, config.frac_crime_trend_neg,
                                   config.crime_trend_mag);

        const double event_base = linear(config.event_intercept, config.event_coefs, reg);
        const double spont_base = linear(config.spont_intercept, config.spont_coefs, reg);
        unit.crime_log_mean = linear(config.crime_intercept, config.crime_coefs, reg) +
                              config.tau * (unit.treated ? 1.0 : 0.0);

        unit.yearly_regular.resize(city.years.size(), 0);
        unit.yearly_spontaneous.resize(city.years.size(), 0);
        unit.yearly_crimes.resize(city.years.size(), 0);
        for (std::size_t t = 0; t < city.years.size(); ++t) {
            const double dt = city.years[t] - year_center;
            const double lambda = std::exp(event_base + unit.event_trend * dt);
            const double p_spont = sigmoid(spont_base + unit.spont_trend * dt);
            // Thinned Poisson: spontaneous and regular streams are independent.
            unit.yearly_spontaneous[t] = rng.poisson(lambda * p_spont);
            unit.yearly_regular[t] = rng.poisson(lambda * (1.0 - p_spont));
            unit.yearly_crimes[t] = draw_count(
                rng, unit.crime_log_mean + unit.crime_trend * dt, config.noise, config.theta);
        }

        city.blockgroups.push_back(std::move(bg));
        city.units.push_back(std::move(unit));
    }
    return city;
}

namespace {

Date random_date_in_year(Rng& rng, int year, const std::vector<double>& month_weights) {
    double total = 0.0;
    for (double w : month_weights) total += w;
    double u = rng.uniform() * total;
    int month = 12;
    for (int m = 0; m < 12; ++m) {
        if (u < month_weights[m]) {
            month = m + 1;
            break;
        }
        u -= month_weights[m];
    }
    const int day = 1 + static_cast<int>(rng.uniform_index(days_in_month(year, month)));
    return Date{year, month, day};
}

LonLat random_point_in_cell(Rng& rng, const BlockGroup& bg) {
    const BoundingBox box = group_bbox(bg);
    // Small inset keeps points off shared edges.
    const double margin = 1e-6;
    const double u = margin + (1.0 - 2.0 * margin) * rng.uniform();
    const double v = margin + (1.0 - 2.0 * margin) * rng.uniform();
    return LonLat{box.min_lon + u * box.width(), box.min_lat + v * box.height()};
}

const std::string& pick(Rng& rng, const std::vector<std::string>& items) {
    return items[rng.uniform_index(items.size())];
}

}  // namespace

EventBundle materialize_events(const SynthCity& city) {
    Rng master(city.config.seed);
    Rng rng = master.fork(0x9ea7);  // independent of the counts stream

    const measures::EventTaxonomy event_tax = measures::EventTaxonomy::defaults();
    const measures::CrimeTaxonomy crime_tax = measures::CrimeTaxonomy::defaults();

    std::vector<double> permit_months(12, 1.0);
    for (int m = 5; m <= 9; ++m) permit_months[m - 1] = city.config.warm_month_multiplier;
    const std::vector<double> flat_months(12, 1.0);

    // Crime category mix, then a uniform type within the category.
    const std::vector<std::pair<measures::CrimeCategory, double>> crime_mix = {
        {measures::CrimeCategory::Violent, 0.22},
        {measures::CrimeCategory::NonViolent, 0.45},
        {measures::CrimeCategory::Vice, 0.12},
        {measures::CrimeCategory::Other, 0.21}};

    EventBundle out;
    for (std::size_t u = 0; u < city.units.size(); ++u) {
        const UnitData& unit = city.units[u];
        const BlockGroup& bg = city.blockgroups[u];
        for (std::size_t t = 0; t < city.years.size(); ++t) {
            const int year = city.years[t];
            const std::int64_t spontaneous = unit.yearly_spontaneous[t];
            const std::int64_t regular = unit.yearly_regular[t];
            for (std::int64_t e = 0; e < spontaneous + regular; ++e) {
                PointEvent ev;
                ev.kind = EventKind::Permit;
                ev.date = random_date_in_year(rng, year, permit_months);
                ev.raw_type = pick(rng, e < spontaneous ? event_tax.spontaneous_types()
                                                        : event_tax.regular_types());
                if (city.config.permits_by_blockgroup) {
                    ev.blockgroup_id = bg.id;
                } else {
                    const LonLat p = random_point_in_cell(rng, bg);
                    ev.lon = p.lon;
                    ev.lat = p.lat;
                }
                out.permits.push_back(std::move(ev));
            }
            for (std::int64_t e = 0; e < unit.yearly_crimes[t]; ++e) {
                PointEvent ev;
                ev.kind = EventKind::Crime;
                ev.date = random_date_in_year(rng, year, flat_months);
                ev.time = TimeOfDay{static_cast<int>(rng.uniform_index(24)),
                                    static_cast<int>(rng.uniform_index(60))};
                double pick_u = rng.uniform();
                measures::CrimeCategory category = crime_mix.back().first;
                for (const auto& [cat, w] : crime_mix) {
                    if (pick_u < w) {
                        category = cat;
                        break;
                    }
                    pick_u -= w;
                }
                ev.raw_type = pick(rng, crime_tax.types(category));
                const LonLat p = random_point_in_cell(rng, bg);
                ev.lon = p.lon;
                ev.lat = p.lat;
                out.crimes.push_back(std::move(ev));
            }
        }
    }
    return out;
}

namespace {

std::string fmt(double value, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, value);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

}  // namespace

void write_bundle(const SynthCity& city, const EventBundle& events, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);

    {
        nlohmann::json features = nlohmann::json::array();
        for (const auto& bg : city.blockgroups) {
            nlohmann::json coords = nlohmann::json::array();
            nlohmann::json ring = nlohmann::json::array();
            for (const auto& v : bg.rings[0]) ring.push_back({v.lon, v.lat});
            coords.push_back(ring);
            features.push_back({{"type", "Feature"},
                                {"properties", {{"id", bg.id}}},
                                {"geometry", {{"type", "Polygon"}, {"coordinates", coords}}}});
        }
        nlohmann::json doc = {{"type", "FeatureCollection"}, {"features", features}};
        write_file(base / "blockgroups.geojson", doc.dump(2) + "\n");
    }

    {
        std::string csv = city.config.permits_by_blockgroup ? "date,blockgroup_id,event_type\n"
                                                            : "date,lat,lon,event_type\n";
        for (const auto& ev : events.permits) {
            if (city.config.permits_by_blockgroup) {
                csv += format_date(ev.date) + "," + *ev.blockgroup_id + "," + ev.raw_type + "\n";
            } else {
                csv += format_date(ev.date) + "," + fmt(*ev.lat, "%.8f") + "," +
                       fmt(*ev.lon, "%.8f") + "," + ev.raw_type + "\n";
            }
        }
        write_file(base / "permits.csv", csv);
    }

    {
        std::string csv = "date,time,lat,lon,crime_type\n";
        char time_buf[8];
        for (const auto& ev : events.crimes) {
            std::snprintf(time_buf, sizeof(time_buf), "%02d:%02d", ev.time->hour, ev.time->minute);
            csv += format_date(ev.date) + "," + time_buf + "," + fmt(*ev.lat, "%.8f") + "," +
                   fmt(*ev.lon, "%.8f") + "," + ev.raw_type + "\n";
        }
        write_file(base / "crimes.csv", csv);
    }

    {
        std::string csv =
            "blockgroup_id,population,prop_white,prop_black,prop_asian,prop_hispanic,"
            "prop_other,mean_income,poverty_index\n";
        for (const auto& unit : city.units) {
            const NeighborhoodProfile& p = unit.profile;
            csv += p.blockgroup_id + "," + fmt(p.population, "%.0f") + "," +
                   fmt(p.prop_white, "%.10f") + "," + fmt(p.prop_black, "%.10f") + "," +
                   fmt(p.prop_asian, "%.10f") + "," + fmt(p.prop_hispanic, "%.10f") + "," +
                   fmt(p.prop_other, "%.10f") + "," + fmt(p.mean_income, "%.2f") + "," +
                   fmt(p.poverty_index, "%.10f") + "\n";
        }
        write_file(base / "acs.csv", csv);
    }

    {
        std::string csv = "blockgroup_id,area_sqm,category\n";
        const char* cats[8] = {"commercial", "residential", "vacant", "transportation",
                               "industrial", "park",        "civic",  "other"};
        for (const auto& unit : city.units) {
            const NeighborhoodProfile& p = unit.profile;
            const double props[8] = {
                p.prop_commercial,     p.prop_residential, p.prop_vacant,
                p.prop_transportation, p.prop_industrial,  p.prop_park,
                p.prop_civic,
                1.0 - p.prop_commercial - p.prop_residential - p.prop_vacant -
                    p.prop_transportation - p.prop_industrial - p.prop_park - p.prop_civic};
            for (int c = 0; c < 8; ++c) {
                csv += p.blockgroup_id + "," + fmt(std::max(0.0, props[c] * p.total_area_sqm),
                                                   "%.4f") +
                       "," + cats[c] + "\n";
            }
        }
        write_file(base / "landuse.csv", csv);
    }

    {
        nlohmann::json truth;
        truth["seed"] = city.config.seed;
        truth["tau"] = city.config.tau;
        truth["noise"] = city.config.noise;
        truth["theta"] = city.config.theta;
        truth["years"] = city.years;
        truth["event_intercept"] = city.config.event_intercept;
        truth["event_coefs"] = city.config.event_coefs;
        truth["spont_intercept"] = city.config.spont_intercept;
        truth["spont_coefs"] = city.config.spont_coefs;
        truth["treat_intercept"] = city.config.treat_intercept;
        truth["treat_coefs"] = city.config.treat_coefs;
        truth["crime_intercept"] = city.config.crime_intercept;
        truth["crime_coefs"] = city.config.crime_coefs;
        nlohmann::json units = nlohmann::json::array();
        for (const auto& unit : city.units) {
            units.push_back({{"id", unit.id},
                             {"treated", unit.treated != 0},
                             {"event_trend", unit.event_trend},
                             {"spont_trend", unit.spont_trend},
                             {"crime_trend", unit.crime_trend},
                             {"crime_log_mean", unit.crime_log_mean},
                             {"event_total", unit.event_total()},
                             {"crime_total", unit.crime_total()}});
        }
        truth["units"] = units;
        write_file(base / "truth.json", truth.dump(2) + "\n");
    }
}

}  // namespace vibrancy::synth
