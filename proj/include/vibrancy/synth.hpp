#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vibrancy/rng.hpp"
#include "vibrancy/types.hpp"

namespace vibrancy::synth {

// Generator configuration. Covariate effects are linear models keyed on:
//   income      standardized log mean income
//   population  standardized log population
//   poverty     latent poverty score (standard normal, loaded on income)
//   black, hispanic, commercial, residential, vacant   raw proportions
// The seed fully determines every output.
struct CityConfig {
    int grid_rows = 10;
    int grid_cols = 10;
    std::uint64_t seed = 1;
    int first_year = 2006;
    int last_year = 2015;

    double origin_lon = -75.30;
    double origin_lat = 39.90;
    double cell_deg = 0.01;

    double log_income_mean = 10.8;
    double log_income_sd = 0.5;
    double log_population_mean = 7.0;
    double log_population_sd = 0.35;
    double poverty_income_loading = 0.7;
    std::vector<double> race_alpha = {6.0, 6.0, 1.5, 2.0, 0.5};  // white..other
    std::vector<double> landuse_alpha = {1.2, 8.0, 1.2, 0.8,
                                         0.8, 0.8, 0.6, 0.8};  // commercial..other

    double event_intercept = 1.7;  // log yearly block-party intensity
    std::map<std::string, double> event_coefs;
    double spont_intercept = 2.5;  // logit of per-event spontaneity
    std::map<std::string, double> spont_coefs;
    double treat_intercept = -0.3;  // logit of treatment probability
    std::map<std::string, double> treat_coefs;
    double crime_intercept = 2.6;  // log yearly crime mean
    std::map<std::string, double> crime_coefs;
    double tau = 0.0;  // planted treatment effect on the log crime mean

    std::string noise = "poisson";  // "poisson" | "negbin"
    double theta = 2.0;             // NB2 dispersion when noise == "negbin"

    // Planted per-year trends: fractions of units and slope magnitudes.
    double frac_event_trend_pos = 0.0, frac_event_trend_neg = 0.0;
    double event_trend_mag = 0.10;  // log intensity per year
    double frac_spont_trend_pos = 0.0, frac_spont_trend_neg = 0.0;
    double spont_trend_mag = 0.35;  // logit per year
    double frac_crime_trend_pos = 0.0, frac_crime_trend_neg = 0.0;
    double crime_trend_mag = 0.08;  // log mean per year

    double warm_month_multiplier = 2.0;  // May-September event seasonality
    bool permits_by_blockgroup = false;  // emit blockgroup_id instead of lat/lon

    int n_blockgroups() const { return grid_rows * grid_cols; }
};

// Per-unit ground truth plus the sampled yearly counts.
struct UnitData {
    std::string id;
    NeighborhoodProfile profile;
    char treated = 0;
    double event_trend = 0.0;  // planted slopes (log/logit per year)
    double spont_trend = 0.0;
    double crime_trend = 0.0;
    double crime_log_mean = 0.0;  // per-year log mean at the center year, incl. tau
    std::vector<std::int64_t> yearly_regular;      // indexed by year - first_year
    std::vector<std::int64_t> yearly_spontaneous;
    std::vector<std::int64_t> yearly_crimes;

    std::int64_t event_total() const;
    std::int64_t crime_total() const;
};

struct SynthCity {
    CityConfig config;
    std::vector<int> years;
    std::vector<BlockGroup> blockgroups;  // ordered by id
    std::vector<UnitData> units;          // same order
};

// Covariates, treatment labels, planted trends and yearly counts; no point
// events yet (materialize_events adds those when files are needed).
SynthCity generate_city(const CityConfig& config);

struct EventBundle {
    std::vector<PointEvent> permits;
    std::vector<PointEvent> crimes;
};

// Places each counted event uniformly inside its block group on a random
// in-window date (permits get the warm-month multiplier) and draws a concrete
// type from the default taxonomies. Deterministic given the city.
EventBundle materialize_events(const SynthCity& city);

// Writes blockgroups.geojson, permits.csv, crimes.csv, acs.csv, landuse.csv
// and truth.json into dir (created if needed). Byte-identical per seed.
void write_bundle(const SynthCity& city, const EventBundle& events, const std::string& dir);

}  // namespace vibrancy::synth
