#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "vibrancy/calendar.hpp"
#include "vibrancy/errors.hpp"
#include "vibrancy/ingest.hpp"
#include "vibrancy/synth.hpp"

namespace vibrancy::pipeline {

// A referenced input path does not exist; the CLI maps this to exit code 2.
class MissingFile : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    int schema_version = 1;
    std::string permits_path;
    std::string crimes_path;
    std::string blockgroups_path;
    std::string acs_path;
    std::string landuse_path;
    DateWindow permit_window = ingest::default_permit_window();
    DateWindow crime_window = ingest::default_crime_window();
    std::string event_types_path;  // empty: built-in defaults
    std::string crime_types_path;
    std::string out_dir = "out";
    double alpha = 0.05;
    double caliper = 0.0;
    bool match_on_logit = true;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::optional<synth::CityConfig> synth_config;

    static RunConfig from_json_file(const std::string& path);
};

// Pipeline stages; each writes its artifacts under config.out_dir and raises
// Error (MissingFile for absent inputs / upstream artifacts) on failure.
// Artifacts: synth -> input bundle + truth.json; ingest -> assigned.csv +
// ingest_report.json; measures -> measures.csv, series.csv, correlations.csv;
// trends -> trends.csv; regress -> regression_report.csv; match ->
// experiments.csv + balance_*.csv; report -> report.geojson, city_yearly.csv.
void cmd_synth(const RunConfig& config);
void cmd_ingest(const RunConfig& config);
void cmd_measures(const RunConfig& config);
void cmd_trends(const RunConfig& config);
void cmd_regress(const RunConfig& config);
void cmd_match(const RunConfig& config);
void cmd_report(const RunConfig& config);
void cmd_all(const RunConfig& config);

}  // namespace vibrancy::pipeline
