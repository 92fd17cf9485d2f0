#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "vibrancy/glm.hpp"
#include "vibrancy/ingest.hpp"
#include "vibrancy/pipeline.hpp"
#include "vibrancy/psm.hpp"
#include "vibrancy/synth.hpp"
#include "vibrancy/taxonomy.hpp"
#include "vibrancy/trends.hpp"

namespace py = pybind11;
using namespace vibrancy;

namespace {

py::dict fit_to_dict(const glm::FitResult& fit) {
    py::dict out;
    out["family"] = std::string(glm::to_string(fit.family));
    out["terms"] = fit.terms;
    out["coefficients"] = fit.coefficients;
    out["std_errors"] = fit.std_errors;
    out["statistics"] = fit.test_statistics;
    out["p_values"] = fit.p_values;
    out["vcov"] = fit.vcov;
    out["n_obs"] = fit.n_obs;
    out["r_squared"] = fit.r_squared;
    out["adj_r_squared"] = fit.adj_r_squared;
    out["log_likelihood"] = fit.log_likelihood;
    out["aic"] = fit.aic;
    out["rmse"] = fit.rmse;
    out["theta"] = fit.theta;
    out["theta_at_boundary"] = fit.theta_at_boundary;
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    return out;
}

py::dict inference_to_dict(const psm::PairedInference& inf) {
    py::dict out;
    out["mean_diff"] = inf.mean_diff;
    out["ci"] = py::make_tuple(inf.ci_lo, inf.ci_hi);
    out["t_stat"] = inf.t_stat;
    out["t_p"] = inf.t_p;
    out["wilcoxon_p"] = inf.wilcoxon_p;
    out["n_pairs"] = inf.n_pairs;
    if (inf.has_odds_ratio) {
        out["odds_ratio"] = inf.or_undefined ? py::object(py::none())
                                             : py::object(py::float_(inf.odds_ratio));
        out["odds_ratio_ci"] = py::make_tuple(inf.or_ci_lo, inf.or_ci_hi);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Neighborhood vibrancy and crime analysis core";

    m.def(
        "fit_ols",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
            return fit_to_dict(glm::fit_ols(X, y, std::move(names)));
        },
        py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{});
    m.def(
        "fit_logistic",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
            return fit_to_dict(glm::fit_logistic(X, y, std::move(names)));
        },
        py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{});
    m.def(
        "fit_poisson",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
            return fit_to_dict(glm::fit_poisson(X, y, std::move(names)));
        },
        py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{});
    m.def(
        "fit_negbin",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
            return fit_to_dict(glm::fit_negbin(X, y, std::move(names)));
        },
        py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{});

    m.def("classify_event", [](const std::string& raw) {
        return std::string(measures::to_string(measures::EventTaxonomy::defaults().classify(raw)));
    });
    m.def("classify_crime", [](const std::string& raw) {
        return std::string(measures::to_string(measures::CrimeTaxonomy::defaults().classify(raw)));
    });

    m.def(
        "assign_points",
        [](const std::vector<double>& lons, const std::vector<double>& lats,
           const std::string& geojson_path) {
            if (lons.size() != lats.size()) throw InvalidInput("lons and lats must align");
            const auto groups = ingest::parse_blockgroups(geojson_path);
            std::vector<PointEvent> events(lons.size());
            for (std::size_t i = 0; i < lons.size(); ++i) {
                events[i].lon = lons[i];
                events[i].lat = lats[i];
            }
            const auto result = ingest::assign_points(events, groups);
            py::list out;
            for (const auto& id : result.blockgroup_ids) {
                out.append(id ? py::object(py::str(*id)) : py::object(py::none()));
            }
            return out;
        },
        py::arg("lons"), py::arg("lats"), py::arg("blockgroups_geojson"));

    m.def(
        "match_pairs",
        [](const std::vector<std::string>& ids, const std::vector<double>& scores,
           const std::vector<bool>& treated, const std::string& mode, bool on_logit,
           double caliper) {
            psm::MatchOptions options;
            options.mode = mode == "many:1" ? psm::MatchMode::ManyToOne : psm::MatchMode::OneToOne;
            options.on_logit = on_logit;
            options.caliper = caliper;
            std::vector<char> labels(treated.begin(), treated.end());
            const auto result = psm::match_pairs(ids, scores, labels, options);
            py::list pairs;
            for (const auto& [t, c] : result.pairs) pairs.append(py::make_tuple(ids[t], ids[c]));
            py::list dropped;
            for (std::size_t t : result.dropped_treated) dropped.append(ids[t]);
            return py::make_tuple(pairs, dropped);
        },
        py::arg("ids"), py::arg("scores"), py::arg("treated"), py::arg("mode") = "1:1",
        py::arg("on_logit") = true, py::arg("caliper") = 0.0);

    m.def(
        "paired_inference",
        [](const std::vector<double>& treated, const std::vector<double>& control) {
            return inference_to_dict(psm::paired_inference(treated, control));
        },
        py::arg("treated"), py::arg("control"));
    m.def("wilcoxon_signed_rank_p", &psm::wilcoxon_signed_rank_p, py::arg("diffs"));
    m.def(
        "discordant_odds_ratio",
        [](std::int64_t b, std::int64_t c) {
            const auto result = psm::discordant_odds_ratio(b, c);
            py::dict out;
            out["defined"] = result.defined;
            out["value"] = result.value;
            out["ci"] = py::make_tuple(result.ci_lo, result.ci_hi);
            return out;
        },
        py::arg("b"), py::arg("c"));

    m.def(
        "fit_yearly_trend",
        [](const std::vector<int>& years, const std::vector<double>& values, double alpha) {
            if (years.size() != values.size()) throw InvalidInput("years and values must align");
            std::vector<std::pair<int, double>> series;
            for (std::size_t i = 0; i < years.size(); ++i) series.push_back({years[i], values[i]});
            const auto r = trends::fit_yearly_trend(series, alpha);
            py::dict out;
            out["slope"] = r.slope;
            out["slope_se"] = r.slope_se;
            out["p_value"] = r.p_value;
            out["class"] = std::string(trends::to_string(r.classification));
            out["n_years"] = r.n_years;
            return out;
        },
        py::arg("years"), py::arg("values"), py::arg("alpha") = 0.05);

    m.def(
        "generate_city",
        [](const std::string& config_json, const std::string& out_dir) {
            pipeline::RunConfig config;
            if (!config_json.empty()) {
                // Reuse the pipeline's synth-config parser via a JSON document.
                nlohmann::json doc = nlohmann::json::parse(config_json);
                nlohmann::json wrapper = {{"schema_version", 1}, {"synth", doc}};
                const std::string tmp = out_dir + "/.synth_config.json";
                std::filesystem::create_directories(out_dir);
                std::ofstream f(tmp);
                f << wrapper.dump();
                f.close();
                config = pipeline::RunConfig::from_json_file(tmp);
                std::filesystem::remove(tmp);
            }
            config.out_dir = out_dir;
            pipeline::cmd_synth(config);
        },
        py::arg("config_json"), py::arg("out_dir"));

    m.def(
        "run",
        [](const std::string& command, const std::string& config_path) {
            const auto config = pipeline::RunConfig::from_json_file(config_path);
            if (command == "synth") pipeline::cmd_synth(config);
            else if (command == "ingest") pipeline::cmd_ingest(config);
            else if (command == "measures") pipeline::cmd_measures(config);
            else if (command == "trends") pipeline::cmd_trends(config);
            else if (command == "regress") pipeline::cmd_regress(config);
            else if (command == "match") pipeline::cmd_match(config);
            else if (command == "report") pipeline::cmd_report(config);
            else if (command == "all") pipeline::cmd_all(config);
            else throw InvalidInput("unknown command: " + command);
        },
        py::arg("command"), py::arg("config_path"));

    py::register_exception<Error>(m, "VibrancyError");
}
