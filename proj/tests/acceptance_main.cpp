// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 10 needs the real city inputs and prints SKIPPED-DATA
// when they are absent. argv[1] is the CLI binary (used by the pipeline
// determinism and real-data criteria).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vibrancy/geometry.hpp"
#include "vibrancy/glm.hpp"
#include "vibrancy/ingest.hpp"
#include "vibrancy/measures.hpp"
#include "vibrancy/pipeline.hpp"
#include "vibrancy/psm.hpp"
#include "vibrancy/rng.hpp"
#include "vibrancy/synth.hpp"
#include "vibrancy/trends.hpp"

namespace fs = std::filesystem;
using namespace vibrancy;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void report_skip(int criterion, const std::string& what, const std::string& why) {
    std::printf("[SKIP] criterion %d: %s -- %s\n", criterion, what.c_str(), why.c_str());
    std::fflush(stdout);
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename F>
double golden_section_max(F f, double lo, double hi) {
    const double phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-12) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Collected logistic/Poisson/NB fits; criterion 2 verifies scores on all.
struct FitRecord {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    glm::FitResult fit;
};
std::vector<FitRecord> g_fit_log;

void remember(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const glm::FitResult& fit) {
    if (fit.family != glm::Family::OLS && fit.converged) g_fit_log.push_back({X, y, fit});
}

// ------------------------------------------------------------------ 1
void criterion_1_glm_oracles() {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;

    // 20 OLS fixtures vs the normal-equations oracle.
    Rng rng(1001);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 10 + static_cast<int>(rng.uniform_index(41));  // <= 50
        const int p = 2 + static_cast<int>(rng.uniform_index(5));    // <= 6
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j + 1 < p; ++j) X(i, j) = rng.normal();
            X(i, p - 1) = 1.0;
            y[i] = rng.normal(0.0, 1.5);
        }
        const auto fit = glm::fit_ols(X, y);
        const Eigen::VectorXd oracle = (X.transpose() * X).inverse() * (X.transpose() * y);
        worst = std::max(worst, (fit.coefficients - oracle).cwiseAbs().maxCoeff());
    }
    if (worst >= 1e-10) {
        pass = false;
        detail += "OLS max deviation " + std::to_string(worst) + "; ";
    }

    // Logistic single-predictor fit vs golden-section likelihood maximization.
    {
        Rng lrng(7);
        Eigen::MatrixXd X(20, 1);
        Eigen::VectorXd y(20);
        for (int i = 0; i < 20; ++i) {
            X(i, 0) = lrng.normal();
            y[i] = lrng.bernoulli(1.0 / (1.0 + std::exp(-1.2 * X(i, 0)))) ? 1.0 : 0.0;
        }
        const auto fit = glm::fit_logistic(X, y);
        remember(X, y, fit);
        const double oracle = golden_section_max(
            [&](double b) {
                Eigen::VectorXd beta(1);
                beta[0] = b;
                return glm::logistic_loglik(X, y, beta);
            },
            -20.0, 20.0);
        if (std::fabs(fit.coefficients[0] - oracle) >= 1e-6) {
            pass = false;
            detail += "logistic oracle gap " + std::to_string(fit.coefficients[0] - oracle) + "; ";
        }
    }

    // NB single-predictor coefficient vs golden-section at the fitted theta.
    {
        Rng nrng(31);
        const int n = 200;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0 + 0.3 * nrng.normal();
            const double mu = std::exp(0.8 * X(i, 0));
            y[i] = static_cast<double>(nrng.poisson(nrng.gamma(2.0, mu / 2.0)));
        }
        const auto fit = glm::fit_negbin(X, y);
        remember(X, y, fit);
        const double oracle = golden_section_max(
            [&](double b) {
                Eigen::VectorXd beta(1);
                beta[0] = b;
                return glm::negbin_loglik(X, y, beta, fit.theta);
            },
            -10.0, 10.0);
        if (std::fabs(fit.coefficients[0] - oracle) >= 1e-6) {
            pass = false;
            detail += "negbin oracle gap " + std::to_string(fit.coefficients[0] - oracle) + "; ";
        }
    }

    const double secs = elapsed_s(start);
    if (secs >= 5.0) {
        pass = false;
        detail += "runtime " + std::to_string(secs) + "s >= 5s";
    }
    report(1, pass, "GLM oracle equivalence (OLS 1e-10, logistic/NB 1e-6, < 5 s)", detail);
}

// ------------------------------------------------------------------ 2
void criterion_2_score_checks() {
    bool pass = !g_fit_log.empty();
    double worst_score = 0.0, worst_fd = 0.0;
    for (const auto& record : g_fit_log) {
        const auto& X = record.X;
        const auto& y = record.y;
        const auto& fit = record.fit;
        Eigen::VectorXd score;
        auto loglik = [&](const Eigen::VectorXd& b) {
            switch (fit.family) {
                case glm::Family::Logistic: return glm::logistic_loglik(X, y, b);
                case glm::Family::Poisson: return glm::poisson_loglik(X, y, b);
                default: return glm::negbin_loglik(X, y, b, fit.theta);
            }
        };
        switch (fit.family) {
            case glm::Family::Logistic: score = glm::logistic_score(X, y, fit.coefficients); break;
            case glm::Family::Poisson: score = glm::poisson_score(X, y, fit.coefficients); break;
            default: score = glm::negbin_score_beta(X, y, fit.coefficients, fit.theta); break;
        }
        worst_score = std::max(worst_score, score.cwiseAbs().maxCoeff());
        const double scale = std::max(1.0, std::fabs(loglik(fit.coefficients)));
        for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::fabs(fit.coefficients[j]));
            Eigen::VectorXd hi = fit.coefficients, lo = fit.coefficients;
            hi[j] += h;
            lo[j] -= h;
            const double fd = (loglik(hi) - loglik(lo)) / (2.0 * h);
            worst_fd = std::max(worst_fd, std::fabs(fd - score[j]) / scale);
        }
    }
    if (worst_score >= 1e-6 || worst_fd >= 1e-4) pass = false;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu fits checked, max |score| %.2e, max FD gap %.2e",
                  g_fit_log.size(), worst_score, worst_fd);
    report(2, pass, "analytic score ~ 0 and matches finite differences at every converged fit",
           buf);
}

// ------------------------------------------------------------------ 3
void criterion_3_negbin_limits() {
    bool pass = true;
    std::string detail;

    {  // Poisson-generated data: quasi-Poisson boundary.
        Rng rng(42);
        const int n = 2000;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = 1.0;
            y[i] = static_cast<double>(rng.poisson(std::exp(1.6 + 0.4 * X(i, 0))));
        }
        const auto nb = glm::fit_negbin(X, y);
        const auto poisson = glm::fit_poisson(X, y);
        remember(X, y, poisson);
        const double gap = (nb.coefficients - poisson.coefficients).cwiseAbs().maxCoeff();
        char buf[120];
        std::snprintf(buf, sizeof(buf), "boundary=%d, poisson gap %.2e; ",
                      nb.theta_at_boundary ? 1 : 0, gap);
        detail += buf;
        if (!nb.theta_at_boundary || !nb.converged || gap >= 1e-3) pass = false;
    }

    {  // NB2-generated data: dispersion and coefficient recovery.
        Rng rng(777);
        const int n = 5000;
        const double theta_true = 2.0;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.normal();
            X(i, 1) = 1.0;
            const double mu = std::exp(1.0 + 0.5 * X(i, 0));
            y[i] = static_cast<double>(rng.poisson(rng.gamma(theta_true, mu / theta_true)));
        }
        const auto fit = glm::fit_negbin(X, y);
        remember(X, y, fit);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "theta %.3f, coefficient gaps %.4f/%.4f vs 3SE %.4f/%.4f",
                      fit.theta, std::fabs(fit.coefficients[0] - 0.5),
                      std::fabs(fit.coefficients[1] - 1.0), 3 * fit.std_errors[0],
                      3 * fit.std_errors[1]);
        detail += buf;
        if (fit.theta < 1.6 || fit.theta > 2.5) pass = false;
        if (std::fabs(fit.coefficients[0] - 0.5) >= 3 * fit.std_errors[0]) pass = false;
        if (std::fabs(fit.coefficients[1] - 1.0) >= 3 * fit.std_errors[1]) pass = false;
    }
    report(3, pass, "NB limits: Poisson boundary flag and NB2 theta/coefficient recovery", detail);
}

// ------------------------------------------------------------------ 4
void criterion_4_matching() {
    bool pass = true;
    std::string detail;

    {  // Hand-traced fixture.
        const std::vector<std::string> ids = {"t1", "t2", "c1", "c2", "c3"};
        const auto result =
            psm::match_pairs(ids, {0.9, 0.5, 0.85, 0.55, 0.10}, {1, 1, 0, 0, 0}, {});
        const bool ok = result.pairs.size() == 2 && ids[result.pairs[0].first] == "t1" &&
                        ids[result.pairs[0].second] == "c1" &&
                        ids[result.pairs[1].first] == "t2" &&
                        ids[result.pairs[1].second] == "c2";
        if (!ok) {
            pass = false;
            detail += "hand-trace fixture mismatch; ";
        }
    }

    {  // Greedy certificate by replay on 100 random configurations.
        Rng rng(31337);
        int violations = 0;
        int configs = 0;
        while (configs < 100) {
            const std::size_t n = 6 + rng.uniform_index(50);
            std::vector<std::string> ids;
            std::vector<double> scores;
            std::vector<char> treated;
            bool any_t = false, any_c = false;
            for (std::size_t i = 0; i < n; ++i) {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "u%03zu", i);
                ids.push_back(buf);
                scores.push_back(0.02 + 0.96 * rng.uniform());
                const bool t = rng.bernoulli(0.4);
                treated.push_back(t ? 1 : 0);
                (t ? any_t : any_c) = true;
            }
            if (!any_t || !any_c) continue;
            ++configs;
            const auto result = psm::match_pairs(ids, scores, treated, {});
            auto logit = [](double s) {
                const double c = std::clamp(s, 1e-12, 1.0 - 1e-12);
                return std::log(c / (1.0 - c));
            };
            std::set<std::size_t> available;
            for (std::size_t i = 0; i < n; ++i) {
                if (!treated[i]) available.insert(i);
            }
            for (const auto& [t, c] : result.pairs) {
                const double dist = std::fabs(logit(scores[t]) - logit(scores[c]));
                for (std::size_t other : available) {
                    if (dist > std::fabs(logit(scores[t]) - logit(scores[other])) + 1e-15) {
                        ++violations;
                    }
                }
                available.erase(c);
            }
        }
        if (violations != 0) {
            pass = false;
            detail += std::to_string(violations) + " certificate violations; ";
        }
    }

    {  // Confounded fixture (treated minority): matching improves mean |SMD|.
        Rng rng(808);
        const int n = 800;
        std::vector<std::string> ids;
        Eigen::MatrixXd X(n, 3);
        std::vector<signed char> treated(n);
        std::vector<double> outcome(n);
        for (int i = 0; i < n; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "u%04d", i);
            ids.push_back(buf);
            const double z = rng.normal();
            X(i, 0) = z;
            X(i, 1) = 0.5 * z + rng.normal();
            X(i, 2) = rng.normal();
            treated[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-(z - 1.2)))) ? 1 : 0;
            outcome[i] = z + rng.normal();
        }
        const auto result = psm::run_experiment(ids, X, {"a", "b", "c"}, treated, outcome, {});
        double before = 0.0, after = 0.0;
        for (const auto& row : result.balance) {
            before += std::fabs(row.smd_before);
            after += std::fabs(row.smd_after);
        }
        before /= static_cast<double>(result.balance.size());
        after /= static_cast<double>(result.balance.size());
        char buf[100];
        std::snprintf(buf, sizeof(buf), "mean |SMD| %.3f -> %.3f", before, after);
        detail += buf;
        if (!(after <= before)) pass = false;
    }
    report(4, pass, "matching: greedy certificate, hand-trace fixture, SMD improvement", detail);
}

// ------------------------------------------------------------------ 5
synth::CityConfig confounded_config(std::uint64_t seed, int rows, int cols, double tau) {
    synth::CityConfig config;
    config.grid_rows = rows;
    config.grid_cols = cols;
    config.seed = seed;
    config.tau = tau;
    // Treated minority with income-driven selection: naive comparisons are
    // biased, and the control pool is deep enough for 1:1 matching.
    config.treat_intercept = -1.2;
    config.treat_coefs = {{"income", 1.2}};
    config.crime_intercept = 2.2;
    config.crime_coefs = {{"income", 0.3}};
    config.noise = "negbin";
    config.theta = 2.0;
    return config;
}

struct CausalEstimate {
    double matched = 0.0;
    double naive = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool valid = false;
};

CausalEstimate estimate_effect(const synth::SynthCity& city) {
    const std::size_t n = city.units.size();
    glm::ColumnTable table;
    auto& cols = table.columns;
    for (const auto& unit : city.units) {
        const NeighborhoodProfile& p = unit.profile;
        table.row_ids.push_back(unit.id);
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
    }
    const Eigen::MatrixXd covariates = glm::column_matrix(table, glm::profile_covariates());
    std::vector<signed char> treated(n);
    std::vector<double> outcome(n);
    for (std::size_t i = 0; i < n; ++i) {
        treated[i] = city.units[i].treated;
        const auto total = city.units[i].crime_total();
        outcome[i] = total > 0 ? std::log(static_cast<double>(total))
                               : std::numeric_limits<double>::quiet_NaN();
    }
    CausalEstimate out;
    try {
        // 0.1-SD caliper: restrict pairs to common support so the paired CI
        // is valid for the homogeneous planted effect.
        psm::ExperimentOptions options;
        options.caliper = 0.1;
        const auto result = psm::run_experiment(table.row_ids, covariates,
                                                glm::profile_covariates(), treated, outcome,
                                                options);
        out.matched = result.inference.mean_diff;
        out.naive = result.naive_diff;
        out.ci_lo = result.inference.ci_lo;
        out.ci_hi = result.inference.ci_hi;
        out.valid = true;
    } catch (const Error&) {
        out.valid = false;
    }
    return out;
}

void criterion_5_causal_recovery() {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;

    {  // Planted effect with income confounding, n = 2000 block groups.
        const auto city = synth::generate_city(confounded_config(20240209, 40, 50, 0.2));
        const auto est = estimate_effect(city);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "matched %.4f (target 0.2), naive %.4f; ", est.matched,
                      est.naive);
        detail += buf;
        if (!est.valid || std::fabs(est.matched - 0.2) >= 0.05) pass = false;
        if (!(std::fabs(est.naive - 0.2) > 0.1)) pass = false;
    }

    {  // Null coverage across 100 seeds.
        int covered = 0, valid = 0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            const auto city = synth::generate_city(confounded_config(seed, 20, 25, 0.0));
            const auto est = estimate_effect(city);
            if (!est.valid) continue;
            ++valid;
            if (est.ci_lo <= 0.0 && 0.0 <= est.ci_hi) ++covered;
        }
        char buf[100];
        std::snprintf(buf, sizeof(buf), "null CI coverage %d/%d", covered, valid);
        detail += buf;
        if (covered < 90 || valid < 95) pass = false;
    }

    const double secs = elapsed_s(start);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "; %.1fs", secs);
    detail += buf;
    if (secs >= 60.0) pass = false;
    report(5, pass,
           "causal recovery: matched estimate within +/-0.05, naive biased > 0.1, null coverage",
           detail);
}

// ------------------------------------------------------------------ 6
void criterion_6_paired_exactness() {
    bool pass = true;
    std::string detail;
    const auto inference = psm::paired_inference({2, 4, 6}, {1, 2, 3});  // diffs {1,2,3}
    if (std::fabs(inference.ci_lo - (-0.4845)) >= 1e-3 ||
        std::fabs(inference.ci_hi - 4.4845) >= 1e-3) {
        pass = false;
        char buf[100];
        std::snprintf(buf, sizeof(buf), "CI [%.5f, %.5f]; ", inference.ci_lo, inference.ci_hi);
        detail += buf;
    }
    const double w = psm::wilcoxon_signed_rank_p({1, 2, 3, 4, 5});
    if (std::fabs(w - 0.0625) > 1e-12) {
        pass = false;
        detail += "wilcoxon p " + std::to_string(w) + "; ";
    }
    const auto ratio = psm::discordant_odds_ratio(6, 3);
    if (!ratio.defined || ratio.value != 2.0) {
        pass = false;
        detail += "OR " + std::to_string(ratio.value);
    }
    report(6, pass, "paired inference exactness: t CI, exact Wilcoxon, discordant OR", detail);
}

// ------------------------------------------------------------------ 7
void criterion_7_spatial_join() {
    std::vector<BlockGroup> groups;
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 5; ++c) {
            BlockGroup bg;
            char id[16];
            std::snprintf(id, sizeof(id), "G%02d", r * 5 + c);
            bg.id = id;
            const double x = c, y = r;
            bg.rings.push_back({{x, y}, {x + 1, y}, {x + 1, y + 1}, {x, y + 1}, {x, y}});
            bg.area_sqm = 1.0;
            groups.push_back(std::move(bg));
        }
    }
    Rng rng(99);
    std::vector<PointEvent> events;
    std::vector<LonLat> points;
    for (int i = 0; i < 12000; ++i) {
        const LonLat p{rng.uniform(-0.5, 5.5), rng.uniform(-0.5, 5.5)};
        points.push_back(p);
        PointEvent ev;
        ev.date = Date{2010, 1, 1};
        ev.lon = p.lon;
        ev.lat = p.lat;
        events.push_back(ev);
    }
    const auto assignment = ingest::assign_points(events, groups, 4);
    std::size_t disagreements = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::optional<std::string> oracle;
        for (const auto& bg : groups) {
            if (group_contains(bg, points[i])) {
                if (!oracle || bg.id < *oracle) oracle = bg.id;
            }
        }
        if (assignment.blockgroup_ids[i] != oracle) ++disagreements;
    }
    report(7, disagreements == 0,
           "spatial join equals the naive all-pairs oracle on 12000 points over a 25-cell grid",
           std::to_string(disagreements) + " disagreements");
}

// ------------------------------------------------------------------ 8
void criterion_8_trend_classification() {
    synth::CityConfig config;
    config.grid_rows = 25;
    config.grid_cols = 24;  // 600 units
    config.seed = 515151;
    config.crime_intercept = 5.0;  // ~148 crimes/yr: a strong planted signal
    config.frac_crime_trend_pos = 0.10;
    config.crime_trend_mag = 0.08;
    const auto city = synth::generate_city(config);

    std::map<std::string, std::map<std::string, std::vector<std::pair<int, double>>>> series;
    std::map<std::string, double> truth;
    for (const auto& unit : city.units) {
        std::vector<std::pair<int, double>> values;
        for (std::size_t t = 0; t < city.years.size(); ++t) {
            values.push_back({city.years[t], static_cast<double>(unit.yearly_crimes[t])});
        }
        series[unit.id]["crime_total"] = values;
        truth[unit.id] = unit.crime_trend;
    }
    const auto result = trends::classify_all(series, 0.05);
    int planted = 0, hits = 0, nulls = 0, false_pos = 0;
    for (const auto& r : result.results) {
        if (truth.at(r.blockgroup_id) > 0.0) {
            ++planted;
            if (r.classification == trends::TrendClass::Positive) ++hits;
        } else {
            ++nulls;
            if (r.classification != trends::TrendClass::None) ++false_pos;
        }
    }
    const double recall = planted > 0 ? static_cast<double>(hits) / planted : 0.0;
    const double fp_rate = nulls > 0 ? static_cast<double>(false_pos) / nulls : 1.0;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "recall %.3f (n=%d), false-positive rate %.3f (n=%d)", recall,
                  planted, fp_rate, nulls);
    report(8, recall >= 0.9 && fp_rate <= 0.075,
           "trend classification: recall >= 0.9, FP rate <= 0.075 at alpha 0.05", buf);
}

// ------------------------------------------------------------------ 9
bool tree_equal(const fs::path& a, const fs::path& b, std::string& why) {
    std::map<std::string, fs::path> files_a, files_b;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.is_regular_file()) files_a[fs::relative(entry.path(), a).string()] = entry.path();
    }
    for (const auto& entry : fs::recursive_directory_iterator(b)) {
        if (entry.is_regular_file()) files_b[fs::relative(entry.path(), b).string()] = entry.path();
    }
    if (files_a.size() != files_b.size()) {
        why = "file counts differ";
        return false;
    }
    for (const auto& [rel, path] : files_a) {
        auto it = files_b.find(rel);
        if (it == files_b.end()) {
            why = "missing " + rel;
            return false;
        }
        std::ifstream fa(path, std::ios::binary), fb(it->second, std::ios::binary);
        std::ostringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        if (sa.str() != sb.str()) {
            why = rel + " differs";
            return false;
        }
    }
    return true;
}

void criterion_9_pipeline_determinism(const std::string& cli) {
    bool pass = true;
    std::string detail;
    const fs::path base = fs::temp_directory_path() / "vibrancy_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);

    const std::string config_template = R"({
        "schema_version": 1,
        "seed": 4242,
        "synth": {"grid_rows": 8, "grid_cols": 8, "seed": 4242,
                  "event_intercept": 1.6, "event_coefs": {"income": 0.4},
                  "crime_intercept": 2.6, "crime_coefs": {"income": 0.5},
                  "frac_event_trend_pos": 0.15, "frac_event_trend_neg": 0.15,
                  "frac_spont_trend_pos": 0.15, "frac_spont_trend_neg": 0.15,
                  "frac_crime_trend_pos": 0.15, "frac_crime_trend_neg": 0.15},
        "out": "OUTDIR"})";

    auto run_all = [&](const std::string& tag) -> fs::path {
        const fs::path out = base / tag;
        std::string config_text = config_template;
        config_text.replace(config_text.find("OUTDIR"), 6, out.string());
        const fs::path config_path = base / (tag + ".json");
        std::ofstream(config_path) << config_text;
        const std::string command = cli + " all --config " + config_path.string() + " 2>/dev/null";
        const int rc = std::system(command.c_str());
        if (rc != 0) {
            pass = false;
            detail += "CLI exited " + std::to_string(rc) + "; ";
        }
        return out;
    };

    const fs::path run1 = run_all("run1");
    const fs::path run2 = run_all("run2");
    std::string why;
    if (pass && !tree_equal(run1, run2, why)) {
        pass = false;
        detail += "trees differ: " + why + "; ";
    }

    // Experiment report: exactly 14 data rows (2 aggregate + 12 trend).
    std::ifstream experiments(run1 / "experiments.csv");
    std::string line;
    int rows = -1;  // skip the header
    while (std::getline(experiments, line)) ++rows;
    if (rows != 14) {
        pass = false;
        detail += "experiments.csv rows " + std::to_string(rows);
    }
    report(9, pass, "pipeline determinism: byte-identical reruns, 14 experiment rows", detail);
    fs::remove_all(base);
}

// ------------------------------------------------------------------ 10
void criterion_10_real_data(const std::string& cli) {
    const char* env = std::getenv("VIBRANCY_PHILLY_DIR");
    const fs::path dir = env != nullptr ? fs::path(env) : fs::path("data/philadelphia");
    const char* needed[] = {"permits.csv", "crimes.csv", "blockgroups.geojson", "acs.csv",
                            "landuse.csv"};
    bool present = fs::exists(dir);
    for (const char* name : needed) present = present && fs::exists(dir / name);
    if (!present) {
        report_skip(10, "reproduce the published city-scale estimates",
                    "SKIPPED-DATA: place the real inputs under data/philadelphia or set "
                    "VIBRANCY_PHILLY_DIR");
        return;
    }

    bool pass = true;
    std::string detail;
    const fs::path out = fs::temp_directory_path() / "vibrancy_philly_run";
    fs::remove_all(out);
    const fs::path config_path = fs::temp_directory_path() / "vibrancy_philly.json";
    {
        std::ofstream config(config_path);
        config << "{\"schema_version\":1,\"inputs\":{"
               << "\"permits\":\"" << (dir / "permits.csv").string() << "\","
               << "\"crimes\":\"" << (dir / "crimes.csv").string() << "\","
               << "\"blockgroups\":\"" << (dir / "blockgroups.geojson").string() << "\","
               << "\"acs\":\"" << (dir / "acs.csv").string() << "\","
               << "\"landuse\":\"" << (dir / "landuse.csv").string() << "\"},"
               << "\"out\":\"" << out.string() << "\"}";
    }
    const int rc = std::system((cli + " all --config " + config_path.string()).c_str());
    if (rc != 0) {
        report(10, false, "real-data reproduction", "pipeline exited " + std::to_string(rc));
        return;
    }

    // Model 1 permit-count coefficient 0.002 (SE 0.0003) within rounding.
    {
        std::ifstream report_csv(out / "regression_report.csv");
        std::string line;
        bool found = false;
        double estimate = 0.0, se = 0.0;
        while (std::getline(report_csv, line)) {
            if (line.rfind("ols_log_total_permits,", 0) == 0 &&
                line.find(",n_events,") != std::string::npos) {
                std::stringstream ss(line);
                std::string field;
                std::vector<std::string> fields;
                while (std::getline(ss, field, ',')) fields.push_back(field);
                estimate = std::stod(fields[4]);
                se = std::stod(fields[5]);
                found = true;
            }
        }
        if (!found || std::fabs(estimate - 0.002) > 0.0005 || std::fabs(se - 0.0003) > 0.00015) {
            pass = false;
            detail += "model-1 permit coefficient mismatch; ";
        }
    }

    // Aggregate permit experiment CI near [0.173, 0.273] and the
    // spontaneity-trend crime-slope estimate negative and significant.
    {
        std::ifstream experiments(out / "experiments.csv");
        std::string line;
        bool agg_ok = false, trend_ok = false;
        while (std::getline(experiments, line)) {
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ss, field, ',')) fields.push_back(field);
            if (fields.empty()) continue;
            if (fields[0] == "agg_permits" && fields.size() > 15) {
                const double lo = std::stod(fields[12]), hi = std::stod(fields[13]);
                agg_ok = std::fabs(lo - 0.173) < 0.1 && std::fabs(hi - 0.273) < 0.1;
            }
            if (fields[0] == "trend_spont_pos_x_crime_slope" && fields.size() > 15) {
                const double estimate = std::stod(fields[11]);
                const double wilcoxon = std::stod(fields[15]);
                trend_ok = estimate < 0.0 && wilcoxon < 0.05;
            }
        }
        if (!agg_ok || !trend_ok) {
            pass = false;
            detail += "experiment estimates out of range";
        }
    }
    report(10, pass, "real-data reproduction of the published estimates", detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "./vibrancy";
    criterion_1_glm_oracles();
    criterion_3_negbin_limits();  // populates the fit log criterion 2 verifies
    criterion_2_score_checks();
    criterion_4_matching();
    criterion_5_causal_recovery();
    criterion_6_paired_exactness();
    criterion_7_spatial_join();
    criterion_8_trend_classification();
    criterion_9_pipeline_determinism(cli);
    criterion_10_real_data(cli);
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all runnable criteria passed\n");
    return 0;
}
