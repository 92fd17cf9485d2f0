#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vibrancy/glm.hpp"

namespace vibrancy::psm {

enum class MatchMode { OneToOne, ManyToOne };

const char* to_string(MatchMode m);

// Above-median treatment rule: treated iff value strictly above the median of
// the supplied values (ties at the median go to control). All-equal values
// raise InvalidInput since the rule gives no contrast.
std::vector<char> treat_above_median(const std::vector<double>& values);

double median(std::vector<double> values);

struct PropensityModel {
    glm::FitResult fit;
    std::vector<double> scores;  // fitted treatment probabilities
};

// Logistic regression of the treatment indicator on the covariates (an
// intercept is appended internally). Scores never involve the outcome.
PropensityModel estimate_propensity(const Eigen::MatrixXd& covariates,
                                    const std::vector<std::string>& covariate_names,
                                    const std::vector<char>& treated);

struct MatchOptions {
    MatchMode mode = MatchMode::OneToOne;
    // Match on the linear predictor (logit of the score) rather than the raw
    // probability; the variance-stabilizing default.
    bool on_logit = true;
    // Maximum allowed distance in SD units of the (transformed) scores over
    // all units; 0 disables the caliper.
    double caliper = 0.0;
};

struct MatchResult {
    MatchMode mode = MatchMode::OneToOne;
    // (treated index, control index) into the input vectors.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> dropped_treated;
};

// OneToOne: greedy nearest-neighbor without replacement; treated units are
// processed in descending score order (ties by ascending id) and each takes
// the unmatched control minimizing the score distance, distance ties broken
// by the smaller control id. ManyToOne: every treated unit takes its nearest
// control with replacement.
MatchResult match_pairs(const std::vector<std::string>& ids, const std::vector<double>& scores,
                        const std::vector<char>& treated, const MatchOptions& options = {});

struct BalanceRow {
    std::string covariate;
    double smd_before = 0.0;
    double smd_after = 0.0;  // NaN when no pairs / zero pooled variance
};

// Standardized mean differences (mean_T - mean_C) / sqrt((s2_T + s2_C)/2).
// After-matching means use matched units only, controls weighted by
// multiplicity; the denominator always comes from the pre-matching group
// variances so both columns share one scale.
std::vector<BalanceRow> standardized_differences(const Eigen::MatrixXd& covariates,
                                                 const std::vector<std::string>& covariate_names,
                                                 const std::vector<char>& treated,
                                                 const MatchResult* match = nullptr);

// Two-sided Wilcoxon signed-rank p-value: zeros dropped, exact enumeration
// for n <= 25 without ties, otherwise normal approximation with tie and
// continuity corrections.
double wilcoxon_signed_rank_p(const std::vector<double>& diffs);

struct PairedInference {
    double mean_diff = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double t_stat = 0.0;
    double t_p = 1.0;
    double wilcoxon_p = 1.0;
    std::size_t n_pairs = 0;
    bool has_odds_ratio = false;
    double odds_ratio = std::numeric_limits<double>::quiet_NaN();
    double or_ci_lo = std::numeric_limits<double>::quiet_NaN();
    double or_ci_hi = std::numeric_limits<double>::quiet_NaN();
    bool or_undefined = false;
    std::int64_t discordant_b = 0;  // treated 1, control 0
    std::int64_t discordant_c = 0;  // treated 0, control 1
};

// Within-pair treated-minus-control differences: mean, t-based 95% CI with
// n-1 df, two-sided t and Wilcoxon p-values. Needs at least two pairs.
PairedInference paired_inference(const std::vector<double>& treated_outcome,
                                 const std::vector<double>& control_outcome);

struct OddsRatio {
    double value = std::numeric_limits<double>::quiet_NaN();
    double ci_lo = std::numeric_limits<double>::quiet_NaN();
    double ci_hi = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
    std::int64_t b = 0;
    std::int64_t c = 0;
};

// Conditional (discordant-pair) odds ratio b/c with the usual log-scale CI.
OddsRatio discordant_odds_ratio(std::int64_t b, std::int64_t c);

struct ExperimentOptions {
    std::optional<MatchMode> force_mode;
    double imbalance_trigger = 3.0;  // group-size ratio that flips to ManyToOne
    bool on_logit = true;
    double caliper = 0.0;
};

struct ExperimentResult {
    MatchMode mode = MatchMode::OneToOne;
    std::size_t n_units = 0;     // units entering the experiment
    std::size_t n_excluded = 0;  // dropped for undefined treatment/outcome/covariates
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    std::vector<std::string> unit_ids;  // kept units, matching the index space below
    PropensityModel propensity;
    MatchResult match;
    std::vector<BalanceRow> balance;
    PairedInference inference;
    double naive_diff = 0.0;  // unmatched treated-minus-control mean outcome
};

// Full experiment: exclusion, propensity estimation, mode selection, greedy
// matching, balance diagnostics and paired inference. `treated` uses -1 for
// undefined (excluded) units; NaN marks undefined outcome/covariate cells.
ExperimentResult run_experiment(const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& covariates,
                                const std::vector<std::string>& covariate_names,
                                const std::vector<signed char>& treated,
                                const std::vector<double>& outcome,
                                const ExperimentOptions& options = {});

}  // namespace vibrancy::psm
