#include "vibrancy/psm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vibrancy/special.hpp"

namespace vibrancy::psm {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* to_string(MatchMode m) { return m == MatchMode::OneToOne ? "1:1" : "many:1"; }

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<char> treat_above_median(const std::vector<double>& values) {
    const double m = median(values);
    std::vector<char> treated(values.size(), 0);
    bool any_treated = false, any_control = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        treated[i] = values[i] > m ? 1 : 0;
        (treated[i] ? any_treated : any_control) = true;
    }
    if (!any_treated || !any_control) {
        throw InvalidInput("treat_above_median: values give no treated/control contrast");
    }
    return treated;
}

PropensityModel estimate_propensity(const Eigen::MatrixXd& covariates,
                                    const std::vector<std::string>& covariate_names,
                                    const std::vector<char>& treated) {
    const Eigen::Index n = covariates.rows();
    if (static_cast<Eigen::Index>(treated.size()) != n) {
        throw InvalidInput("estimate_propensity: treatment labels do not match the covariates");
    }
    Eigen::MatrixXd X(n, covariates.cols() + 1);
    X.leftCols(covariates.cols()) = covariates;
    X.col(covariates.cols()).setOnes();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = treated[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    std::vector<std::string> names = covariate_names;
    names.push_back("(Intercept)");

    PropensityModel model;
    model.fit = glm::fit_logistic(X, y, names);
    const Eigen::VectorXd p = glm::predict(model.fit, X);
    model.scores.assign(p.data(), p.data() + p.size());
    return model;
}

namespace {

double score_transform(double score, bool on_logit) {
    if (!on_logit) return score;
    const double s = std::clamp(score, 1e-12, 1.0 - 1e-12);
    return std::log(s / (1.0 - s));
}

}  // namespace

MatchResult match_pairs(const std::vector<std::string>& ids, const std::vector<double>& scores,
                        const std::vector<char>& treated, const MatchOptions& options) {
    const std::size_t n = ids.size();
    if (scores.size() != n || treated.size() != n) {
        throw InvalidInput("match_pairs: ids, scores and labels must align");
    }
    std::vector<std::size_t> treated_idx, control_idx;
    for (std::size_t i = 0; i < n; ++i) (treated[i] ? treated_idx : control_idx).push_back(i);
    if (treated_idx.empty() || control_idx.empty()) {
        throw InvalidInput("match_pairs: need at least one treated and one control unit");
    }

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = score_transform(scores[i], options.on_logit);

    double max_distance = std::numeric_limits<double>::infinity();
    if (options.caliper > 0.0) {
        double mean = 0.0;
        for (double v : d) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : d) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n > 1 ? n - 1 : 1);
        max_distance = options.caliper * std::sqrt(var);
    }

    // Descending score, ties by ascending id: a fixed, replayable order.
    std::sort(treated_idx.begin(), treated_idx.end(), [&](std::size_t a, std::size_t b) {
        if (d[a] != d[b]) return d[a] > d[b];
        return ids[a] < ids[b];
    });

    MatchResult out;
    out.mode = options.mode;
    std::vector<char> taken(n, 0);
    for (std::size_t t : treated_idx) {
        std::size_t best = static_cast<std::size_t>(-1);
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t c : control_idx) {
            if (options.mode == MatchMode::OneToOne && taken[c]) continue;
            const double dist = std::fabs(d[t] - d[c]);
            if (dist < best_dist || (dist == best_dist && best != static_cast<std::size_t>(-1) &&
                                     ids[c] < ids[best])) {
                best = c;
                best_dist = dist;
            }
        }
        if (best == static_cast<std::size_t>(-1) || best_dist > max_distance) {
            out.dropped_treated.push_back(t);
            continue;
        }
        out.pairs.emplace_back(t, best);
        if (options.mode == MatchMode::OneToOne) taken[best] = 1;
    }
    return out;
}

std::vector<BalanceRow> standardized_differences(const Eigen::MatrixXd& covariates,
                                                 const std::vector<std::string>& covariate_names,
                                                 const std::vector<char>& treated,
                                                 const MatchResult* match) {
    const Eigen::Index n = covariates.rows();
    const Eigen::Index k = covariates.cols();
    if (static_cast<Eigen::Index>(treated.size()) != n ||
        static_cast<Eigen::Index>(covariate_names.size()) != k) {
        throw InvalidInput("standardized_differences: shapes do not align");
    }

    auto mean_var = [](const std::vector<double>& xs) {
        const double n_d = static_cast<double>(xs.size());
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= n_d;
        double var = 0.0;
        for (double v : xs) var += (v - mean) * (v - mean);
        var = xs.size() > 1 ? var / (n_d - 1.0) : 0.0;
        return std::pair<double, double>{mean, var};
    };

    std::vector<BalanceRow> rows;
    rows.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        std::vector<double> xt, xc;
        for (Eigen::Index i = 0; i < n; ++i) {
            (treated[static_cast<std::size_t>(i)] ? xt : xc).push_back(covariates(i, j));
        }
        const auto [mt, vt] = mean_var(xt);
        const auto [mc, vc] = mean_var(xc);
        const double pooled = std::sqrt((vt + vc) / 2.0);

        BalanceRow row;
        row.covariate = covariate_names[static_cast<std::size_t>(j)];
        row.smd_before = pooled > 0.0 ? (mt - mc) / pooled : kNaN;
        row.smd_after = kNaN;
        if (match != nullptr && !match->pairs.empty() && pooled > 0.0) {
            double sum_t = 0.0, sum_c = 0.0;
            for (const auto& [t, c] : match->pairs) {
                sum_t += covariates(static_cast<Eigen::Index>(t), j);
                sum_c += covariates(static_cast<Eigen::Index>(c), j);
            }
            const double m = static_cast<double>(match->pairs.size());
            row.smd_after = (sum_t / m - sum_c / m) / pooled;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double wilcoxon_signed_rank_p(const std::vector<double>& diffs) {
    std::vector<double> nonzero;
    for (double v : diffs) {
        if (v != 0.0) nonzero.push_back(v);
    }
    const std::size_t n = nonzero.size();
    if (n == 0) return 1.0;

    // Average ranks of |d|, tracking ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(nonzero[a]) < std::fabs(nonzero[b]);
    });
    std::vector<double> rank(n);
    bool has_ties = false;
    double tie_correction = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n &&
               std::fabs(nonzero[order[j + 1]]) == std::fabs(nonzero[order[i]])) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1.0) {
            has_ties = true;
            tie_correction += t * t * t - t;
        }
        i = j + 1;
    }

    double w_plus = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (nonzero[k] > 0.0) w_plus += rank[k];
    }

    if (n <= 25 && !has_ties) {
        // Exact null distribution of W+ by subset-sum counting over {1..n}.
        const std::size_t max_sum = n * (n + 1) / 2;
        std::vector<double> counts(max_sum + 1, 0.0);
        counts[0] = 1.0;
        for (std::size_t r = 1; r <= n; ++r) {
            for (std::size_t s = max_sum; s >= r; --s) counts[s] += counts[s - r];
        }
        const double total = std::pow(2.0, static_cast<double>(n));
        const auto w = static_cast<std::size_t>(std::llround(w_plus));
        double below = 0.0, above = 0.0;
        for (std::size_t s = 0; s <= max_sum; ++s) {
            if (s <= w) below += counts[s];
            if (s >= w) above += counts[s];
        }
        return std::min(1.0, 2.0 * std::min(below, above) / total);
    }

    const double n_d = static_cast<double>(n);
    const double mean = n_d * (n_d + 1.0) / 4.0;
    const double var = n_d * (n_d + 1.0) * (2.0 * n_d + 1.0) / 24.0 - tie_correction / 48.0;
    if (var <= 0.0) return 1.0;
    double num = w_plus - mean;
    // Continuity correction toward the mean.
    if (num > 0.5) num -= 0.5;
    else if (num < -0.5) num += 0.5;
    else num = 0.0;
    return normal_two_sided_p(num / std::sqrt(var));
}

PairedInference paired_inference(const std::vector<double>& treated_outcome,
                                 const std::vector<double>& control_outcome) {
    if (treated_outcome.size() != control_outcome.size()) {
        throw InvalidInput("paired_inference: outcome vectors must align");
    }
    const std::size_t n = treated_outcome.size();
    if (n < 2) throw InvalidInput("paired_inference: need at least 2 pairs");

    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = treated_outcome[i] - control_outcome[i];

    PairedInference out;
    out.n_pairs = n;
    const double n_d = static_cast<double>(n);
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= n_d;
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= (n_d - 1.0);
    const double se = std::sqrt(var / n_d);

    out.mean_diff = mean;
    if (se > 0.0) {
        const double tq = t_quantile(0.975, n_d - 1.0);
        out.ci_lo = mean - tq * se;
        out.ci_hi = mean + tq * se;
        out.t_stat = mean / se;
        out.t_p = t_two_sided_p(out.t_stat, n_d - 1.0);
    } else {
        out.ci_lo = out.ci_hi = mean;
        if (mean == 0.0) {
            out.t_stat = 0.0;
            out.t_p = 1.0;
        } else {
            out.t_stat = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
            out.t_p = 0.0;
        }
    }
    out.wilcoxon_p = wilcoxon_signed_rank_p(diffs);
    return out;
}

OddsRatio discordant_odds_ratio(std::int64_t b, std::int64_t c) {
    if (b < 0 || c < 0) throw InvalidInput("discordant_odds_ratio: counts must be non-negative");
    OddsRatio out;
    out.b = b;
    out.c = c;
    if (b == 0 || c == 0) {
        out.defined = false;
        return out;
    }
    out.defined = true;
    out.value = static_cast<double>(b) / static_cast<double>(c);
    const double half_width =
        1.96 * std::sqrt(1.0 / static_cast<double>(b) + 1.0 / static_cast<double>(c));
    out.ci_lo = std::exp(std::log(out.value) - half_width);
    out.ci_hi = std::exp(std::log(out.value) + half_width);
    return out;
}

ExperimentResult run_experiment(const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& covariates,
                                const std::vector<std::string>& covariate_names,
                                const std::vector<signed char>& treated,
                                const std::vector<double>& outcome,
                                const ExperimentOptions& options) {
    const std::size_t n = ids.size();
    if (static_cast<std::size_t>(covariates.rows()) != n || treated.size() != n ||
        outcome.size() != n) {
        throw InvalidInput("run_experiment: inputs must align");
    }

    // Keep units with a defined label, outcome, and full covariate row.
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (treated[i] < 0 || std::isnan(outcome[i])) continue;
        bool finite = true;
        for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
            if (!std::isfinite(covariates(static_cast<Eigen::Index>(i), j))) {
                finite = false;
                break;
            }
        }
        if (finite) kept.push_back(i);
    }

    ExperimentResult out;
    out.n_units = kept.size();
    out.n_excluded = n - kept.size();

    Eigen::MatrixXd X(static_cast<Eigen::Index>(kept.size()), covariates.cols());
    std::vector<char> labels(kept.size());
    std::vector<double> y(kept.size());
    for (std::size_t r = 0; r < kept.size(); ++r) {
        X.row(static_cast<Eigen::Index>(r)) = covariates.row(static_cast<Eigen::Index>(kept[r]));
        labels[r] = treated[kept[r]] ? 1 : 0;
        y[r] = outcome[kept[r]];
        out.unit_ids.push_back(ids[kept[r]]);
    }
    for (char label : labels) (label ? out.n_treated : out.n_control) += 1;
    if (out.n_treated == 0 || out.n_control == 0) {
        throw InvalidInput("run_experiment: need treated and control units after exclusions");
    }

    out.propensity = estimate_propensity(X, covariate_names, labels);

    MatchOptions match_options;
    match_options.on_logit = options.on_logit;
    match_options.caliper = options.caliper;
    if (options.force_mode) {
        match_options.mode = *options.force_mode;
    } else {
        const double hi = static_cast<double>(std::max(out.n_treated, out.n_control));
        const double lo = static_cast<double>(std::min(out.n_treated, out.n_control));
        match_options.mode =
            hi / lo > options.imbalance_trigger ? MatchMode::ManyToOne : MatchMode::OneToOne;
    }
    out.mode = match_options.mode;
    out.match = match_pairs(out.unit_ids, out.propensity.scores, labels, match_options);
    out.balance = standardized_differences(X, covariate_names, labels, &out.match);

    std::vector<double> treated_outcome, control_outcome;
    treated_outcome.reserve(out.match.pairs.size());
    control_outcome.reserve(out.match.pairs.size());
    for (const auto& [t, c] : out.match.pairs) {
        treated_outcome.push_back(y[t]);
        control_outcome.push_back(y[c]);
    }
    out.inference = paired_inference(treated_outcome, control_outcome);

    bool binary = true;
    for (double v : y) {
        if (v != 0.0 && v != 1.0) {
            binary = false;
            break;
        }
    }
    if (binary) {
        std::int64_t b = 0, c_count = 0;
        for (std::size_t i = 0; i < treated_outcome.size(); ++i) {
            if (treated_outcome[i] == 1.0 && control_outcome[i] == 0.0) ++b;
            if (treated_outcome[i] == 0.0 && control_outcome[i] == 1.0) ++c_count;
        }
        const OddsRatio ratio = discordant_odds_ratio(b, c_count);
        out.inference.has_odds_ratio = true;
        out.inference.odds_ratio = ratio.value;
        out.inference.or_ci_lo = ratio.ci_lo;
        out.inference.or_ci_hi = ratio.ci_hi;
        out.inference.or_undefined = !ratio.defined;
        out.inference.discordant_b = ratio.b;
        out.inference.discordant_c = ratio.c;
    }

    double sum_t = 0.0, sum_c = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) (labels[i] ? sum_t : sum_c) += y[i];
    out.naive_diff = sum_t / static_cast<double>(out.n_treated) -
                     sum_c / static_cast<double>(out.n_control);
    return out;
}

}  // namespace vibrancy::psm
