#include "vibrancy/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vibrancy/special.hpp"

namespace vibrancy::glm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kThetaBoundary = 1e6;

std::vector<std::string> default_names(std::vector<std::string> names, Eigen::Index p) {
    if (names.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    }
    if (static_cast<Eigen::Index>(names.size()) != p) {
        throw InvalidInput("coefficient names do not match the design width");
    }
    return names;
}

// (X'WX)^{-1} from a column-pivoted QR of sqrt(W)X; checks rank and names the
// dependent columns on failure.
Eigen::MatrixXd weighted_unscaled_vcov(const Eigen::MatrixXd& Xw,
                                       const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
    const Eigen::Index p = Xw.cols();
    if (qr.rank() < p) {
        std::string dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            if (!dependent.empty()) dependent += ", ";
            dependent += names[static_cast<std::size_t>(perm[k])];
        }
        throw InvalidInput("rank-deficient design; dependent columns: " + dependent);
    }
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rinv = R.inverse();
    Eigen::MatrixXd inner = Rinv * Rinv.transpose();
    const Eigen::MatrixXd P = qr.colsPermutation();
    return P * inner * P.transpose();
}

void fill_wald_stats(FitResult& fit, bool t_distribution, double df) {
    const Eigen::Index p = fit.coefficients.size();
    fit.std_errors.resize(p);
    fit.test_statistics.resize(p);
    fit.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.std_errors[j] = std::sqrt(std::max(0.0, fit.vcov(j, j)));
        const double stat =
            fit.std_errors[j] > 0.0 ? fit.coefficients[j] / fit.std_errors[j] : kNaN;
        fit.test_statistics[j] = stat;
        if (std::isnan(stat)) {
            fit.p_values[j] = kNaN;
        } else {
            fit.p_values[j] = t_distribution ? t_two_sided_p(stat, df) : normal_two_sided_p(stat);
        }
    }
}

Eigen::VectorXd solve_weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                  const Eigen::VectorXd& w,
                                  const std::vector<std::string>& names) {
    const Eigen::VectorXd sw = w.array().sqrt();
    const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    const Eigen::VectorXd zw = sw.asDiagonal() * z;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
    if (qr.rank() < X.cols()) {
        std::string dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) {
            if (!dependent.empty()) dependent += ", ";
            dependent += names[static_cast<std::size_t>(perm[k])];
        }
        throw InvalidInput("rank-deficient design; dependent columns: " + dependent);
    }
    return qr.solve(zw);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

const char* to_string(Family f) {
    switch (f) {
        case Family::OLS: return "ols";
        case Family::Logistic: return "logistic";
        case Family::Poisson: return "poisson";
        default: return "negbin";
    }
}

double FitResult::coef(const std::string& term) const {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i] == term) return coefficients[static_cast<Eigen::Index>(i)];
    }
    throw InvalidInput("unknown term: " + term);
}

FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  std::vector<std::string> names) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (y.size() != n) throw InvalidInput("fit_ols: X and y row counts differ");
    if (n <= p) throw InvalidInput("fit_ols: need more observations than predictors");

    FitResult fit;
    fit.family = Family::OLS;
    fit.terms = default_names(std::move(names), p);
    fit.n_obs = static_cast<std::size_t>(n);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) {
        std::string dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            if (!dependent.empty()) dependent += ", ";
            dependent += fit.terms[static_cast<std::size_t>(perm[k])];
        }
        throw InvalidInput("rank-deficient design; dependent columns: " + dependent);
    }
    fit.coefficients = qr.solve(y);

    const Eigen::VectorXd residuals = y - X * fit.coefficients;
    const double rss = residuals.squaredNorm();
    const double df = static_cast<double>(n - p);
    const double sigma2 = rss / df;

    fit.vcov = sigma2 * weighted_unscaled_vcov(X, fit.terms);
    fill_wald_stats(fit, /*t_distribution=*/true, df);

    const double mean_y = y.mean();
    const double tss = (y.array() - mean_y).matrix().squaredNorm();
    if (tss > 0.0) {
        fit.r_squared = 1.0 - rss / tss;
        fit.adj_r_squared =
            1.0 - (1.0 - fit.r_squared) * static_cast<double>(n - 1) / df;
    }
    fit.rmse = std::sqrt(rss / static_cast<double>(n));
    fit.converged = true;
    return fit;
}

double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
    return ll;
}

Eigen::VectorXd logistic_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    const Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    return X.transpose() * (y - mu);
}

double poisson_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        ll += y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y[i] + 1.0);
    }
    return ll;
}

Eigen::VectorXd poisson_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& beta) {
    const Eigen::VectorXd mu = (X * beta).array().exp().matrix();
    return X.transpose() * (y - mu);
}

double negbin_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, double theta) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double mu = std::exp(eta[i]);
        ll += std::lgamma(y[i] + theta) - std::lgamma(theta) - std::lgamma(y[i] + 1.0) +
              theta * std::log(theta) + y[i] * eta[i] - (theta + y[i]) * std::log(theta + mu);
    }
    return ll;
}

Eigen::VectorXd negbin_score_beta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& beta, double theta) {
    const Eigen::VectorXd mu = (X * beta).array().exp().matrix();
    const Eigen::VectorXd resid =
        ((y - mu).array() * theta / (theta + mu.array())).matrix();
    return X.transpose() * resid;
}

double negbin_score_theta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta, double theta) {
    const Eigen::VectorXd mu = (X * beta).array().exp().matrix();
    double score = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        score += digamma(y[i] + theta) - digamma(theta) + std::log(theta) + 1.0 -
                 std::log(theta + mu[i]) - (y[i] + theta) / (theta + mu[i]);
    }
    return score;
}

namespace {

struct IrlsModel {
    Family family;
    double theta = 0.0;  // NB only

    double loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& beta) const {
        switch (family) {
            case Family::Logistic: return logistic_loglik(X, y, beta);
            case Family::Poisson: return poisson_loglik(X, y, beta);
            default: return negbin_loglik(X, y, beta, theta);
        }
    }

    Eigen::VectorXd score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta) const {
        switch (family) {
            case Family::Logistic: return logistic_score(X, y, beta);
            case Family::Poisson: return poisson_score(X, y, beta);
            default: return negbin_score_beta(X, y, beta, theta);
        }
    }

    // Fisher weights and working response at eta.
    void working(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, Eigen::VectorXd& w,
                 Eigen::VectorXd& z) const {
        const Eigen::Index n = eta.size();
        w.resize(n);
        z.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (family == Family::Logistic) {
                const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
                const double v = std::max(mu * (1.0 - mu), 1e-10);
                w[i] = v;
                z[i] = eta[i] + (y[i] - mu) / v;
            } else {
                const double mu = std::max(std::exp(eta[i]), 1e-10);
                const double wi =
                    family == Family::Poisson ? mu : theta * mu / (theta + mu);
                w[i] = std::max(wi, 1e-10);
                z[i] = eta[i] + (y[i] - mu) / mu;
            }
        }
    }
};

// Shared IRLS driver with step halving; returns iterations used and leaves
// beta at the last iterate. Convergence: max |score| < 1e-8, or relative
// log-likelihood change < rel_tol when rel_tol > 0 (the NB inner loop
// disables the likelihood criterion and drives the score alone).
struct IrlsOutcome {
    bool converged = false;
    int iterations = 0;
    double loglik = 0.0;
};

IrlsOutcome run_irls(const IrlsModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<std::string>& names, Eigen::VectorXd& beta, int max_iter,
                     double rel_tol = 1e-10) {
    IrlsOutcome out;
    double ll = model.loglik(X, y, beta);
    Eigen::VectorXd w, z;
    for (int iter = 1; iter <= max_iter; ++iter) {
        out.iterations = iter;
        const Eigen::VectorXd eta = X * beta;
        model.working(eta, y, w, z);
        const Eigen::VectorXd proposal = solve_weighted_ls(X, z, w, names);
        Eigen::VectorXd step = proposal - beta;
        // Tolerate rounding-level decreases so the search cannot stall at
        // the optimum where the likelihood is flat to double precision.
        const double noise = 1e-10 * (1.0 + std::fabs(ll));
        double new_ll = model.loglik(X, y, proposal);
        Eigen::VectorXd candidate = proposal;
        int halvings = 0;
        while ((std::isnan(new_ll) || new_ll < ll - noise) && halvings < 40) {
            step *= 0.5;
            candidate = beta + step;
            new_ll = model.loglik(X, y, candidate);
            ++halvings;
        }
        const double rel_change = std::fabs(new_ll - ll) / (std::fabs(ll) + 1e-10);
        beta = candidate;
        ll = new_ll;
        const double max_score = model.score(X, y, beta).cwiseAbs().maxCoeff();
        if (max_score < 1e-8 || (rel_tol > 0.0 && rel_change < rel_tol)) {
            out.converged = true;
            break;
        }
    }
    out.loglik = ll;
    return out;
}

FitResult finish_likelihood_fit(Family family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& beta, std::vector<std::string> names,
                                double theta, int iterations) {
    FitResult fit;
    fit.family = family;
    fit.terms = std::move(names);
    fit.n_obs = static_cast<std::size_t>(X.rows());
    fit.coefficients = beta;
    fit.iterations = iterations;

    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd w(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (family == Family::Logistic) {
            const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
            w[i] = std::max(mu * (1.0 - mu), 1e-12);
        } else {
            const double mu = std::exp(eta[i]);
            w[i] = family == Family::Poisson ? mu : theta * mu / (theta + mu);
            w[i] = std::max(w[i], 1e-12);
        }
    }
    const Eigen::MatrixXd Xw = w.array().sqrt().matrix().asDiagonal() * X;
    fit.vcov = weighted_unscaled_vcov(Xw, fit.terms);
    fill_wald_stats(fit, /*t_distribution=*/false, 0.0);

    double k = static_cast<double>(X.cols());
    switch (family) {
        case Family::Logistic: fit.log_likelihood = logistic_loglik(X, y, beta); break;
        case Family::Poisson: fit.log_likelihood = poisson_loglik(X, y, beta); break;
        default:
            fit.log_likelihood = negbin_loglik(X, y, beta, theta);
            fit.theta = theta;
            k += 1.0;  // dispersion is estimated too
            break;
    }
    fit.aic = 2.0 * k - 2.0 * fit.log_likelihood;

    if (family != Family::Logistic) {
        // Log-scale RMSE over positive counts, mirroring the OLS reporting.
        double sse = 0.0;
        std::size_t m = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] > 0.0) {
                const double d = std::log(y[i]) - eta[i];
                sse += d * d;
                ++m;
            }
        }
        if (m > 0) fit.rmse = std::sqrt(sse / static_cast<double>(m));
    }
    return fit;
}

void check_binary(const Eigen::VectorXd& y) {
    bool any0 = false, any1 = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) any0 = true;
        else if (y[i] == 1.0) any1 = true;
        else throw InvalidInput("fit_logistic: outcome must be 0/1");
    }
    if (!any0 || !any1) throw InvalidInput("fit_logistic: outcome has no contrast (all 0 or all 1)");
}

void check_counts(const Eigen::VectorXd& y, const char* who) {
    bool variation = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] < 0.0 || y[i] != std::floor(y[i])) {
            throw InvalidInput(std::string(who) + ": outcome must be non-negative integers");
        }
        if (y[i] != y[0]) variation = true;
    }
    if (!variation) throw InvalidInput(std::string(who) + ": outcome has no variation");
}

}  // namespace

FitResult fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       std::vector<std::string> names, int max_iter) {
    if (y.size() != X.rows()) throw InvalidInput("fit_logistic: X and y row counts differ");
    check_binary(y);
    auto terms = default_names(std::move(names), X.cols());

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    IrlsModel model{Family::Logistic};
    const IrlsOutcome irls = run_irls(model, X, y, terms, beta, max_iter);
    // A deviance at numerical zero means every observation is fitted exactly:
    // perfect separation, where the MLE does not exist.
    const bool separated = logistic_loglik(X, y, beta) > -1e-6;
    if (!irls.converged || separated || beta.cwiseAbs().maxCoeff() > 1e4) {
        FitResult last = finish_likelihood_fit(Family::Logistic, X, y, beta, terms, 0.0,
                                               irls.iterations);
        last.converged = false;
        throw NonConvergence(
            separated ? "fit_logistic: perfect separation detected (diverging coefficients)"
                      : "fit_logistic: no convergence after " + std::to_string(irls.iterations) +
                            " iterations",
            std::move(last));
    }
    FitResult fit = finish_likelihood_fit(Family::Logistic, X, y, beta, terms, 0.0,
                                          irls.iterations);
    fit.converged = true;
    return fit;
}

FitResult fit_poisson(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      std::vector<std::string> names, int max_iter) {
    if (y.size() != X.rows()) throw InvalidInput("fit_poisson: X and y row counts differ");
    check_counts(y, "fit_poisson");
    auto terms = default_names(std::move(names), X.cols());

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    IrlsModel model{Family::Poisson};
    const IrlsOutcome irls = run_irls(model, X, y, terms, beta, max_iter);
    if (!irls.converged) {
        FitResult last =
            finish_likelihood_fit(Family::Poisson, X, y, beta, terms, 0.0, irls.iterations);
        last.converged = false;
        throw NonConvergence("fit_poisson: no convergence after " +
                                 std::to_string(irls.iterations) + " iterations",
                             std::move(last));
    }
    FitResult fit = finish_likelihood_fit(Family::Poisson, X, y, beta, terms, 0.0,
                                          irls.iterations);
    fit.converged = true;
    return fit;
}

namespace {

// Newton in log(theta) on the profile likelihood, beta fixed. Returns the
// updated theta, stopping early if it crosses the quasi-Poisson boundary.
double update_theta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta, double theta) {
    const Eigen::VectorXd mu = (X * beta).array().exp().matrix();
    for (int iter = 0; iter < 60; ++iter) {
        double score = 0.0, score_deriv = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            score += digamma(y[i] + theta) - digamma(theta) + std::log(theta) + 1.0 -
                     std::log(theta + mu[i]) - (y[i] + theta) / (theta + mu[i]);
            score_deriv += trigamma(y[i] + theta) - trigamma(theta) + 1.0 / theta -
                           2.0 / (theta + mu[i]) +
                           (y[i] + theta) / ((theta + mu[i]) * (theta + mu[i]));
        }
        // d/du with u = log(theta): gradient g = theta*score, curvature
        // h = theta*score + theta^2*score'. When the profile likelihood is
        // monotone (underdispersed data) the step stays ~1 per iteration and
        // theta climbs to the quasi-Poisson boundary.
        const double g = theta * score;
        const double h = theta * score + theta * theta * score_deriv;
        double du = h < 0.0 ? -g / h : (g > 0.0 ? 0.5 : -0.5);
        du = std::clamp(du, -2.0, 2.0);
        if (std::fabs(du) < 1e-10) break;
        theta *= std::exp(du);
        if (theta >= kThetaBoundary) return kThetaBoundary;
        theta = std::max(theta, 1e-8);
    }
    return theta;
}

}  // namespace

FitResult fit_negbin(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::vector<std::string> names, int max_outer) {
    if (y.size() != X.rows()) throw InvalidInput("fit_negbin: X and y row counts differ");
    check_counts(y, "fit_negbin");
    auto terms = default_names(std::move(names), X.cols());

    // Poisson start for the coefficients, moment start for theta.
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    {
        IrlsModel poisson{Family::Poisson};
        run_irls(poisson, X, y, terms, beta, 50);
    }
    double theta;
    {
        const Eigen::VectorXd mu = (X * beta).array().exp().matrix();
        double num = 0.0, den = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            num += mu[i] * mu[i];
            den += (y[i] - mu[i]) * (y[i] - mu[i]) - mu[i];
        }
        theta = den > 0.0 ? std::clamp(num / den, 1e-3, kThetaBoundary) : kThetaBoundary;
    }

    bool boundary = theta >= kThetaBoundary;
    int total_iters = 0;
    bool converged = boundary;
    if (!boundary) {
        for (int outer = 0; outer < max_outer; ++outer) {
            IrlsModel model{Family::NegativeBinomial, theta};
            const IrlsOutcome irls = run_irls(model, X, y, terms, beta, 50, /*rel_tol=*/0.0);
            total_iters += irls.iterations;
            theta = update_theta(X, y, beta, theta);
            if (theta >= kThetaBoundary) {
                boundary = true;
                converged = true;
                break;
            }
            const double beta_score =
                negbin_score_beta(X, y, beta, theta).cwiseAbs().maxCoeff();
            const double theta_score = std::fabs(negbin_score_theta(X, y, beta, theta));
            if (std::max(beta_score, theta_score) < 1e-8) {
                converged = true;
                break;
            }
        }
    }
    if (boundary) {
        // Quasi-Poisson regime: pin theta at the boundary and refresh beta.
        theta = kThetaBoundary;
        IrlsModel model{Family::NegativeBinomial, theta};
        const IrlsOutcome irls = run_irls(model, X, y, terms, beta, 100);
        total_iters += irls.iterations;
    }
    if (!converged) {
        FitResult last = finish_likelihood_fit(Family::NegativeBinomial, X, y, beta, terms,
                                               theta, total_iters);
        last.converged = false;
        throw NonConvergence("fit_negbin: no convergence after " + std::to_string(max_outer) +
                                 " outer iterations",
                             std::move(last));
    }

    FitResult fit = finish_likelihood_fit(Family::NegativeBinomial, X, y, beta, terms, theta,
                                          total_iters);
    fit.converged = true;
    fit.theta_at_boundary = boundary;
    return fit;
}

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& X) {
    if (X.cols() != fit.coefficients.size()) {
        throw InvalidInput("predict: design width does not match the fitted coefficients");
    }
    const Eigen::VectorXd eta = X * fit.coefficients;
    switch (fit.family) {
        case Family::OLS: return eta;
        case Family::Logistic: return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        default: return eta.array().exp().matrix();
    }
}

const std::vector<double>& ColumnTable::at(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw InvalidInput("unknown column: " + name);
    return it->second;
}

const std::vector<std::string>& profile_covariates() {
    static const std::vector<std::string> cols = {
        "log_income",  "poverty",     "log_population", "black",      "hispanic",
        "area_1e6",    "commercial",  "residential",    "vacant",     "transportation",
        "industrial",  "park",        "civic"};
    return cols;
}

namespace {

// Derived-column rules: log transforms for income/population, the 1e-6 area
// rescale, pass-through for everything else.
std::vector<double> resolve_column(const ColumnTable& table, const std::string& name) {
    if (table.has(name)) return table.at(name);
    auto log_of = [&](const std::string& src) {
        std::vector<double> out = table.at(src);
        for (auto& v : out) v = v > 0.0 ? std::log(v) : kNaN;
        return out;
    };
    if (name == "log_income") return log_of("mean_income");
    if (name == "log_population") return log_of("population");
    if (name == "area_1e6") {
        std::vector<double> out = table.at("total_area_sqm");
        for (auto& v : out) v *= 1e-6;
        return out;
    }
    throw InvalidInput("unknown column: " + name);
}

}  // namespace

Eigen::MatrixXd column_matrix(const ColumnTable& table, const std::vector<std::string>& names) {
    const Eigen::Index n = static_cast<Eigen::Index>(table.row_ids.size());
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const std::vector<double> col = resolve_column(table, names[j]);
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, static_cast<Eigen::Index>(j)) = col[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

Design build_design(const ColumnTable& table, const ModelSpec& spec) {
    for (std::size_t i = 0; i < spec.predictors.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.predictors.size(); ++j) {
            if (spec.predictors[i] == spec.predictors[j]) {
                throw InvalidInput("duplicate predictor: " + spec.predictors[i]);
            }
        }
        if (spec.predictors[i] == spec.outcome) {
            throw InvalidInput("outcome cannot appear among the predictors");
        }
    }

    std::vector<double> outcome = resolve_column(table, spec.outcome);
    if (spec.transform == Transform::Log) {
        for (auto& v : outcome) v = v > 0.0 ? std::log(v) : kNaN;
    }
    std::vector<std::vector<double>> cols;
    cols.reserve(spec.predictors.size());
    for (const auto& name : spec.predictors) cols.push_back(resolve_column(table, name));

    const std::size_t n = table.row_ids.size();
    std::vector<std::size_t> kept;
    Design design;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = !std::isnan(outcome[i]);
        for (const auto& c : cols) ok = ok && !std::isnan(c[i]);
        if (ok) {
            kept.push_back(i);
            design.kept_ids.push_back(table.row_ids[i]);
        } else {
            design.dropped_ids.push_back(table.row_ids[i]);
        }
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(kept.size());
    const Eigen::Index p = static_cast<Eigen::Index>(cols.size()) + 1;
    design.X.resize(rows, p);
    design.y.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        design.y[r] = outcome[kept[static_cast<std::size_t>(r)]];
        for (std::size_t c = 0; c < cols.size(); ++c) {
            design.X(r, static_cast<Eigen::Index>(c)) = cols[c][kept[static_cast<std::size_t>(r)]];
        }
        design.X(r, p - 1) = 1.0;
    }
    design.colnames = spec.predictors;
    design.colnames.push_back("(Intercept)");

    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto col = design.X.col(static_cast<Eigen::Index>(c));
        if (rows > 0 && (col.array() - col[0]).abs().maxCoeff() == 0.0) {
            throw InvalidInput("zero-variance predictor after filtering: " + spec.predictors[c]);
        }
    }
    return design;
}

FitResult fit(const Design& design, const ModelSpec& spec) {
    switch (spec.family) {
        case Family::OLS: return fit_ols(design.X, design.y, design.colnames);
        case Family::Logistic: return fit_logistic(design.X, design.y, design.colnames);
        case Family::Poisson: return fit_poisson(design.X, design.y, design.colnames);
        default: return fit_negbin(design.X, design.y, design.colnames);
    }
}

std::string significance_stars(double p) {
    if (std::isnan(p)) return "";
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    if (p < 0.1) return "+";
    return "";
}

}  // namespace vibrancy::glm
