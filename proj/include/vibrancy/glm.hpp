#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "vibrancy/errors.hpp"

namespace vibrancy::glm {

enum class Family { OLS, Logistic, Poisson, NegativeBinomial };

const char* to_string(Family f);

struct FitResult {
    Family family = Family::OLS;
    std::vector<std::string> terms;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd test_statistics;  // t for OLS, z otherwise
    Eigen::VectorXd p_values;
    Eigen::MatrixXd vcov;
    std::size_t n_obs = 0;
    double r_squared = std::numeric_limits<double>::quiet_NaN();      // OLS only
    double adj_r_squared = std::numeric_limits<double>::quiet_NaN();  // OLS only
    double log_likelihood = std::numeric_limits<double>::quiet_NaN();
    double aic = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double theta = std::numeric_limits<double>::quiet_NaN();  // NB2 dispersion
    bool theta_at_boundary = false;
    bool converged = true;
    int iterations = 0;

    double coef(const std::string& term) const;
};

// Convergence failure (separation, max_iter exhausted) carrying the last
// iterate so callers can inspect the partial fit.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& msg, FitResult last)
        : Error(msg), last_iterate(std::move(last)) {}
    FitResult last_iterate;
};

// Ordinary least squares through column-pivoted QR. Requires n > p and full
// column rank; rank deficiency raises InvalidInput naming the dependent
// columns. Standard errors use RSS/(n-p); RMSE is sqrt(RSS/n).
FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  std::vector<std::string> names = {});

// Logistic regression by IRLS with step halving; converges when either the
// max absolute score drops below 1e-8 or the relative log-likelihood change
// drops below 1e-10. Throws NonConvergence after max_iter iterations.
FitResult fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       std::vector<std::string> names = {}, int max_iter = 100);

// Poisson log-link regression (also used to initialize the NB2 fit).
FitResult fit_poisson(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      std::vector<std::string> names = {}, int max_iter = 100);

// NB2 regression (variance mu + mu^2/theta): alternating IRLS for the
// coefficients and 1-D Newton in log(theta) on the profile likelihood, until
// the joint score is below 1e-8. theta crossing 1e6 is reported as the
// quasi-Poisson boundary with converged=true and theta_at_boundary set.
FitResult fit_negbin(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::vector<std::string> names = {}, int max_outer = 200);

// Mean predictions on the family's response scale.
Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& X);

// Log-likelihoods and analytic scores, exposed for convergence verification.
double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta);
double poisson_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta);
Eigen::VectorXd poisson_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& beta);
double negbin_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, double theta);
Eigen::VectorXd negbin_score_beta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& beta, double theta);
double negbin_score_theta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta, double theta);

// --- model specification over a named-column table ---------------------

// Column store keyed by name; NaN marks an undefined cell.
struct ColumnTable {
    std::vector<std::string> row_ids;
    std::map<std::string, std::vector<double>> columns;

    const std::vector<double>& at(const std::string& name) const;
    bool has(const std::string& name) const { return columns.count(name) > 0; }
};

enum class Transform { Identity, Log };

struct ModelSpec {
    std::string outcome;
    Transform transform = Transform::Identity;
    Family family = Family::OLS;
    std::vector<std::string> predictors;  // vibrancy measure first, intercept appended
};

struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> colnames;  // predictors then "(Intercept)"
    std::vector<std::string> kept_ids;
    std::vector<std::string> dropped_ids;
};

// Assembles the design matrix: derived columns (log_income, log_population,
// area_1e6) are computed from their raw sources, rows with any undefined
// value are dropped and reported, an intercept column of ones is appended
// last, and zero-variance predictors raise InvalidInput naming the column.
Design build_design(const ColumnTable& table, const ModelSpec& spec);

// The Table-style covariate block: the profile characteristics every
// regression and propensity model conditions on.
const std::vector<std::string>& profile_covariates();

// Materializes named (possibly derived) columns as a matrix; NaN cells pass
// through so callers can apply their own exclusion policy.
Eigen::MatrixXd column_matrix(const ColumnTable& table, const std::vector<std::string>& names);

// Dispatch on spec.family.
FitResult fit(const Design& design, const ModelSpec& spec);

// Significance stars at the conventional 0.1/0.05/0.01/0.001 thresholds.
std::string significance_stars(double p);

}  // namespace vibrancy::glm
