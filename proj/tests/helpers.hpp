#pragma once

#include <Eigen/Dense>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "vibrancy/geometry.hpp"
#include "vibrancy/glm.hpp"

namespace test_helpers {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("vibrancy_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }

private:
    std::filesystem::path path_;
};

// Naive all-pairs containment oracle for the spatial join: scan every block
// group, keep the containing one with the smallest id.
inline std::optional<std::string> naive_assign(const vibrancy::LonLat& p,
                                               const std::vector<vibrancy::BlockGroup>& groups) {
    std::optional<std::string> best;
    for (const auto& bg : groups) {
        if (vibrancy::group_contains(bg, p)) {
            if (!best || bg.id < *best) best = bg.id;
        }
    }
    return best;
}

// Analytic-score and finite-difference verification for converged
// logistic/NB fits (the gradient contract every likelihood fit must meet).
inline void check_score_at_optimum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const vibrancy::glm::FitResult& fit) {
    using namespace vibrancy::glm;
    REQUIRE(fit.converged);
    const Eigen::VectorXd beta = fit.coefficients;
    Eigen::VectorXd score;
    auto loglik = [&](const Eigen::VectorXd& b) {
        switch (fit.family) {
            case Family::Logistic: return logistic_loglik(X, y, b);
            case Family::Poisson: return poisson_loglik(X, y, b);
            default: return negbin_loglik(X, y, b, fit.theta);
        }
    };
    switch (fit.family) {
        case Family::Logistic: score = logistic_score(X, y, beta); break;
        case Family::Poisson: score = poisson_score(X, y, beta); break;
        default: score = negbin_score_beta(X, y, beta, fit.theta); break;
    }
    CHECK(score.cwiseAbs().maxCoeff() < 1e-6);

    // Central finite differences of the log-likelihood.
    const double ll_scale = std::max(1.0, std::fabs(loglik(beta)));
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double h = 1e-5 * std::max(1.0, std::fabs(beta[j]));
        Eigen::VectorXd hi = beta, lo = beta;
        hi[j] += h;
        lo[j] -= h;
        const double fd = (loglik(hi) - loglik(lo)) / (2.0 * h);
        CHECK(std::fabs(fd - score[j]) / ll_scale < 1e-4);
    }
    if (fit.family == Family::NegativeBinomial && !fit.theta_at_boundary) {
        const double theta_score =
            vibrancy::glm::negbin_score_theta(X, y, beta, fit.theta);
        CHECK(std::fabs(theta_score) < 1e-6);
        const double h = 1e-5 * fit.theta;
        const double fd = (negbin_loglik(X, y, beta, fit.theta + h) -
                           negbin_loglik(X, y, beta, fit.theta - h)) /
                          (2.0 * h);
        CHECK(std::fabs(fd - theta_score) / ll_scale < 1e-4);
    }
}

}  // namespace test_helpers
