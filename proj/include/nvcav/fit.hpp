#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace nvcav
{

struct FitParameter
{
    std::string name;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    // lower == upper pins the parameter.
    bool fixed() const { return lower == upper; }
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;

// Residuals are expected already weighted: (model - data) / sigma.
struct FitProblem
{
    ResidualFunction residuals;
    std::vector<FitParameter> parameters;
    std::size_t max_iterations = 500;
    double sse_rtol = 1e-10;
    double gradient_tol = 1e-8;
    // Relative step of the central-difference Jacobian.
    double jacobian_step = 6e-6;
    // Scale the covariance by the reduced chi-square.
    bool scale_covariance = true;
};

struct FitResult
{
    std::vector<std::string> names;
    Eigen::VectorXd estimates;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd ci95;
    std::vector<bool> fixed;
    double sse = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t residual_count = 0;
    std::size_t dof = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::string message;

    std::size_t index(std::string_view name) const;
    double value(std::string_view name) const { return estimates(static_cast<Eigen::Index>(index(name))); }
    double ci(std::string_view name) const { return ci95(static_cast<Eigen::Index>(index(name))); }
};

// Levenberg-Marquardt with Marquardt diagonal scaling and projection onto the
// parameter box. Never accepts a step that increases the SSE. Throws
// std::invalid_argument for malformed problems and std::domain_error when the
// residuals are not finite at the start point; a run that hits max_iterations
// returns with converged == false.
FitResult least_squares(const FitProblem &problem);

// Central-difference Jacobian of f at x; columns with mask[j] == false are
// left zero. One-sided near bounds.
Eigen::MatrixXd numerical_jacobian(const ResidualFunction &f, const Eigen::VectorXd &x,
                                   const std::vector<FitParameter> &bounds, double rel_step = 6e-6);

struct ProfileInterval
{
    double lower = 0.0;
    double upper = 0.0;
    bool lower_open = false;
    bool upper_open = false;
    // Profile matched the linear interval within 5%; the linear one is returned.
    bool linear = false;
    bool degenerate = false;
};

// 95% profile-likelihood interval (delta chi-square 3.84, in units of the
// reduced chi-square when the covariance is scaled).
ProfileInterval profile_ci(const FitProblem &problem, const FitResult &result, std::string_view param);

// 1 / max(sqrt(count), 1).
std::vector<double> poisson_weights(const std::vector<double> &counts);

} // namespace nvcav
