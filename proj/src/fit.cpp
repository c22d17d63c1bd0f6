#include "nvcav/fit.hpp"

#include "nvcav/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvcav
{

std::size_t FitResult::index(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return i;
    throw std::out_of_range("unknown fit parameter '" + std::string(name) + "'");
}

namespace
{

Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, const std::vector<FitParameter> &p)
{
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = std::clamp(x(i), p[i].lower, p[i].upper);
    return x;
}

bool all_finite(const Eigen::VectorXd &v) { return v.allFinite(); }

} // namespace

Eigen::MatrixXd numerical_jacobian(const ResidualFunction &f, const Eigen::VectorXd &x,
                                   const std::vector<FitParameter> &bounds, double rel_step)
{
    const Eigen::VectorXd r0 = f(x);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(r0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j)
    {
        const auto &b = bounds[static_cast<std::size_t>(j)];
        if (b.fixed())
            continue;
        const double h = rel_step * (x(j) != 0.0 ? std::abs(x(j)) : 1.0);
        Eigen::VectorXd xp = x, xm = x;
        const bool up_ok = x(j) + h <= b.upper;
        const bool down_ok = x(j) - h >= b.lower;
        if (up_ok && down_ok)
        {
            xp(j) += h;
            xm(j) -= h;
            jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
        }
        else if (up_ok)
        {
            xp(j) += h;
            jac.col(j) = (f(xp) - r0) / h;
        }
        else
        {
            xm(j) -= h;
            jac.col(j) = (r0 - f(xm)) / h;
        }
    }
    return jac;
}

FitResult least_squares(const FitProblem &problem)
{
    const auto &params = problem.parameters;
    const auto n = static_cast<Eigen::Index>(params.size());
    if (n == 0)
        throw std::invalid_argument("least_squares: no parameters");
    if (!problem.residuals)
        throw std::invalid_argument("least_squares: no residual function");

    FitResult res;
    Eigen::VectorXd x(n);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const auto &p = params[static_cast<std::size_t>(i)];
        if (p.lower > p.upper)
            throw std::invalid_argument("least_squares: parameter '" + p.name + "' has lower > upper");
        if (p.value < p.lower || p.value > p.upper)
            throw std::invalid_argument("least_squares: initial value of '" + p.name + "' outside bounds");
        x(i) = p.value;
        res.names.push_back(p.name);
        res.fixed.push_back(p.fixed());
        if (!p.fixed())
            free.push_back(i);
    }

    Eigen::VectorXd r = problem.residuals(x);
    if (!all_finite(r))
        throw std::domain_error("least_squares: residuals not finite at the initial point");
    const auto m = r.size();
    const auto nf = static_cast<Eigen::Index>(free.size());
    if (m < nf)
        throw std::invalid_argument("least_squares: fewer residuals than free parameters");
    double sse = r.squaredNorm();

    auto reduce = [&](const Eigen::MatrixXd &full) {
        Eigen::MatrixXd j(m, nf);
        for (Eigen::Index k = 0; k < nf; ++k)
            j.col(k) = full.col(free[static_cast<std::size_t>(k)]);
        return j;
    };

    double lambda = 1e-3;
    bool converged = nf == 0;
    std::size_t it = 0;
    res.message = nf == 0 ? "all parameters fixed" : "maximum iterations reached";
    while (!converged && it < problem.max_iterations)
    {
        ++it;
        const Eigen::MatrixXd jac = reduce(numerical_jacobian(problem.residuals, x, params, problem.jacobian_step));
        const Eigen::VectorXd grad = jac.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() < problem.gradient_tol)
        {
            converged = true;
            res.message = "gradient below tolerance";
            break;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);
        bool accepted = false;
        while (!accepted)
        {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            Eigen::VectorXd xt = x;
            for (Eigen::Index k = 0; k < nf; ++k)
                xt(free[static_cast<std::size_t>(k)]) += step(k);
            xt = clamp_to_box(xt, params);
            const Eigen::VectorXd rt = problem.residuals(xt);
            const double sse_t = all_finite(rt) ? rt.squaredNorm() : INFINITY;
            if (sse_t <= sse && std::isfinite(sse_t) && (xt - x).norm() > 0.0)
            {
                const double rel = (sse - sse_t) / std::max(sse, 1e-300);
                x = xt;
                r = rt;
                sse = sse_t;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel < problem.sse_rtol)
                {
                    converged = true;
                    res.message = "relative SSE change below tolerance";
                }
            }
            else
            {
                lambda *= 4.0;
                if (lambda > 1e16)
                {
                    // No descent direction left at machine precision.
                    converged = true;
                    res.message = "no further decrease";
                    break;
                }
            }
        }
    }

    res.estimates = x;
    res.sse = sse;
    res.iterations = it;
    res.converged = converged;
    res.residual_count = static_cast<std::size_t>(m);
    res.dof = static_cast<std::size_t>(m - nf);
    res.reduced_chi2 = res.dof > 0 ? sse / static_cast<double>(res.dof) : 0.0;

    res.covariance = Eigen::MatrixXd::Zero(n, n);
    res.ci95 = Eigen::VectorXd::Zero(n);
    if (nf > 0)
    {
        const Eigen::MatrixXd jac = reduce(numerical_jacobian(problem.residuals, x, params, problem.jacobian_step));
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
        Eigen::MatrixXd cov = cod.pseudoInverse();
        cov = 0.5 * (cov + cov.transpose());
        if (problem.scale_covariance && res.dof > 0)
            cov *= res.reduced_chi2;
        for (Eigen::Index a = 0; a < nf; ++a)
            for (Eigen::Index b = 0; b < nf; ++b)
                res.covariance(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]) = cov(a, b);
        for (Eigen::Index i = 0; i < n; ++i)
            res.ci95(i) = 1.96 * std::sqrt(std::max(res.covariance(i, i), 0.0));
    }
    return res;
}

ProfileInterval profile_ci(const FitProblem &problem, const FitResult &result, std::string_view param)
{
    const auto idx = result.index(param);
    const auto i = static_cast<Eigen::Index>(idx);
    const double est = result.estimates(i);
    ProfileInterval out;
    if (problem.parameters[idx].fixed())
    {
        out.lower = out.upper = est;
        out.degenerate = true;
        return out;
    }
    if (!result.converged)
        throw ConvergenceError("profile_ci: fit did not converge", result.sse);

    const double scale = problem.scale_covariance && result.dof > 0 ? result.reduced_chi2 : 1.0;
    const double target = result.sse + 3.84 * scale;
    const double lo_bound = problem.parameters[idx].lower;
    const double hi_bound = problem.parameters[idx].upper;

    auto profile_sse = [&](double v) {
        FitProblem sub = problem;
        for (Eigen::Index k = 0; k < result.estimates.size(); ++k)
            sub.parameters[static_cast<std::size_t>(k)].value = std::clamp(
                result.estimates(k), sub.parameters[static_cast<std::size_t>(k)].lower,
                sub.parameters[static_cast<std::size_t>(k)].upper);
        sub.parameters[idx].value = v;
        sub.parameters[idx].lower = v;
        sub.parameters[idx].upper = v;
        return least_squares(sub).sse;
    };

    const double half = result.ci95(i) > 0.0 ? result.ci95(i) : 1e-3 * std::max(std::abs(est), 1.0);
    auto search = [&](double dir, double bound, bool &open) {
        double inner = est;
        double step = half;
        for (int k = 0; k < 30; ++k)
        {
            double outer = est + dir * step;
            bool at_bound = false;
            if ((dir > 0 && outer >= bound) || (dir < 0 && outer <= bound))
            {
                outer = bound;
                at_bound = true;
            }
            if (!std::isfinite(outer))
                break;
            if (profile_sse(outer) >= target)
            {
                boost::math::tools::eps_tolerance<double> tol(30);
                std::uintmax_t iters = 60;
                auto f = [&](double v) { return profile_sse(v) - target; };
                const auto [a, b] = boost::math::tools::toms748_solve(f, std::min(inner, outer), std::max(inner, outer),
                                                                      tol, iters);
                return 0.5 * (a + b);
            }
            if (at_bound)
            {
                open = true;
                return bound;
            }
            inner = outer;
            step *= 2.0;
        }
        open = true;
        return dir > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    };
    out.lower = search(-1.0, lo_bound, out.lower_open);
    out.upper = search(+1.0, hi_bound, out.upper_open);
    const double lin = result.ci95(i);
    if (!out.lower_open && !out.upper_open && lin > 0.0 && std::abs((est - out.lower) - lin) <= 0.05 * lin &&
        std::abs((out.upper - est) - lin) <= 0.05 * lin)
    {
        out.lower = est - lin;
        out.upper = est + lin;
        out.linear = true;
    }
    return out;
}

std::vector<double> poisson_weights(const std::vector<double> &counts)
{
    std::vector<double> w;
    w.reserve(counts.size());
    for (double c : counts)
        w.push_back(1.0 / std::max(std::sqrt(std::max(c, 0.0)), 1.0));
    return w;
}

} // namespace nvcav
