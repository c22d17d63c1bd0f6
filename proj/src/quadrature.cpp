#include "nvcav/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nvcav
{

QuadratureRule gauss_legendre(std::size_t n, double a, double b)
{
    if (n == 0)
        throw std::domain_error("gauss_legendre: n must be positive");
    // legendre_p_zeros returns the non-negative roots only.
    const auto positive = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
    std::vector<double> x;
    x.reserve(n);
    for (auto it = positive.rbegin(); it != positive.rend(); ++it)
        if (*it != 0.0)
            x.push_back(-*it);
    for (double r : positive)
        x.push_back(r);

    QuadratureRule rule;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (double xi : x)
    {
        const double dp = boost::math::legendre_p_prime(static_cast<int>(n), xi);
        const double w = 2.0 / ((1.0 - xi * xi) * dp * dp);
        rule.nodes.push_back(mid + half * xi);
        rule.weights.push_back(half * w);
    }
    return rule;
}

QuadratureRule gaussian_average_rule(double sigma, std::size_t n, double span)
{
    if (sigma < 0.0)
        throw std::domain_error("gaussian_average_rule: sigma must be >= 0");
    if (sigma == 0.0)
        return {{0.0}, {1.0}};
    auto rule = gauss_legendre(n, -span * sigma, span * sigma);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    {
        const double z = rule.nodes[i] / sigma;
        rule.weights[i] *= std::exp(-0.5 * z * z);
        total += rule.weights[i];
    }
    for (double &w : rule.weights)
        w /= total;
    return rule;
}

QuadratureRule lorentzian_average_rule(double fwhm, std::size_t n, double cutoff)
{
    if (fwhm < 0.0)
        throw std::domain_error("lorentzian_average_rule: fwhm must be >= 0");
    if (fwhm == 0.0)
        return {{0.0}, {1.0}};
    const double hwhm = 0.5 * fwhm;
    const double phi_max = std::atan(cutoff * fwhm / hwhm);
    auto rule = gauss_legendre(n, -phi_max, phi_max);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    {
        rule.nodes[i] = hwhm * std::tan(rule.nodes[i]);
        rule.weights[i] /= std::numbers::pi;
    }
    return rule;
}

double lorentzian_density(double x, double fwhm)
{
    const double h = 0.5 * fwhm;
    return h / (std::numbers::pi * (x * x + h * h));
}

double lorentzian_peak(double x, double fwhm)
{
    const double u = 2.0 * x / fwhm;
    return 1.0 / (1.0 + u * u);
}

} // namespace nvcav
