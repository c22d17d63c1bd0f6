#include "nvcav/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace nvcav;

namespace
{

double integrate(const QuadratureRule &r, double (*f)(double))
{
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * f(r.nodes[i]);
    return s;
}

} // namespace

TEST_SUITE("quadrature")
{
    TEST_CASE("Gauss-Legendre is exact for polynomials up to degree 2n-1")
    {
        const auto r = gauss_legendre(5, -1.0, 3.0);
        // integral of x^9 over [-1, 3] = (3^10 - 1) / 10
        CHECK(integrate(r, [](double x) { return std::pow(x, 9); }) == doctest::Approx((std::pow(3.0, 10) - 1.0) / 10.0));
        CHECK(integrate(r, [](double) { return 1.0; }) == doctest::Approx(4.0));
    }

    TEST_CASE("Gaussian average rule reproduces the moments of N(0, sigma^2)")
    {
        const double sigma = 22.0;
        const auto r = gaussian_average_rule(sigma, 64);
        double m0 = 0.0, m2 = 0.0, m4 = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
        {
            m0 += r.weights[i];
            m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
            m4 += r.weights[i] * std::pow(r.nodes[i], 4);
        }
        CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(m2 == doctest::Approx(sigma * sigma).epsilon(1e-6));
        CHECK(m4 == doctest::Approx(3.0 * std::pow(sigma, 4)).epsilon(1e-5));
        const auto zero = gaussian_average_rule(0.0, 64);
        CHECK(zero.nodes.size() == 1);
        CHECK(zero.nodes[0] == 0.0);
    }

    TEST_CASE("Lorentzian rule carries the truncated mass")
    {
        const double fwhm = 159.0, cutoff = 10.0;
        const auto r = lorentzian_average_rule(fwhm, 48, cutoff);
        const double mass = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
        // closed form: (2/pi) atan(2 cutoff)
        CHECK(mass == doctest::Approx(2.0 / M_PI * std::atan(2.0 * cutoff)).epsilon(1e-12));
        for (double x : r.nodes)
            CHECK(std::abs(x) <= cutoff * fwhm + 1e-9);
    }

    TEST_CASE("Lorentzian rule is stable under node doubling")
    {
        auto avg = [](std::size_t n) {
            const auto r = lorentzian_average_rule(1.0, n);
            double s = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i)
                s += r.weights[i] / (1.0 + std::pow((r.nodes[i] - 0.3) / 0.1, 2));
            return s;
        };
        CHECK(std::abs(avg(48) - avg(96)) / avg(96) < 1e-3);
    }

    TEST_CASE("density and peak normalisation")
    {
        CHECK(lorentzian_peak(0.0, 3.0) == 1.0);
        CHECK(lorentzian_peak(1.5, 3.0) == doctest::Approx(0.5));
        CHECK(lorentzian_density(0.0, 2.0) == doctest::Approx(1.0 / M_PI));
        const auto r = gauss_legendre(400, -20.0, 20.0);
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
            s += r.weights[i] * lorentzian_density(r.nodes[i], 2.0);
        CHECK(s == doctest::Approx(2.0 / M_PI * std::atan(20.0)).epsilon(1e-9));
    }
}
