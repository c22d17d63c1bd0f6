#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace nvcav
{

struct QuadratureRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule mapped onto [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

// Rule for the expectation over a normal distribution N(0, sigma^2) using
// Gauss-Legendre on [-span*sigma, span*sigma]. Weights are renormalised to
// sum to one. sigma == 0 yields the single node {0}.
QuadratureRule gaussian_average_rule(double sigma, std::size_t n, double span = 6.0);

// Rule for the expectation over a Lorentzian of full width `fwhm`,
// truncated to [-cutoff*fwhm, cutoff*fwhm]. Uses the substitution
// x = (fwhm/2) tan(phi), under which the Lorentzian weight is uniform in phi.
// Weights are NOT renormalised: they sum to the Lorentzian mass inside the
// window. fwhm == 0 yields the single node {0} with weight 1.
QuadratureRule lorentzian_average_rule(double fwhm, std::size_t n, double cutoff = 10.0);

// Area-normalised Lorentzian density with the given full width.
double lorentzian_density(double x, double fwhm);

// Peak-normalised Lorentzian (value 1 at x = 0).
double lorentzian_peak(double x, double fwhm);

} // namespace nvcav
