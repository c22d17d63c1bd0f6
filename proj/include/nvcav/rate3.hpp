#pragma once

#include "nvcav/rate_matrix.hpp"

#include <vector>

namespace nvcav
{

// Ground (g), excited (e) and shelf (s) under continuous off-resonant pumping.
// Rates in 1/us; delays tau in ns.
struct Rate3Params
{
    double k_eg = 101.2;
    double k_532 = 2.5;
    double k_s = 32.0;
    double k_d = 3.8;

    void validate() const;
};

struct BackgroundModel
{
    double b = 0.0;
};

struct Rate3SteadyState
{
    double rho_g = 1.0;
    double rho_e = 0.0;
    double rho_s = 0.0;
    // k_d == 0 with k_s > 0: everything ends up in the shelf.
    bool absorbing = false;

    double triplet_occupation() const { return rho_g + rho_e; }
    double not_shelved() const { return 1.0 - rho_s; }
};

// States labelled "g", "e", "s".
RateMatrix rate3_generator(const Rate3Params &p);

Rate3SteadyState steady_state(const Rate3Params &p);

// Bunching amplitude x = k_532 k_s / (k_d (k_eg + k_532)).
double bunching_amplitude(const Rate3Params &p);

// Fraction of time the emitter is bright in the scale-separated picture,
// 1 / (1 + x), i.e. the weight of the long on-period against the mean
// shelving time.
double on_fraction(const Rate3Params &p);

// Scale-separated two-exponential approximation. Warns through
// nvcav::warn when k_s or k_d exceed 10% of k_eg + k_532.
double g2_analytic(const Rate3Params &p, double tau_ns);
std::vector<double> g2_analytic(const Rate3Params &p, const std::vector<double> &tau_ns);

// Exact solution from the two non-zero eigenvalues of the generator.
double g2_closed_form(const Rate3Params &p, double tau_ns);

// rho_e(tau)/rho_e(inf) by matrix exponential from rho(0) = (1, 0, 0).
std::vector<double> g2_numeric(const Rate3Params &p, const std::vector<double> &tau_ns);

// (rho_e(tau) + B) / (rho_e(inf) + B) given the clean g2 at the same delay.
double g2_with_background(double g2_clean, double rho_e_inf, BackgroundModel b);

// Background that lifts g2(0) from 0 to target (0 <= target < 1).
BackgroundModel background_for_g2_zero(double target, double rho_e_inf);

} // namespace nvcav
