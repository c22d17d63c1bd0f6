#include "nvcav/rate3.hpp"

#include "nvcav/diagnostics.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace nvcav
{

void Rate3Params::validate() const
{
    if (!(k_eg > 0.0))
        throw std::domain_error("rate3: k_eg must be > 0");
    if (!(k_532 >= 0.0 && k_s >= 0.0 && k_d >= 0.0))
        throw std::domain_error("rate3: rates must be >= 0");
}

RateMatrix rate3_generator(const Rate3Params &p)
{
    p.validate();
    RateMatrix m({"g", "e", "s"});
    m.add_rate(0, 1, p.k_532);
    m.add_rate(1, 0, p.k_eg);
    m.add_rate(1, 2, p.k_s);
    m.add_rate(2, 0, p.k_d);
    return m;
}

Rate3SteadyState steady_state(const Rate3Params &p)
{
    p.validate();
    if (p.k_532 == 0.0)
        return {1.0, 0.0, 0.0, false};
    if (p.k_d == 0.0)
    {
        if (p.k_s > 0.0)
            return {0.0, 0.0, 1.0, true};
        // Shelf unreachable: two-state g <-> e problem.
        const double z = p.k_eg + p.k_532;
        return {p.k_eg / z, p.k_532 / z, 0.0, false};
    }
    const auto rho = rate3_generator(p).steady_state();
    return {rho(0), rho(1), rho(2), false};
}

double bunching_amplitude(const Rate3Params &p)
{
    p.validate();
    if (p.k_s == 0.0)
        return 0.0;
    if (p.k_d == 0.0)
        throw std::domain_error("bunching_amplitude: absorbing shelf");
    return p.k_532 * p.k_s / (p.k_d * (p.k_eg + p.k_532));
}

double on_fraction(const Rate3Params &p) { return 1.0 / (1.0 + bunching_amplitude(p)); }

namespace
{

double g2_s2(const Rate3Params &p, double tau_ns)
{
    if (tau_ns < 0.0)
        throw std::domain_error("g2: tau must be >= 0");
    const double t = tau_ns * 1e-3;
    const double x = bunching_amplitude(p);
    const double fast = p.k_eg + p.k_532;
    const double slow = p.k_d + p.k_532 * p.k_s / fast;
    return 1.0 - (1.0 + x) * std::exp(-fast * t) + x * std::exp(-slow * t);
}

void check_scale_separation(const Rate3Params &p)
{
    const double fast = p.k_eg + p.k_532;
    const double worst = std::max(p.k_s, p.k_d) / fast;
    if (worst > 0.1)
    {
        std::ostringstream msg;
        msg << "g2_analytic: shelf rates are not small against k_eg + k_532 (ratio " << worst
            << "); the two-exponential form is approximate";
        warn(msg.str());
    }
}

} // namespace

double g2_analytic(const Rate3Params &p, double tau_ns)
{
    p.validate();
    check_scale_separation(p);
    return g2_s2(p, tau_ns);
}

std::vector<double> g2_analytic(const Rate3Params &p, const std::vector<double> &tau_ns)
{
    p.validate();
    check_scale_separation(p);
    std::vector<double> out;
    out.reserve(tau_ns.size());
    for (double t : tau_ns)
        out.push_back(g2_s2(p, t));
    return out;
}

double g2_closed_form(const Rate3Params &p, double tau_ns)
{
    if (tau_ns < 0.0)
        throw std::domain_error("g2: tau must be >= 0");
    const auto ss = steady_state(p);
    if (ss.absorbing || ss.rho_e == 0.0)
        throw std::domain_error("g2_closed_form: no steady-state emission");
    using cd = std::complex<double>;
    const double s = p.k_532 + p.k_eg + p.k_s + p.k_d;
    const double q = p.k_532 * p.k_s + p.k_532 * p.k_d + p.k_eg * p.k_d + p.k_s * p.k_d;
    const cd root = std::sqrt(cd(s * s - 4.0 * q, 0.0));
    const cd l1 = 0.5 * (-s - root);
    const cd l2 = 0.5 * (-s + root);
    const double slope = p.k_532 / ss.rho_e;
    const double t = tau_ns * 1e-3;
    if (std::abs(l1 - l2) < 1e-12 * s)
    {
        // Degenerate pair: 1 + (A + B t) e^{l t} with A = -1, B = slope + l.
        const double l = l1.real();
        return 1.0 + (-1.0 + (slope + l) * t) * std::exp(l * t);
    }
    const cd a = (slope + l2) / (l1 - l2);
    const cd b = -1.0 - a;
    return (1.0 + a * std::exp(l1 * t) + b * std::exp(l2 * t)).real();
}

std::vector<double> g2_numeric(const Rate3Params &p, const std::vector<double> &tau_ns)
{
    const auto ss = steady_state(p);
    if (ss.absorbing || ss.rho_e == 0.0)
        throw std::domain_error("g2_numeric: no steady-state emission");
    const auto gen = rate3_generator(p);
    Eigen::VectorXd p0(3);
    p0 << 1.0, 0.0, 0.0;
    std::vector<double> out;
    out.reserve(tau_ns.size());
    double prev = 0.0;
    for (double t : tau_ns)
    {
        if (t < 0.0 || t < prev)
            throw std::domain_error("g2_numeric: tau grid must be sorted and non-negative");
        prev = t;
        out.push_back(propagate(gen, p0, t * 1e-3)(1) / ss.rho_e);
    }
    return out;
}

double g2_with_background(double g2_clean, double rho_e_inf, BackgroundModel b)
{
    if (!(rho_e_inf > 0.0))
        throw std::domain_error("g2_with_background: rho_e_inf must be > 0");
    if (b.b < 0.0)
        throw std::domain_error("g2_with_background: background must be >= 0");
    return (g2_clean * rho_e_inf + b.b) / (rho_e_inf + b.b);
}

BackgroundModel background_for_g2_zero(double target, double rho_e_inf)
{
    if (!(target >= 0.0 && target < 1.0))
        throw std::domain_error("background_for_g2_zero: target must lie in [0, 1)");
    if (!(rho_e_inf > 0.0))
        throw std::domain_error("background_for_g2_zero: rho_e_inf must be > 0");
    return {target * rho_e_inf / (1.0 - target)};
}

} // namespace nvcav
