#include "nvcav/bloch.hpp"

#include "nvcav/diagnostics.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/quadrature.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <stdexcept>

namespace nvcav
{

namespace odeint = boost::numeric::odeint;

void DriveEnvelope::validate() const
{
    if (!(t_fast_ns > 0.0) || t_slow_ns < 0.0)
        throw std::domain_error("envelope: t_fast > 0 and t_slow >= 0 required");
    if (slow_fraction < 0.0 || slow_fraction >= 1.0)
        throw std::domain_error("envelope: slow_fraction must lie in [0, 1)");
    if (amplitude < 0.0)
        throw std::domain_error("envelope: amplitude must be >= 0");
}

double envelope(double t, const DriveEnvelope &e)
{
    const double sigma = 0.5 * e.t_fast_ns;
    const double fast = 0.5 * (1.0 + std::erf(t / (std::sqrt(2.0) * sigma)));
    double slow = 1.0;
    if (e.slow_fraction > 0.0 && e.t_slow_ns > 0.0)
        slow = (1.0 - e.slow_fraction) + e.slow_fraction * (1.0 - std::exp(-std::max(t, 0.0) / e.t_slow_ns));
    else if (e.slow_fraction > 0.0)
        slow = t > 0.0 ? 1.0 : 1.0 - e.slow_fraction;
    return fast * slow;
}

double rabi_frequency(double t, const DriveEnvelope &e) { return e.amplitude * std::sqrt(envelope(t, e)); }

double rise_time_10_90(const DriveEnvelope &e)
{
    e.validate();
    auto crossing = [&](double level) {
        double lo = -10.0 * e.t_fast_ns;
        double hi = 10.0 * (e.t_fast_ns + e.t_slow_ns);
        while (envelope(hi, e) < level)
            hi *= 2.0;
        boost::math::tools::eps_tolerance<double> tol(48);
        std::uintmax_t it = 200;
        const auto [a, b] =
            boost::math::tools::toms748_solve([&](double t) { return envelope(t, e) - level; }, lo, hi, tol, it);
        return 0.5 * (a + b);
    };
    return crossing(0.9) - crossing(0.1);
}

void CompositionModel::validate() const
{
    if (ex_scale < 0.0 || a1_amplitude < 0.0 || !(a1_decay_ns > 0.0) || !(shelving_time_us > 0.0) ||
        laser_background < 0.0)
        throw std::domain_error("composition: amplitudes must be >= 0 and times > 0");
}

namespace
{

using state_t = std::array<double, 3>;

template <class OmegaFn>
std::vector<state_t> integrate(OmegaFn omega_ns, double delta_ns, double gamma_ns, double t0,
                               const std::vector<double> &grid, const ObeOptions &o)
{
    if (grid.empty())
        return {};
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::domain_error("obe: time grid must be strictly increasing");
    auto rhs = [&](const state_t &y, state_t &dy, double t) {
        const double om = omega_ns(t);
        dy[0] = -0.5 * gamma_ns * y[0] - delta_ns * y[1];
        dy[1] = delta_ns * y[0] - 0.5 * gamma_ns * y[1] - om * y[2];
        dy[2] = om * y[1] - gamma_ns * (y[2] + 1.0);
    };
    std::vector<double> times;
    std::size_t skip = 0;
    if (t0 < grid.front())
    {
        times.push_back(t0);
        skip = 1;
    }
    times.insert(times.end(), grid.begin(), grid.end());
    state_t y{0.0, 0.0, -1.0};
    std::vector<state_t> out;
    out.reserve(grid.size());
    std::size_t seen = 0;
    auto observer = [&](const state_t &s, double) {
        if (seen++ >= skip)
            out.push_back(s);
    };
    const double dt0 = std::min(0.01, times.size() > 1 ? times[1] - times[0] : 0.01);
    auto stepper = odeint::make_dense_output(o.abs_tol, o.rel_tol, odeint::runge_kutta_dopri5<state_t>());
    try
    {
        odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), dt0, observer,
                                odeint::max_step_checker(static_cast<int>(std::min<std::size_t>(o.max_steps, 1u << 30))));
    }
    catch (const odeint::step_adjustment_error &e)
    {
        throw ConvergenceError(std::string("obe: step-size control failed (") + e.what() + "); use a finer grid", 0.0);
    }
    catch (const odeint::no_progress_error &e)
    {
        throw ConvergenceError(std::string("obe: integrator made no progress (") + e.what() + "); use a finer grid",
                               0.0);
    }
    return out;
}

void check_resolution(const std::vector<double> &grid, double omega_max_ns)
{
    if (grid.size() < 2 || omega_max_ns <= 0.0)
        return;
    const double dt = grid[1] - grid[0];
    if (dt > 0.1 / omega_max_ns)
        warn("obe: time grid does not resolve 1/Omega_R by 10 points");
}

} // namespace

std::vector<BlochState> obe_trajectory(const DriveEnvelope &env, double delta, double gamma_total,
                                       const std::vector<double> &t_grid, const ObeOptions &o)
{
    env.validate();
    if (gamma_total < 0.0)
        throw std::domain_error("obe: gamma must be >= 0");
    const double amp = units::per_ns(env.amplitude);
    check_resolution(t_grid, amp);
    const double t0 = std::min(o.t_start_ns, t_grid.empty() ? 0.0 : t_grid.front());
    auto states = integrate([&](double t) { return amp * std::sqrt(envelope(t, env)); }, units::per_ns(delta),
                            units::per_ns(gamma_total), t0, t_grid, o);
    std::vector<BlochState> out;
    out.reserve(states.size());
    for (const auto &s : states)
        out.push_back({s[0], s[1], s[2]});
    return out;
}

std::vector<double> obe_solve(const DriveEnvelope &env, double delta, double gamma_total,
                              const CompositionModel &shelving, const std::vector<double> &t_grid,
                              const ObeOptions &o)
{
    shelving.validate();
    const auto states = obe_trajectory(env, delta, gamma_total, t_grid, o);
    const double tau_spin_ns = shelving.shelving_time_us * units::ns_per_us;
    std::vector<double> out(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
    {
        const double rho = std::clamp(0.5 * (1.0 + states[i].w), 0.0, 1.0);
        out[i] = rho * (std::isinf(tau_spin_ns) ? 1.0 : std::exp(-std::max(t_grid[i], 0.0) / tau_spin_ns));
    }
    return out;
}

std::vector<double> obe_solve_constant(double omega, double delta, double gamma_total,
                                       const std::vector<double> &t_grid, const ObeOptions &o)
{
    if (gamma_total < 0.0)
        throw std::domain_error("obe: gamma must be >= 0");
    const double om = units::per_ns(omega);
    check_resolution(t_grid, om);
    ObeOptions local = o;
    const double t0 = t_grid.empty() ? 0.0 : std::min(0.0, t_grid.front());
    if (t0 < 0.0)
        throw std::domain_error("obe_solve_constant: grid must start at t >= 0");
    local.t_start_ns = 0.0;
    auto states = integrate([&](double) { return om; }, units::per_ns(delta), units::per_ns(gamma_total), 0.0, t_grid,
                            local);
    std::vector<double> out(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        out[i] = 0.5 * (1.0 + states[i][2]);
    return out;
}

double damped_rabi_rho_ee(double omega, double gamma, double t_ns)
{
    const double om = units::per_ns(omega);
    const double g = units::per_ns(gamma);
    const double pre = om * om / (2.0 * om * om + g * g);
    const double disc = om * om - g * g / 16.0;
    const double damp = std::exp(-0.75 * g * t_ns);
    double osc;
    if (disc > 0.0)
    {
        const double l = std::sqrt(disc);
        osc = std::cos(l * t_ns) + 0.75 * g / l * std::sin(l * t_ns);
    }
    else if (disc < 0.0)
    {
        const double l = std::sqrt(-disc);
        osc = std::cosh(l * t_ns) + 0.75 * g / l * std::sinh(l * t_ns);
    }
    else
        osc = 1.0 + 0.75 * g * t_ns;
    return pre * (1.0 - damp * osc);
}

std::vector<double> charge_noise_average(const TraceSolver &solver, double delta, double gamma_ext,
                                         std::size_t nodes, double cutoff)
{
    if (gamma_ext < 0.0)
        throw std::domain_error("charge_noise_average: gamma_ext must be >= 0");
    if (gamma_ext == 0.0)
        return solver(delta);
    const auto rule = lorentzian_average_rule(gamma_ext, nodes, cutoff);
    std::vector<double> acc;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    {
        const auto tr = solver(delta + rule.nodes[i]);
        if (acc.empty())
            acc.assign(tr.size(), 0.0);
        for (std::size_t k = 0; k < tr.size(); ++k)
            acc[k] += rule.weights[i] * tr[k];
    }
    return acc;
}

std::vector<double> compose_signal(const std::vector<double> &t, const std::vector<double> &ex,
                                   const CompositionModel &c, const DriveEnvelope &env)
{
    c.validate();
    if (t.size() != ex.size())
        throw std::invalid_argument("compose_signal: grid and signal differ in length");
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        const double e = envelope(t[i], env);
        out[i] = c.ex_scale * ex[i] + c.a1_amplitude * std::exp(-std::max(t[i], 0.0) / c.a1_decay_ns) * e +
                 c.laser_background * e;
    }
    return out;
}

double non_ex_share(const std::vector<double> &t, const std::vector<double> &ex, const CompositionModel &c,
                    const DriveEnvelope &env, double t0, double t1)
{
    const auto total = compose_signal(t, ex, c, env);
    double sum_total = 0.0, sum_ex = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 && t[i] <= t1)
        {
            sum_total += total[i];
            sum_ex += c.ex_scale * ex[i];
        }
    if (!(sum_total > 0.0))
        throw std::domain_error("non_ex_share: no signal in window");
    return 1.0 - sum_ex / sum_total;
}

double oscillation_modulation(const std::vector<double> &r)
{
    for (std::size_t i = 1; i + 1 < r.size(); ++i)
    {
        if (r[i] > r[i - 1] && r[i + 1] <= r[i])
        {
            std::size_t j = i + 1;
            while (j + 1 < r.size() && r[j + 1] <= r[j])
                ++j;
            return r[i] - r[j];
        }
    }
    return 0.0;
}

} // namespace nvcav
