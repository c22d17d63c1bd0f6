#pragma once

#include "nvcav/units.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace nvcav
{

// Times in ns; Rabi frequency, detuning and decay rates are angular in
// rad/us at the interface (converted to rad/ns internally).

// Leading edge of the optical power: an error-function rise whose 2-sigma
// width is t_fast, multiplied by a slower inverted exponential carrying
// slow_fraction of the final power. The field (and Rabi frequency) follows
// the square root of the power envelope.
struct DriveEnvelope
{
    double t_fast_ns = 4.0;
    double t_slow_ns = 6.697;
    double slow_fraction = 0.3;
    double amplitude = units::angular_mhz(51.1);

    void validate() const;
};

// Power envelope in [0, 1].
double envelope(double t_ns, const DriveEnvelope &env);
// Omega(t) in rad/us.
double rabi_frequency(double t_ns, const DriveEnvelope &env);
// 10-90% rise time of the power envelope.
double rise_time_10_90(const DriveEnvelope &env);

struct CompositionModel
{
    // Counts/s per unit excited population.
    double ex_scale = 1.0;
    double a1_amplitude = 0.0;
    double a1_decay_ns = 4.0;
    double shelving_time_us = std::numeric_limits<double>::infinity();
    // Laser leakage at full power; follows the envelope.
    double laser_background = 0.0;
    // Ex - A1 splitting (MHz), metadata only.
    double ex_a1_splitting_mhz = 712.3;

    void validate() const;
};

struct ObeOptions
{
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    // Integration starts here (or at the first grid time if earlier), in the
    // ground state.
    double t_start_ns = -20.0;
    std::size_t max_steps = 2'000'000;
};

// Excited population on t_grid for the shaped drive, multiplied by the
// spin-shelving factor exp(-max(t, 0)/tau_spin). Throws ConvergenceError when
// the adaptive integrator exhausts max_steps.
std::vector<double> obe_solve(const DriveEnvelope &env, double delta, double gamma_total,
                              const CompositionModel &shelving, const std::vector<double> &t_grid,
                              const ObeOptions &options = {});

// Constant drive switched on at t = 0 from the ground state.
std::vector<double> obe_solve_constant(double omega, double delta, double gamma_total,
                                       const std::vector<double> &t_grid, const ObeOptions &options = {});

// Full Bloch vector (u, v, w) for a constant drive; used for norm checks.
struct BlochState
{
    double u = 0.0, v = 0.0, w = -1.0;
};
std::vector<BlochState> obe_trajectory(const DriveEnvelope &env, double delta, double gamma_total,
                                       const std::vector<double> &t_grid, const ObeOptions &options = {});

// Closed-form resonant damped Rabi oscillation with T2 = 2 T1.
double damped_rabi_rho_ee(double omega, double gamma, double t_ns);

// Lorentzian average over charge-noise detunings: solver(detuning) is
// evaluated at detuning + delta_cn on the same quadrature as the
// line-scan module. gamma_ext == 0 returns solver(delta).
using TraceSolver = std::function<std::vector<double>(double detuning)>;
std::vector<double> charge_noise_average(const TraceSolver &solver, double delta, double gamma_ext,
                                         std::size_t nodes = 48, double cutoff = 10.0);

// ex_scale * ex_signal + a1_amplitude * exp(-t/a1_decay) * envelope
// + laser_background * envelope.
std::vector<double> compose_signal(const std::vector<double> &t_ns, const std::vector<double> &ex_signal,
                                   const CompositionModel &comp, const DriveEnvelope &env);

// Share of the total that does not come from the Ex line over [t0, t1].
double non_ex_share(const std::vector<double> &t_ns, const std::vector<double> &ex_signal,
                    const CompositionModel &comp, const DriveEnvelope &env, double t0_ns, double t1_ns);

// First local maximum minus the following local minimum; 0 when the trace
// never turns over.
double oscillation_modulation(const std::vector<double> &trace);

} // namespace nvcav
