#pragma once

#include "nvcav/qed.hpp"

#include <cstddef>
#include <vector>

namespace nvcav
{

// Times in ns, cavity displacement in pm.

struct VibrationModel
{
    double sigma_vib_pm = 22.0;
};

struct DetectionGeometry
{
    double theta_det_deg = 0.0;
    double zeta = 1.0;
};

// Kernel sampled at offsets that are multiples of the trace grid spacing.
// Weights are non-negative and sum to one.
struct InstrumentResponse
{
    std::vector<double> offsets_ns{0.0};
    std::vector<double> weights{1.0};

    static InstrumentResponse delta();
    // Gaussian of rms width sigma sampled every dt over +-6 sigma. Warns when
    // dt is coarser than sigma.
    static InstrumentResponse gaussian(double sigma_ns, double dt_ns);
    // Arbitrary kernel sampled every dt, centred on index `center`.
    static InstrumentResponse sampled(const std::vector<double> &kernel, double dt_ns, std::size_t center);

    void validate() const;
};

// Two orthogonal cavity modes: M2 at zero displacement, M1 at
// cavity.mode_splitting_pm, both Lorentzian in displacement with half-width
// cavity.mode_hwhm_pm. c_degen is the cooperativity of a dipole aligned
// with a mode; the dipole at theta_cav from M2 couples with cos^2 / sin^2.
struct DecayModel
{
    CavityParams cavity;
    EmitterParams emitter;
    // C_M2 = 1.068 at theta_cav = 33 deg (cos^2 = 0.70336832).
    double c_degen = 1.068 / 0.7033683215;
    VibrationModel vib;
    std::size_t nodes = 64;

    double tau0_ns() const;
    void validate() const;
};

// C_M2 and C_M1 cooperativities give c_degen = C_M2 + C_M1.
double c_degen_from_mode_cooperativity(double c_m2, double theta_cav_deg);

// Per-node decomposition of the vibration average at one displacement:
// node i has probability weight[i], total decay rate rate[i] (1/ns) and
// mode-resolved radiative rates m1[i], m2[i].
struct ModeRates
{
    std::vector<double> weight;
    std::vector<double> rate;
    std::vector<double> m1;
    std::vector<double> m2;
    double gamma0 = 0.0;
};

// Throws ConvergenceError when doubling the node count moves the averaged
// emission by more than 1e-4 (relative).
ModeRates mode_rates(double delta_cav_pm, const DecayModel &model);

struct EmissionRate
{
    double m1 = 0.0;
    double m2 = 0.0;
    double free_space = 0.0;
    double total() const { return m1 + m2 + free_space; }
};

// Emission probability density at delay tau after a fast excitation (rho_e = 1).
EmissionRate emission_rate(double tau_ns, double delta_cav_pm, const DecayModel &model);
EmissionRate emission_rate(double tau_ns, const ModeRates &rates);

struct TraceGrid
{
    double t_start_ns = -3.0;
    double t_end_ns = 80.0;
    double dt_ns = 0.05;

    std::vector<double> times() const;
};

// Projected, IRF-convolved detector intensity on the grid.
std::vector<double> detector_trace(const TraceGrid &grid, double delta_cav_pm, const DetectionGeometry &geometry,
                                   const InstrumentResponse &irf, const DecayModel &model);

struct LifetimeFitOptions
{
    // Fit starts where the trace has fallen to this fraction of its peak.
    double start_fraction = 0.9;
    double window_ns = 50.0;
    // Traces are rescaled so the peak holds this many counts before Poisson
    // weighting.
    double peak_counts = 1e4;
};

struct LifetimeFit
{
    double tau_ns = 0.0;
    double ci95_ns = 0.0;
    double amplitude = 0.0;
    double t_start_ns = 0.0;
    std::size_t points = 0;
};

// Single-exponential fit of the tail. Throws ValidationError with fewer than 20
// points in the window and ConvergenceError when the trace does not decay.
LifetimeFit fit_lifetime(const std::vector<double> &t_ns, const std::vector<double> &trace,
                         const LifetimeFitOptions &options = {});

struct SweepPoint
{
    double delta_cav_pm = 0.0;
    double lifetime_ns = 0.0;
    double ci95_ns = 0.0;
    double amplitude0 = 0.0;
};

struct SweepSettings
{
    TraceGrid grid;
    DetectionGeometry geometry;
    double irf_sigma_ns = 0.2;
    LifetimeFitOptions fit;
};

std::vector<SweepPoint> lifetime_sweep(const std::vector<double> &delta_grid_pm, const DecayModel &model,
                                       const SweepSettings &settings = {});

// Width of the zero-delay amplitude peak (half maximum, linear
// interpolation between grid points, walking outward from the maximum).
double amplitude_fwhm(const std::vector<SweepPoint> &sweep);

// Width of the lifetime dip at half depth, depth measured from tau_ref and
// centred on the sweep point nearest to `center_pm`.
double lifetime_dip_fwhm(const std::vector<SweepPoint> &sweep, double tau_ref_ns, double center_pm);

// Same, applied to the decay-rate excess 1/tau - 1/tau_ref.
double rate_enhancement_fwhm(const std::vector<SweepPoint> &sweep, double tau_ref_ns, double center_pm);

// Half-maximum width of y(x) around the sample nearest to x_center; y is
// assumed to peak there. Returns NaN when a side never drops below half.
double fwhm_around(const std::vector<double> &x, const std::vector<double> &y, double x_center);

} // namespace nvcav
