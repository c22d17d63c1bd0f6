#pragma once

#include "nvcav/qed.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvcav
{

// Charge-noise and drive parameters use angular rates (rad/us) unless the
// name says otherwise; line profiles over laser detuning use plain MHz.

struct ChargeNoise
{
    double gamma_ext = units::angular_mhz(159.0);
    double trap_shift = units::angular_mhz(171.0);
    double trap_flip_rate_hz = 0.005;

    void validate() const;
};

struct SaturationParams
{
    double i_sat = 250e3;
    // rad^2/us^2 per nW.
    double a_scale = 1.7e3;
    double f_p = 1.79;
    double gamma0 = units::angular_mhz(12.89);

    void validate() const;
};

// Lorentzian line of full width gamma_ext_mhz + f_p * gamma0_mhz (the
// convolution of the charge-noise distribution with the Purcell-broadened
// homogeneous line), unit peak height scaled by `amplitude`, plus a flat
// background. Detunings in MHz.
std::vector<double> linewidth_profile(const std::vector<double> &delta_nv_mhz, double gamma_ext_mhz, double f_p,
                                      double gamma0_mhz, double laser_background, double amplitude = 1.0,
                                      double center_mhz = 0.0);

double total_linewidth_mhz(double gamma_ext_mhz, double f_p, double gamma0_mhz);

// Area-normalised convolution of two Lorentzians (full widths a, b) at x,
// by adaptive quadrature. The analytic answer is a Lorentzian of width a + b.
double lorentzian_convolution_numeric(double x, double fwhm_a, double fwhm_b);

// Two lines of common width separated by `shift_mhz`; the second one is
// weighted by `second_fraction` of the first's amplitude.
struct DoubletParams
{
    double amplitude = 1.0;
    double second_fraction = 0.5;
    double center_mhz = 0.0;
    double shift_mhz = 171.0;
    double gamma_ext_mhz = 159.0;
    double background = 0.0;
};

std::vector<double> doublet_profile(const std::vector<double> &delta_nv_mhz, const DoubletParams &p, double f_p,
                                    double gamma0_mhz);

struct DoubletFit
{
    DoubletParams estimate;
    DoubletParams ci95;
    double slr = 0.0;
    double contrast = 0.0;
    double reduced_chi2 = 0.0;
    bool converged = false;
};

// Poisson-weighted fit of a doublet to counts; f_p and gamma0 are held fixed.
DoubletFit fit_doublet(const std::vector<double> &delta_nv_mhz, const std::vector<double> &counts,
                       const DoubletParams &guess, double f_p, double gamma0_mhz);

// Peak signal over background and the resulting contrast SLR / (SLR + 1).
double doublet_slr(const DoubletParams &p, double f_p, double gamma0_mhz);
double contrast_from_slr(double slr);

// Excitation through M1, collection through M2, charge noise averaged over
// [-10, 10] Gamma_ext. p0 is the peak intra-cavity drive Omega^2 in
// rad^2/us^2. The Lorentzian weight is area-normalised.
struct RfCavityModel
{
    CavityParams cavity;
    EmitterParams emitter;
    double c_degen = 1.068 / 0.7033683215;
    ChargeNoise noise;
    // Laser detuning from the emitter (rad/us).
    double delta_nv = 0.0;
    double scale = 1.0;
    double cutoff = 10.0;
    double rel_tol = 1e-9;
};

std::vector<double> rf_vs_cavity(const std::vector<double> &delta_cav_pm, double p0, const RfCavityModel &model);

// Monte Carlo variant sampling Cauchy detunings (samples outside the
// integration window contribute zero). Returns mean and standard error per point.
struct SampledCurve
{
    std::vector<double> mean;
    std::vector<double> stderr_;
};
SampledCurve rf_vs_cavity_sampled(const std::vector<double> &delta_cav_pm, double p0, const RfCavityModel &model,
                                  std::size_t samples, std::uint64_t seed);

// Ratio of the M2 peak (near zero displacement) to the M1 peak (near
// cavity.mode_splitting_pm) of a rf_vs_cavity curve.
double doublet_peak_ratio(const std::vector<double> &delta_cav_pm, const std::vector<double> &curve,
                          const CavityParams &cavity);

// Saturation law with charge-noise broadening; all rates angular. gamma_ext
// in rad/us, powers in nW.
double saturation_rf(double p_nw, const SaturationParams &s, double gamma_ext);
std::vector<double> saturation_curve(const std::vector<double> &p_nw, const SaturationParams &s, double gamma_ext);
// Power at which saturation_rf reaches i_sat / 2.
double saturation_power(const SaturationParams &s, double gamma_ext);

// Steady-state excited population of a driven two-level system.
double two_level_rho_ee(double omega_sq, double delta, double gamma);

class ClassificationError : public std::runtime_error
{
public:
    ClassificationError(const std::string &what, double overlap) : std::runtime_error(what), overlap_(overlap) {}
    double overlap() const noexcept { return overlap_; }

private:
    double overlap_;
};

struct MixtureComponent
{
    double weight = 0.0;
    double mean = 0.0;
    double sigma = 0.0;
};

// One-dimensional Gaussian mixture by EM, started from equal quantiles and
// from a split at the widest gaps (higher likelihood wins); components come
// back sorted by mean.
std::vector<MixtureComponent> fit_gaussian_mixture(const std::vector<double> &samples, std::size_t k,
                                                   std::size_t max_iter = 500);

// Separation metric between neighbouring components: smallest
// |mu_i - mu_j| / (sigma_i + sigma_j).
double mixture_resolution(const std::vector<MixtureComponent> &components);

struct TrapHistogram
{
    // Per power setpoint, the per-sequence mean counts.
    std::vector<std::vector<double>> samples;
};

struct BackgroundExtraction
{
    double background_slope = 0.0;
    double background_intercept = 0.0;
    std::vector<std::vector<MixtureComponent>> components;
    // Laser-only, detuned and resonant means per setpoint (NaN if absent).
    std::vector<double> laser_mean;
    std::vector<double> detuned_mean;
    std::vector<double> resonant_mean;
    double slr = 0.0;
    double contrast = 0.0;
};

// Mixture classification per setpoint (three components, falling back to two),
// linear regression of the laser-only means over power and the SLR at
// `working_index`. Throws ClassificationError when fewer than two components
// are resolved (resolution < 1).
BackgroundExtraction classify_and_extract_background(const TrapHistogram &histograms, const std::vector<double> &p_nw,
                                                     std::size_t working_index);

// (rf0_raw - background) * (pl_ref / pl), clamped at zero with a warning.
double correct_rf0(double rf0_raw, double background, double pl, double pl_ref);

struct LinearRegression
{
    double slope = 0.0;
    double intercept = 0.0;
    double slope_sigma = 0.0;
    double intercept_sigma = 0.0;
};

// Ordinary least squares; throws std::domain_error when x is degenerate.
LinearRegression linear_regression(const std::vector<double> &x, const std::vector<double> &y);

} // namespace nvcav
