#pragma once

#include "nvcav/units.hpp"

#include <string>
#include <utility>
#include <vector>

namespace nvcav
{

class KeyValueConfig;

// Angular rates (g, kappa, gamma0) are in rad/us; the flat key-value form
// uses ordinary MHz / GHz with the unit in the key name.
struct CavityParams
{
    double t_top_ppm = 485.0;
    double t_bottom_ppm = 56.0;
    double loss_extra_ppm = 908.7;
    double frequency_thz = 469.7;
    double kappa = units::angular_ghz(11.0);
    double mode_splitting_ghz = 34.4;
    double mode_splitting_pm = -210.0;
    double mode_hwhm_pm = 25.0;
    // Linear displacement <-> frequency calibration for cavity sweeps.
    double pm_per_ghz = 210.0 / 34.4;

    void validate() const;
};

struct EmitterParams
{
    double gamma0 = units::angular_mhz(12.89);
    double xi0 = 0.03;
    double g_zpl = units::angular_mhz(167.0);
    double theta_cav_deg = 33.0;

    void validate() const;
};

struct PurcellReport
{
    double f_p = 1.0;
    double beta = 0.0;
    double f_p_zpl = 1.0;
    double xi_cav = 0.0;
    double eta = 0.0;
};

struct LossBudget
{
    double total_loss_ppm = 0.0;
    double finesse = 0.0;
    double kappa_top_fraction = 0.0;
};

double purcell_total(double g_zpl, double kappa, double gamma0);
// Inverse of purcell_total in g (f_p >= 1).
double g_from_purcell(double f_p, double kappa, double gamma0);

PurcellReport derived_figures(double f_p, double xi0, double kappa_top_fraction, double kappa, double gamma0);

LossBudget loss_budget(double t_top_ppm, double t_bottom_ppm, double loss_extra_ppm);

// Cavity linewidth kappa/2pi in GHz from the optical frequency (THz) and Q.
double kappa_from_quality(double frequency_thz, double quality);
// Free spectral range (GHz) from the linewidth (GHz) and finesse.
double free_spectral_range_ghz(double kappa_ghz, double finesse);

// Expected ratio of single-photon signal to laser background when moving from
// the lifetime-limited to the charge-noise-broadened linewidth.
double slr_gain(double gamma_ext, double gamma0, double f_p);

// Cooperativity ratio C_M1 / C_M2 for a dipole at theta_cav from M2.
double cooperativity_ratio(double theta_cav_deg);

// First-order uncertainty propagation. Inputs are 1-sigma values.
struct PurcellInputSigma
{
    double f_p = 0.0;
    double xi0 = 0.0;
    double kappa_top_fraction = 0.0;
    double kappa = 0.0;
    double gamma0 = 0.0;
};

double purcell_total_sigma(double g_zpl, double kappa, double gamma0, double sigma_g, double sigma_kappa,
                           double sigma_gamma0);

PurcellReport derived_figures_sigma(double f_p, double xi0, double kappa_top_fraction, double kappa, double gamma0,
                                    const PurcellInputSigma &sigma);

// Flat key-value form: cavity keys t_top_ppm, t_bottom_ppm, loss_extra_ppm,
// frequency_thz, kappa_ghz, mode_splitting_ghz, mode_splitting_pm,
// mode_hwhm_pm, pm_per_ghz; emitter keys gamma0_mhz, xi0, g_zpl_mhz,
// theta_cav_deg. Missing keys keep their defaults.
CavityParams cavity_from_config(const KeyValueConfig &cfg, CavityParams base = {});
EmitterParams emitter_from_config(const KeyValueConfig &cfg, EmitterParams base = {});
std::vector<std::pair<std::string, double>> to_fields(const CavityParams &c);
std::vector<std::pair<std::string, double>> to_fields(const EmitterParams &e);

} // namespace nvcav
