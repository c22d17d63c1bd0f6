#include "nvcav/qed.hpp"

#include "nvcav/config.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nvcav
{

namespace
{

void require(bool ok, const char *msg)
{
    if (!ok)
        throw std::domain_error(msg);
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

} // namespace

void CavityParams::validate() const
{
    require(t_top_ppm >= 0 && t_bottom_ppm >= 0 && loss_extra_ppm >= 0, "cavity: ppm values must be >= 0");
    require(t_top_ppm + t_bottom_ppm + loss_extra_ppm > 0, "cavity: total round-trip loss must be > 0");
    require(frequency_thz > 0 && kappa > 0, "cavity: frequency and kappa must be > 0");
    require(mode_hwhm_pm > 0, "cavity: mode_hwhm_pm must be > 0");
    require(pm_per_ghz > 0 && std::isfinite(pm_per_ghz), "cavity: pm_per_ghz must be > 0");
}

void EmitterParams::validate() const
{
    require(gamma0 > 0, "emitter: gamma0 must be > 0");
    require(xi0 > 0 && xi0 < 1, "emitter: xi0 must lie in (0, 1)");
    require(g_zpl >= 0, "emitter: g_zpl must be >= 0");
    require(theta_cav_deg >= 0 && theta_cav_deg < 180, "emitter: theta_cav must lie in [0, 180)");
}

double purcell_total(double g_zpl, double kappa, double gamma0)
{
    require(kappa > 0 && gamma0 > 0, "purcell_total: kappa and gamma0 must be > 0");
    require(g_zpl >= 0, "purcell_total: g must be >= 0");
    return 1.0 + 4.0 * g_zpl * g_zpl / (kappa * gamma0);
}

double g_from_purcell(double f_p, double kappa, double gamma0)
{
    require(kappa > 0 && gamma0 > 0, "g_from_purcell: kappa and gamma0 must be > 0");
    require(f_p >= 1.0, "g_from_purcell: f_p must be >= 1");
    return std::sqrt((f_p - 1.0) * kappa * gamma0 / 4.0);
}

PurcellReport derived_figures(double f_p, double xi0, double kappa_top_fraction, double kappa, double gamma0)
{
    require(f_p >= 1.0, "derived_figures: f_p must be >= 1");
    require(xi0 > 0 && xi0 < 1, "derived_figures: xi0 must lie in (0, 1)");
    require(kappa_top_fraction >= 0 && kappa_top_fraction <= 1, "derived_figures: kappa_top_fraction outside [0, 1]");
    require(kappa > 0 && gamma0 > 0, "derived_figures: kappa and gamma0 must be > 0");
    PurcellReport r;
    r.f_p = f_p;
    r.beta = (f_p - 1.0) / f_p;
    r.f_p_zpl = (f_p - (1.0 - xi0)) / xi0;
    r.xi_cav = r.beta + xi0 / f_p;
    r.eta = r.beta * kappa_top_fraction * kappa / (kappa + gamma0);
    return r;
}

LossBudget loss_budget(double t_top_ppm, double t_bottom_ppm, double loss_extra_ppm)
{
    require(t_top_ppm >= 0 && t_bottom_ppm >= 0 && loss_extra_ppm >= 0, "loss_budget: ppm values must be >= 0");
    const double total = t_top_ppm + t_bottom_ppm + loss_extra_ppm;
    require(total > 0, "loss_budget: total loss must be > 0");
    return {total, 2.0 * std::numbers::pi / (total * 1e-6), t_top_ppm / total};
}

double kappa_from_quality(double frequency_thz, double quality)
{
    require(frequency_thz > 0 && quality > 0, "kappa_from_quality: inputs must be > 0");
    return frequency_thz * 1e3 / quality;
}

double free_spectral_range_ghz(double kappa_ghz, double finesse)
{
    require(kappa_ghz > 0 && finesse > 0, "free_spectral_range_ghz: inputs must be > 0");
    return kappa_ghz * finesse;
}

double slr_gain(double gamma_ext, double gamma0, double f_p)
{
    require(gamma0 > 0 && f_p >= 1.0, "slr_gain: gamma0 > 0 and f_p >= 1 required");
    return gamma_ext / (gamma0 * f_p);
}

double cooperativity_ratio(double theta_cav_deg)
{
    const double t = std::tan(deg(theta_cav_deg));
    return t * t;
}

double purcell_total_sigma(double g, double kappa, double gamma0, double sg, double sk, double sgm)
{
    purcell_total(g, kappa, gamma0);
    const double dg = 8.0 * g / (kappa * gamma0);
    const double dk = -4.0 * g * g / (kappa * kappa * gamma0);
    const double dgm = -4.0 * g * g / (kappa * gamma0 * gamma0);
    return std::sqrt(dg * dg * sg * sg + dk * dk * sk * sk + dgm * dgm * sgm * sgm);
}

PurcellReport derived_figures_sigma(double f, double xi, double fr, double kappa, double gamma0,
                                    const PurcellInputSigma &s)
{
    const auto r = derived_figures(f, xi, fr, kappa, gamma0);
    auto quad = [](std::initializer_list<std::pair<double, double>> terms) {
        double acc = 0.0;
        for (auto [d, sig] : terms)
            acc += d * d * sig * sig;
        return std::sqrt(acc);
    };
    const double kg = kappa + gamma0;
    PurcellReport out;
    out.f_p = s.f_p;
    out.beta = quad({{1.0 / (f * f), s.f_p}});
    out.f_p_zpl = quad({{1.0 / xi, s.f_p}, {-(f - 1.0) / (xi * xi), s.xi0}});
    out.xi_cav = quad({{(1.0 - xi) / (f * f), s.f_p}, {1.0 / f, s.xi0}});
    out.eta = quad({{fr * kappa / kg / (f * f), s.f_p},
                    {r.beta * kappa / kg, s.kappa_top_fraction},
                    {r.beta * fr * gamma0 / (kg * kg), s.kappa},
                    {-r.beta * fr * kappa / (kg * kg), s.gamma0}});
    return out;
}

CavityParams cavity_from_config(const KeyValueConfig &cfg, CavityParams c)
{
    c.t_top_ppm = cfg.get_double("t_top_ppm", c.t_top_ppm);
    c.t_bottom_ppm = cfg.get_double("t_bottom_ppm", c.t_bottom_ppm);
    c.loss_extra_ppm = cfg.get_double("loss_extra_ppm", c.loss_extra_ppm);
    c.frequency_thz = cfg.get_double("frequency_thz", c.frequency_thz);
    c.kappa = units::angular_ghz(cfg.get_double("kappa_ghz", c.kappa / units::angular_ghz(1.0)));
    c.mode_splitting_ghz = cfg.get_double("mode_splitting_ghz", c.mode_splitting_ghz);
    c.mode_splitting_pm = cfg.get_double("mode_splitting_pm", c.mode_splitting_pm);
    c.mode_hwhm_pm = cfg.get_double("mode_hwhm_pm", c.mode_hwhm_pm);
    c.pm_per_ghz = cfg.get_double("pm_per_ghz", c.pm_per_ghz);
    c.validate();
    return c;
}

EmitterParams emitter_from_config(const KeyValueConfig &cfg, EmitterParams e)
{
    e.gamma0 = units::angular_mhz(cfg.get_double("gamma0_mhz", units::ordinary_mhz(e.gamma0)));
    e.xi0 = cfg.get_double("xi0", e.xi0);
    e.g_zpl = units::angular_mhz(cfg.get_double("g_zpl_mhz", units::ordinary_mhz(e.g_zpl)));
    e.theta_cav_deg = cfg.get_double("theta_cav_deg", e.theta_cav_deg);
    e.validate();
    return e;
}

std::vector<std::pair<std::string, double>> to_fields(const CavityParams &c)
{
    return {{"t_top_ppm", c.t_top_ppm},
            {"t_bottom_ppm", c.t_bottom_ppm},
            {"loss_extra_ppm", c.loss_extra_ppm},
            {"frequency_thz", c.frequency_thz},
            {"kappa_ghz", c.kappa / units::angular_ghz(1.0)},
            {"mode_splitting_ghz", c.mode_splitting_ghz},
            {"mode_splitting_pm", c.mode_splitting_pm},
            {"mode_hwhm_pm", c.mode_hwhm_pm},
            {"pm_per_ghz", c.pm_per_ghz}};
}

std::vector<std::pair<std::string, double>> to_fields(const EmitterParams &e)
{
    return {{"gamma0_mhz", units::ordinary_mhz(e.gamma0)},
            {"xi0", e.xi0},
            {"g_zpl_mhz", units::ordinary_mhz(e.g_zpl)},
            {"theta_cav_deg", e.theta_cav_deg}};
}

} // namespace nvcav
