#include "nvcav/scenarios.hpp"

#include "nvcav/bloch.hpp"
#include "nvcav/decay.hpp"
#include "nvcav/diagnostics.hpp"
#include "nvcav/multistate.hpp"
#include "nvcav/qed.hpp"
#include "nvcav/random.hpp"
#include "nvcav/rate3.hpp"
#include "nvcav/rfscan.hpp"
#include "nvcav/units.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace nvcav
{

Check check_abs(std::string name, double value, double target, double tol, std::string unit)
{
    auto c = check_range(std::move(name), value, target - tol, target + tol, std::move(unit));
    c.target = target;
    return c;
}

Check check_range(std::string name, double value, double lower, double upper, std::string unit)
{
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.target = std::isfinite(lower) ? lower : upper;
    c.lower = lower;
    c.upper = upper;
    c.pass = std::isfinite(value) && value >= lower && value <= upper;
    c.unit = std::move(unit);
    return c;
}

Check check_rel(std::string name, double value, double target, double rel_tol, std::string unit)
{
    const double tol = std::abs(target) * rel_tol;
    auto c = check_range(std::move(name), value, target - tol, target + tol, std::move(unit));
    c.target = target;
    return c;
}

bool ScenarioReport::pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.pass; });
}

const std::vector<std::string> &figure_ids()
{
    static const std::vector<std::string> ids{"fig1d", "fig2", "fig3c", "fig3d", "fig4a", "fig4b", "fig4c"};
    return ids;
}

ScenarioReport reproduce(const std::string &figure)
{
    if (figure == "fig1d")
        return reproduce_fig1d();
    if (figure == "fig2")
        return reproduce_fig2();
    if (figure == "fig3c")
        return reproduce_fig3c();
    if (figure == "fig3d")
        return reproduce_fig3d();
    if (figure == "fig4a")
        return reproduce_fig4a();
    if (figure == "fig4b")
        return reproduce_fig4b();
    if (figure == "fig4c")
        return reproduce_fig4c();
    throw std::invalid_argument("unknown figure id '" + figure + "'");
}

ScenarioReport reproduce_fig1d()
{
    ScenarioReport r{"fig1d", {}};
    auto &c = r.checks;

    const CavityParams cav;
    const EmitterParams em;
    const auto budget = loss_budget(cav.t_top_ppm, cav.t_bottom_ppm, cav.loss_extra_ppm);
    const double fp = purcell_total(em.g_zpl, cav.kappa, em.gamma0);
    const auto fig = derived_figures(fp, em.xi0, budget.kappa_top_fraction, cav.kappa, em.gamma0);
    c.push_back(check_abs("purcell_factor", fp, 1.79, 0.02));
    c.push_back(check_abs("beta", fig.beta, 0.441, 0.005));
    c.push_back(check_abs("purcell_factor_zpl", fig.f_p_zpl, 27.3, 0.5));
    c.push_back(check_abs("xi_cav", fig.xi_cav, 0.458, 0.01));
    c.push_back(check_abs("eta", fig.eta, 0.148, 0.003));
    c.push_back(check_abs("finesse", budget.finesse, 4334.0, 5.0));
    c.push_back(check_abs("finesse_no_extra_loss", loss_budget(cav.t_top_ppm, cav.t_bottom_ppm, 0.0).finesse,
                          11614.0, 20.0));
    c.push_back(check_abs("kappa_from_q", kappa_from_quality(cav.frequency_thz, 42930.0), 10.94, 0.02, "GHz"));

    const Rate3Params p;
    const auto ss = steady_state(p);
    std::vector<double> taus;
    for (double t = 0.0; t <= 33000.0; t += 5.0)
        taus.push_back(t);
    const auto numeric = g2_numeric(p, taus);
    std::vector<double> two_exp;
    {
        // the scale-separation warning is expected at these rates
        ScopedWarningHandler quiet([](std::string_view) {});
        two_exp = g2_analytic(p, taus);
    }
    double worst_exact = 0.0, worst_two_exp = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i)
    {
        worst_exact = std::max(worst_exact, std::abs(g2_closed_form(p, taus[i]) - numeric[i]));
        worst_two_exp = std::max(worst_two_exp, std::abs(two_exp[i] - numeric[i]));
    }
    // deviations in units of the long-delay level g2 = 1
    c.push_back(check_range("g2_two_exponential_vs_expm_max_dev", worst_two_exp, 0.0, 0.01));
    c.push_back(check_range("g2_exact_eigen_vs_expm_max_dev", worst_exact, 0.0, 0.01));
    c.push_back(check_abs("g2_zero", numeric.front(), 0.0, 1e-9));
    c.push_back(check_rel("g2_plateau", numeric.back(), 1.0, 0.01));
    c.push_back(check_abs("bunching_peak", 1.0 + bunching_amplitude(p), 1.203, 0.005));
    const auto bg = background_for_g2_zero(0.04, ss.rho_e);
    c.push_back(check_abs("g2_zero_with_background", g2_with_background(numeric.front(), ss.rho_e, bg), 0.04, 1e-9));
    c.push_back(check_abs("background_fraction", bg.b / (ss.rho_e + bg.b), 0.04, 1e-9));
    const double inv_keg = 1e3 / p.k_eg;
    c.push_back(check_abs("inverse_k_eg", inv_keg, 9.88, 0.01, "ns"));
    // 9.9(7) ns against 10.6(6) ns
    const double lo = std::max(inv_keg - 0.7, 10.6 - 0.6);
    const double hi = std::min(inv_keg + 0.7, 10.6 + 0.6);
    c.push_back(check_range("inverse_k_eg_m1_interval_overlap", hi - lo, 0.0, INFINITY, "ns"));
    c.push_back(check_abs("on_fraction", on_fraction(p), 0.83, 0.01));
    return r;
}

LifetimeSummary lifetime_summary(double sigma_vib_pm, double step_pm)
{
    DecayModel model;
    model.vib.sigma_vib_pm = sigma_vib_pm;
    std::vector<double> grid;
    for (double d = -400.0; d <= 200.0 + 1e-9; d += step_pm)
        grid.push_back(d);
    const auto sweep = lifetime_sweep(grid, model);
    const auto off = lifetime_sweep({500.0}, model).front();

    auto nearest = [&](double x) {
        return *std::min_element(sweep.begin(), sweep.end(), [&](const SweepPoint &a, const SweepPoint &b) {
            return std::abs(a.delta_cav_pm - x) < std::abs(b.delta_cav_pm - x);
        });
    };
    LifetimeSummary s;
    s.tau_m2 = nearest(0.0).lifetime_ns;
    s.tau_m1 = nearest(model.cavity.mode_splitting_pm).lifetime_ns;
    s.tau_off = off.lifetime_ns;
    s.amplitude_fwhm = amplitude_fwhm(sweep);
    s.dip_fwhm = lifetime_dip_fwhm(sweep, s.tau_off, 0.0);
    return s;
}

ScenarioReport reproduce_fig2()
{
    ScenarioReport r{"fig2", {}};
    auto &c = r.checks;
    const DecayModel model;
    c.push_back(check_abs("tau0", model.tau0_ns(), 12.35, 0.05, "ns"));
    const auto s = lifetime_summary(model.vib.sigma_vib_pm);
    c.push_back(check_rel("lifetime_m2", s.tau_m2, 6.88, 0.03, "ns"));
    c.push_back(check_rel("lifetime_m1", s.tau_m1, 10.6, 0.03, "ns"));
    c.push_back(check_rel("lifetime_off_resonance", s.tau_off, 12.35, 0.03, "ns"));
    c.push_back(check_rel("amplitude_fwhm", s.amplitude_fwhm, 80.0, 0.10, "pm"));
    c.push_back(check_rel("lifetime_dip_fwhm", s.dip_fwhm, 116.0, 0.10, "pm"));
    const auto s0 = lifetime_summary(0.0);
    c.push_back(check_range("fwhm_collapse_without_vibration",
                            std::abs(s0.dip_fwhm - s0.amplitude_fwhm) / s0.amplitude_fwhm, 0.0, 0.05));
    return r;
}

ScenarioReport reproduce_fig3c()
{
    ScenarioReport r{"fig3c", {}};
    auto &c = r.checks;
    const double fp = 1.79, g0 = 12.89;

    DoubletParams truth;
    truth.amplitude = 2000.0;
    truth.second_fraction = 0.35;
    truth.center_mhz = 0.0;
    truth.shift_mhz = 171.0;
    truth.gamma_ext_mhz = 159.0;
    // unit background gives the peak signal; rescale for a signal-to-laser ratio of 14
    truth.background = 1.0;
    truth.background = doublet_slr(truth, fp, g0) / 14.0;

    std::vector<double> x;
    for (double d = -1000.0; d <= 1000.0 + 1e-9; d += 10.0)
        x.push_back(d);
    const auto mean = doublet_profile(x, truth, fp, g0);
    Xoshiro256 rng(20240617);
    std::vector<double> counts;
    for (double m : mean)
        counts.push_back(static_cast<double>(std::poisson_distribution<long>(m)(rng)));

    DoubletParams guess;
    guess.amplitude = *std::max_element(counts.begin(), counts.end());
    guess.background = counts.front();
    guess.center_mhz = 20.0;
    guess.shift_mhz = 150.0;
    guess.gamma_ext_mhz = 120.0;
    guess.second_fraction = 0.5;
    const auto fit = fit_doublet(x, counts, guess, fp, g0);
    c.push_back(check_range("fit_converged", fit.converged ? 1.0 : 0.0, 1.0, 1.0));
    c.push_back(check_abs("gamma_ext", fit.estimate.gamma_ext_mhz, 159.0, 5.0, "MHz"));
    c.push_back(check_abs("trap_shift", fit.estimate.shift_mhz, 171.0, 3.0, "MHz"));
    c.push_back(check_abs("slr", fit.slr, 14.0, 0.5));
    c.push_back(check_abs("contrast", fit.contrast, 0.933, 0.005));
    c.push_back(check_abs("contrast_from_slr_14", contrast_from_slr(14.0), 0.933, 0.0005));
    c.push_back(check_abs("total_linewidth", total_linewidth_mhz(159.0, fp, g0), 182.07, 0.01, "MHz"));
    c.push_back(check_abs("slr_projection",
                          slr_gain(units::angular_mhz(159.0), units::angular_mhz(g0), fp), 6.9, 0.1));
    return r;
}

ScenarioReport reproduce_fig3d()
{
    ScenarioReport r{"fig3d", {}};
    auto &c = r.checks;
    std::vector<double> x;
    for (double d = -400.0; d <= 200.0 + 1e-9; d += 2.0)
        x.push_back(d);
    RfCavityModel m;
    const double p_low = std::pow(units::angular_mhz(5.0), 2);
    const double p_high = std::pow(units::angular_mhz(400.0), 2);
    const double low = doublet_peak_ratio(x, rf_vs_cavity(x, p_low, m), m.cavity);
    const double high = doublet_peak_ratio(x, rf_vs_cavity(x, p_high, m), m.cavity);
    m.delta_nv = m.noise.trap_shift;
    const double high_detuned = doublet_peak_ratio(x, rf_vs_cavity(x, p_high, m), m.cavity);
    c.push_back(check_range("m2_over_m1_high_power", high, 1.0, INFINITY));
    c.push_back(check_range("ratio_high_minus_low_power", high - low, 0.0, INFINITY));
    c.push_back(check_range("detuned_ratio_closer_to_one", std::abs(high - 1.0) - std::abs(high_detuned - 1.0), 0.0,
                            INFINITY));
    return r;
}

ScenarioReport reproduce_fig4a()
{
    ScenarioReport r{"fig4a", {}};
    auto &c = r.checks;
    const auto model = Nv10Model::defaults();
    const RepumpReadout ro;
    const SegmentFactory factory = [&](double p) { return pulse_sequence(model, p, ro.timings); };
    std::vector<double> powers;
    for (double p = 0.1; p <= 4.0 + 1e-9; p += 0.1)
        powers.push_back(p);

    auto interior_max = [](const std::vector<RepumpResponse> &v) {
        std::size_t k = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i].rf0 > v[k].rf0)
                k = i;
        return k;
    };
    const auto with_drift = pl_rf_vs_repump(powers, factory, model, DriftModel{}, ro);
    const auto k = interior_max(with_drift);
    c.push_back(check_range("rf0_peak_power", powers[k], powers[1], powers[powers.size() - 2], "mW"));
    c.push_back(check_range("rf0_droop_after_peak", with_drift[k].rf0 - with_drift.back().rf0, 1e-12, INFINITY));

    const auto no_drift = pl_rf_vs_repump(powers, factory, model, DriftModel{0.0}, ro);
    double worst_step = INFINITY;
    for (std::size_t i = 1; i < no_drift.size(); ++i)
        worst_step = std::min(worst_step, no_drift[i].rf0 - no_drift[i - 1].rf0);
    c.push_back(check_range("rf0_monotone_without_drift", worst_step, -1e-12, INFINITY));

    // pulse-train shape: PL rises in the repump, RF (g0 population) falls in the probe
    const auto segs = factory(1.0);
    const auto ss = sequence_steady_state(segs, 1e-12);
    const auto trace = sequence_trace(segs, ss.population, 20);
    double pl_first = NAN, pl_last = NAN, rf_first = NAN, rf_last = NAN;
    for (const auto &pt : trace)
    {
        if (pt.segment == 0)
        {
            const double f = model.zpl_flux(pt.population);
            if (std::isnan(pl_first))
                pl_first = f;
            pl_last = f;
        }
        if (pt.segment == 2)
        {
            if (std::isnan(rf_first))
                rf_first = pt.population(0);
            rf_last = pt.population(0);
        }
    }
    c.push_back(check_range("pl_rises_during_repump", pl_last - pl_first, 0.0, INFINITY));
    c.push_back(check_range("rf_decays_during_probe", rf_first - rf_last, 0.0, INFINITY));

    const double pl = pl_saturation(3.6, 2.3e6, 67.0);
    c.push_back(check_abs("pl_at_3p6_mw", pl * 1e-3, 117.3, 0.5, "kcts/s"));
    // 140 kcts/s measured; I_sat 2.3(6) Mcts/s, P_sat 67(37) mW
    const double pl_lo = pl_saturation(3.6, 2.3e6 - 0.6e6, 67.0 + 37.0);
    const double pl_hi = pl_saturation(3.6, 2.3e6 + 0.6e6, 67.0 - 37.0);
    c.push_back(check_range("pl_measured_within_errors", 140.0, pl_lo * 1e-3, pl_hi * 1e-3, "kcts/s"));
    return r;
}

ScenarioReport reproduce_fig4b()
{
    ScenarioReport r{"fig4b", {}};
    auto &c = r.checks;
    SaturationParams s;
    const double gext = units::angular_mhz(159.0);
    c.push_back(check_abs("p_sat", saturation_power(s, gext) * 1e-3, 1.2, 0.1, "uW"));
    c.push_back(check_abs("rf_at_300_nw", saturation_rf(300.0, s, gext) * 1e-3, 83.0, 4.0, "kcts/s"));

    double worst = 0.0;
    const double h = s.f_p * s.gamma0;
    for (double p : {1.0, 10.0, 100.0, 1000.0, 10000.0})
    {
        const double law = saturation_rf(p, s, 0.0);
        const double textbook = s.i_sat * 2.0 * two_level_rho_ee(s.a_scale * p, 0.0, h);
        worst = std::max(worst, std::abs(law - textbook) / textbook);
    }
    c.push_back(check_range("zero_noise_matches_two_level", worst, 0.0, 1e-6));
    return r;
}

RabiSummary rabi_summary()
{
    const DriveEnvelope env;
    const double gamma = units::angular_mhz(12.89 * 1.79);
    const ChargeNoise noise;
    std::vector<double> t;
    for (double x = 0.0; x <= 60.0 + 1e-9; x += 0.1)
        t.push_back(x);
    const CompositionModel comp;
    const TraceSolver solver = [&](double det) { return obe_solve(env, det, gamma, comp, t); };

    RabiSummary s;
    s.rise_time_ns = rise_time_10_90(env);
    s.omega_over_gamma = env.amplitude / gamma;
    s.modulation_resonant = oscillation_modulation(charge_noise_average(solver, 0.0, noise.gamma_ext));
    s.modulation_detuned = oscillation_modulation(charge_noise_average(solver, noise.trap_shift, noise.gamma_ext));
    return s;
}

ScenarioReport reproduce_fig4c()
{
    ScenarioReport r{"fig4c", {}};
    auto &c = r.checks;
    const auto s = rabi_summary();
    c.push_back(check_abs("rise_time_10_90", s.rise_time_ns, 9.5, 0.1, "ns"));
    c.push_back(check_rel("rabi_over_purcell_rate", s.omega_over_gamma, 2.2, 0.05));
    c.push_back(check_range("first_maximum_visible", s.modulation_resonant, 1e-3, INFINITY));
    c.push_back(check_range("detuned_modulation_ratio", s.modulation_detuned / s.modulation_resonant, 0.0, 0.20));
    return r;
}

} // namespace nvcav
