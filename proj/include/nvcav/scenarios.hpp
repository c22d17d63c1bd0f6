#pragma once

#include <string>
#include <vector>

namespace nvcav
{

// One golden number: the computed value, the reference it is compared with
// and the accepted band [lower, upper].
struct Check
{
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
    std::string unit;
};

Check check_abs(std::string name, double value, double target, double tol, std::string unit = {});
Check check_rel(std::string name, double value, double target, double rel_tol, std::string unit = {});
Check check_range(std::string name, double value, double lower, double upper, std::string unit = {});

struct ScenarioReport
{
    std::string figure;
    std::vector<Check> checks;
    bool pass() const;
};

const std::vector<std::string> &figure_ids();

// Throws std::invalid_argument for an unknown id.
ScenarioReport reproduce(const std::string &figure);

ScenarioReport reproduce_fig1d();
ScenarioReport reproduce_fig2();
ScenarioReport reproduce_fig3c();
ScenarioReport reproduce_fig3d();
ScenarioReport reproduce_fig4a();
ScenarioReport reproduce_fig4b();
ScenarioReport reproduce_fig4c();

// Pieces shared with the acceptance suite.
struct LifetimeSummary
{
    double tau_m2 = 0.0;
    double tau_m1 = 0.0;
    double tau_off = 0.0;
    double amplitude_fwhm = 0.0;
    double dip_fwhm = 0.0;
};
LifetimeSummary lifetime_summary(double sigma_vib_pm, double step_pm = 5.0);

struct RabiSummary
{
    double rise_time_ns = 0.0;
    double omega_over_gamma = 0.0;
    double modulation_resonant = 0.0;
    double modulation_detuned = 0.0;
};
RabiSummary rabi_summary();

} // namespace nvcav
