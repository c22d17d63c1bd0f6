#include "nvcav/decay.hpp"

#include "nvcav/diagnostics.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/fit.hpp"
#include "nvcav/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nvcav
{

namespace
{

double deg(double d) { return d * std::numbers::pi / 180.0; }

} // namespace

InstrumentResponse InstrumentResponse::delta() { return {}; }

InstrumentResponse InstrumentResponse::gaussian(double sigma_ns, double dt_ns)
{
    if (sigma_ns < 0.0 || !(dt_ns > 0.0))
        throw std::domain_error("InstrumentResponse::gaussian: sigma >= 0 and dt > 0 required");
    if (sigma_ns == 0.0)
        return delta();
    if (dt_ns > sigma_ns)
        warn("instrument response: grid spacing is coarser than the IRF width");
    const auto half = static_cast<long>(std::ceil(6.0 * sigma_ns / dt_ns));
    InstrumentResponse irf;
    irf.offsets_ns.clear();
    irf.weights.clear();
    double total = 0.0;
    for (long k = -half; k <= half; ++k)
    {
        const double s = static_cast<double>(k) * dt_ns;
        const double w = std::exp(-0.5 * s * s / (sigma_ns * sigma_ns));
        irf.offsets_ns.push_back(s);
        irf.weights.push_back(w);
        total += w;
    }
    for (double &w : irf.weights)
        w /= total;
    return irf;
}

InstrumentResponse InstrumentResponse::sampled(const std::vector<double> &kernel, double dt_ns, std::size_t center)
{
    if (kernel.empty() || center >= kernel.size() || !(dt_ns > 0.0))
        throw std::domain_error("InstrumentResponse::sampled: bad kernel");
    InstrumentResponse irf;
    irf.offsets_ns.clear();
    irf.weights.clear();
    double total = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k)
    {
        if (kernel[k] < 0.0)
            throw std::domain_error("InstrumentResponse::sampled: negative kernel entry");
        irf.offsets_ns.push_back((static_cast<double>(k) - static_cast<double>(center)) * dt_ns);
        irf.weights.push_back(kernel[k]);
        total += kernel[k];
    }
    if (!(total > 0.0))
        throw std::domain_error("InstrumentResponse::sampled: kernel has zero area");
    for (double &w : irf.weights)
        w /= total;
    return irf;
}

void InstrumentResponse::validate() const
{
    if (offsets_ns.size() != weights.size() || weights.empty())
        throw std::domain_error("instrument response: offsets and weights differ in size");
    double total = 0.0;
    for (double w : weights)
    {
        if (w < 0.0)
            throw std::domain_error("instrument response: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::domain_error("instrument response: kernel is not unit area");
}

double DecayModel::tau0_ns() const { return 1e3 / emitter.gamma0; }

void DecayModel::validate() const
{
    cavity.validate();
    emitter.validate();
    if (c_degen < 0.0)
        throw std::domain_error("decay: c_degen must be >= 0");
    if (vib.sigma_vib_pm < 0.0)
        throw std::domain_error("decay: sigma_vib must be >= 0");
    if (nodes < 2)
        throw std::domain_error("decay: at least two quadrature nodes required");
}

double c_degen_from_mode_cooperativity(double c_m2, double theta_cav_deg)
{
    const double c = std::cos(deg(theta_cav_deg));
    if (c * c < 1e-12)
        throw std::domain_error("c_degen_from_mode_cooperativity: dipole orthogonal to M2");
    return c_m2 / (c * c);
}

namespace
{

ModeRates mode_rates_n(double delta, const DecayModel &m, std::size_t n)
{
    const auto rule = gaussian_average_rule(m.vib.sigma_vib_pm, n);
    const double g0 = 1.0 / m.tau0_ns();
    const double th = deg(m.emitter.theta_cav_deg);
    const double s2 = std::sin(th) * std::sin(th);
    const double c2 = std::cos(th) * std::cos(th);
    const double w = m.cavity.mode_hwhm_pm;
    ModeRates r;
    r.gamma0 = g0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    {
        const double d = rule.nodes[i];
        const double u1 = (delta - m.cavity.mode_splitting_pm + d) / w;
        const double u2 = (delta + d) / w;
        const double a1 = g0 * m.c_degen * s2 / (1.0 + u1 * u1);
        const double a2 = g0 * m.c_degen * c2 / (1.0 + u2 * u2);
        r.weight.push_back(rule.weights[i]);
        r.m1.push_back(a1);
        r.m2.push_back(a2);
        r.rate.push_back(g0 + a1 + a2);
    }
    return r;
}

double probe(const ModeRates &r, double tau)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < r.weight.size(); ++i)
        acc += r.weight[i] * r.rate[i] * std::exp(-r.rate[i] * tau);
    return acc;
}

} // namespace

ModeRates mode_rates(double delta_cav_pm, const DecayModel &model)
{
    model.validate();
    auto r = mode_rates_n(delta_cav_pm, model, model.nodes);
    if (model.vib.sigma_vib_pm > 0.0)
    {
        const auto fine = mode_rates_n(delta_cav_pm, model, 2 * model.nodes);
        const double t3 = 3.0 * model.tau0_ns();
        double worst = 0.0;
        for (double tau : {0.0, model.tau0_ns(), t3})
        {
            const double a = probe(r, tau);
            const double b = probe(fine, tau);
            worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
        }
        if (worst > 1e-4)
            throw ConvergenceError("decay: vibration average not converged; increase nodes", worst);
    }
    return r;
}

EmissionRate emission_rate(double tau_ns, const ModeRates &r)
{
    if (tau_ns < 0.0)
        throw std::domain_error("emission_rate: tau must be >= 0");
    EmissionRate e;
    for (std::size_t i = 0; i < r.weight.size(); ++i)
    {
        const double p = r.weight[i] * std::exp(-r.rate[i] * tau_ns);
        e.m1 += p * r.m1[i];
        e.m2 += p * r.m2[i];
        e.free_space += p * r.gamma0;
    }
    return e;
}

EmissionRate emission_rate(double tau_ns, double delta_cav_pm, const DecayModel &model)
{
    return emission_rate(tau_ns, mode_rates(delta_cav_pm, model));
}

std::vector<double> TraceGrid::times() const
{
    if (!(dt_ns > 0.0) || !(t_end_ns > t_start_ns))
        throw std::domain_error("trace grid: need dt > 0 and t_end > t_start");
    const auto n = static_cast<std::size_t>(std::floor((t_end_ns - t_start_ns) / dt_ns + 1e-9)) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = t_start_ns + static_cast<double>(i) * dt_ns;
    return t;
}

std::vector<double> detector_trace(const TraceGrid &grid, double delta_cav_pm, const DetectionGeometry &geometry,
                                   const InstrumentResponse &irf, const DecayModel &model)
{
    irf.validate();
    if (!(geometry.zeta > 0.0))
        throw std::domain_error("detector_trace: zeta must be > 0");
    const auto rates = mode_rates(delta_cav_pm, model);
    const double th = deg(geometry.theta_det_deg);
    const double p1 = std::sin(th) * std::sin(th);
    const double p2 = std::cos(th) * std::cos(th);

    const auto t = grid.times();
    // Kernel offsets are multiples of dt; evaluate the unconvolved trace on a
    // grid padded by the kernel half-width on both sides.
    long kmin = 0, kmax = 0;
    std::vector<long> shifts;
    for (double off : irf.offsets_ns)
    {
        const long k = std::lround(off / grid.dt_ns);
        if (std::abs(static_cast<double>(k) * grid.dt_ns - off) > 1e-6 * grid.dt_ns)
            throw std::domain_error("detector_trace: IRF offsets are not multiples of the grid spacing");
        shifts.push_back(k);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    const long pad_lo = kmax; // t - s reaches back by max offset
    const long pad_hi = -kmin;
    const long n = static_cast<long>(t.size());
    std::vector<double> raw(static_cast<std::size_t>(n + pad_lo + pad_hi), 0.0);
    for (long j = 0; j < static_cast<long>(raw.size()); ++j)
    {
        const double tj = grid.t_start_ns + static_cast<double>(j - pad_lo) * grid.dt_ns;
        if (tj < 0.0)
            continue;
        const auto e = emission_rate(tj, rates);
        raw[static_cast<std::size_t>(j)] = geometry.zeta * (p1 * e.m1 + p2 * e.m2);
    }
    std::vector<double> out(t.size(), 0.0);
    for (long i = 0; i < n; ++i)
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < shifts.size(); ++k)
            acc += irf.weights[k] * raw[static_cast<std::size_t>(i + pad_lo - shifts[k])];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

LifetimeFit fit_lifetime(const std::vector<double> &t_ns, const std::vector<double> &trace,
                         const LifetimeFitOptions &options)
{
    if (t_ns.size() != trace.size() || trace.empty())
        throw std::invalid_argument("fit_lifetime: time and trace lengths differ");
    const auto peak_it = std::max_element(trace.begin(), trace.end());
    const double peak = *peak_it;
    if (!(peak > 0.0))
        throw ConvergenceError("fit_lifetime: trace has no positive signal", 0.0);
    const double scale = options.peak_counts / peak;
    auto i0 = static_cast<std::size_t>(peak_it - trace.begin());
    while (i0 < trace.size() && trace[i0] > options.start_fraction * peak)
        ++i0;
    std::vector<double> x, y;
    for (std::size_t i = i0; i < trace.size() && t_ns[i] - t_ns[i0] <= options.window_ns + 1e-9; ++i)
    {
        x.push_back(t_ns[i] - t_ns[i0]);
        y.push_back(trace[i] * scale);
    }
    if (x.size() < 20)
        throw ValidationError("fit_lifetime: fewer than 20 points past the rise");
    if (!(y.back() < y.front()))
        throw ConvergenceError("fit_lifetime: trace does not decay", 0.0);

    // Log-linear start values.
    double tau_guess = x.back() / std::log(y.front() / std::max(y.back(), 1e-300 + y.front() * 1e-12));
    if (!(tau_guess > 0.0) || !std::isfinite(tau_guess))
        tau_guess = 0.5 * x.back();

    const auto w = poisson_weights(y);
    FitProblem prob;
    prob.parameters = {{"amplitude", y.front(), 0.0, INFINITY}, {"tau", tau_guess, 1e-6, INFINITY}};
    prob.residuals = [&](const Eigen::VectorXd &p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = (p(0) * std::exp(-x[i] / p(1)) - y[i]) * w[i];
        return r;
    };
    const auto res = least_squares(prob);
    if (!res.converged)
        throw ConvergenceError("fit_lifetime: " + res.message, res.sse);
    return {res.value("tau"), res.ci("tau"), res.value("amplitude") / scale, t_ns[i0], x.size()};
}

std::vector<SweepPoint> lifetime_sweep(const std::vector<double> &delta_grid_pm, const DecayModel &model,
                                       const SweepSettings &s)
{
    const auto irf = InstrumentResponse::gaussian(s.irf_sigma_ns, s.grid.dt_ns);
    const auto t = s.grid.times();
    std::vector<SweepPoint> out;
    out.reserve(delta_grid_pm.size());
    for (double d : delta_grid_pm)
    {
        const auto trace = detector_trace(s.grid, d, s.geometry, irf, model);
        const auto f = fit_lifetime(t, trace, s.fit);
        out.push_back({d, f.tau_ns, f.ci95_ns, *std::max_element(trace.begin(), trace.end())});
    }
    return out;
}

double fwhm_around(const std::vector<double> &x, const std::vector<double> &y, double x_center)
{
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("fwhm_around: need at least three samples");
    std::size_t c = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs(x[i] - x_center) < std::abs(x[c] - x_center))
            c = i;
    // Refine to the local maximum near the requested centre.
    while (c + 1 < y.size() && y[c + 1] > y[c])
        ++c;
    while (c > 0 && y[c - 1] > y[c])
        --c;
    const double half = 0.5 * y[c];
    auto cross = [&](int dir) {
        long i = static_cast<long>(c);
        while (true)
        {
            const long j = i + dir;
            if (j < 0 || j >= static_cast<long>(y.size()))
                return std::numeric_limits<double>::quiet_NaN();
            if (y[static_cast<std::size_t>(j)] < half)
            {
                const double y0 = y[static_cast<std::size_t>(i)], y1 = y[static_cast<std::size_t>(j)];
                const double x0 = x[static_cast<std::size_t>(i)], x1 = x[static_cast<std::size_t>(j)];
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0);
            }
            i = j;
        }
    };
    return std::abs(cross(+1) - cross(-1));
}

double amplitude_fwhm(const std::vector<SweepPoint> &sweep)
{
    std::vector<double> x, y;
    for (const auto &p : sweep)
    {
        x.push_back(p.delta_cav_pm);
        y.push_back(p.amplitude0);
    }
    const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    return fwhm_around(x, y, x[imax]);
}

double lifetime_dip_fwhm(const std::vector<SweepPoint> &sweep, double tau_ref_ns, double center_pm)
{
    std::vector<double> x, y;
    for (const auto &p : sweep)
    {
        x.push_back(p.delta_cav_pm);
        y.push_back(tau_ref_ns - p.lifetime_ns);
    }
    return fwhm_around(x, y, center_pm);
}

double rate_enhancement_fwhm(const std::vector<SweepPoint> &sweep, double tau_ref_ns, double center_pm)
{
    std::vector<double> x, y;
    for (const auto &p : sweep)
    {
        x.push_back(p.delta_cav_pm);
        y.push_back(1.0 / p.lifetime_ns - 1.0 / tau_ref_ns);
    }
    return fwhm_around(x, y, center_pm);
}

} // namespace nvcav
