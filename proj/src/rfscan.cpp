#include "nvcav/rfscan.hpp"

#include "nvcav/diagnostics.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/fit.hpp"
#include "nvcav/quadrature.hpp"
#include "nvcav/random.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace nvcav
{

namespace
{

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

double deg(double d) { return d * std::numbers::pi / 180.0; }

} // namespace

void ChargeNoise::validate() const
{
    if (gamma_ext < 0.0)
        throw std::domain_error("charge noise: gamma_ext must be >= 0");
    if (trap_flip_rate_hz < 0.0)
        throw std::domain_error("charge noise: trap_flip_rate must be >= 0");
}

void SaturationParams::validate() const
{
    if (!(i_sat > 0.0) || !(a_scale > 0.0))
        throw std::domain_error("saturation: i_sat and a_scale must be > 0");
    if (!(f_p >= 1.0) || !(gamma0 > 0.0))
        throw std::domain_error("saturation: f_p >= 1 and gamma0 > 0 required");
}

double total_linewidth_mhz(double gamma_ext_mhz, double f_p, double gamma0_mhz)
{
    if (gamma_ext_mhz < 0.0 || f_p < 1.0 || !(gamma0_mhz > 0.0))
        throw std::domain_error("total_linewidth_mhz: bad arguments");
    return gamma_ext_mhz + f_p * gamma0_mhz;
}

std::vector<double> linewidth_profile(const std::vector<double> &x, double gamma_ext_mhz, double f_p,
                                      double gamma0_mhz, double laser_background, double amplitude,
                                      double center_mhz)
{
    const double w = total_linewidth_mhz(gamma_ext_mhz, f_p, gamma0_mhz);
    std::vector<double> out;
    out.reserve(x.size());
    for (double d : x)
        out.push_back(amplitude * lorentzian_peak(d - center_mhz, w) + laser_background);
    return out;
}

double lorentzian_convolution_numeric(double x, double a, double b)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("lorentzian_convolution_numeric: widths must be > 0");
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double phi) {
        // Substitute y = (a/2) tan(phi): the first Lorentzian becomes uniform.
        const double y = 0.5 * a * std::tan(phi);
        return lorentzian_density(x - y, b) / std::numbers::pi;
    };
    double err = 0.0;
    const double h = 0.5 * std::numbers::pi;
    const double v = gauss_kronrod<double, 61>::integrate(f, -h, h, 20, 1e-12, &err);
    return v;
}

std::vector<double> doublet_profile(const std::vector<double> &x, const DoubletParams &p, double f_p,
                                    double gamma0_mhz)
{
    const double w = total_linewidth_mhz(p.gamma_ext_mhz, f_p, gamma0_mhz);
    std::vector<double> out;
    out.reserve(x.size());
    for (double d : x)
        out.push_back(p.amplitude * (lorentzian_peak(d - p.center_mhz, w) +
                                     p.second_fraction * lorentzian_peak(d - p.center_mhz - p.shift_mhz, w)) +
                      p.background);
    return out;
}

double contrast_from_slr(double slr)
{
    if (slr < 0.0)
        throw std::domain_error("contrast_from_slr: slr must be >= 0");
    if (std::isinf(slr))
        return 1.0;
    return slr / (slr + 1.0);
}

double doublet_slr(const DoubletParams &p, double f_p, double gamma0_mhz)
{
    DoubletParams clean = p;
    clean.background = 0.0;
    const double w = total_linewidth_mhz(p.gamma_ext_mhz, f_p, gamma0_mhz);
    const double lo = std::min(0.0, p.shift_mhz) + p.center_mhz - w;
    const double hi = std::max(0.0, p.shift_mhz) + p.center_mhz + w;
    std::vector<double> grid;
    for (int i = 0; i <= 4000; ++i)
        grid.push_back(lo + (hi - lo) * i / 4000.0);
    const auto s = doublet_profile(grid, clean, f_p, gamma0_mhz);
    const double peak = *std::max_element(s.begin(), s.end());
    if (p.background <= 0.0)
        return std::numeric_limits<double>::infinity();
    return peak / p.background;
}

DoubletFit fit_doublet(const std::vector<double> &x, const std::vector<double> &counts, const DoubletParams &g,
                       double f_p, double gamma0_mhz)
{
    if (x.size() != counts.size() || x.size() < 7)
        throw std::invalid_argument("fit_doublet: need at least 7 matching points");
    const auto w = poisson_weights(counts);
    FitProblem prob;
    const double inf = std::numeric_limits<double>::infinity();
    prob.parameters = {{"amplitude", g.amplitude, 0.0, inf},       {"second_fraction", g.second_fraction, 0.0, 100.0},
                       {"center_mhz", g.center_mhz, -inf, inf},    {"shift_mhz", g.shift_mhz, 0.0, inf},
                       {"gamma_ext_mhz", g.gamma_ext_mhz, 0.0, inf}, {"background", g.background, 0.0, inf}};
    auto unpack = [](const Eigen::VectorXd &v) {
        return DoubletParams{v(0), v(1), v(2), v(3), v(4), v(5)};
    };
    prob.residuals = [&](const Eigen::VectorXd &v) {
        const auto model = doublet_profile(x, unpack(v), f_p, gamma0_mhz);
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = (model[i] - counts[i]) * w[i];
        return r;
    };
    const auto res = least_squares(prob);
    DoubletFit out;
    out.estimate = unpack(res.estimates);
    out.ci95 = unpack(res.ci95);
    out.slr = doublet_slr(out.estimate, f_p, gamma0_mhz);
    out.contrast = contrast_from_slr(out.slr);
    out.reduced_chi2 = res.reduced_chi2;
    out.converged = res.converged;
    return out;
}

namespace
{

struct CavityPoint
{
    double l1, l2, gamma_cav, drive;
};

CavityPoint cavity_point(double delta, double p0, const RfCavityModel &m)
{
    const double th = deg(m.emitter.theta_cav_deg);
    const double c1 = m.c_degen * std::sin(th) * std::sin(th);
    const double c2 = m.c_degen * std::cos(th) * std::cos(th);
    const double w = m.cavity.mode_hwhm_pm;
    const double u1 = (delta - m.cavity.mode_splitting_pm) / w;
    const double u2 = delta / w;
    CavityPoint c;
    c.l1 = 1.0 / (1.0 + u1 * u1);
    c.l2 = 1.0 / (1.0 + u2 * u2);
    c.gamma_cav = (c.l1 * c1 + c.l2 * c2 + 1.0) * m.emitter.gamma0;
    c.drive = p0 * c.l1;
    return c;
}

double rho_e(const CavityPoint &c, double detuning)
{
    const double half_p = 0.5 * c.drive;
    return 0.5 * half_p / (half_p + detuning * detuning + 0.25 * c.gamma_cav * c.gamma_cav);
}

double collection(const CavityPoint &c, const RfCavityModel &m)
{
    const double th = deg(m.emitter.theta_cav_deg);
    const double c2 = m.c_degen * std::cos(th) * std::cos(th);
    return m.scale * c.l2 * c2 * m.emitter.gamma0;
}

} // namespace

std::vector<double> rf_vs_cavity(const std::vector<double> &delta_cav_pm, double p0, const RfCavityModel &m)
{
    m.cavity.validate();
    m.emitter.validate();
    m.noise.validate();
    if (p0 < 0.0)
        throw std::domain_error("rf_vs_cavity: p0 must be >= 0");
    using boost::math::quadrature::gauss_kronrod;
    const double g = m.noise.gamma_ext;
    std::vector<double> out;
    out.reserve(delta_cav_pm.size());
    for (double d : delta_cav_pm)
    {
        const auto c = cavity_point(d, p0, m);
        double avg = 0.0;
        if (g == 0.0)
            avg = rho_e(c, m.delta_nv);
        else
        {
            auto f = [&](double x) { return rho_e(c, x + m.delta_nv) * lorentzian_density(x, g); };
            const double lim = m.cutoff * g;
            const double split = std::clamp(-m.delta_nv, -lim, lim);
            double total = 0.0;
            for (auto [a, b] : {std::pair{-lim, split}, std::pair{split, lim}})
            {
                if (b <= a)
                    continue;
                double err = 0.0, l1 = 0.0;
                const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 25, m.rel_tol, &err, &l1);
                if (err > std::max(1e3 * m.rel_tol, 1e-7) * std::max(l1, 1e-300))
                    throw ConvergenceError("rf_vs_cavity: charge-noise integral did not converge", err);
                total += v;
            }
            avg = total;
        }
        out.push_back(collection(c, m) * avg);
    }
    return out;
}

SampledCurve rf_vs_cavity_sampled(const std::vector<double> &delta_cav_pm, double p0, const RfCavityModel &m,
                                  std::size_t samples, std::uint64_t seed)
{
    if (samples < 2)
        throw std::domain_error("rf_vs_cavity_sampled: need at least two samples");
    Xoshiro256 rng(seed);
    std::vector<double> draws(samples);
    const double hw = 0.5 * m.noise.gamma_ext;
    for (auto &x : draws)
        x = hw * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    const double lim = m.cutoff * m.noise.gamma_ext;
    SampledCurve out;
    for (double d : delta_cav_pm)
    {
        const auto c = cavity_point(d, p0, m);
        const double k = collection(c, m);
        double s = 0.0, s2 = 0.0;
        for (double x : draws)
        {
            const double v = std::abs(x) <= lim ? k * rho_e(c, x + m.delta_nv) : 0.0;
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(samples);
        const double mean = s / n;
        const double var = std::max(s2 / n - mean * mean, 0.0) * n / (n - 1.0);
        out.mean.push_back(mean);
        out.stderr_.push_back(std::sqrt(var / n));
    }
    return out;
}

double doublet_peak_ratio(const std::vector<double> &x, const std::vector<double> &y, const CavityParams &cavity)
{
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("doublet_peak_ratio: size mismatch");
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const bool near_m1 = std::abs(x[i] - cavity.mode_splitting_pm) < std::abs(x[i]);
        if (near_m1)
            m1 = std::max(m1, y[i]);
        else
            m2 = std::max(m2, y[i]);
    }
    if (!(m1 > 0.0))
        throw std::domain_error("doublet_peak_ratio: no M1 signal");
    return m2 / m1;
}

double two_level_rho_ee(double omega_sq, double delta, double gamma)
{
    return 0.25 * omega_sq / (delta * delta + 0.25 * gamma * gamma + 0.5 * omega_sq);
}

double saturation_rf(double p_nw, const SaturationParams &s, double gamma_ext)
{
    s.validate();
    if (p_nw < 0.0)
        throw std::domain_error("saturation_rf: power must be >= 0");
    if (gamma_ext < 0.0)
        throw std::domain_error("saturation_rf: gamma_ext must be >= 0");
    const double x = 2.0 * s.a_scale * p_nw;
    const double h2 = s.f_p * s.f_p * s.gamma0 * s.gamma0;
    return s.i_sat * x / (x + h2 + 2.0 * gamma_ext * std::sqrt(x + h2));
}

std::vector<double> saturation_curve(const std::vector<double> &p_nw, const SaturationParams &s, double gamma_ext)
{
    std::vector<double> out;
    out.reserve(p_nw.size());
    for (double p : p_nw)
        out.push_back(saturation_rf(p, s, gamma_ext));
    return out;
}

double saturation_power(const SaturationParams &s, double gamma_ext)
{
    s.validate();
    auto f = [&](double p) { return saturation_rf(p, s, gamma_ext) - 0.5 * s.i_sat; };
    double hi = 1.0;
    while (f(hi) < 0.0)
        hi *= 2.0;
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, tol, iters);
    return 0.5 * (a + b);
}

namespace
{

struct MixtureRun
{
    std::vector<MixtureComponent> components;
    double log_likelihood = 0.0;
};

MixtureRun run_em(const std::vector<double> &samples, std::vector<MixtureComponent> c, double floor_sigma,
                  std::size_t max_iter)
{
    const std::size_t k = c.size();
    const double n = static_cast<double>(samples.size());
    std::vector<double> resp(samples.size() * k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    double ll = prev_ll;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t it = 0; it < max_iter; ++it)
    {
        ll = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            double tot = 0.0;
            for (std::size_t j = 0; j < k; ++j)
            {
                const double z = (samples[i] - c[j].mean) / c[j].sigma;
                const double p = c[j].weight * norm / c[j].sigma * std::exp(-0.5 * z * z);
                resp[i * k + j] = p;
                tot += p;
            }
            tot = std::max(tot, 1e-300);
            for (std::size_t j = 0; j < k; ++j)
                resp[i * k + j] /= tot;
            ll += std::log(tot);
        }
        for (std::size_t j = 0; j < k; ++j)
        {
            double w = 0.0, mu = 0.0;
            for (std::size_t i = 0; i < samples.size(); ++i)
            {
                w += resp[i * k + j];
                mu += resp[i * k + j] * samples[i];
            }
            if (w < 1e-12)
                continue;
            mu /= w;
            double var = 0.0;
            for (std::size_t i = 0; i < samples.size(); ++i)
                var += resp[i * k + j] * (samples[i] - mu) * (samples[i] - mu);
            c[j] = {w / n, mu, std::max(std::sqrt(var / w), floor_sigma)};
        }
        if (std::abs(ll - prev_ll) <= 1e-10 * std::abs(ll))
            break;
        prev_ll = ll;
    }
    return {std::move(c), ll};
}

} // namespace

std::vector<MixtureComponent> fit_gaussian_mixture(const std::vector<double> &samples, std::size_t k,
                                                   std::size_t max_iter)
{
    if (k == 0 || samples.size() < 2 * k)
        throw std::invalid_argument("fit_gaussian_mixture: not enough samples");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(samples.size());
    const double mean_all = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var_all = 0.0;
    for (double v : samples)
        var_all += (v - mean_all) * (v - mean_all);
    var_all /= n;
    const double floor_sigma = 1e-6 * std::max(sorted.back() - sorted.front(), 1e-12);

    // start 1: equal quantiles
    std::vector<MixtureComponent> quant(k);
    for (std::size_t j = 0; j < k; ++j)
    {
        const auto idx = static_cast<std::size_t>((static_cast<double>(j) + 0.5) / static_cast<double>(k) * (n - 1));
        quant[j] = {1.0 / static_cast<double>(k), sorted[idx], std::max(std::sqrt(var_all) / static_cast<double>(k), floor_sigma)};
    }
    auto best = run_em(samples, quant, floor_sigma, max_iter);

    // start 2: split the sorted samples at the k-1 widest gaps
    if (k > 1)
    {
        std::vector<std::size_t> gaps(sorted.size() - 1);
        std::iota(gaps.begin(), gaps.end(), std::size_t{0});
        std::partial_sort(gaps.begin(), gaps.begin() + static_cast<long>(k - 1), gaps.end(),
                          [&](std::size_t a, std::size_t b) { return sorted[a + 1] - sorted[a] > sorted[b + 1] - sorted[b]; });
        std::vector<std::size_t> cuts(gaps.begin(), gaps.begin() + static_cast<long>(k - 1));
        std::sort(cuts.begin(), cuts.end());
        std::vector<MixtureComponent> split;
        std::size_t lo = 0;
        for (std::size_t j = 0; j < k; ++j)
        {
            const std::size_t hi = j + 1 < k ? cuts[j] + 1 : sorted.size();
            const double m = static_cast<double>(hi - lo);
            const double mu = std::accumulate(sorted.begin() + static_cast<long>(lo), sorted.begin() + static_cast<long>(hi), 0.0) / m;
            double var = 0.0;
            for (std::size_t i = lo; i < hi; ++i)
                var += (sorted[i] - mu) * (sorted[i] - mu);
            const double sd = m > 1.0 ? std::sqrt(var / m) : 0.0;
            split.push_back({m / n, mu, std::max(sd > 0.0 ? sd : std::sqrt(var_all) / static_cast<double>(k), floor_sigma)});
            lo = hi;
        }
        auto alt = run_em(samples, split, floor_sigma, max_iter);
        if (alt.log_likelihood > best.log_likelihood)
            best = std::move(alt);
    }
    auto &c = best.components;
    std::sort(c.begin(), c.end(), [](const auto &a, const auto &b) { return a.mean < b.mean; });
    return c;
}

double mixture_resolution(const std::vector<MixtureComponent> &c)
{
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < c.size(); ++j)
        worst = std::min(worst, std::abs(c[j].mean - c[j - 1].mean) / (c[j].sigma + c[j - 1].sigma));
    return worst;
}

LinearRegression linear_regression(const std::vector<double> &x, const std::vector<double> &y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::domain_error("linear_regression: need at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 1e-300 * std::max(1.0, mx * mx))
        throw std::domain_error("linear_regression: degenerate abscissa");
    LinearRegression r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    if (x.size() > 2)
    {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double e = y[i] - r.intercept - r.slope * x[i];
            ss += e * e;
        }
        const double s2 = ss / (n - 2.0);
        r.slope_sigma = std::sqrt(s2 / sxx);
        r.intercept_sigma = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return r;
}

BackgroundExtraction classify_and_extract_background(const TrapHistogram &h, const std::vector<double> &p_nw,
                                                     std::size_t working_index)
{
    if (h.samples.size() != p_nw.size() || p_nw.size() < 3)
        throw std::invalid_argument("classify_and_extract_background: need >= 3 setpoints with matching powers");
    if (working_index >= p_nw.size())
        throw std::out_of_range("classify_and_extract_background: working index out of range");
    BackgroundExtraction out;
    for (std::size_t s = 0; s < p_nw.size(); ++s)
    {
        auto min_weight = [](const std::vector<MixtureComponent> &c) {
            return std::min_element(c.begin(), c.end(), [](auto &a, auto &b) { return a.weight < b.weight; })->weight;
        };
        auto comps = fit_gaussian_mixture(h.samples[s], 3);
        if (mixture_resolution(comps) < 1.0 || min_weight(comps) < 0.02)
            comps = fit_gaussian_mixture(h.samples[s], 2);
        const double res = min_weight(comps) < 0.02 ? 0.0 : mixture_resolution(comps);
        if (res < 1.0)
            throw ClassificationError("setpoint " + std::to_string(s) + ": sub-distributions not resolved", res);
        out.laser_mean.push_back(comps.front().mean);
        out.resonant_mean.push_back(comps.back().mean);
        out.detuned_mean.push_back(comps.size() == 3 ? comps[1].mean : nan_v);
        out.components.push_back(std::move(comps));
    }
    const auto reg = linear_regression(p_nw, out.laser_mean);
    out.background_slope = reg.slope;
    out.background_intercept = reg.intercept;
    const double bg = out.laser_mean[working_index];
    out.slr = bg > 0.0 ? (out.resonant_mean[working_index] - bg) / bg : std::numeric_limits<double>::infinity();
    out.contrast = contrast_from_slr(std::max(out.slr, 0.0));
    return out;
}

double correct_rf0(double rf0_raw, double background, double pl, double pl_ref)
{
    if (!(pl > 0.0) || !(pl_ref > 0.0))
        throw std::domain_error("correct_rf0: pl and pl_ref must be > 0");
    const double v = (rf0_raw - background) * (pl_ref / pl);
    if (v < 0.0)
    {
        warn("correct_rf0: background exceeds raw signal; clamping to zero");
        return 0.0;
    }
    return v;
}

} // namespace nvcav
