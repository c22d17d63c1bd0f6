#include "cli.hpp"

#include "nvcav/bloch.hpp"
#include "nvcav/config.hpp"
#include "nvcav/csv.hpp"
#include "nvcav/decay.hpp"
#include "nvcav/digest.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/fit.hpp"
#include "nvcav/multistate.hpp"
#include "nvcav/qed.hpp"
#include "nvcav/random.hpp"
#include "nvcav/rate3.hpp"
#include "nvcav/rfscan.hpp"
#include "nvcav/scenarios.hpp"
#include "nvcav/stochastic.hpp"
#include "nvcav/units.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#ifndef NVCAV_VERSION
#define NVCAV_VERSION "0.0.0"
#endif

namespace nvcav::cli
{

namespace
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<std::string> simulate_models{"g2",         "decay-sweep", "rf-linewidth", "rf-cavity",
                                               "saturation", "rabi",        "pulse-train",  "tags"};
const std::vector<std::string> fit_models{"rf-linewidth", "lifetime", "saturation", "g2"};

struct Options
{
    std::string model;
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::string format = "csv";
    std::string rates;
    std::uint32_t seed = 1;
};

struct Context
{
    std::string command;
    std::string model;
    KeyValueConfig cfg;
    std::string config_digest;
    fs::path out_dir;
    std::uint32_t seed = 1;
    bool json_only = false;
};

class FitFailure : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

Context make_context(const std::string &command, const Options &o)
{
    Context ctx;
    ctx.command = command;
    ctx.model = o.model;
    if (!o.config_path.empty())
        ctx.cfg = KeyValueConfig::load(o.config_path);
    if (!o.rates.empty())
        ctx.cfg.set("rates", o.rates);
    ctx.config_digest = sha256_hex(ctx.cfg.canonical_text());
    if (!o.out_dir.empty())
        ctx.out_dir = o.out_dir;
    else if (const char *env = std::getenv(output_env); env && *env)
        ctx.out_dir = env;
    else
        ctx.out_dir = ".";
    ctx.seed = o.seed;
    ctx.json_only = o.format == "json";
    return ctx;
}

json header(const Context &ctx)
{
    json j;
    j["tool"] = "nvcav";
    j["version"] = NVCAV_VERSION;
    j["command"] = ctx.command;
    j["model"] = ctx.model;
    j["seed"] = ctx.seed;
    j["config_sha256"] = ctx.config_digest;
    return j;
}

std::vector<std::string> provenance(const Context &ctx)
{
    return {std::string("nvcav ") + NVCAV_VERSION + " " + ctx.command + " " + ctx.model,
            "config_sha256: " + ctx.config_digest, "seed: " + std::to_string(ctx.seed)};
}

std::string stem_of(const Context &ctx)
{
    return ctx.command == "simulate" ? ctx.model : ctx.command + "-" + ctx.model;
}

// Writes <stem>.csv (unless json-only) and <stem>.json.
void emit(const Context &ctx, CsvTable table, const std::string &units, json results, std::ostream &out)
{
    json report = header(ctx);
    report["units"] = units;
    report["results"] = std::move(results);
    const auto stem = stem_of(ctx);
    if (ctx.json_only)
    {
        json data = json::object();
        for (std::size_t c = 0; c < table.column_count(); ++c)
            data[table.columns[c]] = table.column(c);
        report["data"] = std::move(data);
    }
    else
    {
        auto comments = provenance(ctx);
        comments.push_back("units: " + units);
        table.comments = std::move(comments);
        const auto path = ctx.out_dir / (stem + ".csv");
        write_text_file(path, format_csv(table));
        report["data_file"] = path.filename().string();
        out << "wrote " << path.string() << "\n";
    }
    const auto path = ctx.out_dir / (stem + ".json");
    write_text_file(path, report.dump(2) + "\n");
    out << "wrote " << path.string() << "\n";
}

std::vector<double> grid(double start, double stop, double step)
{
    if (!(step > 0.0) || !(stop >= start))
        throw ValidationError("grid needs step > 0 and stop >= start");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i)
        g.push_back(start + step * static_cast<double>(i));
    return g;
}

Rate3Params rates_from(const KeyValueConfig &cfg)
{
    Rate3Params p;
    const auto r = cfg.get_list("rates", {p.k_eg, p.k_532, p.k_s, p.k_d});
    if (r.size() != 4)
        throw ValidationError("rates needs four values: k_eg,k_532,k_s,k_d (MHz)");
    p = {r[0], r[1], r[2], r[3]};
    p.validate();
    return p;
}

DecayModel decay_model_from(const KeyValueConfig &cfg)
{
    DecayModel m;
    m.cavity = cavity_from_config(cfg);
    m.emitter = emitter_from_config(cfg);
    m.c_degen = cfg.get_double("c_degen", m.c_degen);
    m.vib.sigma_vib_pm = cfg.get_double("sigma_vib_pm", m.vib.sigma_vib_pm);
    m.nodes = static_cast<std::size_t>(cfg.get_double("nodes", static_cast<double>(m.nodes)));
    m.validate();
    return m;
}

Nv10Model rate_model_from(const KeyValueConfig &cfg)
{
    if (const auto path = cfg.find("rate_model"))
        return Nv10Model::parse(KeyValueConfig::load(*path));
    return Nv10Model::defaults();
}

// ---- simulate ----

void simulate_g2(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    const auto p = rates_from(cfg);
    const auto taus = grid(0.0, cfg.get_double("tau_max_us", 33.0) * 1e3, cfg.get_double("tau_step_ns", 10.0));
    const auto numeric = g2_numeric(p, taus);
    const auto ss = steady_state(p);
    const double target = cfg.get_double("g2_zero_target", 0.0);
    const auto bg = background_for_g2_zero(target, ss.rho_e);
    std::vector<double> closed, approx, with_bg;
    for (std::size_t i = 0; i < taus.size(); ++i)
    {
        closed.push_back(g2_closed_form(p, taus[i]));
        with_bg.push_back(g2_with_background(numeric[i], ss.rho_e, bg));
    }
    approx = g2_analytic(p, taus);
    json r;
    r["g2_zero"] = numeric.front();
    r["bunching_peak"] = 1.0 + bunching_amplitude(p);
    r["g2_long_delay"] = numeric.back();
    r["rho_e"] = ss.rho_e;
    r["triplet_occupation"] = ss.triplet_occupation();
    r["not_shelved"] = ss.not_shelved();
    r["on_fraction"] = on_fraction(p);
    r["background"] = bg.b;
    emit(ctx,
         make_table({"tau_ns", "g2", "g2_closed_form", "g2_two_exponential", "g2_with_background"},
                    {taus, numeric, closed, approx, with_bg}),
         "tau_ns=ns, g2=1", r, out);
}

void simulate_decay_sweep(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    const auto model = decay_model_from(cfg);
    SweepSettings s;
    s.irf_sigma_ns = cfg.get_double("irf_sigma_ns", s.irf_sigma_ns);
    s.geometry.theta_det_deg = cfg.get_double("theta_det_deg", s.geometry.theta_det_deg);
    s.geometry.zeta = cfg.get_double("zeta", s.geometry.zeta);
    const auto g = grid(cfg.get_double("start_pm", -400.0), cfg.get_double("stop_pm", 200.0),
                        cfg.get_double("step_pm", 5.0));
    const auto sweep = lifetime_sweep(g, model, s);
    std::vector<double> x, tau, ci, amp;
    json dips = json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i)
    {
        x.push_back(sweep[i].delta_cav_pm);
        tau.push_back(sweep[i].lifetime_ns);
        ci.push_back(sweep[i].ci95_ns);
        amp.push_back(sweep[i].amplitude0);
        if (i > 0 && i + 1 < sweep.size() && sweep[i].lifetime_ns < sweep[i - 1].lifetime_ns &&
            sweep[i].lifetime_ns <= sweep[i + 1].lifetime_ns)
            dips.push_back({{"delta_cav_pm", sweep[i].delta_cav_pm}, {"lifetime_ns", sweep[i].lifetime_ns}});
    }
    json r;
    r["tau0_ns"] = model.tau0_ns();
    r["dips"] = dips;
    r["amplitude_fwhm_pm"] = amplitude_fwhm(sweep);
    r["lifetime_dip_fwhm_pm"] = lifetime_dip_fwhm(sweep, model.tau0_ns(), 0.0);
    emit(ctx, make_table({"delta_cav_pm", "lifetime_ns", "ci95_ns", "amplitude0"}, {x, tau, ci, amp}),
         "delta_cav_pm=pm, lifetime_ns=ns, ci95_ns=ns, amplitude0=arb", r, out);
}

DoubletParams doublet_from(const KeyValueConfig &cfg)
{
    DoubletParams d;
    d.amplitude = cfg.get_double("amplitude", 2000.0);
    d.second_fraction = cfg.get_double("second_fraction", 0.35);
    d.center_mhz = cfg.get_double("center_mhz", 0.0);
    d.shift_mhz = cfg.get_double("shift_mhz", 171.0);
    d.gamma_ext_mhz = cfg.get_double("gamma_ext_mhz", 159.0);
    return d;
}

void simulate_rf_linewidth(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    const double fp = cfg.get_double("f_p", 1.79), g0 = cfg.get_double("gamma0_mhz", 12.89);
    auto d = doublet_from(cfg);
    const double slr = cfg.get_double("slr", 14.0);
    if (!(slr > 0.0))
        throw ValidationError("slr must be > 0");
    d.background = 1.0;
    d.background = doublet_slr(d, fp, g0) / slr;
    const auto x = grid(cfg.get_double("start_mhz", -1000.0), cfg.get_double("stop_mhz", 1000.0),
                        cfg.get_double("step_mhz", 10.0));
    const auto mean = doublet_profile(x, d, fp, g0);
    std::vector<double> counts = mean;
    if (cfg.get_double("noise", 1.0) != 0.0)
    {
        Xoshiro256 rng(ctx.seed);
        for (auto &c : counts)
            c = static_cast<double>(std::poisson_distribution<long>(c)(rng));
    }
    json r;
    r["background"] = d.background;
    r["slr"] = slr;
    r["contrast"] = contrast_from_slr(slr);
    r["total_linewidth_mhz"] = total_linewidth_mhz(d.gamma_ext_mhz, fp, g0);
    emit(ctx, make_table({"delta_nv_mhz", "counts", "mean"}, {x, counts, mean}),
         "delta_nv_mhz=MHz, counts=counts, mean=counts", r, out);
}

void simulate_rf_cavity(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    RfCavityModel m;
    m.cavity = cavity_from_config(cfg);
    m.emitter = emitter_from_config(cfg);
    m.c_degen = cfg.get_double("c_degen", m.c_degen);
    m.noise.gamma_ext = units::angular_mhz(cfg.get_double("gamma_ext_mhz", 159.0));
    m.delta_nv = units::angular_mhz(cfg.get_double("delta_nv_mhz", 0.0));
    const double p0 = std::pow(units::angular_mhz(cfg.get_double("p0_rabi_mhz", 400.0)), 2);
    const auto x = grid(cfg.get_double("start_pm", -400.0), cfg.get_double("stop_pm", 200.0),
                        cfg.get_double("step_pm", 2.0));
    const auto y = rf_vs_cavity(x, p0, m);
    json r;
    r["m2_over_m1_peak_ratio"] = doublet_peak_ratio(x, y, m.cavity);
    emit(ctx, make_table({"delta_cav_pm", "rf"}, {x, y}), "delta_cav_pm=pm, rf=arb", r, out);
}

SaturationParams saturation_from(const KeyValueConfig &cfg)
{
    SaturationParams s;
    s.i_sat = cfg.get_double("i_sat", s.i_sat);
    s.a_scale = cfg.get_double("a_scale", s.a_scale);
    s.f_p = cfg.get_double("f_p", s.f_p);
    s.gamma0 = units::angular_mhz(cfg.get_double("gamma0_mhz", 12.89));
    s.validate();
    return s;
}

void simulate_saturation(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    const auto s = saturation_from(cfg);
    const double gext = units::angular_mhz(cfg.get_double("gamma_ext_mhz", 159.0));
    const auto p = grid(0.0, cfg.get_double("p_max_nw", 5000.0), cfg.get_double("p_step_nw", 25.0));
    const auto rf = saturation_curve(p, s, gext);
    json r;
    r["p_sat_nw"] = saturation_power(s, gext);
    r["rf_at_300_nw"] = saturation_rf(300.0, s, gext);
    emit(ctx, make_table({"power_nw", "rf"}, {p, rf}), "power_nw=nW, rf=counts/s", r, out);
}

void simulate_rabi(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    DriveEnvelope env;
    env.t_fast_ns = cfg.get_double("t_fast_ns", env.t_fast_ns);
    env.t_slow_ns = cfg.get_double("t_slow_ns", env.t_slow_ns);
    env.slow_fraction = cfg.get_double("slow_fraction", env.slow_fraction);
    env.amplitude = units::angular_mhz(cfg.get_double("rabi_mhz", 51.1));
    env.validate();
    CompositionModel comp;
    comp.ex_scale = cfg.get_double("ex_scale", comp.ex_scale);
    comp.a1_amplitude = cfg.get_double("a1_amplitude", comp.a1_amplitude);
    comp.a1_decay_ns = cfg.get_double("a1_decay_ns", comp.a1_decay_ns);
    comp.shelving_time_us = cfg.get_double("shelving_time_us", comp.shelving_time_us);
    comp.laser_background = cfg.get_double("laser_background", comp.laser_background);
    comp.validate();
    const double gamma = units::angular_mhz(cfg.get_double("gamma0_mhz", 12.89) * cfg.get_double("f_p", 1.79));
    const double delta = units::angular_mhz(cfg.get_double("delta_mhz", 0.0));
    const double gext = units::angular_mhz(cfg.get_double("gamma_ext_mhz", 159.0));
    const auto t = grid(cfg.get_double("t_min_ns", 0.0), cfg.get_double("t_max_ns", 60.0), cfg.get_double("dt_ns", 0.1));
    const TraceSolver solver = [&](double det) { return obe_solve(env, det, gamma, comp, t); };
    const auto rho = charge_noise_average(solver, delta, gext,
                                          static_cast<std::size_t>(cfg.get_double("noise_nodes", 48.0)));
    const auto signal = compose_signal(t, rho, comp, env);
    std::vector<double> drive;
    for (double x : t)
        drive.push_back(envelope(x, env));
    json r;
    r["rise_time_10_90_ns"] = rise_time_10_90(env);
    r["modulation"] = oscillation_modulation(rho);
    r["omega_over_gamma"] = env.amplitude / gamma;
    emit(ctx, make_table({"t_ns", "rho_ee", "signal", "envelope"}, {t, rho, signal, drive}),
         "t_ns=ns, rho_ee=1, signal=counts/s, envelope=1", r, out);
}

void simulate_pulse_train(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    const auto model = rate_model_from(cfg);
    PulseTimings t;
    t.repump_us = cfg.get_double("repump_us", t.repump_us);
    t.wait_us = cfg.get_double("wait_us", t.wait_us);
    t.resonant_us = cfg.get_double("resonant_us", t.resonant_us);
    const auto segs = pulse_sequence(model, cfg.get_double("repump_mw", 1.0), t);
    const auto ss = sequence_steady_state(segs, cfg.get_double("tol", 1e-12));
    const auto trace = sequence_trace(segs, ss.population, static_cast<std::size_t>(cfg.get_double("samples", 50.0)));
    const auto &labels = nv10_labels();
    std::vector<std::string> names{"t_us", "segment"};
    for (const auto &l : labels)
        names.push_back("p_" + l);
    names.push_back("zpl_flux");
    std::vector<std::vector<double>> cols(names.size());
    for (const auto &pt : trace)
    {
        cols[0].push_back(pt.t_us);
        cols[1].push_back(static_cast<double>(pt.segment));
        for (std::size_t i = 0; i < labels.size(); ++i)
            cols[2 + i].push_back(pt.population(static_cast<Eigen::Index>(i)));
        cols.back().push_back(model.zpl_flux(pt.population));
    }
    json r;
    r["cycles"] = ss.cycles;
    r["residual"] = ss.residual;
    json pop;
    for (std::size_t i = 0; i < labels.size(); ++i)
        pop[labels[i]] = ss.population(static_cast<Eigen::Index>(i));
    r["cycle_start_population"] = pop;
    r["segments"] = {"repump", "wait", "resonant", "wait"};
    emit(ctx, make_table(names, cols), "t_us=us, segment=index, p_*=1, zpl_flux=1/us", r, out);
}

void simulate_tags(const Context &ctx, std::ostream &out)
{
    const auto &cfg = ctx.cfg;
    const auto p = rates_from(cfg);
    const double duration_ns = cfg.get_double("duration_ms", 10.0) * 1e6;
    const auto gen = rate3_generator(p);
    auto stream = gillespie(gen, {{1, 0, 0}}, duration_ns, ctx.seed);
    if (cfg.get_double("split", 1.0) != 0.0)
        stream = split_channels(stream, ctx.seed);
    const auto bin = ctx.out_dir / "tags.bin";
    write_tags(bin, stream);
    out << "wrote " << bin.string() << "\n";
    json r;
    r["tags"] = stream.size();
    r["duration_ps"] = stream.duration_ps;
    r["rate_per_us"] = static_cast<double>(stream.size()) / (duration_ns * 1e-3);
    r["tag_file"] = "tags.bin";
    r["tag_file_sha256"] = sha256_hex(encode_tags(stream));
    std::vector<double> t, ch;
    const std::size_t limit = static_cast<std::size_t>(cfg.get_double("csv_rows", 1e6));
    for (std::size_t i = 0; i < std::min(limit, stream.size()); ++i)
    {
        t.push_back(static_cast<double>(stream.tags_ps[i]));
        ch.push_back(static_cast<double>(stream.channels[i]));
    }
    emit(ctx, make_table({"time_ps", "channel"}, {t, ch}), "time_ps=ps, channel=index", r, out);
}

// ---- fit ----

CsvTable load_data(const std::string &path, const std::vector<std::string> &required, std::string &digest)
{
    const auto text = read_text_file(path);
    digest = sha256_hex(text);
    auto table = parse_csv(text);
    const bool has_units = std::any_of(table.comments.begin(), table.comments.end(), [](const std::string &c) {
        return trim(c).substr(0, 6) == "units:";
    });
    if (!has_units)
        throw ParseError("missing '# units:' header comment", 1);
    for (const auto &c : required)
        if (std::find(table.columns.begin(), table.columns.end(), c) == table.columns.end())
            throw ParseError("missing column '" + c + "'", 1);
    return table;
}

json fit_json(const FitResult &f)
{
    json j;
    for (std::size_t i = 0; i < f.names.size(); ++i)
    {
        const auto k = static_cast<Eigen::Index>(i);
        j["estimates"][f.names[i]] = f.estimates(k);
        j["ci95"][f.names[i]] = f.ci95(k);
    }
    j["reduced_chi2"] = f.reduced_chi2;
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    j["message"] = f.message;
    return j;
}

void finish_fit(const Context &ctx, const std::string &digest, json results, const CsvTable &curve,
                const std::string &units, bool converged, std::ostream &out)
{
    results["data_sha256"] = digest;
    emit(ctx, curve, units, std::move(results), out);
    if (!converged)
        throw FitFailure("fit did not converge");
}

void fit_rf_linewidth(const Context &ctx, const std::string &data, std::ostream &out)
{
    std::string digest;
    const auto t = load_data(data, {"delta_nv_mhz", "counts"}, digest);
    const auto x = t.column("delta_nv_mhz");
    const auto y = t.column("counts");
    const double fp = ctx.cfg.get_double("f_p", 1.79), g0 = ctx.cfg.get_double("gamma0_mhz", 12.89);
    DoubletParams guess;
    guess.amplitude = *std::max_element(y.begin(), y.end());
    guess.background = std::max(*std::min_element(y.begin(), y.end()), 1.0);
    guess.center_mhz = x[static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin())];
    guess.shift_mhz = ctx.cfg.get_double("shift_mhz", 150.0);
    guess.gamma_ext_mhz = ctx.cfg.get_double("gamma_ext_mhz", 120.0);
    guess.second_fraction = ctx.cfg.get_double("second_fraction", 0.5);
    const auto f = fit_doublet(x, y, guess, fp, g0);
    auto param_json = [](const DoubletParams &d) {
        return json{{"amplitude", d.amplitude},         {"second_fraction", d.second_fraction},
                    {"center_mhz", d.center_mhz},       {"shift_mhz", d.shift_mhz},
                    {"gamma_ext_mhz", d.gamma_ext_mhz}, {"background", d.background}};
    };
    json r;
    r["estimates"] = param_json(f.estimate);
    r["ci95"] = param_json(f.ci95);
    r["slr"] = f.slr;
    r["contrast"] = f.contrast;
    r["reduced_chi2"] = f.reduced_chi2;
    r["converged"] = f.converged;
    const auto model = doublet_profile(x, f.estimate, fp, g0);
    finish_fit(ctx, digest, r, make_table({"delta_nv_mhz", "counts", "model"}, {x, y, model}),
               "delta_nv_mhz=MHz, counts=counts, model=counts", f.converged, out);
}

void fit_lifetime_cmd(const Context &ctx, const std::string &data, std::ostream &out)
{
    std::string digest;
    const auto t = load_data(data, {"t_ns", "counts"}, digest);
    const auto x = t.column("t_ns");
    const auto y = t.column("counts");
    LifetimeFitOptions o;
    o.start_fraction = ctx.cfg.get_double("start_fraction", o.start_fraction);
    o.window_ns = ctx.cfg.get_double("window_ns", o.window_ns);
    o.peak_counts = ctx.cfg.get_double("peak_counts", o.peak_counts);
    const auto f = fit_lifetime(x, y, o);
    json r;
    r["estimates"] = {{"tau_ns", f.tau_ns}, {"amplitude", f.amplitude}};
    r["ci95"] = {{"tau_ns", f.ci95_ns}};
    r["t_start_ns"] = f.t_start_ns;
    r["points"] = f.points;
    r["converged"] = true;
    std::vector<double> model;
    for (double ti : x)
        model.push_back(ti >= f.t_start_ns ? f.amplitude * std::exp(-(ti - f.t_start_ns) / f.tau_ns) : NAN);
    finish_fit(ctx, digest, r, make_table({"t_ns", "counts", "model"}, {x, y, model}),
               "t_ns=ns, counts=counts, model=counts", true, out);
}

std::vector<double> sigma_column(const CsvTable &t, std::size_t n)
{
    if (std::find(t.columns.begin(), t.columns.end(), "sigma") != t.columns.end())
    {
        auto s = t.column("sigma");
        for (double v : s)
            if (!(v > 0.0))
                throw ValidationError("sigma column must be > 0");
        return s;
    }
    return std::vector<double>(n, 1.0);
}

void fit_saturation(const Context &ctx, const std::string &data, std::ostream &out)
{
    std::string digest;
    const auto t = load_data(data, {"power_nw", "rf"}, digest);
    const auto x = t.column("power_nw");
    const auto y = t.column("rf");
    const auto sig = sigma_column(t, x.size());
    const auto base = saturation_from(ctx.cfg);
    const double gext = units::angular_mhz(ctx.cfg.get_double("gamma_ext_mhz", 159.0));
    FitProblem prob;
    prob.parameters = {{"i_sat", *std::max_element(y.begin(), y.end()) * 2.0, 0.0, INFINITY},
                       {"a_scale", base.a_scale, 1e-12, INFINITY}};
    prob.residuals = [&](const Eigen::VectorXd &q) {
        SaturationParams s = base;
        s.i_sat = q(0);
        s.a_scale = q(1);
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = (saturation_rf(x[i], s, gext) - y[i]) / sig[i];
        return r;
    };
    const auto f = least_squares(prob);
    auto r = fit_json(f);
    SaturationParams s = base;
    s.i_sat = f.value("i_sat");
    s.a_scale = f.value("a_scale");
    r["p_sat_nw"] = saturation_power(s, gext);
    const auto model = saturation_curve(x, s, gext);
    finish_fit(ctx, digest, r, make_table({"power_nw", "rf", "model"}, {x, y, model}),
               "power_nw=nW, rf=counts/s, model=counts/s", f.converged, out);
}

void fit_g2(const Context &ctx, const std::string &data, std::ostream &out)
{
    std::string digest;
    const auto t = load_data(data, {"tau_ns", "g2"}, digest);
    const auto x = t.column("tau_ns");
    const auto y = t.column("g2");
    const auto sig = sigma_column(t, x.size());
    const auto start = rates_from(ctx.cfg);
    FitProblem prob;
    prob.parameters = {{"k_eg", start.k_eg, 1e-6, INFINITY},
                       {"k_532", start.k_532, 1e-6, INFINITY},
                       {"k_s", start.k_s, 0.0, INFINITY},
                       {"k_d", start.k_d, 1e-6, INFINITY}};
    prob.residuals = [&](const Eigen::VectorXd &q) {
        const Rate3Params p{q(0), q(1), q(2), q(3)};
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = (g2_closed_form(p, x[i]) - y[i]) / sig[i];
        return r;
    };
    const auto f = least_squares(prob);
    const Rate3Params best{f.value("k_eg"), f.value("k_532"), f.value("k_s"), f.value("k_d")};
    std::vector<double> model;
    for (double tau : x)
        model.push_back(g2_closed_form(best, tau));
    finish_fit(ctx, digest, fit_json(f), make_table({"tau_ns", "g2", "model"}, {x, y, model}),
               "tau_ns=ns, g2=1, model=1", f.converged, out);
}

// ---- reproduce ----

int reproduce_cmd(const Context &ctx, const std::string &figure, std::ostream &out)
{
    const auto rep = reproduce(figure);
    json checks = json::array();
    out << "figure " << figure << "\n";
    for (const auto &c : rep.checks)
    {
        out << "  " << (c.pass ? "ok    " : "BREACH") << " " << std::left << std::setw(38) << c.name
            << " value=" << format_number(c.value) << " target=" << format_number(c.target) << " range=["
            << format_number(c.lower) << ", " << format_number(c.upper) << "]" << (c.unit.empty() ? "" : " ")
            << c.unit << "\n";
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"target", c.target},
                          {"lower", c.lower},
                          {"upper", c.upper},
                          {"unit", c.unit},
                          {"pass", c.pass}});
    }
    json report = header(ctx);
    report["figure"] = figure;
    report["checks"] = checks;
    report["pass"] = rep.pass();
    const auto path = ctx.out_dir / ("reproduce-" + figure + ".json");
    write_text_file(path, report.dump(2) + "\n");
    out << "wrote " << path.string() << "\n";
    if (!rep.pass())
    {
        for (const auto &c : rep.checks)
            if (!c.pass)
                out << "tolerance breach: " << c.name << "\n";
        return exit_failure;
    }
    return exit_ok;
}

void add_common(CLI::App *sub, Options &o)
{
    sub->add_option("--config", o.config_path, "key = value parameter file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, std::string("output directory (default $") + output_env + " or .)");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--rates", o.rates, "k_eg,k_532,k_s,k_d in MHz");
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Cavity-coupled NV centre models: simulate, fit and reproduce"};
    app.set_version_flag("--version", std::string("nvcav ") + NVCAV_VERSION);
    app.require_subcommand(1);

    Options o;
    auto *sim = app.add_subcommand("simulate", "generate model curves");
    sim->add_option("model", o.model, "model id")->required()->check(CLI::IsMember(simulate_models));
    add_common(sim, o);

    auto *fit = app.add_subcommand("fit", "fit a model to a CSV data file");
    fit->add_option("model", o.model, "model id")->required()->check(CLI::IsMember(fit_models));
    fit->add_option("--data", o.data_path, "CSV data file")->required();
    add_common(fit, o);

    auto *rep = app.add_subcommand("reproduce", "recompute the golden numbers of one figure");
    rep->add_option("figure", o.model, "figure id")->required()->check(CLI::IsMember(figure_ids()));
    add_common(rep, o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp &)
    {
        out << app.help();
        return exit_ok;
    }
    catch (const CLI::CallForAllHelp &)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    }
    catch (const CLI::CallForVersion &)
    {
        out << "nvcav " << NVCAV_VERSION << "\n";
        return exit_ok;
    }
    catch (const CLI::ParseError &e)
    {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    }

    try
    {
        if (sim->parsed())
        {
            const auto ctx = make_context("simulate", o);
            static const std::map<std::string, std::function<void(const Context &, std::ostream &)>> table{
                {"g2", simulate_g2},
                {"decay-sweep", simulate_decay_sweep},
                {"rf-linewidth", simulate_rf_linewidth},
                {"rf-cavity", simulate_rf_cavity},
                {"saturation", simulate_saturation},
                {"rabi", simulate_rabi},
                {"pulse-train", simulate_pulse_train},
                {"tags", simulate_tags}};
            table.at(o.model)(ctx, out);
            return exit_ok;
        }
        if (fit->parsed())
        {
            const auto ctx = make_context("fit", o);
            static const std::map<std::string, std::function<void(const Context &, const std::string &,
                                                                  std::ostream &)>>
                table{{"rf-linewidth", fit_rf_linewidth},
                      {"lifetime", fit_lifetime_cmd},
                      {"saturation", fit_saturation},
                      {"g2", fit_g2}};
            table.at(o.model)(ctx, o.data_path, out);
            return exit_ok;
        }
        const auto ctx = make_context("reproduce", o);
        return reproduce_cmd(ctx, o.model, out);
    }
    catch (const IoError &e)
    {
        err << "i/o error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const ParseError &e)
    {
        err << "parse error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const ConvergenceError &e)
    {
        err << "convergence failure: " << e.what() << "\n";
        return exit_failure;
    }
    catch (const FitFailure &e)
    {
        err << "convergence failure: " << e.what() << "\n";
        return exit_failure;
    }
    catch (const ValidationError &e)
    {
        err << "invalid input: " << e.what() << "\n";
        return exit_usage;
    }
    catch (const std::invalid_argument &e)
    {
        err << "invalid input: " << e.what() << "\n";
        return exit_usage;
    }
    catch (const std::domain_error &e)
    {
        err << "invalid input: " << e.what() << "\n";
        return exit_usage;
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace nvcav::cli
