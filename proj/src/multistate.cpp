#include "nvcav/multistate.hpp"

#include "nvcav/config.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvcav
{

const std::vector<std::string> &nv10_labels()
{
    static const std::vector<std::string> labels{"g0",      "g1",    "lb0",   "lb1", "ub0",
                                                 "ub1",     "singlet", "nv0_g", "nv0_e", "trap"};
    return labels;
}

namespace
{

std::size_t state_index(const std::string &name, std::size_t line)
{
    const auto &l = nv10_labels();
    const auto it = std::find(l.begin(), l.end(), name);
    if (it == l.end())
        throw ParseError("unknown state '" + name + "'", line);
    return static_cast<std::size_t>(it - l.begin());
}

std::vector<std::string> tokens(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size())
    {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        const auto start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t')
            ++i;
        if (i > start)
            out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

bool is_number(const std::string &s)
{
    try
    {
        parse_double(s);
        return true;
    }
    catch (const ParseError &)
    {
        return false;
    }
}

} // namespace

Nv10Model Nv10Model::parse(const KeyValueConfig &cfg)
{
    Nv10Model m;
    for (const auto &e : cfg.entries())
        if (e.key != "edge")
            m.params_[e.key] = parse_double(e.value, e.line);
    for (const auto &e : cfg.entries())
    {
        if (e.key != "edge")
            continue;
        const auto tok = tokens(e.value);
        if (tok.size() < 4 || tok.size() > 5)
            throw ParseError("edge needs 'from to channel factors [zpl]'", e.line);
        EdgeSpec spec;
        spec.line = e.line;
        spec.from = state_index(tok[0], e.line);
        spec.to = state_index(tok[1], e.line);
        if (spec.from == spec.to)
            throw ParseError("edge connects a state to itself", e.line);
        if (tok[2] == "decay")
            spec.channel = EdgeChannel::decay;
        else if (tok[2] == "green")
            spec.channel = EdgeChannel::green;
        else if (tok[2] == "resonant")
            spec.channel = EdgeChannel::resonant;
        else
            throw ParseError("unknown channel '" + tok[2] + "'", e.line);
        spec.factors = split(tok[3], '*');
        for (const auto &f : spec.factors)
            if (!is_number(f) && !m.params_.count(f))
                throw ParseError("unknown parameter '" + f + "'", e.line);
        if (tok.size() == 5)
        {
            if (tok[4] != "zpl")
                throw ParseError("unexpected flag '" + tok[4] + "'", e.line);
            spec.zpl = true;
        }
        m.edges_.push_back(std::move(spec));
    }
    for (const auto &[k, v] : m.params_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ParseError("parameter '" + k + "' must be finite and >= 0", 0);
    return m;
}

const char *Nv10Model::default_text()
{
    return
#include "nv10_default.inc"
        ;
}

Nv10Model Nv10Model::defaults() { return parse(KeyValueConfig::parse(default_text())); }

double Nv10Model::parameter(const std::string &name) const
{
    const auto it = params_.find(name);
    if (it == params_.end())
        throw std::out_of_range("unknown rate parameter '" + name + "'");
    return it->second;
}

void Nv10Model::set_parameter(const std::string &name, double value)
{
    if (!(value >= 0.0) || !std::isfinite(value))
        throw std::domain_error("rate parameter '" + name + "' must be finite and >= 0");
    params_[name] = value;
}

double Nv10Model::edge_rate(const EdgeSpec &e) const
{
    double r = 1.0;
    for (const auto &f : e.factors)
    {
        const auto it = params_.find(f);
        r *= it != params_.end() ? it->second : parse_double(f, e.line);
    }
    return r;
}

RateMatrix Nv10Model::generator(SegmentKind kind, double repump_mw) const
{
    if (repump_mw < 0.0)
        throw std::domain_error("generator: repump power must be >= 0");
    RateMatrix m(nv10_labels());
    for (const auto &e : edges_)
    {
        double r = edge_rate(e);
        switch (e.channel)
        {
        case EdgeChannel::decay:
            break;
        case EdgeChannel::green:
            if (kind != SegmentKind::repump)
                continue;
            r *= repump_mw;
            break;
        case EdgeChannel::resonant:
            if (kind != SegmentKind::resonant)
                continue;
            break;
        }
        m.add_rate(e.from, e.to, r);
    }
    return m;
}

double Nv10Model::zpl_flux(const Eigen::VectorXd &p) const
{
    double f = 0.0;
    for (const auto &e : edges_)
        if (e.zpl)
            f += edge_rate(e) * p(static_cast<Eigen::Index>(e.from));
    return f;
}

std::vector<SegmentModel> pulse_sequence(const Nv10Model &model, double repump_mw, const PulseTimings &t)
{
    if (!(t.repump_us > 0.0) || !(t.wait_us > 0.0) || !(t.resonant_us > 0.0))
        throw std::domain_error("pulse_sequence: durations must be > 0");
    return {{SegmentKind::repump, t.repump_us, model.generator(SegmentKind::repump, repump_mw)},
            {SegmentKind::wait, t.wait_us, model.generator(SegmentKind::wait, 0.0)},
            {SegmentKind::resonant, t.resonant_us, model.generator(SegmentKind::resonant, 0.0)},
            {SegmentKind::wait, t.wait_us, model.generator(SegmentKind::wait, 0.0)}};
}

Eigen::MatrixXd cycle_propagator(const std::vector<SegmentModel> &segments)
{
    if (segments.empty())
        throw std::invalid_argument("cycle_propagator: no segments");
    const auto n = static_cast<Eigen::Index>(segments.front().generator.size());
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n);
    for (const auto &s : segments)
    {
        if (!(s.duration_us > 0.0))
            throw std::domain_error("segment duration must be > 0");
        s.generator.validate();
        if (static_cast<Eigen::Index>(s.generator.size()) != n)
            throw ValidationError("segments have different state counts");
        u = s.generator.propagator(s.duration_us) * u;
    }
    return u;
}

SequenceSteadyState sequence_steady_state(const std::vector<SegmentModel> &segments, double tol,
                                          const Eigen::VectorXd *p_init, std::size_t max_cycles)
{
    if (!(tol > 0.0))
        throw std::domain_error("sequence_steady_state: tol must be > 0");
    const Eigen::MatrixXd u = cycle_propagator(segments);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(u.rows());
    if (p_init)
    {
        check_population(*p_init);
        p = *p_init;
    }
    else
        p(0) = 1.0;
    SequenceSteadyState r;
    for (std::size_t c = 1; c <= max_cycles; ++c)
    {
        Eigen::VectorXd next = u * p;
        next = next.cwiseMax(0.0);
        next /= next.sum();
        r.residual = (next - p).lpNorm<1>();
        p = next;
        if (r.residual < tol)
        {
            r.population = p;
            r.cycles = c;
            return r;
        }
    }
    throw ConvergenceError("sequence_steady_state: no convergence after " + std::to_string(max_cycles) + " cycles",
                           r.residual);
}

Eigen::VectorXd sequence_steady_state_eigen(const std::vector<SegmentModel> &segments)
{
    const Eigen::MatrixXd full = cycle_propagator(segments);
    // states without any edge keep their initial mass; leave them out
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < full.rows(); ++i)
    {
        const double off = full.row(i).cwiseAbs().sum() + full.col(i).cwiseAbs().sum() - 2.0 * std::abs(full(i, i));
        if (off > 0.0)
            active.push_back(i);
    }
    if (active.empty())
        throw ValidationError("sequence_steady_state_eigen: no connected states");
    const auto n = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd u(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            u(i, j) = full(active[i], active[j]);
    Eigen::EigenSolver<Eigen::MatrixXd> es(u);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i) - 1.0) < std::abs(es.eigenvalues()(best) - 1.0))
            best = i;
    Eigen::VectorXd v = es.eigenvectors().col(best).real();
    v /= v.sum();
    v = v.cwiseMax(0.0) / v.cwiseMax(0.0).sum();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(full.rows());
    for (Eigen::Index i = 0; i < n; ++i)
        out(active[i]) = v(i);
    return out;
}

std::vector<TracePoint> sequence_trace(const std::vector<SegmentModel> &segments, const Eigen::VectorXd &p0,
                                       std::size_t per_segment)
{
    if (per_segment == 0)
        throw std::domain_error("sequence_trace: need at least one sample per segment");
    std::vector<TracePoint> out;
    Eigen::VectorXd p = p0;
    double t0 = 0.0;
    for (std::size_t s = 0; s < segments.size(); ++s)
    {
        const auto &seg = segments[s];
        const double dt = seg.duration_us / static_cast<double>(per_segment);
        const Eigen::MatrixXd step = seg.generator.propagator(dt);
        for (std::size_t k = 1; k <= per_segment; ++k)
        {
            p = step * p;
            out.push_back({t0 + dt * static_cast<double>(k), s, p});
        }
        t0 += seg.duration_us;
    }
    return out;
}

ShelvingRates shelving_regression(const std::vector<double> &onset, const std::vector<double> &tail,
                                  const ShelvingSettings &s)
{
    if (onset.size() != tail.size() || onset.size() < 3)
        throw std::invalid_argument("shelving_regression: need >= 3 matching points");
    if (!(s.probe_us > 0.0) || !(s.rf_full > 0.0))
        throw std::domain_error("shelving_regression: probe duration and rf_full must be > 0");
    const double n = static_cast<double>(onset.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < onset.size(); ++i)
    {
        mx += onset[i];
        my += tail[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < onset.size(); ++i)
    {
        sxx += (onset[i] - mx) * (onset[i] - mx);
        sxy += (onset[i] - mx) * (tail[i] - my);
    }
    if (sxx <= 1e-24 * std::max(1.0, mx * mx))
        throw std::domain_error("shelving_regression: degenerate abscissa (onset values not distinct)");
    ShelvingRates r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    if (r.slope >= 1.0)
        return r;
    if (r.slope <= 0.0)
    {
        r.full_shelving = true;
        r.k_ex1 = std::numeric_limits<double>::infinity();
        r.k_a10 = 0.0;
        return r;
    }
    const double k = -std::log(r.slope) / s.probe_us;
    const double frac = std::clamp(r.intercept / (s.rf_full * (1.0 - r.slope)), 0.0, 1.0);
    r.k_a10 = k * frac;
    r.k_ex1 = k - r.k_a10;
    return r;
}

std::vector<RepumpResponse> pl_rf_vs_repump(const std::vector<double> &powers, const SegmentFactory &factory,
                                            const Nv10Model &model, const DriftModel &drift,
                                            const RepumpReadout &ro)
{
    if (!std::isfinite(drift.c_drift_mhz_per_mw))
        throw std::domain_error("pl_rf_vs_repump: drift constant must be finite");
    std::vector<RepumpResponse> out;
    for (double pw : powers)
    {
        if (!(pw > 0.0))
            throw std::domain_error("pl_rf_vs_repump: powers must be > 0");
        const auto segs = factory(pw);
        const auto ss = sequence_steady_state(segs, ro.tol);
        Eigen::VectorXd p = ss.population;
        RepumpResponse r;
        r.power_mw = pw;
        bool pl_done = false;
        for (const auto &seg : segs)
        {
            if (seg.kind == SegmentKind::resonant)
            {
                r.g0_population = p(0);
                break;
            }
            p = propagate(seg.generator, p, seg.duration_us);
            if (seg.kind == SegmentKind::repump && !pl_done)
            {
                r.pl = ro.pl_scale * model.zpl_flux(p);
                pl_done = true;
            }
        }
        r.drift_mhz = drift.c_drift_mhz_per_mw * pw;
        r.rf0 = ro.rf_scale * r.g0_population * lorentzian_peak(r.drift_mhz, ro.linewidth_mhz);
        out.push_back(r);
    }
    return out;
}

double pl_saturation(double p, double i_sat, double p_sat)
{
    if (p < 0.0 || !(p_sat > 0.0))
        throw std::domain_error("pl_saturation: p >= 0 and p_sat > 0 required");
    return i_sat * p / (p + p_sat);
}

} // namespace nvcav
