#include "nvcav/stochastic.hpp"

#include "nvcav/csv.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/quadrature.hpp"
#include "nvcav/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace nvcav
{

void TimeTagStream::validate() const
{
    if (tags_ps.size() != channels.size())
        throw ValidationError("tag stream: tags and channels differ in length");
    for (std::size_t i = 0; i < tags_ps.size(); ++i)
    {
        if (i > 0 && tags_ps[i] <= tags_ps[i - 1])
            throw ValidationError("tag stream: tags are not strictly increasing at index " + std::to_string(i));
        if (tags_ps[i] >= duration_ps)
            throw ValidationError("tag stream: tag beyond duration at index " + std::to_string(i));
    }
}

namespace
{

struct Jump
{
    std::vector<double> cumulative; // normalised cumulative probabilities
    std::vector<std::size_t> target;
    std::vector<int> channel;       // -1 when not radiative
    double exit_rate = 0.0;
};

std::vector<Jump> jump_tables(const RateMatrix &gen, const std::vector<RadiativeEdge> &edges)
{
    gen.validate();
    const auto &m = gen.generator();
    const auto n = gen.size();
    for (const auto &e : edges)
        if (e.from >= n || e.to >= n || e.from == e.to)
            throw std::invalid_argument("gillespie: radiative edge references invalid states");
    std::vector<Jump> tables(n);
    for (std::size_t s = 0; s < n; ++s)
    {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
        {
            if (j == s)
                continue;
            const double r = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s));
            if (r <= 0.0)
                continue;
            acc += r;
            tables[s].cumulative.push_back(acc);
            tables[s].target.push_back(j);
            int ch = -1;
            for (const auto &e : edges)
                if (e.from == s && e.to == j)
                    ch = e.channel;
            tables[s].channel.push_back(ch);
        }
        tables[s].exit_rate = acc;
        for (double &c : tables[s].cumulative)
            c /= acc;
    }
    return tables;
}

std::size_t initial_state(const RateMatrix &gen, const GillespieOptions &o, Xoshiro256 &rng)
{
    if (o.initial_state)
    {
        if (*o.initial_state >= gen.size())
            throw std::out_of_range("gillespie: initial state out of range");
        return *o.initial_state;
    }
    Eigen::VectorXd p;
    try
    {
        p = gen.steady_state();
    }
    catch (const ValidationError &)
    {
        return 0;
    }
    const double u = rng.uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
    {
        acc += p(i);
        if (u < acc)
            return static_cast<std::size_t>(i);
    }
    return static_cast<std::size_t>(p.size() - 1);
}

// Runs the trajectory and calls emit(t_ns, channel) for every radiative jump.
// Returns true when it stopped in an absorbing state.
template <class Emit>
bool run(const RateMatrix &gen, const std::vector<RadiativeEdge> &edges, double duration_ns, std::uint32_t seed,
         const GillespieOptions &o, Emit &&emit)
{
    if (!(duration_ns > 0.0))
        throw std::domain_error("gillespie: duration must be > 0");
    Xoshiro256 rng(seed);
    const auto tables = jump_tables(gen, edges);
    std::size_t s = initial_state(gen, o, rng);
    double t = 0.0;
    // Rates are per us; time runs in ns.
    while (true)
    {
        const auto &tab = tables[s];
        if (tab.exit_rate <= 0.0)
            return true;
        t += -std::log(rng.uniform_open0()) / tab.exit_rate * 1e3;
        if (t >= duration_ns)
            return false;
        const double u = rng.uniform();
        const auto k = static_cast<std::size_t>(
            std::upper_bound(tab.cumulative.begin(), tab.cumulative.end(), u) - tab.cumulative.begin());
        const std::size_t idx = std::min(k, tab.target.size() - 1);
        if (tab.channel[idx] >= 0)
            emit(t, static_cast<std::uint8_t>(tab.channel[idx]));
        s = tab.target[idx];
    }
}

} // namespace

TimeTagStream gillespie(const RateMatrix &gen, const std::vector<RadiativeEdge> &edges, double duration_ns,
                        std::uint32_t seed, const GillespieOptions &o)
{
    TimeTagStream out;
    out.seed = seed;
    out.duration_ps = static_cast<std::uint64_t>(std::llround(duration_ns * 1e3));
    const auto dead_ps = static_cast<std::uint64_t>(std::llround(std::max(o.dead_time_ns, 0.0) * 1e3));
    std::vector<std::uint64_t> last_on_channel(256, 0);
    std::vector<bool> seen(256, false);
    out.terminated_early = run(gen, edges, duration_ns, seed, o, [&](double t_ns, std::uint8_t ch) {
        auto ps = static_cast<std::uint64_t>(std::llround(t_ns * 1e3));
        if (!out.tags_ps.empty() && ps <= out.tags_ps.back())
            ps = out.tags_ps.back() + 1;
        if (ps >= out.duration_ps)
            return;
        if (dead_ps > 0 && seen[ch] && ps - last_on_channel[ch] < dead_ps)
            return;
        seen[ch] = true;
        last_on_channel[ch] = ps;
        out.tags_ps.push_back(ps);
        out.channels.push_back(ch);
    });
    return out;
}

PhotonCounts gillespie_counts(const RateMatrix &gen, const std::vector<RadiativeEdge> &edges, double duration_ns,
                              std::uint32_t seed, double batch_ns, const GillespieOptions &o)
{
    if (!(batch_ns > 0.0))
        throw std::domain_error("gillespie_counts: batch length must be > 0");
    PhotonCounts out;
    const auto nb = static_cast<std::size_t>(std::floor(duration_ns / batch_ns));
    out.batches.assign(std::max<std::size_t>(nb, 1), 0);
    out.terminated_early = run(gen, edges, duration_ns, seed, o, [&](double t_ns, std::uint8_t) {
        ++out.total;
        const auto b = static_cast<std::size_t>(t_ns / batch_ns);
        if (b < out.batches.size())
            ++out.batches[b];
    });
    return out;
}

TimeTagStream split_channels(const TimeTagStream &stream, std::uint32_t seed)
{
    Xoshiro256 rng(seed);
    TimeTagStream out = stream;
    for (auto &c : out.channels)
        c = static_cast<std::uint8_t>(rng() >> 63);
    return out;
}

CorrelationHistogram correlate(const TimeTagStream &stream, const CorrelationOptions &o)
{
    if (stream.size() == 0)
        throw std::domain_error("correlate: empty stream");
    if (!(o.bin_width_ns > 0.0) || !(o.max_delay_us > 0.0))
        throw std::domain_error("correlate: bin width and max delay must be > 0");
    const double max_ns = o.max_delay_us * 1e3;
    if (!(o.norm_start_us >= 0.0 && o.norm_end_us > o.norm_start_us && o.norm_end_us <= o.max_delay_us + 1e-12))
        throw std::domain_error("correlate: normalisation window must lie inside the histogram");
    const auto nbins = static_cast<std::size_t>(std::floor(max_ns / o.bin_width_ns + 1e-9));
    if (nbins == 0)
        throw std::domain_error("correlate: max delay shorter than one bin");
    const auto bin_ps = o.bin_width_ns * 1e3;
    const auto max_ps = static_cast<std::uint64_t>(std::llround(static_cast<double>(nbins) * bin_ps));

    CorrelationHistogram h;
    h.counts.assign(nbins, 0.0);
    for (std::size_t i = 0; i <= nbins; ++i)
        h.bin_edges_ns.push_back(static_cast<double>(i) * o.bin_width_ns);

    const auto &t = stream.tags_ps;
    const auto &c = stream.channels;
    const bool cross = o.channels == ChannelMode::cross;
    auto add = [&](std::uint64_t d) {
        const auto b = static_cast<std::size_t>(static_cast<double>(d) / bin_ps);
        if (b < nbins)
            h.counts[b] += 1.0;
    };
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        for (std::size_t j = i + 1; j < t.size(); ++j)
        {
            const std::uint64_t d = t[j] - t[i];
            if (d >= max_ps)
                break;
            if (cross && c[i] == c[j])
                continue;
            add(d);
            if (o.mode == CorrelationMode::start_stop)
                break;
        }
    }
    h.norm_start_us = o.norm_start_us;
    h.norm_end_us = o.norm_end_us;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < nbins; ++b)
    {
        const double mid = h.bin_center_ns(b) * 1e-3;
        if (mid >= o.norm_start_us && mid <= o.norm_end_us)
        {
            sum += h.counts[b];
            ++n;
        }
    }
    if (n == 0 || sum <= 0.0)
        throw std::domain_error("correlate: normalisation window holds no counts");
    h.norm_mean = sum / static_cast<double>(n);
    h.g2.reserve(nbins);
    for (double v : h.counts)
        h.g2.push_back(v / h.norm_mean);
    return h;
}

std::vector<double> expected_pair_counts(const std::function<double(double)> &g2, const std::vector<double> &edges,
                                         double n, double duration_ns)
{
    std::vector<double> out;
    if (edges.size() < 2)
        return out;
    const double rate2 = (n / duration_ns) * (n / duration_ns);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    {
        const auto rule = gauss_legendre(8, edges[i], edges[i + 1]);
        double acc = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            acc += rule.weights[k] * g2(rule.nodes[k]) * (duration_ns - rule.nodes[k]);
        out.push_back(rate2 * acc);
    }
    return out;
}

ChiSquare pearson_chi2(const std::vector<double> &obs, const std::vector<double> &exp, double min_expected)
{
    if (obs.size() != exp.size())
        throw std::invalid_argument("pearson_chi2: size mismatch");
    ChiSquare r;
    for (std::size_t i = 0; i < obs.size(); ++i)
    {
        if (exp[i] < min_expected)
            continue;
        r.chi2 += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
        ++r.bins;
    }
    return r;
}

namespace
{

constexpr std::uint16_t tag_version = 1;

template <class T> void put_le(std::string &out, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T> T get_le(std::string_view in, std::size_t pos)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return static_cast<T>(v);
}

} // namespace

std::string encode_tags(const TimeTagStream &s)
{
    s.validate();
    std::string out;
    out.reserve(16 + 9 * s.size());
    out.push_back('T');
    out.push_back('T');
    put_le<std::uint16_t>(out, tag_version);
    put_le<std::uint32_t>(out, s.seed);
    put_le<std::uint64_t>(out, s.duration_ps);
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        put_le<std::uint64_t>(out, s.tags_ps[i]);
        put_le<std::uint8_t>(out, s.channels[i]);
    }
    return out;
}

TimeTagStream decode_tags(std::string_view in)
{
    if (in.size() < 16 || in[0] != 'T' || in[1] != 'T')
        throw ParseError("tag file: bad magic", 0);
    if (get_le<std::uint16_t>(in, 2) != tag_version)
        throw ParseError("tag file: unsupported version", 0);
    if ((in.size() - 16) % 9 != 0)
        throw ParseError("tag file: truncated record", 0);
    TimeTagStream s;
    s.seed = get_le<std::uint32_t>(in, 4);
    s.duration_ps = get_le<std::uint64_t>(in, 8);
    const std::size_t n = (in.size() - 16) / 9;
    s.tags_ps.reserve(n);
    s.channels.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        s.tags_ps.push_back(get_le<std::uint64_t>(in, 16 + 9 * i));
        s.channels.push_back(get_le<std::uint8_t>(in, 16 + 9 * i + 8));
    }
    try
    {
        s.validate();
    }
    catch (const ValidationError &e)
    {
        throw ParseError(std::string("tag file: ") + e.what(), 0);
    }
    return s;
}

void write_tags(const std::filesystem::path &path, const TimeTagStream &stream)
{
    write_text_file(path, encode_tags(stream));
}

TimeTagStream read_tags(const std::filesystem::path &path) { return decode_tags(read_text_file(path)); }

std::string tags_to_csv(const TimeTagStream &s)
{
    std::string out = "# seed " + std::to_string(s.seed) + ", duration_ps " + std::to_string(s.duration_ps) +
                      "\n# time in ps\ntime_ps,channel\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += std::to_string(s.tags_ps[i]) + "," + std::to_string(static_cast<int>(s.channels[i])) + "\n";
    return out;
}

} // namespace nvcav
