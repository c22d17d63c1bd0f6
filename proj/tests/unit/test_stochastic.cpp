#include "nvcav/errors.hpp"
#include "nvcav/random.hpp"
#include "nvcav/rate3.hpp"
#include "nvcav/stochastic.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace nvcav;

TEST_SUITE("stochastic")
{
    TEST_CASE("generator output is reproducible")
    {
        Xoshiro256 a(7), b(7), c(8);
        for (int i = 0; i < 100; ++i)
        {
            const auto x = a();
            CHECK(x == b());
            (void)c();
        }
        CHECK(a() != c());
        Xoshiro256 u(1);
        for (int i = 0; i < 1000; ++i)
        {
            const double v = u.uniform_open0();
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
    }

    TEST_CASE("same seed gives byte-identical tag streams")
    {
        const auto gen = rate3_generator(Rate3Params{});
        const auto s1 = gillespie(gen, {{1, 0, 0}}, 2e6, 7);
        const auto s2 = gillespie(gen, {{1, 0, 0}}, 2e6, 7);
        const auto s3 = gillespie(gen, {{1, 0, 0}}, 2e6, 8);
        CHECK(encode_tags(s1) == encode_tags(s2));
        CHECK(encode_tags(s1) != encode_tags(s3));
        CHECK_NOTHROW(s1.validate());
    }

    TEST_CASE("photon rate equals k_eg times the excited population")
    {
        const Rate3Params p;
        const auto gen = rate3_generator(p);
        const double t_ns = 5e7;
        const auto c = gillespie_counts(gen, {{1, 0, 0}}, t_ns, 3, 1e6);
        const double expected = p.k_eg * steady_state(p).rho_e * t_ns * 1e-3;
        // shelving makes the counts super-Poissonian; allow 6 Poisson sigma
        CHECK(std::abs(static_cast<double>(c.total) - expected) < 6.0 * std::sqrt(expected) * 1.5);
        std::uint64_t sum = 0;
        for (auto b : c.batches)
            sum += b;
        CHECK(sum == c.total);
    }

    TEST_CASE("absorbing state stops the trajectory")
    {
        RateMatrix m(std::vector<std::string>{"a", "b"});
        m.add_rate(0, 1, 1000.0);
        GillespieOptions o;
        o.initial_state = 0;
        const auto s = gillespie(m, {{0, 1, 0}}, 1e6, 1, o);
        CHECK(s.size() == 1);
        CHECK(s.terminated_early);
    }

    TEST_CASE("binary format round trip and corruption")
    {
        const auto gen = rate3_generator(Rate3Params{});
        const auto s = split_channels(gillespie(gen, {{1, 0, 0}}, 1e6, 5), 5);
        const auto bytes = encode_tags(s);
        CHECK(bytes.size() == 16 + 9 * s.size());
        const auto back = decode_tags(bytes);
        CHECK(back.tags_ps == s.tags_ps);
        CHECK(back.channels == s.channels);
        CHECK(back.seed == 5);
        CHECK(back.duration_ps == s.duration_ps);
        std::string bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(decode_tags(bad), ParseError);
        CHECK_THROWS_AS(decode_tags(bytes.substr(0, bytes.size() - 3)), ParseError);
        const auto path = std::filesystem::temp_directory_path() / "nvcav_unit_tags.bin";
        write_tags(path, s);
        CHECK(encode_tags(read_tags(path)) == bytes);
        std::filesystem::remove(path);
        CHECK(tags_to_csv(s).find("\ntime_ps,channel\n") != std::string::npos);
    }

    TEST_CASE("Poisson stream correlates flat")
    {
        TimeTagStream s;
        Xoshiro256 rng(99);
        double t = 0.0;
        const double rate_per_ns = 0.01;
        while (true)
        {
            t += -std::log(rng.uniform_open0()) / rate_per_ns;
            if (t >= 5e7)
                break;
            const auto ps = static_cast<std::uint64_t>(t * 1e3);
            if (!s.tags_ps.empty() && ps <= s.tags_ps.back())
                continue;
            s.tags_ps.push_back(ps);
            s.channels.push_back(0);
        }
        s.duration_ps = 50'000'000'000ULL;
        CorrelationOptions o;
        o.bin_width_ns = 10.0;
        const auto h = correlate(s, o);
        const auto expected = expected_pair_counts([](double) { return 1.0; }, h.bin_edges_ns,
                                                   static_cast<double>(s.size()), 5e7);
        const auto chi = pearson_chi2(h.counts, expected);
        CHECK(chi.reduced() == doctest::Approx(1.0).epsilon(0.25));
    }

    TEST_CASE("start-stop and cross-channel modes")
    {
        TimeTagStream s;
        s.tags_ps = {1000, 3000, 6000};
        s.channels = {0, 1, 0};
        s.duration_ps = 10000;
        CorrelationOptions o;
        o.bin_width_ns = 1.0;
        o.max_delay_us = 0.01;
        o.norm_start_us = 0.0;
        o.norm_end_us = 0.01;
        const auto full = correlate(s, o);
        double total = 0.0;
        for (double c : full.counts)
            total += c;
        CHECK(total == 3.0);
        o.mode = CorrelationMode::start_stop;
        total = 0.0;
        for (double c : correlate(s, o).counts)
            total += c;
        CHECK(total == 2.0);
        o.mode = CorrelationMode::full;
        o.channels = ChannelMode::cross;
        total = 0.0;
        for (double c : correlate(s, o).counts)
            total += c;
        CHECK(total == 2.0);
        CHECK_THROWS(correlate(TimeTagStream{}, o));
    }
}
