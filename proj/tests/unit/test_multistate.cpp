#include "nvcav/config.hpp"
#include "nvcav/errors.hpp"
#include "nvcav/multistate.hpp"
#include "nvcav/random.hpp"
#include "nvcav/rate3.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace nvcav;

namespace
{

std::size_t idx(const std::string &label)
{
    const auto &l = nv10_labels();
    return static_cast<std::size_t>(std::find(l.begin(), l.end(), label) - l.begin());
}

} // namespace

TEST_SUITE("multistate")
{
    TEST_CASE("default model parses and has ten states")
    {
        const auto m = Nv10Model::defaults();
        CHECK(nv10_labels().size() == 10);
        CHECK(!m.edges().empty());
        CHECK(std::string(Nv10Model::default_text()).find("placeholder") != std::string::npos);
        for (auto kind : {SegmentKind::repump, SegmentKind::wait, SegmentKind::resonant})
        {
            const auto g = m.generator(kind, 1.0);
            CHECK(g.size() == 10);
            CHECK_NOTHROW(g.validate());
            CHECK(g.generator().colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
        }
    }

    TEST_CASE("edge list errors name the line")
    {
        const std::string base = "k = 1\n";
        try
        {
            Nv10Model::parse(KeyValueConfig::parse(base + "edge = g0 nowhere decay k\n"));
            FAIL("expected ParseError");
        }
        catch (const ParseError &e)
        {
            CHECK(e.line() == 2);
        }
        CHECK_THROWS_AS(Nv10Model::parse(KeyValueConfig::parse(base + "edge = g0 g0 decay k\n")), ParseError);
        CHECK_THROWS_AS(Nv10Model::parse(KeyValueConfig::parse(base + "edge = g0 g1 laser k\n")), ParseError);
        CHECK_THROWS_AS(Nv10Model::parse(KeyValueConfig::parse(base + "edge = g0 g1 decay q\n")), ParseError);
        const auto ok = Nv10Model::parse(KeyValueConfig::parse(base + "edge = g0 g1 decay k*2.5 zpl\n"));
        CHECK(ok.edge_rate(ok.edges().front()) == doctest::Approx(2.5));
        CHECK(ok.edges().front().zpl);
    }

    TEST_CASE("green edges only act during the repump and scale with power")
    {
        const auto m = Nv10Model::parse(KeyValueConfig::parse("k = 2\nedge = g0 ub0 green k\nedge = ub0 g0 decay k\n"));
        CHECK(m.generator(SegmentKind::repump, 3.0).rate(idx("g0"), idx("ub0")) == doctest::Approx(6.0));
        CHECK(m.generator(SegmentKind::wait, 3.0).rate(idx("g0"), idx("ub0")) == 0.0);
        CHECK(m.generator(SegmentKind::resonant, 3.0).rate(idx("ub0"), idx("g0")) == doctest::Approx(2.0));
    }

    TEST_CASE("three-state embedding reproduces the rate3 steady state")
    {
        const Rate3Params p;
        const std::string text = "keg = " + std::to_string(p.k_eg) + "\nk532 = " + std::to_string(p.k_532) +
                                 "\nks = " + std::to_string(p.k_s) + "\nkd = " + std::to_string(p.k_d) +
                                 "\nedge = ub0 g0 decay keg\nedge = g0 ub0 green k532\nedge = ub0 singlet decay ks\n"
                                 "edge = singlet g0 decay kd\n";
        const auto m = Nv10Model::parse(KeyValueConfig::parse(text));
        const auto segs = std::vector<SegmentModel>{{SegmentKind::repump, 1000.0, m.generator(SegmentKind::repump, 1.0)}};
        Eigen::VectorXd p0 = Eigen::VectorXd::Zero(10);
        p0(0) = 1.0;
        const auto p1 = propagate(segs[0].generator, p0, 1000.0);
        const auto ref = steady_state(p);
        CHECK(p1(static_cast<Eigen::Index>(idx("ub0"))) == doctest::Approx(ref.rho_e).epsilon(1e-8));
        CHECK(p1(static_cast<Eigen::Index>(idx("singlet"))) == doctest::Approx(ref.rho_s).epsilon(1e-8));
    }

    TEST_CASE("long wait relaxes into the ground states")
    {
        const auto m = Nv10Model::defaults();
        const std::vector<SegmentModel> segs{{SegmentKind::wait, 1e4, m.generator(SegmentKind::wait, 0.0)}};
        Eigen::VectorXd p0 = Eigen::VectorXd::Zero(10);
        p0(static_cast<Eigen::Index>(idx("ub0"))) = 0.5;
        p0(static_cast<Eigen::Index>(idx("singlet"))) = 0.5;
        const auto ss = sequence_steady_state(segs, 1e-12, &p0);
        const double ground = ss.population(0) + ss.population(1);
        const double nv0 = ss.population(static_cast<Eigen::Index>(idx("nv0_g")));
        CHECK(ground + nv0 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(ss.population(static_cast<Eigen::Index>(idx("ub0"))) < 1e-12);
    }

    TEST_CASE("pulse-train fixed point does not depend on the start vector")
    {
        const auto m = Nv10Model::defaults();
        const auto segs = pulse_sequence(m, 1.0);
        Xoshiro256 rng(3);
        Eigen::VectorXd a(10), b(10);
        for (Eigen::Index i = 0; i < 10; ++i)
        {
            a(i) = rng.uniform();
            b(i) = rng.uniform();
        }
        // the spare state (index 9) has no edges in the default file
        a(9) = 0.0;
        b(9) = 0.0;
        a /= a.sum();
        b /= b.sum();
        const auto sa = sequence_steady_state(segs, 1e-13, &a);
        const auto sb = sequence_steady_state(segs, 1e-13, &b);
        CHECK((sa.population - sb.population).lpNorm<1>() < 1e-10);
        CHECK((sa.population - sequence_steady_state_eigen(segs)).lpNorm<1>() < 1e-9);
        // one more cycle maps the fixed point onto itself
        const Eigen::VectorXd again = cycle_propagator(segs) * sa.population;
        CHECK((again - sa.population).lpNorm<1>() < 1e-10);
    }

    TEST_CASE("non-convergence reports the residual")
    {
        const auto m = Nv10Model::defaults();
        const auto segs = pulse_sequence(m, 1.0);
        try
        {
            sequence_steady_state(segs, 1e-30, nullptr, 3);
            FAIL("expected ConvergenceError");
        }
        catch (const ConvergenceError &e)
        {
            CHECK(e.residual() > 0.0);
        }
        CHECK_THROWS(pulse_sequence(m, 1.0, PulseTimings{0.0, 0.4, 31.0}));
    }

    TEST_CASE("shelving regression")
    {
        // onset == tail: no net exchange
        const auto same = shelving_regression({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
        CHECK(same.k_ex1 == 0.0);
        CHECK(same.k_a10 == 0.0);
        // zero tail: everything shelved
        const auto dark = shelving_regression({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
        CHECK(dark.full_shelving);
        CHECK(dark.k_a10 == 0.0);
        CHECK_THROWS(shelving_regression({1.0, 1.0, 1.0}, {0.5, 0.6, 0.7}));
        CHECK_THROWS(shelving_regression({1.0, 2.0}, {0.5, 0.6}));
    }

    TEST_CASE("shelving regression round trip through the effective propagator")
    {
        const double k_ex1 = 0.08, k_a10 = 0.015, t_probe = 31.0, rf_full = 5.0;
        RateMatrix eff({"ms0", "ms1", "dark"});
        eff.add_rate("ms0", "ms1", k_ex1);
        eff.add_rate("ms1", "ms0", k_a10);
        std::vector<double> onset, tail;
        for (double p0 : {0.2, 0.4, 0.6, 0.8, 1.0})
        {
            Eigen::VectorXd p(3);
            p << p0, 1.0 - p0, 0.0;
            onset.push_back(rf_full * p0);
            tail.push_back(rf_full * propagate(eff, p, t_probe)(0));
        }
        const auto r = shelving_regression(onset, tail, {t_probe, rf_full});
        CHECK(r.k_ex1 == doctest::Approx(k_ex1).epsilon(0.02));
        CHECK(r.k_a10 == doctest::Approx(k_a10).epsilon(0.02));
    }

    TEST_CASE("RF0 versus repump power with and without drift")
    {
        const auto m = Nv10Model::defaults();
        const SegmentFactory f = [&](double p) { return pulse_sequence(m, p); };
        std::vector<double> powers;
        for (double p = 0.2; p <= 4.0; p += 0.2)
            powers.push_back(p);
        const auto flat = pl_rf_vs_repump(powers, f, m, DriftModel{0.0});
        for (std::size_t i = 1; i < flat.size(); ++i)
            CHECK(flat[i].rf0 >= flat[i - 1].rf0 - 1e-12);
        const auto drift = pl_rf_vs_repump(powers, f, m, DriftModel{60.0});
        std::size_t best = 0;
        for (std::size_t i = 1; i < drift.size(); ++i)
            if (drift[i].rf0 > drift[best].rf0)
                best = i;
        CHECK(best > 0);
        CHECK(best + 1 < drift.size());
        CHECK_THROWS(pl_rf_vs_repump({0.0}, f, m, DriftModel{}));
    }

    TEST_CASE("Purcell enhancement of the upper branch raises the repump PL")
    {
        auto m = Nv10Model::defaults();
        double last = 0.0;
        for (double fp : {1.0, 1.5, 2.0, 3.0})
        {
            m.set_parameter("purcell_ub", fp);
            const auto r = pl_rf_vs_repump({1.0}, [&](double p) { return pulse_sequence(m, p); }, m, DriftModel{});
            CHECK(r[0].pl > last);
            last = r[0].pl;
        }
    }

    TEST_CASE("PL saturation arithmetic")
    {
        CHECK(pl_saturation(3.6, 2.3e6, 67.0) == doctest::Approx(2.3e6 * 3.6 / 70.6));
        CHECK_THROWS(pl_saturation(1.0, 1.0, 0.0));
    }
}
