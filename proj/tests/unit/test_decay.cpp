#include "nvcav/decay.hpp"
#include "nvcav/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace nvcav;

TEST_SUITE("decay")
{
    TEST_CASE("cooperativity bookkeeping")
    {
        const double c2 = std::pow(std::cos(33.0 * M_PI / 180.0), 2);
        CHECK(c_degen_from_mode_cooperativity(1.068, 33.0) == doctest::Approx(1.068 / c2));
        const DecayModel m;
        CHECK(m.tau0_ns() == doctest::Approx(1e3 / (2 * M_PI * 12.89)));
    }

    TEST_CASE("without vibration each mode enhances the rate by its Lorentzian")
    {
        DecayModel m;
        m.vib.sigma_vib_pm = 0.0;
        const double g0 = 1.0 / m.tau0_ns();
        const double th = m.emitter.theta_cav_deg * M_PI / 180.0;
        for (double d : {0.0, -210.0, -100.0, 60.0})
        {
            const auto r = mode_rates(d, m);
            REQUIRE(r.rate.size() == 1);
            const double l2 = 1.0 / (1.0 + std::pow(d / 25.0, 2));
            const double l1 = 1.0 / (1.0 + std::pow((d + 210.0) / 25.0, 2));
            CHECK(r.rate[0] == doctest::Approx(g0 * (1 + m.c_degen * (std::sin(th) * std::sin(th) * l1 +
                                                                      std::cos(th) * std::cos(th) * l2))));
        }
        // single-mode, vibration-free Purcell factors
        CHECK(1.0 + m.c_degen * std::cos(th) * std::cos(th) == doctest::Approx(2.068).epsilon(1e-6));
        CHECK(1.0 + m.c_degen * std::sin(th) * std::sin(th) == doctest::Approx(1.44).epsilon(0.01));
    }

    TEST_CASE("vibration weights form a probability distribution")
    {
        const DecayModel m;
        const auto r = mode_rates(0.0, m);
        CHECK(std::accumulate(r.weight.begin(), r.weight.end(), 0.0) == doctest::Approx(1.0));
        DecayModel coarse;
        coarse.nodes = 4;
        CHECK_THROWS_AS(mode_rates(0.0, coarse), ConvergenceError);
    }

    TEST_CASE("emission rate integrates to one photon")
    {
        const DecayModel m;
        const auto r = mode_rates(-100.0, m);
        double s = 0.0;
        const double dt = 0.01;
        for (double t = 0.0; t < 400.0; t += dt)
            s += emission_rate(t + 0.5 * dt, r).total() * dt;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-4));
        CHECK_THROWS(emission_rate(-1.0, r));
    }

    TEST_CASE("instrument response")
    {
        const auto irf = InstrumentResponse::gaussian(0.2, 0.05);
        CHECK(std::accumulate(irf.weights.begin(), irf.weights.end(), 0.0) == doctest::Approx(1.0));
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < irf.weights.size(); ++i)
            mean += irf.weights[i] * irf.offsets_ns[i];
        for (std::size_t i = 0; i < irf.weights.size(); ++i)
            var += irf.weights[i] * std::pow(irf.offsets_ns[i] - mean, 2);
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::sqrt(var) == doctest::Approx(0.2).epsilon(0.01));
        CHECK_THROWS(InstrumentResponse::sampled({0.5, -0.1}, 0.05, 0));
    }

    TEST_CASE("delta IRF trace is the bare emission rate")
    {
        DecayModel m;
        m.vib.sigma_vib_pm = 0.0;
        const TraceGrid g;
        const auto t = g.times();
        const DetectionGeometry geo;
        const auto tr = detector_trace(g, 500.0, geo, InstrumentResponse::delta(), m);
        const auto r = mode_rates(500.0, m);
        const double th = geo.theta_det_deg * M_PI / 180.0;
        for (std::size_t i = 0; i < t.size(); i += 97)
        {
            double ref = 0.0;
            if (t[i] >= 0.0)
            {
                const auto e = emission_rate(t[i], r);
                ref = geo.zeta * (std::sin(th) * std::sin(th) * e.m1 + std::cos(th) * std::cos(th) * e.m2);
            }
            CHECK(tr[i] == doctest::Approx(ref).epsilon(1e-9));
        }
    }

    TEST_CASE("lifetime fit recovers a synthetic exponential")
    {
        std::vector<double> t, y;
        for (double x = -3.0; x <= 80.0; x += 0.05)
        {
            t.push_back(x);
            y.push_back(x < 0 ? 0.0 : std::exp(-x / 6.88));
        }
        const auto f = fit_lifetime(t, y);
        CHECK(f.tau_ns == doctest::Approx(6.88).epsilon(1e-3));
        CHECK(f.ci95_ns >= 0.0);
        CHECK_THROWS_AS(fit_lifetime({0.0, 1.0}, {1.0, 0.5}), ValidationError);
        std::vector<double> flat(t.size(), 1.0);
        CHECK_THROWS(fit_lifetime(t, flat));
    }

    TEST_CASE("sweep shows dips at both modes")
    {
        const DecayModel m;
        std::vector<double> grid;
        for (double d = -300.0; d <= 100.0; d += 10.0)
            grid.push_back(d);
        const auto s = lifetime_sweep(grid, m);
        auto at = [&](double d) {
            for (const auto &p : s)
                if (std::abs(p.delta_cav_pm - d) < 1e-9)
                    return p.lifetime_ns;
            return std::nan("");
        };
        CHECK(at(0.0) < at(-100.0));
        CHECK(at(-210.0) < at(-100.0));
        CHECK(at(-210.0) < at(-300.0));
        CHECK(at(0.0) < at(-210.0));
        CHECK(at(0.0) == doctest::Approx(6.88).epsilon(0.03));
    }

    TEST_CASE("fwhm helper on a Lorentzian")
    {
        std::vector<double> x, y;
        for (double v = -200.0; v <= 200.0; v += 1.0)
        {
            x.push_back(v);
            y.push_back(1.0 / (1.0 + std::pow(v / 40.0, 2)));
        }
        CHECK(fwhm_around(x, y, 0.0) == doctest::Approx(80.0).epsilon(1e-3));
        std::vector<double> mono(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            mono[i] = 2.0 + x[i] / 1000.0;
        CHECK(std::isnan(fwhm_around(x, mono, 200.0)));
    }
}
