#include "nvcav/diagnostics.hpp"
#include "nvcav/random.hpp"
#include "nvcav/rfscan.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nvcav;

TEST_SUITE("rfscan")
{
    TEST_CASE("Lorentzian widths add under convolution")
    {
        for (double x : {0.0, 50.0, 150.0, 400.0})
        {
            const double a = 159.0, b = 23.07, w = a + b;
            const double oracle = (w / (2 * M_PI)) / (x * x + w * w / 4.0);
            CHECK(lorentzian_convolution_numeric(x, a, b) == doctest::Approx(oracle).epsilon(1e-6));
        }
        CHECK(total_linewidth_mhz(159.0, 1.79, 12.89) == doctest::Approx(159.0 + 1.79 * 12.89));
    }

    TEST_CASE("line profile shape")
    {
        const auto y = linewidth_profile({0.0, 91.03655, 1e6}, 159.0, 1.79, 12.89, 3.0, 10.0);
        CHECK(y[0] == doctest::Approx(13.0));
        CHECK(y[1] == doctest::Approx(8.0).epsilon(1e-6));
        CHECK(y[2] == doctest::Approx(3.0).epsilon(1e-6));
    }

    TEST_CASE("doublet fit recovers synthetic parameters")
    {
        DoubletParams truth{1500.0, 0.4, 12.0, 171.0, 159.0, 100.0};
        std::vector<double> x;
        for (double d = -1000.0; d <= 1000.0; d += 10.0)
            x.push_back(d);
        const auto mean = doublet_profile(x, truth, 1.79, 12.89);
        Xoshiro256 rng(42);
        std::vector<double> counts;
        for (double m : mean)
            counts.push_back(static_cast<double>(std::poisson_distribution<long>(m)(rng)));
        DoubletParams guess{1200.0, 0.6, 0.0, 140.0, 120.0, 80.0};
        const auto f = fit_doublet(x, counts, guess, 1.79, 12.89);
        REQUIRE(f.converged);
        CHECK(std::abs(f.estimate.gamma_ext_mhz - truth.gamma_ext_mhz) < 2.0 * f.ci95.gamma_ext_mhz + 1e-9);
        CHECK(std::abs(f.estimate.shift_mhz - truth.shift_mhz) < 2.0 * f.ci95.shift_mhz + 1e-9);
        CHECK(f.reduced_chi2 == doctest::Approx(1.0).epsilon(0.3));
        CHECK(contrast_from_slr(14.0) == doctest::Approx(14.0 / 15.0));
    }

    TEST_CASE("saturation law")
    {
        const SaturationParams s;
        const double h = s.f_p * s.gamma0;
        // independent evaluation of the law
        auto law = [&](double p, double gext) {
            const double x = 2 * s.a_scale * p;
            return s.i_sat * x / (x + h * h + 2 * gext * std::sqrt(x + h * h));
        };
        const double gext = 2 * M_PI * 159.0;
        for (double p : {10.0, 300.0, 3000.0})
            CHECK(saturation_rf(p, s, gext) == doctest::Approx(law(p, gext)));
        const double psat = saturation_power(s, gext);
        CHECK(law(psat, gext) == doctest::Approx(s.i_sat / 2).epsilon(1e-9));
        for (double p : {0.5, 50.0, 5e4})
            CHECK(saturation_rf(p, s, 0.0) ==
                  doctest::Approx(2 * s.i_sat * two_level_rho_ee(s.a_scale * p, 0.0, h)).epsilon(1e-12));
        // textbook two-level steady state
        const double om2 = 4.0, d = 1.5, g = 2.0;
        CHECK(two_level_rho_ee(om2, d, g) == doctest::Approx((om2 / 4) / (d * d + g * g / 4 + om2 / 2)));
    }

    TEST_CASE("cavity displacement response")
    {
        RfCavityModel m;
        std::vector<double> x;
        for (double d = -400.0; d <= 200.0; d += 4.0)
            x.push_back(d);
        const double lo = std::pow(2 * M_PI * 5.0, 2), hi = std::pow(2 * M_PI * 400.0, 2);
        const auto low = rf_vs_cavity(x, lo, m);
        const auto high = rf_vs_cavity(x, hi, m);
        for (double v : high)
            CHECK(v >= 0.0);
        CHECK(doublet_peak_ratio(x, high, m.cavity) > doublet_peak_ratio(x, low, m.cavity));

        const std::vector<double> few{-210.0, -100.0, 0.0};
        const auto exact = rf_vs_cavity(few, hi, m);
        const auto mc = rf_vs_cavity_sampled(few, hi, m, 40000, 9);
        for (std::size_t i = 0; i < few.size(); ++i)
            CHECK(std::abs(mc.mean[i] - exact[i]) < 4.0 * mc.stderr_[i] + 1e-12);
    }

    TEST_CASE("mixture classification and background extraction")
    {
        Xoshiro256 rng(1);
        std::normal_distribution<double> n(0.0, 1.0);
        TrapHistogram h;
        const std::vector<double> p{100.0, 200.0, 300.0, 400.0};
        for (double pw : p)
        {
            std::vector<double> s;
            for (int i = 0; i < 600; ++i)
            {
                const double u = rng.uniform();
                const double mu = u < 0.2 ? 0.01 * pw : (u < 0.5 ? 0.01 * pw + 20.0 : 0.01 * pw + 60.0);
                s.push_back(mu + n(rng));
            }
            h.samples.push_back(s);
        }
        const auto r = classify_and_extract_background(h, p, 2);
        CHECK(r.background_slope == doctest::Approx(0.01).epsilon(0.1));
        CHECK(r.background_intercept == doctest::Approx(0.0).epsilon(0.5));
        CHECK(r.slr == doctest::Approx(60.0 / 3.0).epsilon(0.05));

        std::vector<double> blob;
        for (int i = 0; i < 500; ++i)
            blob.push_back(n(rng));
        TrapHistogram bad{{blob, blob, blob}};
        CHECK_THROWS_AS(classify_and_extract_background(bad, {1.0, 2.0, 3.0}, 0), ClassificationError);
        CHECK_THROWS_AS(classify_and_extract_background(bad, {1.0, 2.0}, 0), std::invalid_argument);
    }

    TEST_CASE("RF0 correction clamps with a warning")
    {
        int warnings = 0;
        ScopedWarningHandler h([&](std::string_view) { ++warnings; });
        CHECK(correct_rf0(100.0, 20.0, 50.0, 100.0) == doctest::Approx(160.0));
        CHECK(correct_rf0(10.0, 20.0, 50.0, 100.0) == 0.0);
        CHECK(warnings == 1);
    }

    TEST_CASE("linear regression")
    {
        const auto r = linear_regression({1, 2, 3, 4}, {3, 5, 7, 9});
        CHECK(r.slope == doctest::Approx(2.0));
        CHECK(r.intercept == doctest::Approx(1.0));
        CHECK_THROWS_AS(linear_regression({1, 1, 1}, {1, 2, 3}), std::domain_error);
    }
}
