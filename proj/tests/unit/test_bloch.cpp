#include "nvcav/bloch.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace nvcav;

namespace
{

// Oracle: Bloch equations with constant drive as an affine linear system,
// solved with an augmented matrix exponential. Rates in rad/ns.
double rho_ee_expm(double omega, double delta, double gamma, double t)
{
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    a(0, 0) = -gamma / 2;
    a(0, 1) = -delta;
    a(1, 0) = delta;
    a(1, 1) = -gamma / 2;
    a(1, 2) = -omega;
    a(2, 1) = omega;
    a(2, 2) = -gamma;
    a(2, 3) = -gamma;
    const Eigen::Matrix4d e = (a * t).exp();
    const Eigen::Vector4d y = e * Eigen::Vector4d(0, 0, -1, 1);
    return 0.5 * (1.0 + y(2));
}

} // namespace

TEST_SUITE("bloch")
{
    TEST_CASE("drive envelope")
    {
        const DriveEnvelope env;
        CHECK(envelope(-50.0, env) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(envelope(500.0, env) == doctest::Approx(1.0).epsilon(1e-12));
        double last = 0.0;
        for (double t = -20.0; t <= 60.0; t += 0.25)
        {
            const double e = envelope(t, env);
            CHECK(e >= last - 1e-15);
            CHECK(e <= 1.0);
            last = e;
        }
        CHECK(rabi_frequency(500.0, env) == doctest::Approx(env.amplitude));
        CHECK(rabi_frequency(5.0, env) == doctest::Approx(env.amplitude * std::sqrt(envelope(5.0, env))));
        CHECK(rise_time_10_90(env) == doctest::Approx(9.5).epsilon(0.01));
        DriveEnvelope pure;
        pure.slow_fraction = 0.0;
        // erf edge: 10-90% of a Gaussian CDF spans 2 * 1.2816 sigma
        CHECK(rise_time_10_90(pure) == doctest::Approx(2 * 1.2815516 * pure.t_fast_ns / 2).epsilon(1e-4));
    }

    TEST_CASE("constant drive matches the matrix-exponential oracle")
    {
        std::vector<double> t;
        for (double x = 0.0; x <= 40.0; x += 0.5)
            t.push_back(x);
        for (double delta_mhz : {0.0, 60.0})
        {
            const double omega = 2 * M_PI * 51.1, delta = 2 * M_PI * delta_mhz, gamma = 2 * M_PI * 23.07;
            const auto r = obe_solve_constant(omega, delta, gamma, t);
            for (std::size_t i = 0; i < t.size(); ++i)
                CHECK(r[i] == doctest::Approx(rho_ee_expm(omega * 1e-3, delta * 1e-3, gamma * 1e-3, t[i]))
                                  .epsilon(1e-6)
                                  .scale(1.0));
        }
        const double omega = 2 * M_PI * 51.1, gamma = 2 * M_PI * 23.07;
        for (double x : {0.0, 3.3, 12.0})
            CHECK(damped_rabi_rho_ee(omega, gamma, x) ==
                  doctest::Approx(rho_ee_expm(omega * 1e-3, 0.0, gamma * 1e-3, x)).epsilon(1e-9).scale(1.0));
    }

    TEST_CASE("Bloch vector stays inside the sphere")
    {
        std::vector<double> t;
        for (double x = 0.0; x <= 60.0; x += 0.5)
            t.push_back(x);
        const auto s = obe_trajectory(DriveEnvelope{}, 2 * M_PI * 30.0, 2 * M_PI * 23.07, t);
        for (const auto &b : s)
            CHECK(b.u * b.u + b.v * b.v + b.w * b.w <= 1.0 + 1e-9);
    }

    TEST_CASE("charge-noise averaging")
    {
        const TraceSolver solver = [](double det) { return std::vector<double>{det, det * det}; };
        const auto same = charge_noise_average(solver, 3.0, 0.0);
        CHECK(same[0] == 3.0);
        CHECK(same[1] == 9.0);
        const auto avg = charge_noise_average(solver, 0.0, 10.0);
        CHECK(std::abs(avg[0]) < 1e-9);
        const auto n48 = charge_noise_average([](double d) { return std::vector<double>{1.0 / (1 + d * d)}; }, 0.0, 1.0);
        const auto n96 =
            charge_noise_average([](double d) { return std::vector<double>{1.0 / (1 + d * d)}; }, 0.0, 1.0, 96);
        CHECK(std::abs(n48[0] - n96[0]) / n96[0] < 1e-3);
        // Lorentzian of FWHM 1 averaged against a Lorentzian of FWHM 2 -> peak of width 3
        CHECK(n96[0] == doctest::Approx(2.0 / 3.0).epsilon(0.04));
    }

    TEST_CASE("signal composition")
    {
        const DriveEnvelope env;
        std::vector<double> t{0.0, 10.0, 100.0};
        std::vector<double> ex{0.1, 0.2, 0.3};
        CompositionModel c;
        c.ex_scale = 2.0;
        c.laser_background = 0.5;
        const auto s = compose_signal(t, ex, c, env);
        CHECK(s[2] == doctest::Approx(2.0 * 0.3 + 0.5));
        CHECK(non_ex_share(t, ex, CompositionModel{}, env, 0.0, 100.0) == doctest::Approx(0.0));
    }

    TEST_CASE("modulation metric")
    {
        CHECK(oscillation_modulation({0.0, 0.5, 1.0, 0.6, 0.7, 0.65}) == doctest::Approx(0.4));
        CHECK(oscillation_modulation({0.0, 0.2, 0.4, 0.5}) == 0.0);
    }
}
