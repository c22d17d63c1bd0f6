#include "nvcav/errors.hpp"
#include "nvcav/rate_matrix.hpp"
#include "nvcav/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace nvcav;

TEST_SUITE("rate_matrix")
{
    TEST_CASE("columns of a built generator sum to zero")
    {
        RateMatrix m({"a", "b", "c"});
        m.add_rate("a", "b", 2.0);
        m.add_rate("b", "c", 3.0);
        m.add_rate("c", "a", 0.5);
        const auto col = m.generator().colwise().sum();
        for (Eigen::Index j = 0; j < col.size(); ++j)
            CHECK(col(j) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(m.rate(0, 1) == 2.0);
        CHECK_NOTHROW(m.validate());
    }

    TEST_CASE("negative rate and broken column sums are rejected")
    {
        RateMatrix m(std::vector<std::string>{"a", "b"});
        CHECK_THROWS(m.add_rate(0, 1, -1.0));
        Eigen::MatrixXd bad(2, 2);
        bad << -1.0, 0.0, 0.5, 0.0;
        CHECK_THROWS_AS(RateMatrix(bad).validate(), ValidationError);
        CHECK_THROWS(m.index("zz"));
    }

    TEST_CASE("dt = 0 leaves the population unchanged")
    {
        RateMatrix m(std::vector<std::string>{"a", "b"});
        m.add_rate(0, 1, 4.0);
        Eigen::VectorXd p(2);
        p << 0.3, 0.7;
        const auto q = propagate(m, p, 0.0);
        CHECK(q(0) == doctest::Approx(0.3));
        CHECK(q(1) == doctest::Approx(0.7));
    }

    TEST_CASE("two-state decay follows exp(-k t)")
    {
        const double k = 101.2;
        RateMatrix m(std::vector<std::string>{"e", "g"});
        m.add_rate("e", "g", k);
        Eigen::VectorXd p(2);
        p << 1.0, 0.0;
        for (double t : {0.001, 0.01, 0.03})
            CHECK(propagate(m, p, t)(0) == doctest::Approx(std::exp(-k * t)).epsilon(1e-10));
    }

    TEST_CASE("steady state of a two-state exchange")
    {
        RateMatrix m(std::vector<std::string>{"a", "b"});
        m.add_rate(0, 1, 3.0);
        m.add_rate(1, 0, 1.0);
        const auto p = m.steady_state();
        CHECK(p(0) == doctest::Approx(0.25));
        CHECK(p(1) == doctest::Approx(0.75));
    }

    TEST_CASE("disconnected model has no unique steady state")
    {
        RateMatrix m({"a", "b", "c"});
        m.add_rate(0, 1, 1.0);
        CHECK_THROWS_AS(m.steady_state(), ValidationError);
    }

    TEST_CASE("composition: propagate dt1 then dt2 equals dt1 + dt2")
    {
        Xoshiro256 rng(5);
        RateMatrix m({"a", "b", "c", "d"});
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                if (i != j)
                    m.add_rate(i, j, 10.0 * rng.uniform());
        Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 0.25);
        const auto a = propagate(m, propagate(m, p, 0.013), 0.071);
        const auto b = propagate(m, p, 0.084);
        CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-9);
    }

    TEST_CASE("random generators conserve and keep populations non-negative")
    {
        Xoshiro256 rng(11);
        for (int trial = 0; trial < 2000; ++trial)
        {
            const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 6);
            RateMatrix m(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (i != j && rng.uniform() < 0.6)
                        m.add_rate(i, j, std::pow(10.0, 4.0 * rng.uniform() - 2.0));
            Eigen::VectorXd p(static_cast<Eigen::Index>(n));
            for (Eigen::Index i = 0; i < p.size(); ++i)
                p(i) = rng.uniform();
            p /= p.sum();
            const auto q = propagate(m, p, std::pow(10.0, 3.0 * rng.uniform() - 2.0));
            REQUIRE(std::abs(q.sum() - 1.0) < 1e-9);
            REQUIRE(q.minCoeff() >= 0.0);
        }
    }

    TEST_CASE("check_population rejects bad vectors")
    {
        Eigen::VectorXd p(2);
        p << 0.6, 0.6;
        CHECK_THROWS_AS(check_population(p), ValidationError);
        p << -0.1, 1.1;
        CHECK_THROWS_AS(check_population(p), ValidationError);
    }
}
