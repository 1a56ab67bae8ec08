#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ct3s/window.hpp"

using namespace ct3s;

TEST_CASE("gauss pointwise values") {
    CHECK(gauss(0.0) == Catch::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-12));
    CHECK(gauss(1.0) == gauss(-1.0));
    CHECK(gauss(6.0) < 1e-8);
}

TEST_CASE("pft_closed matches the stated special values") {
    CHECK(std::abs(pft_closed(0.0, 0.0) - cplx(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(pft_closed(1.0 / (2.0 * kPi), 0.0)) ==
          Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(std::abs(pft_closed(0.0, std::sqrt(3.0) / (2.0 * kPi))) ==
          Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("pft modulus equals the envelope f and obeys the decay chain") {
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double e = u(rng), l = u(rng);
        CHECK(std::abs(std::abs(pft_closed(e, l)) - pft_envelope(e, l)) < 1e-12);
        if (e != 0.0) {
            const double cap = std::min(std::pow(kTwoPiSq * e * e, -0.25),
                                        std::pow(1.0 + 4.0 * kPi * kPi * l * l, -0.25));
            CHECK(std::abs(pft_closed(e, l)) <= cap + 1e-12);
        }
    }
}

TEST_CASE("pft_numeric agrees with the closed form") {
    WindowSpec w;
    CHECK(std::abs(pft_numeric(w, 0.3, 0.7) - pft_closed(0.3, 0.7)) < 1e-6);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double e = u(rng), l = u(rng);
        CHECK(std::abs(pft_numeric(w, e, l) - pft_closed(e, l)) < 1e-6);
    }
}

TEST_CASE("pft_numeric unit mass") {
    // default radius-6 truncation leaves ~2e-9 tail mass
    WindowSpec w;
    CHECK(std::abs(pft_numeric(w, 0.0, 0.0) - cplx(1.0, 0.0)) < 2.5e-9);
    // a radius-8 window recovers the stated 1e-9 agreement
    WindowSpec wide;
    wide.truncation_radius = 8.0;
    CHECK(std::abs(pft_numeric(wide, 0.0, 0.0) - cplx(1.0, 0.0)) < 1e-9);
}

TEST_CASE("moments match the Gaussian closed forms") {
    CHECK(moment(1) == Catch::Approx(std::sqrt(2.0 / kPi)).margin(1e-9));
    CHECK(moment(2) == Catch::Approx(1.0).margin(1e-9));
    CHECK(moment(3) == Catch::Approx(2.0 * std::sqrt(2.0 / kPi)).margin(1e-9));
    CHECK_THROWS_AS(moment(0), std::invalid_argument);
}

TEST_CASE("beta and gamma envelopes with inverses") {
    CHECK(beta(0.0) == 1.0);
    CHECK(gamma_env(0.0) == 1.0);
    CHECK(gamma_env(std::sqrt(3.0) / (2.0 * kPi)) ==
          Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(beta(1.0 / (2.0 * kPi)) == Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(beta(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(gamma_env(-1.0), std::invalid_argument);

    CHECK(beta_inv(1.0) == 0.0);
    CHECK(beta_inv(std::exp(-0.5)) == Catch::Approx(1.0 / (2.0 * kPi)).epsilon(1e-12));
    CHECK(gamma_inv(1.0 / std::sqrt(2.0)) ==
          Catch::Approx(std::sqrt(3.0) / (2.0 * kPi)).epsilon(1e-12));
    CHECK_THROWS_AS(beta_inv(0.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_inv(1.5), std::invalid_argument);

    // strict decrease (beta underflows to 0 past x ~ 6.1) and inverse identity
    double prev_b = 2.0, prev_g = 2.0;
    for (int i = 0; i <= 100; ++i) {
        const double x = 0.1 * i;
        if (prev_b > 0.0)
            CHECK(beta(x) < prev_b);
        else
            CHECK(beta(x) == 0.0);
        CHECK(gamma_env(x) < prev_g);
        prev_b = beta(x);
        prev_g = gamma_env(x);
    }
    for (int i = 0; i <= 20; ++i) {
        const double x = 0.1 * i;
        CHECK(beta_inv(beta(x)) == Catch::Approx(x).margin(1e-12));
        CHECK(gamma_inv(gamma_env(x)) == Catch::Approx(x).margin(1e-12));
    }
}

TEST_CASE("admissibility of the Gaussian window") {
    WindowSpec w;
    SECTION("b at the certified endpoint 1 - e^{-1/4}") {
        const auto rep = check_admissibility(w, admissibility_b0(), 5.0, 5.0, 0.05);
        CHECK(rep.pass());
    }
    SECTION("b = 0 degenerate level") {
        const auto rep = check_admissibility(w, 0.0, 2.0, 2.0, 0.05);
        CHECK(rep.pass());
    }
    SECTION("decay constant inequality at (1, 0)") {
        const double lhs = std::abs(pft_closed(1.0, 0.0));
        CHECK(lhs <= std::pow(2.0, 0.25) / std::sqrt(kPi));
        CHECK(lhs == Catch::Approx(std::exp(-kTwoPiSq)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(check_admissibility(w, 0.5, 1.0, 1.0, 0.1), std::invalid_argument);
}
