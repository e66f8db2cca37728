#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "nanocav/purcell.hpp"

using namespace nanocav;

TEST_CASE("purcell factor") {
    // 3 / (4 pi^2) = 0.0759909...
    const double pref = 0.075990887;
    CHECK(purcell_factor(3000, 3.0, 3.3, 2.4, 0.11) ==
          doctest::Approx(pref * (3.3 / 2.4) * 1000 * 0.11).epsilon(1e-7));
    CHECK(purcell_factor(3000, 3.0, 3.3, 2.4, 0.11) == doctest::Approx(11.5).epsilon(0.01));
    CHECK(purcell_factor(3000, 3.0, 3.3, 2.4, 0.0) == 0.0);

    // field ratio that gives 6.3 at q = 3000, then q = 20000
    const double ratio = 6.3 / purcell_factor(3000, 3.0, 3.3, 2.4, 1.0);
    CHECK(purcell_factor(20000, 3.0, 3.3, 2.4, ratio) == doctest::Approx(42.0));

    CHECK_THROWS_AS(purcell_factor(-1, 3.0, 3.3, 2.4, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(purcell_factor(3000, 0.0, 3.3, 2.4, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(purcell_factor(3000, 3.0, 3.3, 2.4, 1.5), std::invalid_argument);
}

TEST_CASE("purcell factor is linear in q and ratio, inverse in v") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double q = 1e4 * u(rng), v = 5 * u(rng), r = u(rng), k = 1 + u(rng);
        const double f = purcell_factor(q, v, 3.3, 2.4, r);
        CHECK(purcell_factor(k * q, v, 3.3, 2.4, r) == doctest::Approx(k * f).epsilon(1e-12));
        CHECK(purcell_factor(q, v, 3.3, 2.4, r / k) == doctest::Approx(f / k).epsilon(1e-12));
        CHECK(purcell_factor(q, k * v, 3.3, 2.4, r) == doctest::Approx(f / k).epsilon(1e-12));
    }
}

TEST_CASE("enhanced rate") {
    CHECK(enhanced_rate(1 / 11.6, 0.0, 0.03) == 1 / 11.6);
    CHECK(1.0 / enhanced_rate(1 / 11.6, 6.3, 0.03) == doctest::Approx(9.76).epsilon(5e-4));
    CHECK(1.0 / enhanced_rate(1 / 11.0, 3.8, 0.03) == doctest::Approx(9.87).epsilon(5e-4));
    for (double f = 0; f < 50; f += 0.5) CHECK(enhanced_rate(0.1, f, 0.03) >= 0.1);
}

TEST_CASE("branching fraction") {
    CHECK(branching_fraction(6.3, 0.03) == doctest::Approx(0.159).epsilon(3e-3));
    CHECK(branching_fraction(42, 0.03) == doctest::Approx(0.558).epsilon(2e-3));
    CHECK(branching_fraction(0.0, 0.03) == 0.03);
    double prev = 0;
    for (double f = 0; f < 200; f += 0.25) {
        const double z = branching_fraction(f, 0.03);
        CHECK(z >= prev);
        CHECK(z >= 0.03);
        CHECK(z < 1.0);
        prev = z;
    }
}

TEST_CASE("lifetime inversion") {
    const auto nv1 = infer_f_from_lifetimes({9.7, 0.07}, {11.6, 0.3}, 0.03);
    CHECK(nv1.value == doctest::Approx((11.6 / 9.7 - 1) / 0.03).epsilon(1e-12));
    CHECK(nv1.value == doctest::Approx(6.53).epsilon(1e-3));
    CHECK(nv1.sigma == doctest::Approx(1.0).epsilon(0.1));
    const auto nv2 = infer_f_from_lifetimes({9.84, 0.08}, {11.0, 0.2}, 0.03);
    CHECK(nv2.value == doctest::Approx(3.93).epsilon(1e-3));
    CHECK(nv2.sigma == doctest::Approx(0.8).epsilon(0.15));
    CHECK(infer_f_from_lifetimes({11.6, 0.1}, {11.6, 0.1}, 0.03).value == 0.0);
    CHECK_THROWS_AS(infer_f_from_lifetimes({12.0, 0.1}, {11.6, 0.1}, 0.03), std::domain_error);
}

TEST_CASE("rates and lifetime inversion round-trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uf(0.0, 60.0), uz(0.01, 0.2), ut(5.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
        const double f = uf(rng), z = uz(rng), tau_o = ut(rng);
        const double tau_c = 1.0 / enhanced_rate(1.0 / tau_o, f, z);
        CHECK(tau_c <= tau_o);
        CHECK(infer_f_from_lifetimes({tau_c, 0}, {tau_o, 0}, z).value ==
              doctest::Approx(f).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("detuned factor") {
    CHECK(detuned_factor(6.3, 637.0, 637.0, 0.094) == 6.3);
    CHECK(detuned_factor(6.3, 637.047, 637.0, 0.094) == doctest::Approx(3.15));
    CHECK(detuned_factor(6.3, 637.27, 637.0, 0.094) == doctest::Approx(0.19).epsilon(0.02));
}

TEST_CASE("purcell result") {
    EmitterSpec nv;
    const auto r = purcell_result(nv, {6.3, 1.0});
    CHECK(r.f_zpl == 6.3);
    CHECK(r.tau_c == doctest::Approx(11.6 / 1.189));
    CHECK(r.gamma_c >= 1.0 / nv.tau_bulk_ns);
    CHECK(r.zeta_c == doctest::Approx(branching_fraction(6.3, 0.03)));
}
