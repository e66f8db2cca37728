#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "nanocav/harminv.hpp"

using namespace nanocav;
using cplx = std::complex<double>;

namespace {

struct Tone {
    double f, q, amp, phase;
};

std::vector<double> ringdown(const std::vector<Tone>& tones, double dt, int n) {
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (const auto& t : tones) {
        const double g = std::numbers::pi * t.f / t.q;
        for (int k = 0; k < n; ++k) {
            const double s = k * dt;
            x[static_cast<std::size_t>(k)] +=
                t.amp * std::exp(-g * s) * std::cos(2 * std::numbers::pi * t.f * s + t.phase);
        }
    }
    return x;
}

const HarmonicMode* nearest(const std::vector<HarmonicMode>& modes, double f) {
    const HarmonicMode* best = nullptr;
    for (const auto& m : modes)
        if (!best || std::abs(m.freq - f) < std::abs(best->freq - f)) best = &m;
    return best;
}

}  // namespace

TEST_CASE("matrix pencil is exact on noiseless complex exponentials") {
    const double dt = 0.1;
    std::vector<cplx> x(200);
    const cplx a1(1.0, 0.5), a2(0.0, -0.3);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = k * dt;
        x[k] = a1 * std::exp(cplx(-0.01, 2 * std::numbers::pi * 0.7) * t) +
               a2 * std::exp(cplx(-0.05, -2 * std::numbers::pi * 1.3) * t);
    }
    const auto modes = matrix_pencil(x, dt);
    REQUIRE(modes.size() == 2);
    const auto* m1 = nearest(modes, 0.7);
    const auto* m2 = nearest(modes, -1.3);
    CHECK(m1->freq == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(m1->decay == doctest::Approx(0.01).epsilon(1e-8));
    CHECK(std::abs(m1->amplitude - a1) < 1e-9);
    CHECK(m2->freq == doctest::Approx(-1.3).epsilon(1e-10));
    CHECK(m2->decay == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(std::abs(m2->amplitude - a2) < 1e-9);
}

TEST_CASE("harmonic inversion recovers two close ringing modes") {
    const double dt = 0.02;
    const std::vector<Tone> tones{{1.55, 2e4, 1.0, 0.3}, {1.60, 800.0, 0.4, -1.1},
                                  {3.0, 50.0, 5.0, 0.0}};  // last one is out of band
    const auto x = ringdown(tones, dt, 60000);
    const auto modes = harmonic_inversion(x, dt, 1.5, 1.65);
    REQUIRE(modes.size() >= 2);
    for (int k = 0; k < 2; ++k) {
        const auto* m = nearest(modes, tones[k].f);
        CHECK(m->freq == doctest::Approx(tones[k].f).epsilon(1e-7));
        CHECK(m->q == doctest::Approx(tones[k].q).epsilon(1e-3));
        CHECK(std::abs(m->amplitude) == doctest::Approx(tones[k].amp).epsilon(1e-3));
        CHECK(std::arg(m->amplitude) == doctest::Approx(tones[k].phase).epsilon(1e-3));
    }
    for (const auto& m : modes) {
        CHECK(m.freq >= 1.5);
        CHECK(m.freq <= 1.65);
    }
}

TEST_CASE("harmonic inversion tolerates noise") {
    const double dt = 0.02;
    auto x = ringdown({{1.58, 5000.0, 1.0, 0.0}}, dt, 40000);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1e-3);
    for (double& v : x) v += n(rng);
    const auto modes = harmonic_inversion(x, dt, 1.5, 1.65);
    REQUIRE(!modes.empty());
    const auto* m = nearest(modes, 1.58);
    CHECK(m->freq == doctest::Approx(1.58).epsilon(1e-6));
    CHECK(m->q == doctest::Approx(5000).epsilon(0.02));
}

TEST_CASE("a non-decaying tone has infinite Q") {
    std::vector<cplx> x(100);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = std::exp(cplx(0, 2 * std::numbers::pi * 0.2 * static_cast<double>(k)));
    const auto modes = matrix_pencil(x, 1.0);
    REQUIRE(modes.size() == 1);
    CHECK(modes[0].q > 1e9);
}
