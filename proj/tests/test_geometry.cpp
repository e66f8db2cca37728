#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "nanocav/geometry.hpp"

using namespace nanocav;

namespace {

bool has_rule(const Violations& v, const std::string& rule) {
    for (const auto& x : v)
        if (x.rule == rule) return true;
    return false;
}

}  // namespace

TEST_CASE("permittivity follows the region map") {
    DeviceGeometry g;
    Materials m;
    const double mid_r = g.outer_radius - 0.5 * g.wall_width;
    CHECK(permittivity_at(g, m, mid_r, 0.5 * g.gap_thickness) == doctest::Approx(10.89));
    CHECK(permittivity_at(g, m, mid_r, -g.etch_depth - 1.0) == doctest::Approx(5.76));
    CHECK(permittivity_at(g, m, mid_r, g.gap_thickness + 0.1) == doctest::Approx(1.0));
    // pedestal under the ring, etched air beside it
    CHECK(region_at(g, mid_r, -0.3) == Region::Diamond);
    CHECK(region_at(g, g.outer_radius + 0.05, -0.3) == Region::Air);
    CHECK(region_at(g, 0.5 * g.inner_radius(), 0.1) == Region::Air);
    // mirror symmetric in r: there is no azimuth to depend on
    CHECK(permittivity_at(g, m, -mid_r, 0.1) == permittivity_at(g, m, mid_r, 0.1));
}

TEST_CASE("geometry validation") {
    CHECK(validate(DeviceGeometry{}).empty());
    DeviceGeometry wide;
    wide.wall_width = 0.6;
    wide.outer_radius = 0.45;
    CHECK(has_rule(validate(wide), "wall_width <= outer_radius"));
    DeviceGeometry shallow;
    shallow.etch_depth = -0.1;
    CHECK(has_rule(validate(shallow), "etch_depth > 0"));
    CHECK_THROWS_AS(require_valid(validate(shallow), "geometry"), std::invalid_argument);

    Materials inverted;
    inverted.n_gap = 2.0;
    CHECK(has_rule(validate(inverted), "n_gap > n_dia"));

    EmitterSpec nv;
    CHECK(validate(nv).empty());
    nv.dipole = {1.0, 1.0, 0.0};
    nv.zeta_zpl = 1.0;
    CHECK(validate(nv).size() == 2);
}

TEST_CASE("default grid satisfies its own padding rule") {
    for (double R : {0.325, 0.424, 0.45}) {
        DeviceGeometry g;
        g.outer_radius = R;
        for (double dr : {5.0, 10.0, 20.0}) {
            const auto grid = default_grid(g, dr, 680.0);
            CHECK(validate(grid, g, 680.0).empty());
            CHECK(grid.r_min_um < g.inner_radius());
        }
    }
    DeviceGeometry g;
    auto grid = default_grid(g, 10.0, 640.0);
    CHECK_FALSE(validate(grid, g, 800.0).empty());
}

TEST_CASE("evanescent decay") {
    Materials m;
    // hand evaluation: (2 pi / 0.637) sqrt(3.3^2 - 2.4^2) = 9.8637 * 2.2650
    const double kappa = 2.0 * 3.14159265358979 / 0.637 * std::sqrt(10.89 - 5.76);
    CHECK(evanescent_kappa(637.0, m) == doctest::Approx(kappa).epsilon(1e-12));
    CHECK(evanescent_kappa(637.0, m) == doctest::Approx(22.35).epsilon(1e-3));
    CHECK(evanescent_decay(0.0, 637.0, m) == 1.0);
    CHECK(evanescent_decay(20.0, 637.0, m) == doctest::Approx(0.409).epsilon(2e-3));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 200; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(evanescent_decay(a + b, 637.0, m) ==
              doctest::Approx(evanescent_decay(a, 637.0, m) * evanescent_decay(b, 637.0, m))
                  .epsilon(1e-12));
        if (a != b)
            CHECK((evanescent_decay(a, 637.0, m) > evanescent_decay(b, 637.0, m)) == (a < b));
    }
    Materials flat;
    flat.n_gap = 2.4;
    CHECK_THROWS_AS(evanescent_kappa(637.0, flat), std::domain_error);
    CHECK_THROWS_AS(evanescent_decay(-1.0, 637.0, m), std::invalid_argument);
}
