#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "nanocav/fitting.hpp"
#include "nanocav/spectra_sim.hpp"

using namespace nanocav;

namespace {

Spectrum clean_doublet(const DoubletModel& d, double bg = 20.0) {
    SpectrumOptions opt;
    opt.grid = {636.4, 637.6, 0.005};
    opt.background = bg;
    opt.noise = false;
    return synth_doublet_spectrum(d, {}, opt, 0);
}

FitResult tau_fit(double tau, double sigma) {
    FitResult r;
    r.names = {"tau", "amp", "background"};
    r.params = {tau, 1000, 2};
    r.sigmas = {sigma, 10, 1};
    r.converged = true;
    return r;
}

}  // namespace

TEST_CASE("noiseless doublet fit reproduces the generator") {
    DoubletModel d;
    d.amp_minus = 900;
    d.amp_plus = 650;
    const auto r = fit_double_lorentzian(clean_doublet(d));
    CHECK(r.converged);
    CHECK(std::abs(r.param("lambda_minus") - 636.865) < 1e-6);
    CHECK(std::abs(r.param("lambda_plus") - 637.135) < 1e-6);
    CHECK(std::abs(r.param("fwhm") - 0.094) < 1e-6);
    CHECK(r.param("amp_minus") == doctest::Approx(900).epsilon(1e-6));
    CHECK(r.param("amp_plus") == doctest::Approx(650).epsilon(1e-6));
    CHECK(r.param("background") == doctest::Approx(20).epsilon(1e-6));
    CHECK(q_from_linewidth(0.5 * (r.param("lambda_minus") + r.param("lambda_plus")),
                           r.param("fwhm")) == doctest::Approx(637.0 / 0.094).epsilon(1e-6));

    DoubletFitOptions un;
    un.shared_fwhm = false;
    const auto u = fit_double_lorentzian(clean_doublet(d), std::nullopt, un);
    CHECK(std::abs(u.param("fwhm_minus") - 0.094) < 1e-6);
    CHECK(std::abs(u.param("fwhm_plus") - 0.094) < 1e-6);
}

TEST_CASE("refitting from the optimum is idempotent") {
    DoubletModel d;
    SpectrumOptions opt;
    opt.grid = {636.4, 637.6, 0.005};
    opt.background = 20;
    const auto spec = synth_doublet_spectrum(d, {}, opt, 99);
    const auto first = fit_double_lorentzian(spec);
    const auto again = fit_double_lorentzian(spec, first.params);
    CHECK(again.iterations <= 2);
    for (std::size_t k = 0; k < first.params.size(); ++k)
        CHECK(again.params[k] == doctest::Approx(first.params[k]).epsilon(1e-9));

    SUBCASE("cost never increases") {
        for (std::size_t k = 1; k < first.cost_history.size(); ++k)
            CHECK(first.cost_history[k] <= first.cost_history[k - 1]);
        CHECK(first.cost_history.back() == first.cost);
    }
    SUBCASE("covariance is symmetric and positive semi-definite") {
        const auto& c = first.covariance;
        CHECK((c - c.transpose()).norm() <= 1e-12 * c.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
        for (std::size_t k = 0; k < first.sigmas.size(); ++k)
            CHECK(first.sigmas[k] == doctest::Approx(std::sqrt(c(k, k))));
    }
}

TEST_CASE("doublet fit failures") {
    Spectrum flat;
    for (int i = 0; i < 100; ++i) {
        flat.wavelengths.push_back(636.0 + 0.01 * i);
        flat.counts.push_back(50.0);
    }
    CHECK_THROWS_AS(fit_double_lorentzian(flat), PeakDetectionFailed);

    const auto spec = clean_doublet(DoubletModel{});
    DoubletFitOptions opt;
    opt.lm.max_iterations = 1;
    try {
        fit_double_lorentzian(spec, std::vector<double>{636.85, 637.15, 0.12, 800, 800, 10}, opt);
        FAIL("expected NotConverged");
    } catch (const NotConverged& e) {
        CHECK_FALSE(e.best().converged);
        CHECK(e.best().params.size() == 6);
        CHECK(e.best().cost_history.size() >= 1);
    }
}

TEST_CASE("noiseless exponential fit") {
    DecayParams p;
    p.noise = false;
    const auto trace = synth_decay(p, 0);
    const auto r = fit_exponential(trace, 3.0);
    CHECK(r.param("tau") == doctest::Approx(9.7).epsilon(1e-9));
    CHECK(r.param("background") == doctest::Approx(2.0).epsilon(1e-6));
    const auto again = fit_exponential(trace, 3.0);
    CHECK(again.params == r.params);
}

TEST_CASE("exponential fit windows") {
    DecayParams p;
    p.noise = false;
    p.bins = 512;
    const auto trace = synth_decay(p, 0);
    const auto k0 = decay_window_start(trace, 0.0);
    const auto k3 = decay_window_start(trace, 3.0);
    const double w = trace.times[1] - trace.times[0];
    CHECK(trace.times[k0] == doctest::Approx(p.t_peak_ns).epsilon(w / p.t_peak_ns));
    CHECK(static_cast<double>(k3 - k0) * w == doctest::Approx(3.0).epsilon(w / 3.0));
    CHECK_THROWS_AS(fit_exponential(trace, 200.0), WindowTooShort);
    CHECK_THROWS_AS(fit_exponential(DecayTrace{}, 3.0), WindowTooShort);
}

TEST_CASE("lifetime error bars have the measured scale") {
    DecayParams p;
    p.tau_ns = 11.6;
    p.bins = 512;
    const auto r = fit_exponential(synth_decay(p, 17), 3.0);
    CHECK(r.sigma("tau") > 0.03);
    CHECK(r.sigma("tau") < 3.0);
    CHECK(std::abs(r.param("tau") - 11.6) < 5 * r.sigma("tau"));
}

TEST_CASE("linewidth to Q") {
    CHECK(q_from_linewidth(637.0, 0.094) == doctest::Approx(6776.6).epsilon(1e-4));
    CHECK(q_from_linewidth(637.0, 0.212) == doctest::Approx(3000).epsilon(0.002));
    CHECK(q_from_linewidth(637.0, 637.0) == 1.0);
    CHECK_THROWS_AS(q_from_linewidth(637.0, 0.0), std::invalid_argument);
}

TEST_CASE("enhancement from two lifetime fits") {
    const auto nv1 = extract_enhancement(tau_fit(9.7, 0.07), tau_fit(11.6, 0.3), 0.03);
    CHECK(nv1.f_zpl == doctest::Approx(6.53).epsilon(1e-3));
    CHECK(nv1.f_sigma == doctest::Approx(1.0).epsilon(0.1));
    CHECK(nv1.tau_c == doctest::Approx(9.7).epsilon(1e-12));
    const auto nv2 = extract_enhancement(tau_fit(9.84, 0.08), tau_fit(11.0, 0.2), 0.03);
    CHECK(nv2.f_zpl == doctest::Approx(3.93).epsilon(1e-3));
    CHECK(nv2.f_sigma == doctest::Approx(0.8).epsilon(0.15));
    const auto same = extract_enhancement(tau_fit(11.0, 0.2), tau_fit(11.0, 0.2), 0.03);
    CHECK(same.f_zpl == 0.0);
    CHECK(same.f_sigma > 0.0);
    // halving zeta doubles F exactly
    const auto half = extract_enhancement(tau_fit(9.7, 0.07), tau_fit(11.6, 0.3), 0.06);
    CHECK(half.f_zpl * 2 == doctest::Approx(nv1.f_zpl).epsilon(1e-14));
    auto bad = tau_fit(9.7, 0.07);
    bad.converged = false;
    CHECK_THROWS_AS(extract_enhancement(bad, tau_fit(11.6, 0.3), 0.03), FitError);
}
