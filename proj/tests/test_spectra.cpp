#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "nanocav/purcell.hpp"
#include "nanocav/spectra_sim.hpp"

using namespace nanocav;

namespace {

// Full width at half maximum of the peak containing index i, by linear
// interpolation of the half-level crossings.
double measured_fwhm(const std::vector<double>& x, const std::vector<double>& y, std::size_t i,
                     double base) {
    const double level = base + 0.5 * (y[i] - base);
    std::size_t l = i, r = i;
    while (y[l] > level) --l;
    while (y[r] > level) ++r;
    const double xl = x[l] + (level - y[l]) / (y[l + 1] - y[l]) * (x[l + 1] - x[l]);
    const double xr = x[r - 1] + (y[r - 1] - level) / (y[r - 1] - y[r]) * (x[r] - x[r - 1]);
    return xr - xl;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& y) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("standing wave coupling") {
    auto [a, b] = standing_wave_coupling(9, 0.0, 0.0);
    CHECK(a == 2.0);
    CHECK(b == 0.0);
    std::tie(a, b) = standing_wave_coupling(9, std::numbers::pi / 36.0, 0.0);
    CHECK(a == doctest::Approx(1.0));
    CHECK(b == doctest::Approx(1.0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        std::tie(a, b) = standing_wave_coupling(static_cast<int>(rng() % 30), u(rng), u(rng));
        CHECK(std::abs(a + b - 2.0) < 1e-12);
    }
}

TEST_CASE("noiseless doublet has resolved peaks of the model width") {
    DoubletModel d;
    SpectrumOptions opt;
    opt.grid = {636.5, 637.5, 0.0005};
    opt.noise = false;
    const auto x = opt.grid.points();
    const auto y = doublet_model_counts(d, {}, opt);
    const auto peaks = local_maxima(y);
    REQUIRE(peaks.size() == 2);
    CHECK(x[peaks[1]] - x[peaks[0]] == doctest::Approx(0.27).epsilon(0.01));
    // each line on its own has exactly the model width
    DoubletModel single = d;
    single.amp_plus = 0;
    const auto ys = doublet_model_counts(single, {}, opt);
    const auto ps = local_maxima(ys);
    REQUIRE(ps.size() == 1);
    CHECK(measured_fwhm(x, ys, ps[0], 0.0) == doctest::Approx(0.094).epsilon(1e-3));
    // in the doublet the neighbour's tail broadens each line by a few percent
    for (auto p : peaks) CHECK(measured_fwhm(x, y, p, 0.0) == doctest::Approx(0.094).epsilon(0.03));
}

TEST_CASE("zero amplitudes give a flat background") {
    DoubletModel d;
    d.amp_minus = d.amp_plus = 0;
    SpectrumOptions opt;
    opt.background = 17.0;
    opt.resolution_nm = 0.02;
    opt.noise = false;
    for (double c : doublet_model_counts(d, {}, opt)) CHECK(c == doctest::Approx(17.0));
}

TEST_CASE("instrument blur conserves area") {
    DoubletModel d;
    SpectrumOptions opt;
    opt.grid = {632.0, 642.0, 0.01};
    opt.noise = false;
    const auto sharp = doublet_model_counts(d, {}, opt);
    for (double res : {0.01, 0.02, 0.05}) {
        opt.resolution_nm = res;
        const auto blurred = doublet_model_counts(d, {}, opt);
        double a = 0, b = 0;
        for (std::size_t i = 0; i < sharp.size(); ++i) {
            a += sharp[i];
            b += blurred[i];
        }
        CHECK(std::abs(b - a) / a < 1e-3);
    }
}

TEST_CASE("fixed seed is bit-identical; Poisson mean matches the model") {
    DoubletModel d;
    SpectrumOptions opt;
    opt.background = 20;
    const auto a = synth_doublet_spectrum(d, {}, opt, 42);
    const auto b = synth_doublet_spectrum(d, {}, opt, 42);
    CHECK(a.counts == b.counts);
    CHECK(synth_doublet_spectrum(d, {}, opt, 43).counts != a.counts);

    opt.grid = {636.86, 636.88, 0.01};
    opt.noise = false;
    const auto mean = doublet_model_counts(d, {}, opt);
    opt.noise = true;
    const int n = 4000;
    std::vector<double> acc(mean.size(), 0.0);
    for (int s = 0; s < n; ++s) {
        const auto sp = synth_doublet_spectrum(d, {}, opt, static_cast<std::uint64_t>(s));
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sp.counts[i];
    }
    for (std::size_t i = 0; i < acc.size(); ++i)
        CHECK(std::abs(acc[i] / n - mean[i]) < 4.0 * std::sqrt(mean[i] / n));
}

TEST_CASE("decay traces") {
    DecayParams p;
    p.background = 0;
    p.noise = false;
    const auto t = synth_decay(p, 0);
    const double w = t.times[1] - t.times[0];
    // a lag of exactly tau is not a whole number of bins; use the model directly
    for (double s = 5.0; s < 100.0; s += 3.7)
        CHECK(decay_model(p, s + p.tau_ns) / decay_model(p, s) == doctest::Approx(std::exp(-1.0)));
    const int k = 50;
    CHECK(t.counts[200 + k] / t.counts[200] == doctest::Approx(std::exp(-k * w / p.tau_ns)));

    const double ped = std::exp(-210.5 / 9.7) / (1.0 - std::exp(-210.5 / 9.7));
    CHECK(wrap_pedestal(9.7, 210.5) == doctest::Approx(ped).epsilon(1e-12));
    CHECK(wrap_pedestal(9.7, 210.5) == doctest::Approx(3.7e-10).epsilon(0.03));
    // just before the next pulse only the wrapped tail is left
    CHECK(decay_model(p, p.t_peak_ns - 1e-9) / p.amp ==
          doctest::Approx(ped / std::exp(-210.5 / 9.7) * std::exp(-(210.5 - 1e-9) / 9.7)));

    DecayParams fig = p;
    fig.fast_amp = 400;
    auto slope = [&](double a, double b) {
        return (std::log(decay_model(fig, fig.t_peak_ns + b)) -
                std::log(decay_model(fig, fig.t_peak_ns + a))) / (b - a);
    };
    CHECK(slope(0.0, 3.0) < slope(3.0, 20.0));

    DecayParams noisy;
    CHECK(synth_decay(noisy, 9).counts == synth_decay(noisy, 9).counts);
    noisy.tau_ns = -1;
    CHECK_THROWS_AS(synth_decay(noisy, 9), std::invalid_argument);
}

TEST_CASE("tuning crossings match a brute-force scan") {
    TuningConfig cfg;
    cfg.zpl_lines = {ZplLine{637.0, 100, 3.15, 2, 0}, ZplLine{637.25, 60, 1.9, 1.5, 0.5}};
    DoubletModel d;
    SpectrumOptions opt;
    opt.grid = {635.5, 639.0, 0.01};
    const auto map = tuning_map(cfg, d, opt, 7, false, 3);
    REQUIRE(map.rows.size() == 30);

    std::vector<CrossingEvent> oracle;
    for (Branch b : {Branch::Minus, Branch::Plus}) {
        for (std::size_t z = 0; z < cfg.zpl_lines.size(); ++z) {
            int first = -1;
            for (int k = 0; k <= cfg.cycles; ++k) {
                const double l0 = 636.0 + 0.05 * k;
                const double lam = b == Branch::Minus ? l0 - 0.135 : l0 + 0.135;
                const bool in = k < cfg.cycles && std::abs(lam - cfg.zpl_lines[z].lambda_nm) < 0.047;
                if (in && first < 0) first = k;
                if (!in && first >= 0) {
                    CrossingEvent e;
                    e.branch = b;
                    e.zpl_nm = cfg.zpl_lines[z].lambda_nm;
                    e.first_cycle = first;
                    e.last_cycle = k - 1;
                    oracle.push_back(e);
                    first = -1;
                }
            }
        }
    }
    REQUIRE(map.events.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(map.events[i].branch == oracle[i].branch);
        CHECK(map.events[i].zpl_nm == oracle[i].zpl_nm);
        CHECK(map.events[i].first_cycle == oracle[i].first_cycle);
        CHECK(map.events[i].last_cycle == oracle[i].last_cycle);
    }
    // lambda- meets 637.0 first, then 637.25
    std::vector<double> minus;
    for (const auto& e : map.events)
        if (e.branch == Branch::Minus) minus.push_back(e.zpl_nm);
    CHECK(minus == std::vector<double>{637.0, 637.25});

    CHECK(tuning_map(cfg, d, opt, 7, false, 1).rows == map.rows);
}

TEST_CASE("no tuning shift means no crossings") {
    TuningConfig cfg;
    cfg.shift_te = 0;
    cfg.zpl_lines = {ZplLine{637.0, 100, 3.15, 2, 0}};
    SpectrumOptions opt;
    opt.noise = false;
    const auto map = tuning_map(cfg, DoubletModel{}, opt, 1);
    CHECK(map.events.empty());
    for (const auto& row : map.rows) CHECK(row == map.rows.front());
}

TEST_CASE("ZPL enhancement is monotone in detuning") {
    ZplLine z{637.0, 100, 3.15, 2, 0};
    double prev = 1e300;
    for (double det = 0; det < 0.5; det += 0.01) {
        const double v = zpl_peak(z, 637.0 + det, 640.0, 0.094);
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(zpl_peak(z, 637.0, 640.0, 0.094) / 100 ==
          doctest::Approx(1 + 2 * 3.15 + 0 * detuned_factor(3.15, 637, 640, 0.094)));
}
