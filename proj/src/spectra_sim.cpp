#include "nanocav/spectra_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "nanocav/parallel.hpp"
#include "nanocav/purcell.hpp"
#include "nanocav/seed.hpp"

namespace nanocav {

std::vector<double> WavelengthGrid::points() const {
    if (!(step_nm > 0) || !(hi_nm > lo_nm)) throw std::invalid_argument("bad wavelength grid");
    const auto n = static_cast<std::size_t>(std::floor((hi_nm - lo_nm) / step_nm + 1e-9)) + 1;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo_nm + static_cast<double>(i) * step_nm;
    return x;
}

void validate(const DoubletModel& d) {
    if (!(d.fwhm_nm > 0)) throw std::invalid_argument("doublet fwhm must be positive");
    if (!(d.split_nm >= 0)) throw std::invalid_argument("doublet split must be non-negative");
    if (!(d.amp_minus >= 0) || !(d.amp_plus >= 0))
        throw std::invalid_argument("doublet amplitudes must be non-negative");
}

void validate(const Spectrum& s) {
    if (s.wavelengths.size() != s.counts.size())
        throw std::invalid_argument("spectrum wavelengths and counts differ in length");
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
        if (i > 0 && !(s.wavelengths[i] > s.wavelengths[i - 1]))
            throw std::invalid_argument("spectrum wavelengths not strictly increasing at index " +
                                        std::to_string(i));
        if (!(s.counts[i] >= 0))
            throw std::invalid_argument("negative counts at index " + std::to_string(i));
    }
}

void validate(const DecayTrace& t) {
    if (t.times.size() != t.counts.size())
        throw std::invalid_argument("trace times and counts differ in length");
    if (t.times.size() >= 2) {
        const double w = t.times[1] - t.times[0];
        if (!(w > 0)) throw std::invalid_argument("trace bins must increase");
        for (std::size_t i = 1; i < t.times.size(); ++i)
            if (std::abs(t.times[i] - t.times[i - 1] - w) > 1e-6 * w)
                throw std::invalid_argument("trace bins not uniform at index " + std::to_string(i));
    }
    for (double c : t.counts)
        if (!(c >= 0)) throw std::invalid_argument("negative counts in trace");
}

double lorentzian(double x, double center, double fwhm, double amp) {
    const double u = 2.0 * (x - center) / fwhm;
    return amp / (1.0 + u * u);
}

std::pair<double, double> standing_wave_coupling(int m, double phi_nv, double phase0) {
    const double a = m * phi_nv + phase0;
    const double c = std::cos(a), s = std::sin(a);
    return {2.0 * c * c, 2.0 * s * s};
}

double zpl_peak(const ZplLine& z, double lambda_minus, double lambda_plus, double fwhm_nm) {
    const double f = z.w_minus * detuned_factor(z.f0, z.lambda_nm, lambda_minus, fwhm_nm) +
                     z.w_plus * detuned_factor(z.f0, z.lambda_nm, lambda_plus, fwhm_nm);
    return z.brightness * (1.0 + f);
}

namespace {

std::vector<double> gaussian_blur(const std::vector<double>& x, const std::vector<double>& y,
                                  double fwhm) {
    if (!(fwhm > 0) || x.size() < 2) return y;
    const double step = x[1] - x[0];
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const int half = static_cast<int>(std::ceil(5.0 * sigma / step));
    std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
    for (int i = -half; i <= half; ++i) {
        const double u = i * step / sigma;
        k[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * u * u);
    }
    const int n = static_cast<int>(y.size());
    std::vector<double> out(y.size());
    for (int i = 0; i < n; ++i) {
        double acc = 0, norm = 0;
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            const double w = k[static_cast<std::size_t>(j - i + half)];
            acc += w * y[static_cast<std::size_t>(j)];
            norm += w;
        }
        out[static_cast<std::size_t>(i)] = acc / norm;
    }
    return out;
}

}  // namespace

std::vector<double> doublet_model_counts(const DoubletModel& model,
                                         const std::vector<ZplLine>& zpl,
                                         const SpectrumOptions& opt) {
    validate(model);
    if (!(opt.resolution_nm >= 0)) throw std::invalid_argument("resolution must be non-negative");
    if (!(opt.background >= 0)) throw std::invalid_argument("background must be non-negative");
    const auto x = opt.grid.points();
    const double lm = model.lambda_minus(), lp = model.lambda_plus();
    std::vector<double> peaks;
    for (const auto& z : zpl) peaks.push_back(zpl_peak(z, lm, lp, model.fwhm_nm));
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = opt.background + lorentzian(x[i], lm, model.fwhm_nm, model.amp_minus) +
                   lorentzian(x[i], lp, model.fwhm_nm, model.amp_plus);
        for (std::size_t k = 0; k < zpl.size(); ++k)
            v += lorentzian(x[i], zpl[k].lambda_nm, zpl[k].fwhm_nm, peaks[k]);
        y[i] = v;
    }
    return gaussian_blur(x, y, opt.resolution_nm);
}

Spectrum synth_doublet_spectrum(const DoubletModel& model, const std::vector<ZplLine>& zpl,
                                const SpectrumOptions& opt, std::uint64_t seed) {
    Spectrum s;
    s.wavelengths = opt.grid.points();
    s.counts = doublet_model_counts(model, zpl, opt);
    s.resolution_nm = opt.resolution_nm;
    if (opt.noise) {
        std::mt19937_64 rng(seed);
        for (double& c : s.counts) {
            std::poisson_distribution<long> pd(c);
            c = c > 0 ? static_cast<double>(pd(rng)) : 0.0;
        }
    }
    return s;
}

double wrap_pedestal(double tau_ns, double rep_period_ns) {
    const double q = std::exp(-rep_period_ns / tau_ns);
    return q / (1.0 - q);
}

double decay_model(const DecayParams& p, double t_ns) {
    double dt = t_ns - p.t_peak_ns;
    if (dt < 0) dt += p.rep_period_ns;
    // sum over all earlier pulses of the train
    auto train = [&](double amp, double tau) {
        if (amp == 0) return 0.0;
        return amp * std::exp(-dt / tau) / (1.0 - std::exp(-p.rep_period_ns / tau));
    };
    return train(p.amp, p.tau_ns) + train(p.fast_amp, p.fast_tau_ns) + p.background;
}

DecayTrace synth_decay(const DecayParams& p, std::uint64_t seed) {
    if (!(p.tau_ns > 0) || !(p.fast_tau_ns > 0))
        throw std::invalid_argument("decay constants must be positive");
    if (!(p.rep_period_ns > 0) || p.bins < 2) throw std::invalid_argument("bad decay binning");
    if (!(p.amp >= 0) || !(p.fast_amp >= 0) || !(p.background >= 0))
        throw std::invalid_argument("decay amplitudes must be non-negative");
    DecayTrace t;
    t.rep_period_ns = p.rep_period_ns;
    const double w = p.rep_period_ns / p.bins;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < p.bins; ++i) {
        const double ti = i * w;
        double c = decay_model(p, ti);
        if (p.noise) {
            std::poisson_distribution<long> pd(c);
            c = c > 0 ? static_cast<double>(pd(rng)) : 0.0;
        }
        t.times.push_back(ti);
        t.counts.push_back(c);
    }
    return t;
}

const char* to_string(Branch b) { return b == Branch::Minus ? "minus" : "plus"; }

TuningMap tuning_map(const TuningConfig& cfg, const DoubletModel& doublet,
                     const SpectrumOptions& opt, std::uint64_t seed, bool tm, int threads) {
    if (cfg.cycles < 1) throw std::invalid_argument("cycles must be >= 1");
    if (!(cfg.shift_te >= 0) || !(cfg.shift_tm >= 0))
        throw std::invalid_argument("tuning shifts must be non-negative");
    validate(doublet);
    const double shift = tm ? cfg.shift_tm : cfg.shift_te;
    const auto n = static_cast<std::size_t>(cfg.cycles);

    TuningMap map;
    map.wavelengths = opt.grid.points();
    map.rows.resize(n);
    map.lambda_minus.resize(n);
    map.lambda_plus.resize(n);
    map.zpl_centres.resize(n);
    map.zpl_enhancement.resize(n);

    parallel_for(n, threads, [&](std::size_t k) {
        DoubletModel d = doublet;
        d.lambda0_nm = cfg.start_lambda0 + static_cast<double>(k) * shift;
        map.lambda_minus[k] = d.lambda_minus();
        map.lambda_plus[k] = d.lambda_plus();
        for (const auto& z : cfg.zpl_lines) {
            map.zpl_centres[k].push_back(z.lambda_nm);
            map.zpl_enhancement[k].push_back(
                zpl_peak(z, d.lambda_minus(), d.lambda_plus(), d.fwhm_nm) / z.brightness);
        }
        map.rows[k] = synth_doublet_spectrum(d, cfg.zpl_lines, opt,
                                             derive_seed(seed, "cycle/" + std::to_string(k)))
                          .counts;
    });

    const double half = 0.5 * doublet.fwhm_nm;
    for (Branch b : {Branch::Minus, Branch::Plus}) {
        const auto& lam = b == Branch::Minus ? map.lambda_minus : map.lambda_plus;
        for (std::size_t z = 0; z < cfg.zpl_lines.size(); ++z) {
            const double lz = cfg.zpl_lines[z].lambda_nm;
            std::optional<CrossingEvent> open;
            double best_detuning = 0;
            for (std::size_t k = 0; k <= n; ++k) {
                const double det = k < n ? std::abs(lam[k] - lz) : 0.0;
                if (k < n && det < half) {
                    if (!open) {
                        open = CrossingEvent{b, static_cast<int>(z), lz, static_cast<int>(k),
                                             static_cast<int>(k), static_cast<int>(k),
                                             map.zpl_enhancement[k][z]};
                        best_detuning = det;
                    }
                    open->last_cycle = static_cast<int>(k);
                    if (det < best_detuning) {
                        best_detuning = det;
                        open->best_cycle = static_cast<int>(k);
                        open->enhancement = map.zpl_enhancement[k][z];
                    }
                } else if (open) {
                    map.events.push_back(*open);
                    open.reset();
                }
            }
        }
    }
    std::sort(map.events.begin(), map.events.end(), [](const CrossingEvent& a, const CrossingEvent& b) {
        if (a.branch != b.branch) return a.branch == Branch::Minus;
        if (a.zpl_nm != b.zpl_nm) return a.zpl_nm < b.zpl_nm;
        return a.first_cycle < b.first_cycle;
    });
    return map;
}

}  // namespace nanocav
