#pragma once

// Harmonic inversion: decompose a uniformly sampled ringdown into a sum of
// damped complex exponentials, x(t) = sum_k a_k exp((-g_k + 2 pi i f_k) t).
//
// The real probe signal is mixed down to the centre of the requested band,
// low-pass filtered with a Blackman-Harris FIR and decimated, then passed to a
// matrix-pencil (SVD-truncated) pole estimator. Frequencies are in cycles per
// unit time; decay g is the amplitude decay rate, so Q = pi f / g.

#include <complex>
#include <span>
#include <vector>

namespace nanocav {

struct HarmonicMode {
    double freq = 0;   // cycles / time
    double decay = 0;  // amplitude decay rate, 1 / time
    double q = 0;      // pi f / decay; +inf for non-decaying poles
    std::complex<double> amplitude{};  // at t = 0
};

struct PencilOptions {
    double pencil_fraction = 1.0 / 3.0;  // L / N
    double sv_rel_tol = 1e-10;           // singular values kept relative to the largest
    int max_modes = 40;
};

// Poles of a complex signal sampled every dt. Frequencies may be negative.
std::vector<HarmonicMode> matrix_pencil(std::span<const std::complex<double>> x, double dt,
                                        const PencilOptions& opt = {});

struct HarminvOptions {
    PencilOptions pencil{};
    // Decimated complex sample rate, in units of the band half-width.
    double oversample = 8.0;
    // FIR length, in decimated samples.
    double filter_length = 8.0;
    int min_samples = 64;
};

// Every pole whose frequency lies in [f_min, f_max]. Amplitudes are corrected
// for the filter response and refer to time t = 0 of the input.
std::vector<HarmonicMode> harmonic_inversion(std::span<const double> signal, double dt,
                                             double f_min, double f_max,
                                             const HarminvOptions& opt = {});

}  // namespace nanocav
