#include "nanocav/harminv.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nanocav {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double q_of(double freq, double decay) {
    if (decay <= 0) return std::numeric_limits<double>::infinity();
    return kPi * std::abs(freq) / decay;
}

// 4-term Blackman-Harris, normalised to unit sum.
std::vector<double> blackman_harris(int n) {
    std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    if (n > 1) {
        const double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
        for (int k = 0; k < n; ++k) {
            const double x = 2.0 * kPi * k / (n - 1);
            w[k] = a0 - a1 * std::cos(x) + a2 * std::cos(2 * x) - a3 * std::cos(3 * x);
        }
    }
    double s = 0;
    for (double v : w) s += v;
    for (double& v : w) v /= s;
    return w;
}

}  // namespace

std::vector<HarmonicMode> matrix_pencil(std::span<const cplx> x, double dt,
                                        const PencilOptions& opt) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 8) throw std::invalid_argument("matrix pencil needs at least 8 samples");
    Eigen::Index l = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(opt.pencil_fraction * static_cast<double>(n)), 2, n - 3);

    Eigen::MatrixXcd y(n - l, l + 1);
    for (Eigen::Index r = 0; r < n - l; ++r)
        for (Eigen::Index c = 0; c <= l; ++c) y(r, c) = x[static_cast<std::size_t>(r + c)];

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(y, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return {};
    Eigen::Index m = 0;
    while (m < s.size() && s(m) > opt.sv_rel_tol * s(0)) ++m;
    m = std::min<Eigen::Index>({m, opt.max_modes, l - 1});
    if (m < 1) return {};

    const Eigen::MatrixXcd vh = svd.matrixV().leftCols(m).adjoint();  // m x (l+1)
    const Eigen::MatrixXcd a1 = vh.leftCols(l);
    const Eigen::MatrixXcd a2 = vh.rightCols(l);
    const Eigen::MatrixXcd gram = a1 * a1.adjoint();
    const Eigen::MatrixXcd pencil = a2 * a1.adjoint() * gram.inverse();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(pencil, false);
    const Eigen::VectorXcd z = es.eigenvalues();

    // amplitudes from the Vandermonde least-squares problem
    Eigen::MatrixXcd vand(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        cplx p = 1.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            vand(t, k) = p;
            p *= z(k);
        }
    }
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index t = 0; t < n; ++t) rhs(t) = x[static_cast<std::size_t>(t)];
    const Eigen::VectorXcd amp = vand.colPivHouseholderQr().solve(rhs);

    std::vector<HarmonicMode> out;
    out.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) {
        if (std::abs(z(k)) == 0.0) continue;
        const cplx lam = std::log(z(k)) / dt;
        HarmonicMode h;
        h.freq = lam.imag() / (2.0 * kPi);
        h.decay = -lam.real();
        h.q = q_of(h.freq, h.decay);
        h.amplitude = amp(k);
        out.push_back(h);
    }
    return out;
}

std::vector<HarmonicMode> harmonic_inversion(std::span<const double> signal, double dt,
                                             double f_min, double f_max,
                                             const HarminvOptions& opt) {
    if (!(f_max > f_min) || !(f_min > 0) || !(dt > 0))
        throw std::invalid_argument("harmonic_inversion: bad band or time step");
    const double fc = 0.5 * (f_min + f_max);
    const double half_band = 0.5 * (f_max - f_min);
    const auto len = static_cast<long>(signal.size());

    long dec = std::max(1L, static_cast<long>(1.0 / (opt.oversample * half_band * dt)));
    long taps = std::max(1L, std::lround(opt.filter_length * static_cast<double>(dec)));
    auto count = [&] { return len >= taps ? (len - taps) / dec + 1 : 0L; };
    if (count() < opt.min_samples) {
        // short record: trade filter length for samples
        dec = std::max(1L, (len / 2) / opt.min_samples);
        taps = std::max(1L, std::lround(opt.filter_length * static_cast<double>(dec)));
        if (count() < 8) throw std::invalid_argument("harmonic_inversion: record too short");
    }
    const auto h = blackman_harris(static_cast<int>(taps));

    const long n_out = count();
    std::vector<cplx> base(static_cast<std::size_t>(n_out));
    const double w = 2.0 * kPi * fc;
    for (long k = 0; k < n_out; ++k) {
        const long end = taps - 1 + k * dec;
        cplx acc = 0;
        for (long j = 0; j < taps; ++j) {
            const long idx = end - j;
            const double t = static_cast<double>(idx) * dt;
            acc += h[static_cast<std::size_t>(j)] * signal[static_cast<std::size_t>(idx)] *
                   std::polar(1.0, -w * t);
        }
        base[static_cast<std::size_t>(k)] = acc;
    }

    const double step = static_cast<double>(dec) * dt;
    const double t_first = static_cast<double>(taps - 1) * dt;
    auto poles = matrix_pencil(base, step, opt.pencil);

    std::vector<HarmonicMode> out;
    for (auto p : poles) {
        p.freq += fc;
        if (p.freq < f_min || p.freq > f_max) continue;
        p.q = q_of(p.freq, p.decay);
        // undo filter gain and refer the amplitude to t = 0
        const cplx lam(-p.decay, 2.0 * kPi * (p.freq - fc));
        cplx gain = 0;
        for (long j = 0; j < taps; ++j)
            gain += h[static_cast<std::size_t>(j)] * std::exp(-lam * (static_cast<double>(j) * dt));
        const cplx at_zero = p.amplitude / (gain * std::exp(lam * t_first));
        p.amplitude = 2.0 * at_zero;
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(),
              [](const HarmonicMode& a, const HarmonicMode& b) { return a.freq < b.freq; });
    return out;
}

}  // namespace nanocav
