#include "nanocav/bor_fdtd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nanocav {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPmlOrder = 3;
constexpr double kPmlReflection = 1e-6;
// Complex frequency shift, 1/um (about 10% of the optical angular frequency).
// Without it the absorber keeps quasi-static fields undamped and the 1/r~
// terms lose their m/r coupling at low frequency, which grows late in a run.
constexpr double kPmlAlpha = 1.0;

// Tracks g = x / r~ with r~ = r + S / (alpha - i w), i.e.
// r dg/dt + (alpha r + S) g = dx/dt + alpha x.
inline double stretch(double& g, double& x_prev, double x, double r, double s_int, double dt) {
    const double h = 0.5 * (kPmlAlpha * r + s_int) * dt;
    const double a = 0.5 * kPmlAlpha * dt;
    g = ((r - h) * g + (x - x_prev) + a * (x + x_prev)) / (r + h);
    x_prev = x;
    return g;
}

}  // namespace

const char* to_string(Polarization p) { return p == Polarization::TE ? "te" : "tm"; }

GaussianPulse GaussianPulse::from_wavelengths(double center_nm, double fwhm_nm) {
    GaussianPulse p;
    const double lam = center_nm * 1e-3;
    p.freq = 1.0 / lam;
    const double df = (fwhm_nm * 1e-3) / (lam * lam);
    // amplitude spectrum exp(-(2 pi df_off width)^2 / 2) has FWHM df
    p.width = std::sqrt(2.0 * std::log(2.0)) / (kPi * df);
    p.t0 = 6.0 * p.width;  // symmetric about the cut-off, so no net charge is left
    return p;
}

double GaussianPulse::value(double t) const {
    const double u = (t - t0) / width;
    if (std::abs(u) > 6.0) return 0.0;
    return amplitude * std::exp(-0.5 * u * u) * std::sin(2.0 * kPi * freq * (t - t0));
}

BorFdtd::BorFdtd(const DeviceGeometry& geom, const Materials& mat, const SimulationGrid& grid,
                 int m, double dt_scale)
    : geom_(geom), mat_(mat), m_(m) {
    if (m < 0) throw std::invalid_argument("azimuthal index must be >= 0");
    dr_ = grid.dr_nm * 1e-3;
    dz_ = grid.dz_nm * 1e-3;
    r0_ = grid.r_min_um;
    z0_ = grid.z_min_um;
    axis_ = r0_ <= 0.0;
    if (axis_) r0_ = 0.0;
    npml_ = grid.pml_cells;
    nr_ = static_cast<int>(std::lround((grid.r_max_um - r0_) / dr_));
    nz_ = static_cast<int>(std::lround((grid.z_max_um - z0_) / dz_));
    if (nr_ <= 2 * npml_ || nz_ <= 3 * npml_)
        throw std::invalid_argument("simulation grid too small for its absorber");

    // half the 2D Courant limit, reduced again near the axis where m/r is largest
    const double courant = 1.0 / std::sqrt(1.0 / (dr_ * dr_) + 1.0 / (dz_ * dz_));
    const double r_ref = axis_ ? 0.5 * dr_ : r0_;
    dt_ = dt_scale * 0.5 * courant / (1.0 + m_ * dr_ / r_ref);

    rn_.resize(static_cast<std::size_t>(nr_ + 1));
    rh_.resize(static_cast<std::size_t>(nr_ + 1));
    for (int i = 0; i <= nr_; ++i) {
        rn_[i] = r0_ + i * dr_;
        rh_[i] = r0_ + (i + 0.5) * dr_;
    }

    const std::size_t n = static_cast<std::size_t>(nr_ + 1) * static_cast<std::size_t>(nz_ + 1);
    for (auto* v : {&er_, &ep_, &ez_, &hr_, &hp_, &hz_, &cer_, &cep_, &cez_, &eps_er_, &eps_ep_,
                    &eps_ez_, &psi_hr_z_, &psi_hp_z_, &psi_hp_r_, &psi_hz_r_, &psi_er_z_,
                    &psi_ep_z_, &psi_ep_r_, &psi_ez_r_, &g_hr_, &g_hz_, &g_er_, &g_ez_, &x_hr_,
                    &x_hz_, &x_er_, &x_ez_})
        v->assign(n, 0.0);

    for (int i = 0; i <= nr_; ++i) {
        for (int j = 0; j <= nz_; ++j) {
            const std::size_t k = at(i, j);
            eps_er_[k] = smoothed_eps(rh_[i], z0_ + j * dz_);
            eps_ep_[k] = smoothed_eps(rn_[i], z0_ + j * dz_);
            eps_ez_[k] = smoothed_eps(rn_[i], z0_ + (j + 0.5) * dz_);
            cer_[k] = dt_ / eps_er_[k];
            cep_[k] = dt_ / eps_ep_[k];
            cez_[k] = dt_ / eps_ez_[k];
        }
    }

    const double sigma_r = (kPmlOrder + 1) * -std::log(kPmlReflection) / (2.0 * npml_ * dr_);
    const double sigma_z = (kPmlOrder + 1) * -std::log(kPmlReflection) / (2.0 * npml_ * dz_);
    build_pml(sigma_r, sigma_z);
}

double BorFdtd::smoothed_eps(double r, double z) const {
    double s = 0;
    for (double a : {-0.25, 0.25})
        for (double b : {-0.25, 0.25}) s += permittivity_at(geom_, mat_, r + a * dr_, z + b * dz_);
    return 0.25 * s;
}

void BorFdtd::build_pml(double sigma_max_r, double sigma_max_z) {
    const double lr = npml_ * dr_;
    const double lz = npml_ * dz_;
    const double r_in = r0_ + nr_ * dr_ - lr;
    const double z_lo = z0_ + lz;
    const double z_hi = z0_ + nz_ * dz_ - lz;
    auto coeff = [this](double sigma, double& b, double& a) {
        b = std::exp(-(sigma + kPmlAlpha) * dt_);
        a = sigma / (sigma + kPmlAlpha) * (b - 1.0);
    };
    auto grade = [](double depth, double len, double smax) {
        if (depth <= 0) return 0.0;
        return smax * std::pow(std::min(depth / len, 1.0), kPmlOrder);
    };
    auto integral = [](double depth, double len, double smax) {
        if (depth <= 0) return 0.0;
        const double u = std::min(depth / len, 1.0);
        return smax * len / (kPmlOrder + 1) * std::pow(u, kPmlOrder + 1) +
               smax * std::max(depth - len, 0.0);
    };
    for (auto* v : {&brn_, &arn_, &brh_, &arh_, &sn_, &sh_})
        v->assign(static_cast<std::size_t>(nr_ + 1), 0.0);
    for (auto* v : {&bzn_, &azn_, &bzh_, &azh_}) v->assign(static_cast<std::size_t>(nz_ + 1), 0.0);
    for (int i = 0; i <= nr_; ++i) {
        coeff(grade(rn_[i] - r_in, lr, sigma_max_r), brn_[i], arn_[i]);
        coeff(grade(rh_[i] - r_in, lr, sigma_max_r), brh_[i], arh_[i]);
        sn_[i] = integral(rn_[i] - r_in, lr, sigma_max_r);
        sh_[i] = integral(rh_[i] - r_in, lr, sigma_max_r);
    }
    for (int j = 0; j <= nz_; ++j) {
        const double zn = z0_ + j * dz_;
        const double zh = zn + 0.5 * dz_;
        coeff(grade(std::max(z_lo - zn, zn - z_hi), lz, sigma_max_z), bzn_[j], azn_[j]);
        coeff(grade(std::max(z_lo - zh, zh - z_hi), lz, sigma_max_z), bzh_[j], azh_[j]);
    }
    ir_pml_ = nr_ - npml_;
    jz_lo_ = npml_;
    jz_hi_ = nz_ - npml_;
}

bool BorFdtd::in_pml(int i, int j) const {
    return i >= ir_pml_ || j < jz_lo_ || j >= jz_hi_;
}

void BorFdtd::add_source(Polarization pol, double r_um, double z_um, const GaussianPulse& pulse) {
    Source s;
    s.pulse = pulse;
    if (pol == Polarization::TE) {
        s.comp = Component::Er;
        s.i = std::clamp(static_cast<int>(std::lround((r_um - r0_) / dr_ - 0.5)), 0, nr_ - 1);
        s.j = std::clamp(static_cast<int>(std::lround((z_um - z0_) / dz_)), 1, nz_ - 1);
        s.coef = cer_[at(s.i, s.j)];
    } else {
        s.comp = Component::Ez;
        s.i = std::clamp(static_cast<int>(std::lround((r_um - r0_) / dr_)), 1, nr_ - 1);
        s.j = std::clamp(static_cast<int>(std::lround((z_um - z0_) / dz_ - 0.5)), 0, nz_ - 1);
        s.coef = cez_[at(s.i, s.j)];
    }
    sources_.push_back(s);
}

double BorFdtd::source_end_time() const {
    double t = 0;
    for (const auto& s : sources_) t = std::max(t, s.pulse.end_time());
    return t;
}

void BorFdtd::step() {
    const int S = nz_ + 1;
    const double idr = 1.0 / dr_, idz = 1.0 / dz_;
    const double dt = dt_;
    const double m = m_;

    // ---- H from t - dt/2 to t + dt/2
    for (int i = axis_ ? 1 : 0; i <= nr_; ++i) {
        double* hr = &hr_[at(i, 0)];
        const double* ez = &ez_[at(i, 0)];
        const double* ep = &ep_[at(i, 0)];
        const double mr = m / rn_[i];
        for (int j = 0; j < nz_; ++j) hr[j] += dt * (mr * ez[j] + (ep[j + 1] - ep[j]) * idz);
    }
    for (int i = 0; i < nr_; ++i) {
        double* hp = &hp_[at(i, 0)];
        const double* er = &er_[at(i, 0)];
        const double* ez0 = &ez_[at(i, 0)];
        const double* ez1 = ez0 + S;
        for (int j = 0; j < nz_; ++j)
            hp[j] -= dt * ((er[j + 1] - er[j]) * idz - (ez1[j] - ez0[j]) * idr);
    }
    for (int i = 0; i < nr_; ++i) {
        double* hz = &hz_[at(i, 0)];
        const double* er = &er_[at(i, 0)];
        const double* ep0 = &ep_[at(i, 0)];
        const double* ep1 = ep0 + S;
        const double r0 = rn_[i], r1 = rn_[i + 1], inv = 1.0 / (rh_[i] * dr_), mr = m / rh_[i];
        for (int j = 0; j <= nz_; ++j) hz[j] -= dt * ((r1 * ep1[j] - r0 * ep0[j]) * inv + mr * er[j]);
    }

    // CPML corrections for H
    auto z_rows = [this](auto&& fn) {
        for (int j = 0; j <= jz_lo_; ++j) fn(j);
        for (int j = jz_hi_; j <= nz_; ++j) fn(j);
    };
    for (int i = 0; i <= nr_; ++i) {
        z_rows([&](int j) {
            if (j >= nz_) return;
            const std::size_t k = at(i, j);
            const double dep = (ep_[k + 1] - ep_[k]) * idz;
            psi_hr_z_[k] = bzh_[j] * psi_hr_z_[k] + azh_[j] * dep;
            if (!(axis_ && i == 0)) hr_[k] += dt * psi_hr_z_[k];
            if (i < nr_) {
                const double der = (er_[k + 1] - er_[k]) * idz;
                psi_hp_z_[k] = bzh_[j] * psi_hp_z_[k] + azh_[j] * der;
                hp_[k] -= dt * psi_hp_z_[k];
            }
        });
    }
    // r absorber: stretch d/dr through psi and every 1/r through 1/r~
    for (int i = ir_pml_; i <= nr_; ++i) {
        for (int j = 0; j <= nz_; ++j) {
            const std::size_t k = at(i, j);
            if (i < nr_) {
                if (j < nz_) {
                    const double dez = (ez_[k + S] - ez_[k]) * idr;
                    psi_hp_r_[k] = brh_[i] * psi_hp_r_[k] + arh_[i] * dez;
                    hp_[k] += dt * psi_hp_r_[k];
                }
                const double d = (ep_[k + S] - ep_[k]) * idr;
                psi_hz_r_[k] = brh_[i] * psi_hz_r_[k] + arh_[i] * d;
                const double x = 0.5 * (ep_[k + S] + ep_[k]) + m * er_[k];
                const double g = stretch(g_hz_[k], x_hz_[k], x, rh_[i], sh_[i], dt);
                hz_[k] -= dt * (psi_hz_r_[k] + g - x / rh_[i]);
            }
            if (j < nz_) {
                const double x = m * ez_[k];
                const double g = stretch(g_hr_[k], x_hr_[k], x, rn_[i], sn_[i], dt);
                hr_[k] += dt * (g - x / rn_[i]);
            }
        }
    }

    // ---- E from t to t + dt
    for (int i = 0; i < nr_; ++i) {
        double* er = &er_[at(i, 0)];
        const double* c = &cer_[at(i, 0)];
        const double* hz = &hz_[at(i, 0)];
        const double* hp = &hp_[at(i, 0)];
        const double mr = m / rh_[i];
        for (int j = 1; j < nz_; ++j) er[j] += c[j] * (mr * hz[j] - (hp[j] - hp[j - 1]) * idz);
    }
    for (int i = 1; i < nr_; ++i) {
        double* ep = &ep_[at(i, 0)];
        const double* c = &cep_[at(i, 0)];
        const double* hr = &hr_[at(i, 0)];
        const double* hz1 = &hz_[at(i, 0)];
        const double* hz0 = hz1 - S;
        for (int j = 1; j < nz_; ++j)
            ep[j] += c[j] * ((hr[j] - hr[j - 1]) * idz - (hz1[j] - hz0[j]) * idr);
    }
    for (int i = 1; i < nr_; ++i) {
        double* ez = &ez_[at(i, 0)];
        const double* c = &cez_[at(i, 0)];
        const double* hp1 = &hp_[at(i, 0)];
        const double* hp0 = hp1 - S;
        const double* hr = &hr_[at(i, 0)];
        const double a1 = rh_[i], a0 = rh_[i - 1], inv = 1.0 / (rn_[i] * dr_), mr = m / rn_[i];
        for (int j = 0; j < nz_; ++j) ez[j] += c[j] * ((a1 * hp1[j] - a0 * hp0[j]) * inv - mr * hr[j]);
    }
    if (axis_ && m_ == 0) {
        for (int j = 0; j < nz_; ++j) ez_[at(0, j)] += cez_[at(0, j)] * 4.0 * idr * hp_[at(0, j)];
    }

    // CPML corrections for E
    for (int i = 0; i <= nr_; ++i) {
        z_rows([&](int j) {
            if (j == 0 || j >= nz_) return;
            const std::size_t k = at(i, j);
            if (i < nr_) {
                const double dhp = (hp_[k] - hp_[k - 1]) * idz;
                psi_er_z_[k] = bzn_[j] * psi_er_z_[k] + azn_[j] * dhp;
                er_[k] -= cer_[k] * psi_er_z_[k];
            }
            if (i >= 1 && i < nr_) {
                const double dhr = (hr_[k] - hr_[k - 1]) * idz;
                psi_ep_z_[k] = bzn_[j] * psi_ep_z_[k] + azn_[j] * dhr;
                ep_[k] += cep_[k] * psi_ep_z_[k];
            }
        });
    }
    for (int i = ir_pml_; i < nr_; ++i) {
        for (int j = 0; j < nz_; ++j) {
            const std::size_t k = at(i, j);
            if (j >= 1) {
                const double x = m * hz_[k];
                const double g = stretch(g_er_[k], x_er_[k], x, rh_[i], sh_[i], dt);
                er_[k] += cer_[k] * (g - x / rh_[i]);
            }
            if (i < 1) continue;
            if (j >= 1) {
                const double dhz = (hz_[k] - hz_[k - S]) * idr;
                psi_ep_r_[k] = brn_[i] * psi_ep_r_[k] + arn_[i] * dhz;
                ep_[k] -= cep_[k] * psi_ep_r_[k];
            }
            const double d = (hp_[k] - hp_[k - S]) * idr;
            psi_ez_r_[k] = brn_[i] * psi_ez_r_[k] + arn_[i] * d;
            const double x = 0.5 * (hp_[k] + hp_[k - S]) - m * hr_[k];
            const double g = stretch(g_ez_[k], x_ez_[k], x, rn_[i], sn_[i], dt);
            ez_[k] += cez_[k] * (psi_ez_r_[k] + g - x / rn_[i]);
        }
    }

    const double t_half = time_ + 0.5 * dt_;
    for (const auto& s : sources_) {
        const double v = s.coef * s.pulse.value(t_half);
        if (v == 0.0) continue;
        (s.comp == Component::Er ? er_ : ez_)[at(s.i, s.j)] += v;
    }

    time_ += dt_;
    ++steps_;
}

double BorFdtd::energy() const {
    double w = 0;
    for (int i = 0; i <= nr_; ++i) {
        const double a = rn_[i], b = rh_[i];
        for (int j = 0; j <= nz_; ++j) {
            const std::size_t k = at(i, j);
            w += b * (eps_er_[k] * er_[k] * er_[k] + hp_[k] * hp_[k] + hz_[k] * hz_[k]) +
                 a * (eps_ep_[k] * ep_[k] * ep_[k] + eps_ez_[k] * ez_[k] * ez_[k] + hr_[k] * hr_[k]);
        }
    }
    return 0.5 * kPi * w * dr_ * dz_;
}

double BorFdtd::yee(Component c, int i, int j) const {
    const std::size_t k = at(i, j);
    switch (c) {
        case Component::Er: return er_[k];
        case Component::Ep: return ep_[k];
        case Component::Ez: return ez_[k];
        case Component::Hr: return hr_[k];
        case Component::Hp: return hp_[k];
        case Component::Hz: return hz_[k];
    }
    return 0;
}

double BorFdtd::sample(Component c, double r, double z) const {
    const bool half_r = c == Component::Er || c == Component::Hp || c == Component::Hz;
    const bool half_z = c == Component::Ez || c == Component::Hr || c == Component::Hp;
    const int i = std::clamp(static_cast<int>(std::lround((r - r0_) / dr_ - (half_r ? 0.5 : 0.0))),
                             0, nr_);
    const int j = std::clamp(static_cast<int>(std::lround((z - z0_) / dz_ - (half_z ? 0.5 : 0.0))),
                             0, nz_);
    return yee(c, i, j);
}

void BorFdtd::reset_dft(double freq) {
    dft_freq_ = freq;
    const std::size_t n = er_.size();
    for (auto& v : dft_) v.assign(n, {0.0, 0.0});
}

void BorFdtd::accumulate_dft(double weight) {
    const double w = 2.0 * kPi * dft_freq_;
    const std::complex<double> pe = weight * std::polar(1.0, -w * time_);
    const std::complex<double> ph = weight * std::polar(1.0, -w * (time_ - 0.5 * dt_));
    const std::array<const std::vector<double>*, 6> src{&er_, &ep_, &ez_, &hr_, &hp_, &hz_};
    for (int c = 0; c < 6; ++c) {
        const auto& f = *src[c];
        auto& acc = dft_[c];
        const std::complex<double> p = c < 3 ? pe : ph;
        for (std::size_t k = 0; k < f.size(); ++k) acc[k] += p * f[k];
    }
}

CellField BorFdtd::dft_cell(int i, int j) const {
    const auto& d = dft_;
    const std::size_t k = at(i, j);
    const std::size_t S = static_cast<std::size_t>(nz_ + 1);
    CellField c;
    c.e[0] = 0.5 * (d[0][k] + d[0][k + 1]);
    c.e[1] = 0.25 * (d[1][k] + d[1][k + 1] + d[1][k + S] + d[1][k + S + 1]);
    c.e[2] = 0.5 * (d[2][k] + d[2][k + S]);
    c.h[0] = 0.5 * (d[3][k] + d[3][k + S]);
    c.h[1] = d[4][k];
    c.h[2] = 0.5 * (d[5][k] + d[5][k + 1]);
    return c;
}

}  // namespace nanocav
