#pragma once

// Body-of-revolution FDTD on an (r, z) Yee grid for one azimuthal index m.
//
// Fields carry the real azimuthal dependence
//   E_r, E_z, H_phi ~ cos(m phi),   E_phi, H_r, H_z ~ sin(m phi),
// which turns the 3D curl equations into a 2D update with 1/r and m/r terms.
// The traveling-wave field exp(-i m phi) is (e_r, i e_phi, e_z).
//
// Units: lengths in um, c = eps0 = mu0 = 1, so time is in um/c and frequency
// in 1/um (f = 1/lambda).
//
// Yee placement (i along r, j along z, node r_i = r_min + i dr):
//   e_r (i+1/2, j)   e_phi (i, j)       e_z (i, j+1/2)
//   h_r (i, j+1/2)   h_phi (i+1/2, j+1/2) h_z (i+1/2, j)
// Outer r and both z ends are CPML-terminated perfect conductors. The inner
// edge is either the axis (r_min = 0) or a conductor at r_min.

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "nanocav/geometry.hpp"

namespace nanocav {

enum class Polarization { TE, TM };

const char* to_string(Polarization p);

enum class Component { Er = 0, Ep = 1, Ez = 2, Hr = 3, Hp = 4, Hz = 5 };

// Gaussian-enveloped sinusoid; spectral amplitude FWHM is bandwidth.
struct GaussianPulse {
    double freq = 1.0;
    double width = 1.0;  // envelope standard deviation in time
    double t0 = 5.0;
    double amplitude = 1.0;

    static GaussianPulse from_wavelengths(double center_nm, double fwhm_nm);
    double value(double t) const;
    double end_time() const { return 2.0 * t0; }
};

struct CellField {
    std::array<std::complex<double>, 3> e{};  // r, phi, z
    std::array<std::complex<double>, 3> h{};
};

class BorFdtd {
public:
    // dt_scale multiplies the default time step (half the 2D Courant limit,
    // divided by 1 + m dr / r_min).
    BorFdtd(const DeviceGeometry& geom, const Materials& mat, const SimulationGrid& grid, int m,
            double dt_scale = 1.0);

    int m() const { return m_; }
    int nr() const { return nr_; }  // cells along r
    int nz() const { return nz_; }  // cells along z
    double dr() const { return dr_; }
    double dz() const { return dz_; }
    double dt() const { return dt_; }
    double time() const { return time_; }
    long steps() const { return steps_; }
    double r_min() const { return r0_; }
    double z_min() const { return z0_; }
    int pml_cells() const { return npml_; }

    // Point dipole current; TE drives e_r, TM drives e_z.
    void add_source(Polarization pol, double r_um, double z_um, const GaussianPulse& pulse);
    double source_end_time() const;

    void step();

    // Electromagnetic energy (times 2 pi / 2) over the whole grid.
    double energy() const;

    double yee(Component c, int i, int j) const;
    // Nearest Yee sample of component c to (r, z).
    double sample(Component c, double r_um, double z_um) const;

    // Running DFT of all six components at frequency f; weight multiplies the
    // current contribution (window function).
    void reset_dft(double freq);
    void accumulate_dft(double weight);
    // DFT fields collocated at the centre of cell (i, j), i < nr, j < nz.
    CellField dft_cell(int i, int j) const;

    double cell_r(int i) const { return r0_ + (i + 0.5) * dr_; }
    double cell_z(int j) const { return z0_ + (j + 0.5) * dz_; }
    bool in_pml(int i, int j) const;

private:
    std::size_t at(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(nz_ + 1) +
               static_cast<std::size_t>(j);
    }
    double smoothed_eps(double r, double z) const;
    void build_pml(double sigma_max_r, double sigma_max_z);

    struct Source {
        Component comp;
        int i, j;
        double coef;
        GaussianPulse pulse;
    };

    DeviceGeometry geom_;
    Materials mat_;
    int m_;
    int nr_, nz_, npml_;
    double dr_, dz_, dt_, r0_, z0_;
    bool axis_;
    double time_ = 0;
    long steps_ = 0;

    std::vector<double> rn_, rh_;  // node / half-node radii
    std::vector<double> er_, ep_, ez_, hr_, hp_, hz_;
    std::vector<double> cer_, cep_, cez_;  // dt / eps
    std::vector<double> eps_er_, eps_ep_, eps_ez_;

    // CPML: b = exp(-(sigma + alpha) dt), a = sigma (b - 1) / (sigma + alpha) at node (n) and half (h) positions
    std::vector<double> brn_, arn_, brh_, arh_, bzn_, azn_, bzh_, azh_;
    int ir_pml_ = 0;          // first r index inside the r absorber
    int jz_lo_ = 0, jz_hi_ = 0;  // z absorber: j <= jz_lo_ or j >= jz_hi_
    std::vector<double> psi_hr_z_, psi_hp_z_, psi_hp_r_, psi_hz_r_;
    std::vector<double> psi_er_z_, psi_ep_z_, psi_ep_r_, psi_ez_r_;
    // integrated r conductivity, and the 1/r~ auxiliaries for the m/r and 1/r terms
    std::vector<double> sn_, sh_;
    std::vector<double> g_hr_, g_hz_, g_er_, g_ez_, x_hr_, x_hz_, x_er_, x_ez_;

    std::vector<Source> sources_;

    double dft_freq_ = 0;
    std::array<std::vector<std::complex<double>>, 6> dft_;
};

}  // namespace nanocav
