#pragma once

// Whispering-gallery resonances of the axisymmetric device from FDTD
// ringdowns, and the mode figures of merit used by the Purcell layer.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nanocav/bor_fdtd.hpp"
#include "nanocav/geometry.hpp"

namespace nanocav {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Field energy grew after the source turned off.
class InstabilityDetected : public SolverError {
public:
    using SolverError::SolverError;
};

class NoResonanceFound : public SolverError {
public:
    using SolverError::SolverError;
};

class OutOfDomain : public SolverError {
public:
    using SolverError::SolverError;
};

struct Band {
    double lo_nm = 600.0;
    double hi_nm = 680.0;
};

struct ResonanceCandidate {
    double lambda0_nm = 0;
    double q_total = 0;
    double amplitude = 0;
    int m = 0;
    Polarization polarization = Polarization::TE;
    // Q above the absorber-limited ceiling is only a lower bound.
    bool q_lower_bound = false;
};

struct SolverOptions {
    double source_center_nm = 640.0;
    double source_fwhm_nm = 60.0;
    double source_r_fraction = 0.8;  // of the outer radius, at the ring mid-plane
    // Overrides the default source location (r, z) in um.
    std::optional<std::pair<double, double>> source_at;
    // Overrides the default probe locations (r, z) in um; azimuths are spread.
    std::vector<std::pair<double, double>> probes;
    double ringdown_periods = 300.0;
    double min_q = 50.0;
    double q_ceiling = 1e6;
    // Poles weaker than this fraction of the peak drive-time probe signal are noise.
    double amplitude_floor = 1e-6;
    double energy_growth_limit = 2.0;
    // Multiplies the default time step (tests use > 1 to provoke instability).
    double time_step_scale = 1.0;

    // mode_profile only
    double profile_source_fwhm_nm = 20.0;
    double profile_dft_periods = 200.0;
};

// Modes in band for azimuthal index m; TE-like families are driven with a
// radial dipole, TM-like with a vertical one. Sorted by descending Q.
std::vector<ResonanceCandidate> solve_modes(const DeviceGeometry& geom, const Materials& mat,
                                            const SimulationGrid& grid, int m, Polarization pol,
                                            const Band& band, const SolverOptions& opt = {});

// Candidate with the largest ringdown amplitude.
const ResonanceCandidate& dominant(const std::vector<ResonanceCandidate>& candidates);

// Cell-centred complex fields of one mode. The traveling-wave field is
// (e_r, i e_phi, e_z) exp(-i m phi).
struct FieldGrid {
    int nr = 0, nz = 0;
    double r0 = 0, z0 = 0, dr = 0, dz = 0;  // um; cell (i, j) centre is r0 + (i + 1/2) dr
    std::vector<CellField> cells;
    std::vector<Region> region;
    std::vector<unsigned char> absorber;

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(nz) +
               static_cast<std::size_t>(j);
    }
    const CellField& at(int i, int j) const { return cells[index(i, j)]; }
    double r(int i) const { return r0 + (i + 0.5) * dr; }
    double z(int j) const { return z0 + (j + 0.5) * dz; }
};

double intensity(const CellField& c);  // |E|^2
// Maximum over phi of |E|^2 for the standing-wave mode (e_r cos, e_phi sin,
// e_z cos) carrying the same azimuthally averaged energy.
double standing_peak_intensity(const CellField& c);

struct ModeSolution {
    ResonanceCandidate candidate;
    FieldGrid fields;
    Materials materials;
    double v_mode = 0;   // (lambda0 / n_gap)^3, standing-wave peak
    double eta_dia = 0;
    double n_o = 0;
    std::pair<int, int> peak_cell{0, 0};
};

ModeSolution mode_profile(const DeviceGeometry& geom, const Materials& mat,
                          const SimulationGrid& grid, int m, const ResonanceCandidate& candidate,
                          const SolverOptions& opt = {});

// Scales a field grid so that max eps |E|^2 over the non-absorber cells is 1
// and fills v_mode, eta_dia, n_o and peak_cell.
void normalize(ModeSolution& sol);

// Both use the standing-wave peak (see standing_peak_intensity); the
// traveling-wave volume is twice v_mode.
double mode_volume(const ModeSolution& sol);
double diamond_intensity_ratio(const ModeSolution& sol);

// |mu . E(r_nv)|^2 / |E_o|^2 with E_o at the peak cell; the emitter sits at
// (radius, z = -depth). Throws OutOfDomain outside the grid or the diamond.
double field_at_emitter(const ModeSolution& sol, const EmitterSpec& nv);

// Cell of maximum |E|^2 inside the diamond.
std::pair<int, int> diamond_peak_cell(const ModeSolution& sol);

struct CalibrationResult {
    DeviceGeometry geometry;
    ResonanceCandidate mode;
    int evaluations = 0;
};

enum class CalibrationKnob { WallWidth, OuterRadius };

// Bisects one geometry parameter until the dominant (m, pol) resonance sits
// within tol_nm of target_nm. WallWidth searches [lo, hi] as given;
// OuterRadius is limited to +-50 nm around the starting radius.
CalibrationResult calibrate(const DeviceGeometry& start, const Materials& mat, double dr_nm, int m,
                            Polarization pol, double target_nm, CalibrationKnob knob, double lo,
                            double hi, double tol_nm = 0.05, const SolverOptions& opt = {});

}  // namespace nanocav
