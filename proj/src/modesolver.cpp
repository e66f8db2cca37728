#include "nanocav/modesolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nanocav/harminv.hpp"

namespace nanocav {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kEnergyCheckInterval = 2000;

std::pair<double, double> default_source(const DeviceGeometry& geom, const SolverOptions& opt) {
    if (opt.source_at) return *opt.source_at;
    return {opt.source_r_fraction * geom.outer_radius, 0.5 * geom.gap_thickness};
}

std::vector<std::pair<double, double>> default_probes(const DeviceGeometry& geom,
                                                      const SolverOptions& opt) {
    if (!opt.probes.empty()) return opt.probes;
    const double r = geom.outer_radius, w = geom.wall_width, t = geom.gap_thickness;
    return {{r - 0.30 * w, 0.50 * t}, {r - 0.15 * w, 0.30 * t}, {r - 0.55 * w, 0.75 * t}};
}

void check_inputs(const DeviceGeometry& geom, const Materials& mat, const SimulationGrid& grid,
                  int m, double lambda_nm) {
    require_valid(validate(mat), "materials");
    require_valid(validate(geom), "geometry");
    require_valid(validate(grid, geom, lambda_nm), "simulation grid");
    if (m < 1) throw std::invalid_argument("azimuthal index m must be >= 1");
}

// Energy watchdog for the ringdown phase.
class EnergyGuard {
public:
    EnergyGuard(const BorFdtd& sim, double limit) : sim_(sim), limit_(limit) {}
    void arm() { ref_ = sim_.energy(); }
    void check() const {
        if (sim_.steps() % kEnergyCheckInterval != 0) return;
        const double e = sim_.energy();
        if (!std::isfinite(e) || (ref_ > 0 && e > limit_ * ref_)) {
            std::ostringstream os;
            os << "field energy grew to " << e / ref_ << "x its value at source turn-off (t = "
               << sim_.time() << " um/c, dt = " << sim_.dt() << ")";
            throw InstabilityDetected(os.str());
        }
    }

private:
    const BorFdtd& sim_;
    double limit_;
    double ref_ = 0;
};

void step_checked(BorFdtd& sim) {
    sim.step();
    if (sim.steps() % kEnergyCheckInterval == 0 && !std::isfinite(sim.energy()))
        throw InstabilityDetected("non-finite field energy while the source is on");
}

}  // namespace

std::vector<ResonanceCandidate> solve_modes(const DeviceGeometry& geom, const Materials& mat,
                                            const SimulationGrid& grid, int m, Polarization pol,
                                            const Band& band, const SolverOptions& opt) {
    if (!(band.lo_nm > 0 && band.hi_nm > band.lo_nm))
        throw std::invalid_argument("band must satisfy 0 < lo < hi");
    check_inputs(geom, mat, grid, m, std::max(band.hi_nm, opt.source_center_nm));

    BorFdtd sim(geom, mat, grid, m, opt.time_step_scale);
    const auto [sr, sz] = default_source(geom, opt);
    sim.add_source(pol, sr, sz, GaussianPulse::from_wavelengths(opt.source_center_nm,
                                                                opt.source_fwhm_nm));

    const auto probes = default_probes(geom, opt);
    // probes sit at different azimuths; only the cos/sin weights differ
    std::vector<double> cos_w, sin_w;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const double phi = 0.37 * static_cast<double>(p);
        cos_w.push_back(std::cos(m * phi));
        sin_w.push_back(std::sin(m * phi));
    }
    auto probe_value = [&](std::size_t p) {
        const auto [r, z] = probes[p];
        return (sim.sample(Component::Er, r, z) + sim.sample(Component::Ez, r, z)) * cos_w[p] +
               sim.sample(Component::Ep, r, z) * sin_w[p];
    };

    double drive_peak = 0;
    const double t_off = sim.source_end_time();
    while (sim.time() < t_off) {
        step_checked(sim);
        for (std::size_t p = 0; p < probes.size(); ++p)
            drive_peak = std::max(drive_peak, std::abs(probe_value(p)));
    }

    EnergyGuard guard(sim, opt.energy_growth_limit);
    guard.arm();
    const double t_end = t_off + opt.ringdown_periods * opt.source_center_nm * 1e-3;
    std::vector<std::vector<double>> series(probes.size());
    while (sim.time() < t_end) {
        sim.step();
        guard.check();
        for (std::size_t p = 0; p < probes.size(); ++p) series[p].push_back(probe_value(p));
    }

    struct Pole {
        double freq, q, amp;
    };
    std::vector<Pole> poles;
    for (const auto& s : series) {
        for (const auto& h : harmonic_inversion(s, sim.dt(), 1e3 / band.hi_nm, 1e3 / band.lo_nm)) {
            const double a = std::abs(h.amplitude);
            if (h.q > opt.min_q && a > opt.amplitude_floor * drive_peak)
                poles.push_back({h.freq, h.q, a});
        }
    }
    if (poles.empty()) {
        std::ostringstream os;
        os << "no resonance with Q > " << opt.min_q << " in " << band.lo_nm << "-" << band.hi_nm
           << " nm for m = " << m << " (" << to_string(pol) << ")";
        throw NoResonanceFound(os.str());
    }

    // merge probes: same mode when frequencies agree within half a linewidth
    std::sort(poles.begin(), poles.end(), [](const Pole& a, const Pole& b) { return a.freq < b.freq; });
    std::vector<std::vector<Pole>> groups;
    for (const auto& p : poles) {
        if (!groups.empty()) {
            const Pole& last = groups.back().back();
            const double half_width =
                0.5 * std::max(last.freq / last.q, p.freq / p.q);
            if (p.freq - last.freq < half_width) {
                groups.back().push_back(p);
                continue;
            }
        }
        groups.push_back({p});
    }

    std::vector<ResonanceCandidate> out;
    for (const auto& g : groups) {
        const auto best = std::max_element(g.begin(), g.end(),
                                           [](const Pole& a, const Pole& b) { return a.amp < b.amp; });
        ResonanceCandidate c;
        c.lambda0_nm = 1e3 / best->freq;
        c.q_total = best->q;
        c.amplitude = best->amp / drive_peak;
        c.m = m;
        c.polarization = pol;
        c.q_lower_bound = c.q_total > opt.q_ceiling;
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const ResonanceCandidate& a, const ResonanceCandidate& b) {
        return a.q_total > b.q_total;
    });
    return out;
}

const ResonanceCandidate& dominant(const std::vector<ResonanceCandidate>& candidates) {
    if (candidates.empty()) throw NoResonanceFound("empty candidate list");
    return *std::max_element(candidates.begin(), candidates.end(),
                             [](const auto& a, const auto& b) { return a.amplitude < b.amplitude; });
}

double intensity(const CellField& c) {
    return std::norm(c.e[0]) + std::norm(c.e[1]) + std::norm(c.e[2]);
}

double standing_peak_intensity(const CellField& c) {
    return 2.0 * std::max(std::norm(c.e[0]) + std::norm(c.e[2]), std::norm(c.e[1]));
}

ModeSolution mode_profile(const DeviceGeometry& geom, const Materials& mat,
                          const SimulationGrid& grid, int m, const ResonanceCandidate& candidate,
                          const SolverOptions& opt) {
    if (!(candidate.lambda0_nm > 0)) throw std::invalid_argument("candidate has no wavelength");
    check_inputs(geom, mat, grid, m, candidate.lambda0_nm);

    BorFdtd sim(geom, mat, grid, m, opt.time_step_scale);
    const auto [sr, sz] = default_source(geom, opt);
    sim.add_source(candidate.polarization, sr, sz,
                   GaussianPulse::from_wavelengths(candidate.lambda0_nm, opt.profile_source_fwhm_nm));

    const double t_off = sim.source_end_time();
    while (sim.time() < t_off) step_checked(sim);

    EnergyGuard guard(sim, opt.energy_growth_limit);
    guard.arm();
    const double freq = 1e3 / candidate.lambda0_nm;
    const double window = opt.profile_dft_periods / freq;
    const long stride = std::max(1L, static_cast<long>(1.0 / (16.0 * freq * sim.dt())));
    sim.reset_dft(freq);
    const double t_start = sim.time();
    while (sim.time() < t_start + window) {
        sim.step();
        guard.check();
        if (sim.steps() % stride == 0) {
            const double u = (sim.time() - t_start) / window;
            sim.accumulate_dft(std::pow(std::sin(kPi * u), 2));
        }
    }

    ModeSolution sol;
    sol.candidate = candidate;
    sol.candidate.m = m;
    sol.materials = mat;
    FieldGrid& f = sol.fields;
    f.nr = sim.nr();
    f.nz = sim.nz();
    f.r0 = sim.r_min();
    f.z0 = sim.z_min();
    f.dr = sim.dr();
    f.dz = sim.dz();
    const auto n = static_cast<std::size_t>(f.nr) * static_cast<std::size_t>(f.nz);
    f.cells.resize(n);
    f.region.resize(n);
    f.absorber.resize(n);
    for (int i = 0; i < f.nr; ++i) {
        for (int j = 0; j < f.nz; ++j) {
            const auto k = f.index(i, j);
            f.cells[k] = sim.dft_cell(i, j);
            f.region[k] = region_at(geom, f.r(i), f.z(j));
            f.absorber[k] = sim.in_pml(i, j) ? 1 : 0;
        }
    }
    normalize(sol);
    return sol;
}

void normalize(ModeSolution& sol) {
    FieldGrid& f = sol.fields;
    double peak = -1;
    std::pair<int, int> at{0, 0};
    for (int i = 0; i < f.nr; ++i) {
        for (int j = 0; j < f.nz; ++j) {
            const auto k = f.index(i, j);
            if (f.absorber[k]) continue;
            const double n = refractive_index(f.region[k], sol.materials);
            const double u = n * n * intensity(f.cells[k]);
            if (u > peak) {
                peak = u;
                at = {i, j};
            }
        }
    }
    if (!(peak > 0)) throw SolverError("mode profile is identically zero");
    const double s = 1.0 / std::sqrt(peak);
    for (auto& c : f.cells) {
        for (auto& v : c.e) v *= s;
        for (auto& v : c.h) v *= s;
    }
    sol.peak_cell = at;
    sol.n_o = refractive_index(f.region[f.index(at.first, at.second)], sol.materials);
    sol.v_mode = mode_volume(sol);
    sol.eta_dia = diamond_intensity_ratio(sol);
}

double mode_volume(const ModeSolution& sol) {
    const FieldGrid& f = sol.fields;
    double total = 0, peak = 0;
    for (int i = 0; i < f.nr; ++i) {
        for (int j = 0; j < f.nz; ++j) {
            const auto k = f.index(i, j);
            if (f.absorber[k]) continue;
            const double n = refractive_index(f.region[k], sol.materials);
            total += n * n * intensity(f.cells[k]) * 2.0 * kPi * f.r(i) * f.dr * f.dz;
            peak = std::max(peak, n * n * standing_peak_intensity(f.cells[k]));
        }
    }
    if (!(peak > 0)) return 0.0;
    const double unit = std::pow(sol.candidate.lambda0_nm * 1e-3 / sol.materials.n_gap, 3);
    return total / peak / unit;
}

double diamond_intensity_ratio(const ModeSolution& sol) {
    const FieldGrid& f = sol.fields;
    double dia = 0, gap = 0;
    for (std::size_t k = 0; k < f.cells.size(); ++k) {
        if (f.absorber[k]) continue;
        const double u = standing_peak_intensity(f.cells[k]);
        if (f.region[k] == Region::Diamond) dia = std::max(dia, u);
        if (f.region[k] == Region::GaP) gap = std::max(gap, u);
    }
    return gap > 0 ? dia / gap : 0.0;
}

std::pair<int, int> diamond_peak_cell(const ModeSolution& sol) {
    const FieldGrid& f = sol.fields;
    double best = -1;
    std::pair<int, int> at{-1, -1};
    for (int i = 0; i < f.nr; ++i)
        for (int j = 0; j < f.nz; ++j) {
            const auto k = f.index(i, j);
            if (f.absorber[k] || f.region[k] != Region::Diamond) continue;
            const double u = intensity(f.cells[k]);
            if (u > best) {
                best = u;
                at = {i, j};
            }
        }
    if (at.first < 0) throw OutOfDomain("mode grid contains no diamond");
    return at;
}

double field_at_emitter(const ModeSolution& sol, const EmitterSpec& nv) {
    const FieldGrid& f = sol.fields;
    const double r = nv.radius_um;
    const double z = -nv.depth_nm * 1e-3;
    if (nv.depth_nm < 0) throw OutOfDomain("emitter above the diamond surface");
    const double x = (r - f.r0) / f.dr - 0.5;
    const double y = (z - f.z0) / f.dz - 0.5;
    if (x < -0.5 || y < -0.5 || x > f.nr - 0.5 || y > f.nz - 0.5)
        throw OutOfDomain("emitter outside the simulation grid");

    const int i0 = static_cast<int>(std::floor(x));
    const int j0 = static_cast<int>(std::floor(y));
    const double fx = x - i0, fy = y - j0;

    // bilinear weights over the surrounding diamond cells only
    std::array<std::complex<double>, 3> e{};
    double wsum = 0;
    bool in_absorber = false;
    for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
            const int i = i0 + di, j = j0 + dj;
            if (i < 0 || j < 0 || i >= f.nr || j >= f.nz) continue;
            const auto k = f.index(i, j);
            if (f.region[k] != Region::Diamond) continue;
            const double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy);
            if (w <= 0) continue;
            in_absorber = in_absorber || f.absorber[k];
            for (int c = 0; c < 3; ++c) e[c] += w * f.cells[k].e[c];
            wsum += w;
        }
    }
    if (wsum <= 0) throw OutOfDomain("emitter is not inside diamond");
    if (in_absorber) throw OutOfDomain("emitter lies in the absorbing layer");
    for (auto& v : e) v /= wsum;

    const std::complex<double> i_unit(0.0, 1.0);
    const std::complex<double> proj =
        nv.dipole[0] * e[0] + i_unit * nv.dipole[1] * e[1] + nv.dipole[2] * e[2];
    const double peak = intensity(f.at(sol.peak_cell.first, sol.peak_cell.second));
    if (!(peak > 0)) throw SolverError("mode has zero field at its peak cell");
    return std::norm(proj) / peak;
}

CalibrationResult calibrate(const DeviceGeometry& start, const Materials& mat, double dr_nm, int m,
                            Polarization pol, double target_nm, CalibrationKnob knob, double lo,
                            double hi, double tol_nm, const SolverOptions& opt) {
    if (knob == CalibrationKnob::OuterRadius) {
        lo = std::max(lo, start.outer_radius - 0.05);
        hi = std::min(hi, start.outer_radius + 0.05);
    }
    if (!(hi > lo)) throw std::invalid_argument("calibration interval is empty");

    CalibrationResult res;
    double best_err = std::numeric_limits<double>::infinity();
    const Band band{target_nm - 40.0, target_nm + 40.0};
    auto eval = [&](double p) {
        DeviceGeometry g = start;
        (knob == CalibrationKnob::WallWidth ? g.wall_width : g.outer_radius) = p;
        const auto grid = default_grid(g, dr_nm, band.hi_nm);
        const auto cands = solve_modes(g, mat, grid, m, pol, band, opt);
        const auto& c = dominant(cands);
        ++res.evaluations;
        const double err = c.lambda0_nm - target_nm;
        if (std::abs(err) < best_err) {
            best_err = std::abs(err);
            res.geometry = g;
            res.mode = c;
        }
        return err;
    };

    double f_lo = eval(lo);
    double f_hi = eval(hi);
    if (f_lo * f_hi > 0) {
        std::ostringstream os;
        os << "calibration interval does not bracket " << target_nm << " nm (ends at "
           << target_nm + f_lo << " and " << target_nm + f_hi << " nm)";
        throw SolverError(os.str());
    }
    // the permittivity map resolves the geometry to a quarter cell
    const double resolution = 0.25 * dr_nm * 1e-3;
    while (best_err > tol_nm && hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = eval(mid);
        if ((f_mid < 0) == (f_lo < 0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (void)f_hi;
    return res;
}

}  // namespace nanocav
