#pragma once

// Forward models for the photoluminescence observables: the backscattering
// doublet, PL spectra, time-resolved decays and tuning sweeps.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace nanocav {

struct DoubletModel {
    double lambda0_nm = 637.0;
    double split_nm = 0.27;
    double fwhm_nm = 0.094;
    double phase0 = 0.0;  // standing-wave azimuthal phase, rad
    double amp_minus = 1000.0;
    double amp_plus = 1000.0;

    double lambda_minus() const { return lambda0_nm - 0.5 * split_nm; }
    double lambda_plus() const { return lambda0_nm + 0.5 * split_nm; }
};

// A ZPL emitter line. f0 is the on-resonance enhancement for the
// traveling-wave field; the standing-wave weights multiply it per branch.
struct ZplLine {
    double lambda_nm = 637.0;
    double brightness = 100.0;  // peak counts without the cavity
    double f0 = 0.0;
    double w_minus = 1.0;
    double w_plus = 1.0;
    double fwhm_nm = 0.02;
};

struct Spectrum {
    std::vector<double> wavelengths;  // nm, strictly increasing
    std::vector<double> counts;
    double resolution_nm = 0.0;
};

struct DecayTrace {
    std::vector<double> times;  // ns, uniform bins
    std::vector<double> counts;
    double rep_period_ns = 210.5;
};

struct WavelengthGrid {
    double lo_nm = 636.0;
    double hi_nm = 638.0;
    double step_nm = 0.01;

    std::vector<double> points() const;
};

void validate(const DoubletModel& d);
void validate(const Spectrum& s);
void validate(const DecayTrace& t);

double lorentzian(double x, double center, double fwhm, double amp);

// (w_minus, w_plus) = (2 cos^2(m phi + phase0), 2 sin^2(m phi + phase0)).
std::pair<double, double> standing_wave_coupling(int m, double phi_nv, double phase0);

// Peak counts of a ZPL line with the doublet at the given branch positions.
double zpl_peak(const ZplLine& z, double lambda_minus, double lambda_plus, double fwhm_nm);

struct SpectrumOptions {
    WavelengthGrid grid{};
    double resolution_nm = 0.0;  // Gaussian instrument FWHM; 0 disables it
    double background = 0.0;
    bool noise = true;
};

// Noiseless model, convolved with the instrument response.
std::vector<double> doublet_model_counts(const DoubletModel& model,
                                         const std::vector<ZplLine>& zpl,
                                         const SpectrumOptions& opt);

// Noiseless model counts followed by per-bin Poisson sampling.
Spectrum synth_doublet_spectrum(const DoubletModel& model, const std::vector<ZplLine>& zpl,
                                const SpectrumOptions& opt, std::uint64_t seed);

struct DecayParams {
    double tau_ns = 9.7;
    double amp = 1000.0;
    double background = 2.0;
    double fast_tau_ns = 3.0;
    double fast_amp = 0.0;
    double rep_period_ns = 210.5;  // 4.75 MHz
    int bins = 2048;               // uniform over one period
    double t_peak_ns = 5.0;
    bool noise = true;
};

// Steady-state pulse train value at time t within the period.
double decay_model(const DecayParams& p, double t_ns);

// exp(-T/tau) / (1 - exp(-T/tau)): residual of earlier pulses per unit amp.
double wrap_pedestal(double tau_ns, double rep_period_ns);

DecayTrace synth_decay(const DecayParams& p, std::uint64_t seed);

struct TuningConfig {
    int cycles = 30;
    double shift_te = 0.05;  // nm per cycle
    double shift_tm = 0.04;
    double start_lambda0 = 636.0;
    std::vector<ZplLine> zpl_lines;
};

enum class Branch { Minus, Plus };
const char* to_string(Branch b);

// Consecutive cycles where one branch sits within fwhm/2 of one ZPL.
struct CrossingEvent {
    Branch branch = Branch::Minus;
    int zpl_index = 0;
    double zpl_nm = 0;
    int first_cycle = 0;
    int last_cycle = 0;
    int best_cycle = 0;         // smallest detuning
    double enhancement = 1.0;   // ZPL peak over its uncoupled brightness at best_cycle
};

struct TuningMap {
    std::vector<double> wavelengths;
    std::vector<std::vector<double>> rows;  // one per cycle
    std::vector<double> lambda_minus, lambda_plus;
    std::vector<std::vector<double>> zpl_centres;  // per cycle
    std::vector<std::vector<double>> zpl_enhancement;  // per cycle, per line
    std::vector<CrossingEvent> events;
};

// tm selects the shift_tm rate for the doublet. Rows use seeds derived from
// (seed, cycle) and may be computed on several threads.
TuningMap tuning_map(const TuningConfig& cfg, const DoubletModel& doublet,
                     const SpectrumOptions& opt, std::uint64_t seed, bool tm = false,
                     int threads = 1);

}  // namespace nanocav
