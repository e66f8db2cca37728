#pragma once

// Weighted Levenberg-Marquardt fits of doublet spectra and decay traces.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanocav/purcell.hpp"
#include "nanocav/spectra_sim.hpp"

namespace nanocav {

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<double> sigmas;  // statistical only
    Eigen::MatrixXd covariance;
    double cost = 0;  // weighted sum of squared residuals
    double chi2_reduced = 0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> cost_history;  // initial cost, then after each accepted step

    double param(const std::string& name) const;
    double sigma(const std::string& name) const;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PeakDetectionFailed : public FitError {
public:
    using FitError::FitError;
};

class WindowTooShort : public FitError {
public:
    using FitError::FitError;
};

// Carries the best parameters reached before the iteration cap.
class NotConverged : public FitError {
public:
    NotConverged(const std::string& what, FitResult best)
        : FitError(what), best_(std::move(best)) {}
    const FitResult& best() const { return best_; }

private:
    FitResult best_;
};

struct LmOptions {
    double lambda0 = 1e-3;
    double lambda_up = 4.0;
    double lambda_down = 0.5;
    double rel_tol = 1e-10;
    int max_iterations = 200;
    double jacobian_step = 1e-6;  // relative
};

using ModelFn = std::function<double(double x, const std::vector<double>& p)>;

// Minimises sum w_i (y_i - f(x_i, p))^2 with w_i = 1 / max(y_i, 1).
// Throws NotConverged at the iteration cap.
FitResult levenberg_marquardt(const ModelFn& f, const std::vector<double>& x,
                              const std::vector<double>& y, std::vector<double> p0,
                              std::vector<std::string> names, const LmOptions& opt = {});

struct PeakSeed {
    double lambda_nm;
    double height;  // above background
    double fwhm_nm;
    double prominence;
};

// The two most prominent local maxima above background + 3 sigma, in
// wavelength order. Throws PeakDetectionFailed.
std::pair<PeakSeed, PeakSeed> find_doublet_peaks(const Spectrum& spec);

struct DoubletFitOptions {
    bool shared_fwhm = true;
    LmOptions lm{};
};

// Parameters: lambda_minus, lambda_plus, fwhm (or fwhm_minus, fwhm_plus),
// amp_minus, amp_plus, background.
FitResult fit_double_lorentzian(const Spectrum& spec,
                                const std::optional<std::vector<double>>& init = std::nullopt,
                                const DoubletFitOptions& opt = {});

// I(t) = amp exp(-(t - t_start) / tau) + background over bins at or after
// the pulse peak plus t0_offset; t_start is the first bin in the window.
// Parameters: tau, amp, background.
FitResult fit_exponential(const DecayTrace& trace, double t0_offset_ns,
                          const LmOptions& opt = {});

// First fitted bin for a given offset.
std::size_t decay_window_start(const DecayTrace& trace, double t0_offset_ns);

double q_from_linewidth(double lambda0_nm, double fwhm_nm);

// F from the fitted on- and off-resonance lifetimes, with zeta_c and rates
// for an emitter whose bulk lifetime is the off-resonance fit.
PurcellResult extract_enhancement(const FitResult& on, const FitResult& off, double zeta_zpl);

}  // namespace nanocav
