#pragma once

// Bad-cavity Purcell enhancement of the zero-phonon line and the conversions
// between enhancement, rates, lifetimes and branching fractions.

#include "nanocav/geometry.hpp"

namespace nanocav {

// A value with its one-sigma uncertainty.
struct Measurement {
    double value = 0;
    double sigma = 0;
};

struct PurcellResult {
    double f_zpl = 0;
    double f_sigma = 0;
    double gamma_c = 0;  // 1/ns
    double tau_c = 0;    // ns
    double zeta_c = 0;
};

// F = 3/(4 pi^2) (n_o/n_d) (q/v_mode) field_ratio, v_mode in (lambda/n_gap)^3.
double purcell_factor(double q, double v_mode, double n_o, double n_d, double field_ratio);

// gamma_c = gamma_o (1 + F zeta)
double enhanced_rate(double gamma_o, double f_zpl, double zeta_zpl);

// max(zeta, F zeta / (1 + F zeta)): fraction of emission into the ZPL.
double branching_fraction(double f_zpl, double zeta_zpl);

// F = (tau_o / tau_c - 1) / zeta with first-order error propagation.
// Throws std::domain_error when tau_c > tau_o.
Measurement infer_f_from_lifetimes(const Measurement& tau_c, const Measurement& tau_o,
                                   double zeta_zpl);

// Lorentzian cavity filter: f0 / (1 + (2 (lambda_nv - lambda_mode) / fwhm)^2).
double detuned_factor(double f0, double lambda_nv_nm, double lambda_mode_nm, double fwhm_nm);

// Rates and branching for an emitter with enhancement F.
PurcellResult purcell_result(const EmitterSpec& nv, const Measurement& f_zpl);

}  // namespace nanocav
