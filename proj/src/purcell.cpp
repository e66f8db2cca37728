#include "nanocav/purcell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nanocav {

namespace {

void check_zeta(double zeta) {
    if (!(zeta >= 0 && zeta < 1)) throw std::invalid_argument("zeta_zpl must lie in [0, 1)");
}

}  // namespace

double purcell_factor(double q, double v_mode, double n_o, double n_d, double field_ratio) {
    if (!(q > 0)) throw std::invalid_argument("q must be positive");
    if (!(v_mode > 0)) throw std::invalid_argument("v_mode must be positive");
    if (!(n_o > 0) || !(n_d > 0)) throw std::invalid_argument("refractive indices must be positive");
    if (!(field_ratio >= 0 && field_ratio <= 1))
        throw std::invalid_argument("field_ratio must lie in [0, 1]");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return 3.0 / (4.0 * pi2) * (n_o / n_d) * (q / v_mode) * field_ratio;
}

double enhanced_rate(double gamma_o, double f_zpl, double zeta_zpl) {
    if (!(gamma_o > 0)) throw std::invalid_argument("gamma_o must be positive");
    if (!(f_zpl >= 0)) throw std::invalid_argument("f_zpl must be non-negative");
    check_zeta(zeta_zpl);
    return gamma_o * (1.0 + f_zpl * zeta_zpl);
}

double branching_fraction(double f_zpl, double zeta_zpl) {
    if (!(f_zpl >= 0)) throw std::invalid_argument("f_zpl must be non-negative");
    check_zeta(zeta_zpl);
    // cavity-channel share F zeta / (1 + F zeta), never below the bulk value
    const double fz = f_zpl * zeta_zpl;
    return std::max(zeta_zpl, fz / (1.0 + fz));
}

Measurement infer_f_from_lifetimes(const Measurement& tau_c, const Measurement& tau_o,
                                   double zeta_zpl) {
    if (!(tau_c.value > 0) || !(tau_o.value > 0))
        throw std::invalid_argument("lifetimes must be positive");
    if (!(zeta_zpl > 0 && zeta_zpl < 1)) throw std::invalid_argument("zeta_zpl must lie in (0, 1)");
    if (tau_c.value > tau_o.value)
        throw std::domain_error("tau_c exceeds tau_o: no enhancement is consistent with the lifetimes");
    const double ratio = tau_o.value / tau_c.value;
    Measurement f;
    f.value = (ratio - 1.0) / zeta_zpl;
    const double d_tau_o = 1.0 / (tau_c.value * zeta_zpl);
    const double d_tau_c = ratio / (tau_c.value * zeta_zpl);
    f.sigma = std::hypot(d_tau_o * tau_o.sigma, d_tau_c * tau_c.sigma);
    return f;
}

double detuned_factor(double f0, double lambda_nv_nm, double lambda_mode_nm, double fwhm_nm) {
    if (!(fwhm_nm > 0)) throw std::invalid_argument("fwhm must be positive");
    const double x = 2.0 * (lambda_nv_nm - lambda_mode_nm) / fwhm_nm;
    return f0 / (1.0 + x * x);
}

PurcellResult purcell_result(const EmitterSpec& nv, const Measurement& f_zpl) {
    PurcellResult r;
    r.f_zpl = f_zpl.value;
    r.f_sigma = f_zpl.sigma;
    r.gamma_c = enhanced_rate(1.0 / nv.tau_bulk_ns, f_zpl.value, nv.zeta_zpl);
    r.tau_c = 1.0 / r.gamma_c;
    r.zeta_c = branching_fraction(f_zpl.value, nv.zeta_zpl);
    return r;
}

}  // namespace nanocav
