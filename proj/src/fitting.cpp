#include "nanocav/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nanocav {

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[i];
    throw std::out_of_range("no fit parameter named " + name);
}

double FitResult::sigma(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[i];
    throw std::out_of_range("no fit parameter named " + name);
}

namespace {

struct Problem {
    const ModelFn& f;
    const std::vector<double>& x;
    const std::vector<double>& y;
    std::vector<double> sw;  // sqrt of weights

    Eigen::VectorXd residuals(const std::vector<double>& p) const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = sw[i] * (y[i] - f(x[i], p));
        return r;
    }

    Eigen::MatrixXd jacobian(const std::vector<double>& p, double rel) const {
        Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(p.size()));
        std::vector<double> q = p;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double h = rel * (p[k] != 0 ? std::abs(p[k]) : 1.0);
            q[k] = p[k] + h;
            const Eigen::VectorXd up = residuals(q);
            q[k] = p[k] - h;
            const Eigen::VectorXd dn = residuals(q);
            q[k] = p[k];
            j.col(static_cast<Eigen::Index>(k)) = (up - dn) / (2.0 * h);
        }
        return j;
    }
};

void finish(FitResult& res, const Eigen::MatrixXd& jtj, std::size_t n) {
    const auto np = jtj.rows();
    Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse();
    cov = 0.5 * (cov + cov.transpose());
    res.covariance = cov;
    res.sigmas.resize(static_cast<std::size_t>(np));
    for (Eigen::Index k = 0; k < np; ++k)
        res.sigmas[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, cov(k, k)));
    const double dof = static_cast<double>(n) - static_cast<double>(np);
    res.chi2_reduced = dof > 0 ? res.cost / dof : 0.0;
}

}  // namespace

FitResult levenberg_marquardt(const ModelFn& f, const std::vector<double>& x,
                              const std::vector<double>& y, std::vector<double> p0,
                              std::vector<std::string> names, const LmOptions& opt) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
    if (names.size() != p0.size()) throw std::invalid_argument("one name per parameter");
    if (x.size() <= p0.size()) throw std::invalid_argument("more parameters than data points");

    Problem pr{f, x, y, {}};
    pr.sw.reserve(y.size());
    for (double v : y) pr.sw.push_back(1.0 / std::sqrt(std::max(v, 1.0)));

    FitResult res;
    res.names = std::move(names);
    std::vector<double> p = std::move(p0);
    Eigen::VectorXd r = pr.residuals(p);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) throw FitError("model is not finite at the initial parameters");
    double lambda = opt.lambda0;
    const auto np = static_cast<Eigen::Index>(p.size());

    Eigen::MatrixXd j = pr.jacobian(p, opt.jacobian_step);
    Eigen::MatrixXd jtj = j.transpose() * j;
    bool converged = cost == 0.0;
    res.cost_history.push_back(cost);
    int it = 0;
    while (!converged && it < opt.max_iterations) {
        ++it;
        const Eigen::VectorXd g = j.transpose() * r;
        Eigen::MatrixXd a = jtj;
        for (Eigen::Index k = 0; k < np; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
        // r(p + d) ~ r + J d, so the step solves (J'J + damping) d = -J'r
        const Eigen::VectorXd d = a.ldlt().solve(-g);
        const double predicted = cost - (r + j * d).squaredNorm();

        std::vector<double> trial = p;
        for (Eigen::Index k = 0; k < np; ++k) trial[static_cast<std::size_t>(k)] += d(k);
        const Eigen::VectorXd r_trial = pr.residuals(trial);
        const double c_trial = r_trial.squaredNorm();

        if (std::isfinite(c_trial) && c_trial < cost) {
            const double rel = (cost - c_trial) / cost;
            p = std::move(trial);
            r = r_trial;
            cost = c_trial;
            res.cost_history.push_back(cost);
            lambda *= opt.lambda_down;
            j = pr.jacobian(p, opt.jacobian_step);
            jtj = j.transpose() * j;
            converged = rel < opt.rel_tol || cost == 0.0;
        } else {
            // no step can make meaningful progress from a stationary point
            if (!(predicted > opt.rel_tol * cost)) converged = true;
            lambda *= opt.lambda_up;
        }
    }

    res.params = p;
    res.cost = cost;
    res.iterations = it;
    res.converged = converged;
    finish(res, jtj, x.size());
    if (!converged) {
        std::ostringstream os;
        os << "fit did not converge in " << opt.max_iterations << " iterations";
        throw NotConverged(os.str(), res);
    }
    return res;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double half_max_width(const std::vector<double>& x, const std::vector<double>& y, std::size_t i,
                      double bg) {
    const double level = bg + 0.5 * (y[i] - bg);
    std::size_t l = i, r = i;
    while (l > 0 && y[l] > level) --l;
    while (r + 1 < y.size() && y[r] > level) ++r;
    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (y[a] - level) / (y[a] - y[b]);
        return x[a] + t * (x[b] - x[a]);
    };
    const double xl = y[l] <= level ? cross(l + 1, l) : x[l];
    const double xr = y[r] <= level ? cross(r - 1, r) : x[r];
    return std::max(xr - xl, x[1] - x[0]);
}

}  // namespace

std::pair<PeakSeed, PeakSeed> find_doublet_peaks(const Spectrum& spec) {
    const auto& x = spec.wavelengths;
    const auto& y = spec.counts;
    const std::size_t n = y.size();
    if (n < 3) throw PeakDetectionFailed("spectrum too short for peak detection");
    const double bg = median(y);
    const double threshold = bg + 3.0 * std::sqrt(std::max(bg, 1.0));

    std::vector<PeakSeed> found;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1]) || y[i] <= threshold) continue;
        // prominence: height above the higher of the two bases
        double left_min = y[i], right_min = y[i];
        for (std::size_t k = i; k-- > 0;) {
            if (y[k] > y[i]) break;
            left_min = std::min(left_min, y[k]);
        }
        for (std::size_t k = i + 1; k < n; ++k) {
            if (y[k] > y[i]) break;
            right_min = std::min(right_min, y[k]);
        }
        found.push_back({x[i], y[i] - bg, half_max_width(x, y, i, bg),
                         y[i] - std::max(left_min, right_min)});
    }
    if (found.size() < 2) {
        std::ostringstream os;
        os << "found " << found.size() << " local maxima above background + 3 sigma ("
           << threshold << " counts); need 2";
        throw PeakDetectionFailed(os.str());
    }
    std::stable_sort(found.begin(), found.end(), [](const PeakSeed& a, const PeakSeed& b) {
        if (a.prominence != b.prominence) return a.prominence > b.prominence;
        return a.lambda_nm < b.lambda_nm;
    });
    PeakSeed a = found[0], b = found[1];
    if (b.lambda_nm < a.lambda_nm) std::swap(a, b);
    return {a, b};
}

FitResult fit_double_lorentzian(const Spectrum& spec, const std::optional<std::vector<double>>& init,
                                const DoubletFitOptions& opt) {
    validate(spec);
    if (spec.counts.size() < 12) throw std::invalid_argument("double Lorentzian fit needs >= 12 samples");

    std::vector<std::string> names;
    ModelFn f;
    if (opt.shared_fwhm) {
        names = {"lambda_minus", "lambda_plus", "fwhm", "amp_minus", "amp_plus", "background"};
        f = [](double x, const std::vector<double>& p) {
            return lorentzian(x, p[0], p[2], p[3]) + lorentzian(x, p[1], p[2], p[4]) + p[5];
        };
    } else {
        names = {"lambda_minus", "lambda_plus", "fwhm_minus", "fwhm_plus",
                 "amp_minus",    "amp_plus",    "background"};
        f = [](double x, const std::vector<double>& p) {
            return lorentzian(x, p[0], p[2], p[4]) + lorentzian(x, p[1], p[3], p[5]) + p[6];
        };
    }

    std::vector<double> p0;
    if (init) {
        if (init->size() != names.size())
            throw std::invalid_argument("initial guess has the wrong number of parameters");
        p0 = *init;
    } else {
        const auto [a, b] = find_doublet_peaks(spec);
        // half-max widths of blended peaks overestimate; cap at the separation
        const double sep = b.lambda_nm - a.lambda_nm;
        const double wa = std::min(a.fwhm_nm, sep), wb = std::min(b.fwhm_nm, sep);
        const double bg = median(spec.counts);
        if (opt.shared_fwhm)
            p0 = {a.lambda_nm, b.lambda_nm, 0.5 * (wa + wb), a.height, b.height, bg};
        else
            p0 = {a.lambda_nm, b.lambda_nm, wa, wb, a.height, b.height, bg};
    }
    return levenberg_marquardt(f, spec.wavelengths, spec.counts, p0, names, opt.lm);
}

std::size_t decay_window_start(const DecayTrace& trace, double t0_offset_ns) {
    if (!(t0_offset_ns >= 0)) throw std::invalid_argument("t0_offset must be non-negative");
    if (trace.counts.empty()) throw WindowTooShort("empty decay trace");
    const auto peak = static_cast<std::size_t>(
        std::max_element(trace.counts.begin(), trace.counts.end()) - trace.counts.begin());
    const double t_min = trace.times[peak] + t0_offset_ns;
    std::size_t i = peak;
    while (i < trace.times.size() && trace.times[i] < t_min - 1e-9) ++i;
    return i;
}

FitResult fit_exponential(const DecayTrace& trace, double t0_offset_ns, const LmOptions& opt) {
    validate(trace);
    const std::size_t start = decay_window_start(trace, t0_offset_ns);
    const std::size_t n = trace.times.size() - std::min(start, trace.times.size());
    if (n < 20) {
        std::ostringstream os;
        os << "only " << n << " bins after the fit origin; need 20";
        throw WindowTooShort(os.str());
    }
    const double t_start = trace.times[start];
    std::vector<double> x(trace.times.begin() + static_cast<long>(start), trace.times.end());
    std::vector<double> y(trace.counts.begin() + static_cast<long>(start), trace.counts.end());
    for (double& v : x) v -= t_start;

    // initial guesses: tail mean for the background, log-linear regression for tau
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    const double bg0 = std::accumulate(y.end() - static_cast<long>(tail), y.end(), 0.0) / tail;
    const double top = y.front() - bg0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = y[i] - bg0;
        if (!(v > std::max(1.0, 0.05 * top))) continue;
        const double ly = std::log(v);
        sx += x[i];
        sy += ly;
        sxx += x[i] * x[i];
        sxy += x[i] * ly;
        cnt += 1;
    }
    double tau0 = 0.2 * x.back();
    double amp0 = std::max(top, 1.0);
    if (cnt >= 3) {
        const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        if (slope < 0) {
            tau0 = -1.0 / slope;
            amp0 = std::exp((sy - slope * sx) / cnt);
        }
    }

    ModelFn f = [](double t, const std::vector<double>& p) {
        return p[1] * std::exp(-t / p[0]) + p[2];
    };
    return levenberg_marquardt(f, x, y, {tau0, amp0, bg0}, {"tau", "amp", "background"}, opt);
}

double q_from_linewidth(double lambda0_nm, double fwhm_nm) {
    if (!(fwhm_nm > 0)) throw std::invalid_argument("fwhm must be positive");
    return lambda0_nm / fwhm_nm;
}

PurcellResult extract_enhancement(const FitResult& on, const FitResult& off, double zeta_zpl) {
    if (!on.converged || !off.converged) throw FitError("extract_enhancement needs converged fits");
    const Measurement tau_c{on.param("tau"), on.sigma("tau")};
    const Measurement tau_o{off.param("tau"), off.sigma("tau")};
    const Measurement f = infer_f_from_lifetimes(tau_c, tau_o, zeta_zpl);
    EmitterSpec nv;
    nv.tau_bulk_ns = tau_o.value;
    nv.zeta_zpl = zeta_zpl;
    return purcell_result(nv, f);
}

}  // namespace nanocav
