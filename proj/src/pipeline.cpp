#include "nanocav/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "nanocav/parallel.hpp"
#include "nanocav/seed.hpp"

namespace nanocav {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

json calibration_key(const RunConfig& cfg) {
    const auto& c = cfg.solve.calibration;
    return {{"start", to_json(cfg.geometry)},
            {"materials", {cfg.materials.n_gap, cfg.materials.n_dia, cfg.materials.n_air}},
            {"dr_nm", cfg.solve.dr_nm},
            {"ringdown_periods", cfg.solve.ringdown_periods},
            {"target_nm", c.target_nm},
            {"m", c.m},
            {"polarization", to_string(c.polarization)},
            {"knob", c.knob == CalibrationKnob::OuterRadius ? "outer_radius" : "wall_width"},
            {"lo", c.lo},
            {"hi", c.hi},
            {"tol_nm", c.tol_nm}};
}

SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions opt;
    opt.ringdown_periods = cfg.solve.ringdown_periods;
    return opt;
}

std::string mode_file_name(const ModeRequest& r) {
    return "mode_m" + std::to_string(r.m) + "_" + to_string(r.polarization) + ".json";
}

}  // namespace

SolveOutcome run_solve(const RunConfig& cfg, const std::vector<ModeRequest>& modes,
                       const fs::path& out_dir, Manifest& manifest,
                       const std::optional<DeviceGeometry>& geometry) {
    SolveOutcome out;
    const SolverOptions opt = solver_options(cfg);
    const auto& cal = cfg.solve.calibration;

    if (geometry) {
        out.geometry = *geometry;
    } else if (!cal.enabled) {
        out.geometry = cfg.geometry;
    } else {
        const fs::path cal_path = out_dir / "calibrated_geometry.json";
        const json key = calibration_key(cfg);
        bool cached = false;
        if (fs::exists(cal_path)) {
            try {
                const json j = json::parse(read_text_file(cal_path));
                if (j.at("key") == key) {
                    out.geometry = geometry_from_json(j.at("geometry"));
                    cached = true;
                }
            } catch (const std::exception&) {
                cached = false;
            }
        }
        if (!cached) {
            Stopwatch sw;
            const auto res = calibrate(cfg.geometry, cfg.materials, cfg.solve.dr_nm, cal.m,
                                       cal.polarization, cal.target_nm, cal.knob, cal.lo, cal.hi,
                                       cal.tol_nm, opt);
            out.geometry = res.geometry;
            const json j = {{"format_version", kFormatVersion},
                            {"key", key},
                            {"geometry", to_json(res.geometry)},
                            {"lambda0_nm", res.mode.lambda0_nm},
                            {"q", res.mode.q_total},
                            {"evaluations", res.evaluations}};
            write_text_file(cal_path, j.dump(2) + "\n");
            manifest.add({"calibrate", {}, {cal_path.filename().string()}, sw.seconds()});
        }
        out.files.push_back(cal_path);
    }

    for (const auto& req : modes) {
        Stopwatch sw;
        const auto grid = default_grid(out.geometry, cfg.solve.dr_nm,
                                       std::max(cfg.solve.band.hi_nm, opt.source_center_nm));
        const auto cands = solve_modes(out.geometry, cfg.materials, grid, req.m, req.polarization,
                                       cfg.solve.band, opt);
        const auto sol = mode_profile(out.geometry, cfg.materials, grid, req.m, dominant(cands), opt);
        const fs::path p = out_dir / mode_file_name(req);
        write_mode(p, sol, out.geometry);
        const std::string fields = p.stem().string() + "_fields.csv";
        manifest.add({"solve " + p.stem().string(), {}, {p.filename().string(), fields}, sw.seconds()});
        out.files.push_back(p);
        out.files.push_back(out_dir / fields);
        out.modes.push_back(sol);
    }
    return out;
}

json run_fig3(const RunConfig& cfg, const fs::path& out_dir, Manifest& manifest, int threads) {
    Stopwatch sw;
    const std::array<const DecayParams*, 2> params{&cfg.fig3.on, &cfg.fig3.off};
    const std::array<const char*, 2> labels{"on", "off"};
    std::array<DecayTrace, 2> traces;
    std::array<FitResult, 2> fits;
    parallel_for(2, threads, [&](std::size_t k) {
        traces[k] = synth_decay(*params[k], derive_seed(cfg.seed, std::string("fig3/") + labels[k]));
        fits[k] = fit_exponential(traces[k], cfg.fit.t0_offset_ns);
    });
    std::vector<std::string> outputs;
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string csv = std::string("decay_") + labels[k] + ".csv";
        const std::string fit = std::string("fit_") + labels[k] + ".json";
        write_text_file(out_dir / csv, write_csv(to_table(traces[k])));
        write_text_file(out_dir / fit, to_json(fits[k]).dump(2) + "\n");
        outputs.push_back(csv);
        outputs.push_back(fit);
    }
    const PurcellResult pr = extract_enhancement(fits[0], fits[1], cfg.fig3.zeta_zpl);
    json report = {{"format_version", kFormatVersion},
                   {"pipeline", "fig3"},
                   {"seed", cfg.seed},
                   {"t0_offset_ns", cfg.fit.t0_offset_ns},
                   {"zeta_zpl", cfg.fig3.zeta_zpl},
                   {"tau_c_ns", fits[0].param("tau")},
                   {"tau_c_sigma_ns", fits[0].sigma("tau")},
                   {"tau_o_ns", fits[1].param("tau")},
                   {"tau_o_sigma_ns", fits[1].sigma("tau")},
                   {"purcell", to_json(pr)}};
    write_text_file(out_dir / "fig3_report.json", report.dump(2) + "\n");
    outputs.push_back("fig3_report.json");
    manifest.add({"pipeline fig3", {}, outputs, sw.seconds()});
    return report;
}

json run_fig2c(const RunConfig& cfg, const fs::path& out_dir, Manifest& manifest, int threads) {
    Stopwatch sw;
    const TuningMap map = tuning_map(cfg.tuning, cfg.doublet, cfg.spectrum, cfg.seed, false, threads);
    write_text_file(out_dir / "tuning_map.csv", write_csv(tuning_table(map)));
    json events = json::array();
    for (const auto& e : map.events) events.push_back(to_json(e));
    json branches = json::array();
    for (std::size_t k = 0; k < map.rows.size(); ++k)
        branches.push_back({{"cycle", k}, {"lambda_minus", map.lambda_minus[k]}, {"lambda_plus", map.lambda_plus[k]}});
    write_text_file(out_dir / "crossings.json",
                    json({{"format_version", kFormatVersion}, {"events", events}, {"branches", branches}})
                            .dump(2) + "\n");

    // doublet alone, away from the ZPLs, to read off the linewidth
    SpectrumOptions so = cfg.spectrum;
    so.grid = {cfg.doublet.lambda0_nm - 0.6, cfg.doublet.lambda0_nm + 0.6, 0.005};
    const Spectrum s = synth_doublet_spectrum(cfg.doublet, {}, so, derive_seed(cfg.seed, "fig2c/doublet"));
    write_text_file(out_dir / "doublet_spectrum.csv", write_csv(to_table(s)));
    DoubletFitOptions fo;
    fo.shared_fwhm = cfg.fit.shared_fwhm;
    const FitResult fit = fit_double_lorentzian(s, std::nullopt, fo);
    write_text_file(out_dir / "doublet_fit.json", to_json(fit).dump(2) + "\n");

    const double w_minus = fo.shared_fwhm ? fit.param("fwhm") : fit.param("fwhm_minus");
    const double w_plus = fo.shared_fwhm ? fit.param("fwhm") : fit.param("fwhm_plus");
    json report = {{"format_version", kFormatVersion},
                   {"pipeline", "fig2c"},
                   {"seed", cfg.seed},
                   {"events", events},
                   {"split_nm", fit.param("lambda_plus") - fit.param("lambda_minus")},
                   {"q_minus", q_from_linewidth(fit.param("lambda_minus"), w_minus)},
                   {"q_plus", q_from_linewidth(fit.param("lambda_plus"), w_plus)}};
    write_text_file(out_dir / "fig2c_report.json", report.dump(2) + "\n");
    manifest.add({"pipeline fig2c",
                  {},
                  {"tuning_map.csv", "crossings.json", "doublet_spectrum.csv", "doublet_fit.json",
                   "fig2c_report.json"},
                  sw.seconds()});
    return report;
}

}  // namespace nanocav
