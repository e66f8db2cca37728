// nanocav command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <regex>

#include "nanocav/io.hpp"
#include "nanocav/pipeline.hpp"
#include "nanocav/purcell.hpp"
#include "nanocav/seed.hpp"

namespace fs = std::filesystem;
using namespace nanocav;

namespace {

enum Exit { kOk = 0, kValidation = 1, kPhysics = 2, kNotConverged = 3 };

struct Common {
    std::string config;
    std::string out;
    long long seed = -1;
    int threads = 0;
};

void add_common(CLI::App* app, Common& c, bool with_seed) {
    app->add_option("-c,--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("-o,--out", c.out, "output directory (overrides config and environment)");
    if (with_seed) app->add_option("--seed", c.seed, "seed when no config file is given");
}

RunConfig load(const Common& c, bool needs_seed) {
    RunConfig cfg;
    if (!c.config.empty()) {
        cfg = read_config(c.config);
    } else {
        json j = json::object();
        if (c.seed >= 0) j["seed"] = c.seed;
        else if (!needs_seed) j["seed"] = 0;
        cfg = config_from_json(j);
    }
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.threads > 0) cfg.threads = c.threads;
    return cfg;
}

Polarization parse_pol(const std::string& s) {
    if (s == "te") return Polarization::TE;
    if (s == "tm") return Polarization::TM;
    throw ValidationError("--pol must be te or tm");
}

Band parse_band(const std::string& s) {
    static const std::regex re(R"(^\s*([0-9.]+)\s*-\s*([0-9.]+)\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw ValidationError("--band must look like 600-680");
    Band b{std::stod(m[1]), std::stod(m[2])};
    if (!(b.hi_nm > b.lo_nm)) throw ValidationError("--band needs lo < hi");
    return b;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

void finish(const Manifest& m, const fs::path& dir) { m.write(dir / "manifest.json"); }

int cmd_solve(const Common& c, int m, const std::string& pol, const std::string& band,
              double dr, const std::string& geometry_file, bool no_calibrate) {
    RunConfig cfg = load(c, false);
    if (!band.empty()) cfg.solve.band = parse_band(band);
    if (dr > 0) cfg.solve.dr_nm = dr;
    if (no_calibrate) cfg.solve.calibration.enabled = false;
    std::optional<DeviceGeometry> geom;
    if (!geometry_file.empty()) {
        const json j = json::parse(read_text_file(geometry_file));
        geom = geometry_from_json(j.contains("geometry") ? j.at("geometry") : j);
    }
    const fs::path dir = cfg.output_dir;
    Manifest manifest(config_hash(cfg));
    const auto res = run_solve(cfg, {{m, parse_pol(pol)}}, dir, manifest, geom);
    finish(manifest, dir);
    const auto& s = res.modes.front();
    print({{"geometry", to_json(res.geometry)},
           {"m", m},
           {"polarization", pol},
           {"lambda0_nm", s.candidate.lambda0_nm},
           {"q", s.candidate.q_total},
           {"q_lower_bound", s.candidate.q_lower_bound},
           {"v_mode", s.v_mode},
           {"eta_dia", s.eta_dia},
           {"n_o", s.n_o},
           {"mode_file", (dir / ("mode_m" + std::to_string(m) + "_" + pol + ".json")).string()}});
    return kOk;
}

struct PurcellArgs {
    double q = -1, v = -1, n_o = -1, n_d = -1, ratio = -1;
    std::string mode;
    double depth_nm = 0, radius_um = -1;
    std::vector<double> dipole;
    double zeta = 0.03, tau_bulk = 11.6;
};

int cmd_purcell(const Common& c, const PurcellArgs& a) {
    RunConfig cfg = load(c, false);
    double q = a.q, v = a.v, n_o = a.n_o, ratio = a.ratio;
    double n_d = a.n_d > 0 ? a.n_d : cfg.materials.n_dia;
    json extra = json::object();
    if (!a.mode.empty()) {
        const ModeSolution sol = read_mode(a.mode);
        if (q <= 0) q = sol.candidate.q_total;
        if (v <= 0) v = sol.v_mode;
        if (n_o <= 0) n_o = sol.n_o;
        if (a.n_d <= 0) n_d = sol.materials.n_dia;
        if (ratio < 0) {
            EmitterSpec nv;
            nv.depth_nm = a.depth_nm;
            if (a.radius_um > 0) nv.radius_um = a.radius_um;
            else nv.radius_um = sol.fields.r(diamond_peak_cell(sol).first);
            if (!a.dipole.empty()) {
                if (a.dipole.size() != 3) throw ValidationError("--dipole needs 3 components");
                nv.dipole = {a.dipole[0], a.dipole[1], a.dipole[2]};
            }
            require_valid(validate(nv), "emitter");
            ratio = field_at_emitter(sol, nv);
            extra = {{"emitter_radius_um", nv.radius_um}, {"emitter_depth_nm", nv.depth_nm}};
        }
    }
    if (q <= 0 || v <= 0 || n_o <= 0 || ratio < 0)
        throw ValidationError("need --q, --v, --n-o and --ratio, or --mode");
    const double f = purcell_factor(q, v, n_o, n_d, ratio);
    EmitterSpec nv;
    nv.zeta_zpl = a.zeta;
    nv.tau_bulk_ns = a.tau_bulk;
    json out = {{"format_version", kFormatVersion},
                {"q", q},
                {"v_mode", v},
                {"n_o", n_o},
                {"n_d", n_d},
                {"field_ratio", ratio},
                {"result", to_json(purcell_result(nv, {f, 0.0}))}};
    out.update(extra);
    print(out);
    return kOk;
}

int cmd_synth(const Common& c, const std::string& what) {
    RunConfig cfg = load(c, true);
    const fs::path dir = cfg.output_dir;
    Manifest manifest(config_hash(cfg));
    if (what == "spectrum") {
        const auto s = synth_doublet_spectrum(cfg.doublet, cfg.tuning.zpl_lines, cfg.spectrum,
                                              derive_seed(cfg.seed, "synth/spectrum"));
        write_text_file(dir / "spectrum.csv", write_csv(to_table(s)));
        manifest.add({"synth spectrum", {}, {"spectrum.csv"}, 0});
    } else if (what == "decay") {
        for (const char* label : {"on", "off"}) {
            const auto& p = std::string(label) == "on" ? cfg.fig3.on : cfg.fig3.off;
            const auto t = synth_decay(p, derive_seed(cfg.seed, std::string("fig3/") + label));
            const std::string name = std::string("decay_") + label + ".csv";
            write_text_file(dir / name, write_csv(to_table(t)));
            manifest.add({"synth decay " + std::string(label), {}, {name}, 0});
        }
    } else {
        const auto map = tuning_map(cfg.tuning, cfg.doublet, cfg.spectrum, cfg.seed, false, cfg.threads);
        write_text_file(dir / "tuning_map.csv", write_csv(tuning_table(map)));
        json events = json::array();
        for (const auto& e : map.events) events.push_back(to_json(e));
        write_text_file(dir / "crossings.json",
                        json({{"format_version", kFormatVersion}, {"events", events}}).dump(2) + "\n");
        manifest.add({"synth tuning", {}, {"tuning_map.csv", "crossings.json"}, 0});
    }
    finish(manifest, dir);
    return kOk;
}

int cmd_fit(const Common& c, const std::string& what, const std::string& input, double t0,
            bool unshared, double rep_period) {
    RunConfig cfg = load(c, false);
    json out;
    if (what == "spectrum") {
        DoubletFitOptions fo;
        fo.shared_fwhm = !unshared && cfg.fit.shared_fwhm;
        const FitResult r = fit_double_lorentzian(spectrum_from_table(read_csv_file(input)), std::nullopt, fo);
        out = to_json(r);
        const double w = fo.shared_fwhm ? r.param("fwhm") : 0.5 * (r.param("fwhm_minus") + r.param("fwhm_plus"));
        out["q_from_linewidth"] = q_from_linewidth(0.5 * (r.param("lambda_minus") + r.param("lambda_plus")), w);
    } else {
        const double off = t0 >= 0 ? t0 : cfg.fit.t0_offset_ns;
        out = to_json(fit_exponential(trace_from_table(read_csv_file(input), rep_period), off));
        out["t0_offset_ns"] = off;
    }
    out["input"] = input;
    print(out);
    return kOk;
}

int cmd_pipeline(const Common& c, const std::string& what, const std::string& preset, double zeta) {
    RunConfig cfg = load(c, true);
    if (!preset.empty()) cfg.fig3 = fig3_preset(preset);
    if (zeta > 0) {
        if (zeta >= 1) throw ValidationError("--zeta must lie in (0, 1)");
        cfg.fig3.zeta_zpl = zeta;
    }
    const fs::path dir = cfg.output_dir;
    Manifest manifest(config_hash(cfg));
    const json report = what == "fig3" ? run_fig3(cfg, dir, manifest, cfg.threads)
                                       : run_fig2c(cfg, dir, manifest, cfg.threads);
    finish(manifest, dir);
    print(report);
    return kOk;
}

int cmd_report(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ValidationError(dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".json" &&
            (name.rfind("mode_", 0) == 0 || name.find("_report") != std::string::npos))
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("no mode or report files in " + dir);
    for (const auto& f : files) {
        const json j = json::parse(read_text_file(f));
        std::printf("%s\n", f.filename().string().c_str());
        if (j.contains("lambda0_nm")) {
            std::printf("  m=%d %s  lambda0=%.3f nm  Q=%.4g%s  V=%.3f  eta_dia=%.3f  n_o=%.2f\n",
                        j["m"].get<int>(), j["polarization"].get<std::string>().c_str(),
                        j["lambda0_nm"].get<double>(), j["q"].get<double>(),
                        j["q_lower_bound"].get<bool>() ? " (lower bound)" : "", j["v_mode"].get<double>(),
                        j["eta_dia"].get<double>(), j["n_o"].get<double>());
        } else if (j.value("pipeline", "") == "fig3") {
            const auto& p = j["purcell"];
            std::printf("  tau_c=%.3f +- %.3f ns  tau_o=%.3f +- %.3f ns  F=%.2f +- %.2f  zeta_c=%.3f\n",
                        j["tau_c_ns"].get<double>(), j["tau_c_sigma_ns"].get<double>(),
                        j["tau_o_ns"].get<double>(), j["tau_o_sigma_ns"].get<double>(),
                        p["f_zpl"].get<double>(), p["f_sigma"].get<double>(), p["zeta_c"].get<double>());
        } else if (j.value("pipeline", "") == "fig2c") {
            std::printf("  split=%.4f nm  Q-=%.0f  Q+=%.0f  crossings=%zu\n", j["split_nm"].get<double>(),
                        j["q_minus"].get<double>(), j["q_plus"].get<double>(), j["events"].size());
            for (const auto& e : j["events"])
                std::printf("    %s branch x ZPL %.2f nm: cycles %d-%d, x%.2f at cycle %d\n",
                            e["branch"].get<std::string>().c_str(), e["zpl_nm"].get<double>(),
                            e["first_cycle"].get<int>(), e["last_cycle"].get<int>(),
                            e["enhancement"].get<double>(), e["best_cycle"].get<int>());
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ring nanocavity mode solver, Purcell calculator and PL analysis toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Common common;

    auto* solve = app.add_subcommand("solve", "calibrate the geometry and solve one mode");
    add_common(solve, common, false);
    int m = 9;
    std::string pol = "te", band, geometry_file;
    double dr = 0;
    bool no_calibrate = false;
    solve->add_option("--m", m, "azimuthal index")->check(CLI::PositiveNumber);
    solve->add_option("--pol", pol, "te or tm")->check(CLI::IsMember({"te", "tm"}));
    solve->add_option("--band", band, "wavelength band in nm, e.g. 600-680");
    solve->add_option("--dr", dr, "grid step in nm");
    solve->add_option("--geometry", geometry_file, "use this geometry instead of calibrating")
        ->check(CLI::ExistingFile);
    solve->add_flag("--no-calibrate", no_calibrate, "solve the configured geometry as is");

    auto* purcell = app.add_subcommand("purcell", "ZPL Purcell factor from (Q, V, field ratio) or a mode file");
    add_common(purcell, common, false);
    PurcellArgs pa;
    purcell->add_option("--q", pa.q, "total quality factor");
    purcell->add_option("--v", pa.v, "mode volume in (lambda/n_gap)^3");
    purcell->add_option("--n-o", pa.n_o, "index at the field maximum (taken from --mode if given)");
    purcell->add_option("--n-d", pa.n_d, "index at the emitter (default: n_dia)");
    purcell->add_option("--ratio", pa.ratio, "|mu.E(r_nv)|^2 / |E_o|^2");
    purcell->add_option("--mode", pa.mode, "mode JSON written by solve")->check(CLI::ExistingFile);
    purcell->add_option("--depth", pa.depth_nm, "emitter depth below the diamond surface, nm");
    purcell->add_option("--radius", pa.radius_um, "emitter radius, um (default: diamond peak)");
    purcell->add_option("--dipole", pa.dipole, "dipole (r phi z)")->expected(3);
    purcell->add_option("--zeta", pa.zeta, "ZPL fraction of the emission");
    purcell->add_option("--tau-bulk", pa.tau_bulk, "ns");

    auto* synth = app.add_subcommand("synth", "synthesize observables");
    synth->require_subcommand(1);
    std::string synth_what;
    for (const char* w : {"spectrum", "decay", "tuning"}) {
        auto* s = synth->add_subcommand(w);
        add_common(s, common, true);
        s->add_option("--threads", common.threads, "worker threads; results do not depend on it");
        s->callback([&synth_what, w] { synth_what = w; });
    }

    auto* fit = app.add_subcommand("fit", "fit a spectrum or decay CSV");
    fit->require_subcommand(1);
    std::string fit_what, input;
    double t0 = -1, rep = 210.5;
    bool unshared = false;
    for (const char* w : {"spectrum", "decay"}) {
        auto* s = fit->add_subcommand(w);
        add_common(s, common, false);
        s->add_option("-i,--input", input, "CSV to fit")->required()->check(CLI::ExistingFile);
        if (std::string(w) == "spectrum") {
            s->add_flag("--unshared-fwhm", unshared, "fit independent widths");
        } else {
            s->add_option("--t0", t0, "fit origin after the pulse peak, ns");
            s->add_option("--rep-period", rep, "ns");
        }
        s->callback([&fit_what, w] { fit_what = w; });
    }

    auto* pipe = app.add_subcommand("pipeline", "end-to-end figure reproductions");
    pipe->require_subcommand(1);
    std::string pipe_what, preset;
    double zeta = 0;
    for (const char* w : {"fig2c", "fig3"}) {
        auto* s = pipe->add_subcommand(w);
        add_common(s, common, true);
        s->add_option("--threads", common.threads, "worker threads; results do not depend on it");
        if (std::string(w) == "fig3") {
            s->add_option("--preset", preset, "decay preset")->check(CLI::IsMember({"nv1", "nv2"}));
            s->add_option("--zeta", zeta, "ZPL fraction of the emission");
        }
        s->callback([&pipe_what, w] { pipe_what = w; });
    }

    auto* report = app.add_subcommand("report", "summarize mode and pipeline results in a directory");
    std::string report_dir = "out";
    report->add_option("dir", report_dir, "directory to scan (default: out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*solve) return cmd_solve(common, m, pol, band, dr, geometry_file, no_calibrate);
        if (*purcell) return cmd_purcell(common, pa);
        if (*synth) return cmd_synth(common, synth_what);
        if (*fit) return cmd_fit(common, fit_what, input, t0, unshared, rep);
        if (*pipe) return cmd_pipeline(common, pipe_what, preset, zeta);
        if (*report) return cmd_report(report_dir);
    } catch (const NotConverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        print(to_json(e.best()));
        return kNotConverged;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPhysics;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPhysics;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPhysics;
    }
    return kOk;
}
