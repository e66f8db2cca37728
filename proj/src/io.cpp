#include "nanocav/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "nanocav/seed.hpp"

namespace nanocav {

namespace fs = std::filesystem;

namespace {

// Object reader that rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_ + ": expected an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ValidationError(path_ + ": unknown key \"" + k + "\"");
    }

    bool has(const std::string& k) {
        used_.insert(k);
        return j_.contains(k);
    }
    template <class T>
    void get(const std::string& k, T& out) {
        if (!has(k)) return;
        try {
            out = j_.at(k).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(path_ + "." + k + ": wrong type");
        }
    }
    const json& at(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }
    std::string sub(const std::string& k) const { return path_ + "." + k; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void check(const Violations& v, const std::string& what) {
    if (v.empty()) return;
    std::ostringstream os;
    os << "invalid " << what << ":";
    for (const auto& x : v) os << " [" << x.field << ": " << x.rule << "]";
    throw ValidationError(os.str());
}

Polarization polarization_from(const std::string& s) {
    if (s == "te") return Polarization::TE;
    if (s == "tm") return Polarization::TM;
    throw ValidationError("polarization must be \"te\" or \"tm\", got \"" + s + "\"");
}

void read_decay(const json& j, const std::string& path, DecayParams& p) {
    Section s(j, path);
    s.get("tau_ns", p.tau_ns);
    s.get("amp", p.amp);
    s.get("background", p.background);
    s.get("fast_tau_ns", p.fast_tau_ns);
    s.get("fast_amp", p.fast_amp);
    s.get("rep_period_ns", p.rep_period_ns);
    s.get("bins", p.bins);
    s.get("t_peak_ns", p.t_peak_ns);
    s.get("noise", p.noise);
}

json decay_json(const DecayParams& p) {
    return {{"tau_ns", p.tau_ns},         {"amp", p.amp},
            {"background", p.background}, {"fast_tau_ns", p.fast_tau_ns},
            {"fast_amp", p.fast_amp},     {"rep_period_ns", p.rep_period_ns},
            {"bins", p.bins},             {"t_peak_ns", p.t_peak_ns},
            {"noise", p.noise}};
}

ZplLine read_zpl(const json& j, const std::string& path) {
    ZplLine z;
    Section s(j, path);
    s.get("lambda_nm", z.lambda_nm);
    s.get("brightness", z.brightness);
    s.get("f0", z.f0);
    s.get("w_minus", z.w_minus);
    s.get("w_plus", z.w_plus);
    s.get("fwhm_nm", z.fwhm_nm);
    if (!(z.brightness > 0) || !(z.fwhm_nm > 0) || !(z.f0 >= 0))
        throw ValidationError(path + ": brightness and fwhm_nm must be positive, f0 >= 0");
    return z;
}

json zpl_json(const ZplLine& z) {
    return {{"lambda_nm", z.lambda_nm}, {"brightness", z.brightness}, {"f0", z.f0},
            {"w_minus", z.w_minus},     {"w_plus", z.w_plus},         {"fwhm_nm", z.fwhm_nm}};
}

EmitterSpec read_emitter(const json& j, const std::string& path) {
    EmitterSpec e;
    Section s(j, path);
    s.get("depth_nm", e.depth_nm);
    s.get("radius_um", e.radius_um);
    s.get("azimuth", e.azimuth);
    s.get("dipole", e.dipole);
    s.get("lambda_zpl_nm", e.lambda_zpl_nm);
    s.get("zeta_zpl", e.zeta_zpl);
    s.get("tau_bulk_ns", e.tau_bulk_ns);
    check(validate(e), path);
    return e;
}

json emitter_json(const EmitterSpec& e) {
    return {{"depth_nm", e.depth_nm},           {"radius_um", e.radius_um},
            {"azimuth", e.azimuth},             {"dipole", e.dipole},
            {"lambda_zpl_nm", e.lambda_zpl_nm}, {"zeta_zpl", e.zeta_zpl},
            {"tau_bulk_ns", e.tau_bulk_ns}};
}

std::vector<ZplLine> default_zpl_lines() {
    // NV1 at an antinode of the minus mode, NV2 weaker and off-antinode
    return {ZplLine{637.0, 100.0, 3.15, 2.0, 0.0, 0.02}, ZplLine{637.25, 60.0, 1.9, 1.5, 0.5, 0.02}};
}

}  // namespace

Fig3Spec fig3_preset(const std::string& name) {
    Fig3Spec f;
    f.on.amp = f.off.amp = 1000.0;
    f.on.background = f.off.background = 20.0;
    f.on.fast_amp = f.off.fast_amp = 60.0;
    f.on.fast_tau_ns = f.off.fast_tau_ns = 3.0;
    f.on.bins = f.off.bins = 512;
    if (name == "nv1") {
        f.on.tau_ns = 9.7;
        f.off.tau_ns = 11.6;
    } else if (name == "nv2") {
        f.on.tau_ns = 9.84;
        f.off.tau_ns = 11.0;
    } else {
        throw ValidationError("unknown fig3 preset \"" + name + "\" (expected nv1 or nv2)");
    }
    return f;
}

RunConfig::RunConfig() {
    spectrum.grid = {635.5, 639.0, 0.01};
    spectrum.resolution_nm = 0.02;
    spectrum.background = 20.0;
    tuning.zpl_lines = default_zpl_lines();
    fig3 = fig3_preset("nv1");
}

RunConfig config_from_json(const json& j) {
    RunConfig c;

    Section root(j, "config");
    if (!root.has("seed")) throw ValidationError("seed required");
    {
        const json& s = root.at("seed");
        if (!s.is_number_integer()) throw ValidationError("seed must be an integer");
        c.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                        : static_cast<std::uint64_t>(s.get<std::int64_t>());
    }
    int version = kFormatVersion;
    root.get("format_version", version);
    if (version != kFormatVersion)
        throw ValidationError("unsupported config format_version " + std::to_string(version));
    root.get("output_dir", c.output_dir);
    root.get("threads", c.threads);
    if (c.threads < 1) throw ValidationError("threads must be >= 1");

    if (root.has("geometry")) c.geometry = geometry_from_json(root.at("geometry"));
    if (root.has("materials")) {
        Section s(root.at("materials"), "config.materials");
        s.get("n_gap", c.materials.n_gap);
        s.get("n_dia", c.materials.n_dia);
        s.get("n_air", c.materials.n_air);
    }
    check(validate(c.materials), "materials");

    if (root.has("solve")) {
        Section s(root.at("solve"), "config.solve");
        if (s.has("band")) {
            std::array<double, 2> b{};
            s.get("band", b);
            c.solve.band = {b[0], b[1]};
        }
        s.get("dr_nm", c.solve.dr_nm);
        s.get("ringdown_periods", c.solve.ringdown_periods);
        if (s.has("calibration")) {
            auto& cal = c.solve.calibration;
            Section k(s.at("calibration"), "config.solve.calibration");
            k.get("enabled", cal.enabled);
            k.get("target_nm", cal.target_nm);
            k.get("m", cal.m);
            if (k.has("polarization")) cal.polarization = polarization_from(k.at("polarization").get<std::string>());
            if (k.has("knob")) {
                const auto v = k.at("knob").get<std::string>();
                if (v == "outer_radius") cal.knob = CalibrationKnob::OuterRadius;
                else if (v == "wall_width") cal.knob = CalibrationKnob::WallWidth;
                else throw ValidationError("knob must be outer_radius or wall_width");
            }
            k.get("lo", cal.lo);
            k.get("hi", cal.hi);
            k.get("tol_nm", cal.tol_nm);
        }
        if (!(c.solve.dr_nm > 0)) throw ValidationError("solve.dr_nm must be positive");
    }

    if (root.has("emitters")) {
        const json& arr = root.at("emitters");
        if (!arr.is_array()) throw ValidationError("config.emitters: expected an array");
        c.emitters.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            c.emitters.push_back(read_emitter(arr[i], "config.emitters[" + std::to_string(i) + "]"));
    }

    if (root.has("doublet")) {
        Section s(root.at("doublet"), "config.doublet");
        s.get("lambda0_nm", c.doublet.lambda0_nm);
        s.get("split_nm", c.doublet.split_nm);
        s.get("fwhm_nm", c.doublet.fwhm_nm);
        s.get("phase0", c.doublet.phase0);
        s.get("amp_minus", c.doublet.amp_minus);
        s.get("amp_plus", c.doublet.amp_plus);
    }
    try {
        validate(c.doublet);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }

    if (root.has("spectrum")) {
        Section s(root.at("spectrum"), "config.spectrum");
        s.get("lo_nm", c.spectrum.grid.lo_nm);
        s.get("hi_nm", c.spectrum.grid.hi_nm);
        s.get("step_nm", c.spectrum.grid.step_nm);
        s.get("resolution_nm", c.spectrum.resolution_nm);
        s.get("background", c.spectrum.background);
        s.get("noise", c.spectrum.noise);
    }
    if (!(c.spectrum.grid.step_nm > 0) || !(c.spectrum.grid.hi_nm > c.spectrum.grid.lo_nm) ||
        !(c.spectrum.resolution_nm >= 0) || !(c.spectrum.background >= 0))
        throw ValidationError("config.spectrum: need lo < hi, step > 0, resolution >= 0, background >= 0");

    if (root.has("tuning")) {
        Section s(root.at("tuning"), "config.tuning");
        s.get("cycles", c.tuning.cycles);
        s.get("shift_te", c.tuning.shift_te);
        s.get("shift_tm", c.tuning.shift_tm);
        s.get("start_lambda0", c.tuning.start_lambda0);
        if (s.has("zpl_lines")) {
            const json& arr = s.at("zpl_lines");
            if (!arr.is_array()) throw ValidationError("config.tuning.zpl_lines: expected an array");
            c.tuning.zpl_lines.clear();
            for (std::size_t i = 0; i < arr.size(); ++i)
                c.tuning.zpl_lines.push_back(
                    read_zpl(arr[i], "config.tuning.zpl_lines[" + std::to_string(i) + "]"));
        }
    }
    if (c.tuning.cycles < 1 || !(c.tuning.shift_te >= 0) || !(c.tuning.shift_tm >= 0))
        throw ValidationError("config.tuning: need cycles >= 1 and non-negative shifts");

    if (root.has("fig3")) {
        Section s(root.at("fig3"), "config.fig3");
        if (s.has("preset")) c.fig3 = fig3_preset(s.at("preset").get<std::string>());
        if (s.has("on")) read_decay(s.at("on"), "config.fig3.on", c.fig3.on);
        if (s.has("off")) read_decay(s.at("off"), "config.fig3.off", c.fig3.off);
        s.get("zeta_zpl", c.fig3.zeta_zpl);
        if (!(c.fig3.zeta_zpl > 0 && c.fig3.zeta_zpl < 1))
            throw ValidationError("config.fig3.zeta_zpl must lie in (0, 1)");
    }

    if (root.has("fit")) {
        Section s(root.at("fit"), "config.fit");
        s.get("t0_offset_ns", c.fit.t0_offset_ns);
        s.get("shared_fwhm", c.fit.shared_fwhm);
        if (!(c.fit.t0_offset_ns >= 0)) throw ValidationError("fit.t0_offset_ns must be >= 0");
    }

    if (const char* env = std::getenv(kOutputDirEnv); env && *env) c.output_dir = env;
    return c;
}

RunConfig read_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

json to_json(const DeviceGeometry& g) {
    return {{"outer_radius", g.outer_radius},
            {"wall_width", g.wall_width},
            {"gap_thickness", g.gap_thickness},
            {"etch_depth", g.etch_depth}};
}

DeviceGeometry geometry_from_json(const json& j) {
    DeviceGeometry g;
    Section s(j, "geometry");
    s.get("outer_radius", g.outer_radius);
    s.get("wall_width", g.wall_width);
    s.get("gap_thickness", g.gap_thickness);
    s.get("etch_depth", g.etch_depth);
    s.has("format_version");
    check(validate(g), "geometry");
    return g;
}

json to_json(const RunConfig& c) {
    json emitters = json::array();
    for (const auto& e : c.emitters) emitters.push_back(emitter_json(e));
    json zpl = json::array();
    for (const auto& z : c.tuning.zpl_lines) zpl.push_back(zpl_json(z));
    const auto& cal = c.solve.calibration;
    return {
        {"format_version", kFormatVersion},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"threads", c.threads},
        {"geometry", to_json(c.geometry)},
        {"materials", {{"n_gap", c.materials.n_gap}, {"n_dia", c.materials.n_dia}, {"n_air", c.materials.n_air}}},
        {"solve",
         {{"band", {c.solve.band.lo_nm, c.solve.band.hi_nm}},
          {"dr_nm", c.solve.dr_nm},
          {"ringdown_periods", c.solve.ringdown_periods},
          {"calibration",
           {{"enabled", cal.enabled},
            {"target_nm", cal.target_nm},
            {"m", cal.m},
            {"polarization", to_string(cal.polarization)},
            {"knob", cal.knob == CalibrationKnob::OuterRadius ? "outer_radius" : "wall_width"},
            {"lo", cal.lo},
            {"hi", cal.hi},
            {"tol_nm", cal.tol_nm}}}}},
        {"emitters", emitters},
        {"doublet",
         {{"lambda0_nm", c.doublet.lambda0_nm},
          {"split_nm", c.doublet.split_nm},
          {"fwhm_nm", c.doublet.fwhm_nm},
          {"phase0", c.doublet.phase0},
          {"amp_minus", c.doublet.amp_minus},
          {"amp_plus", c.doublet.amp_plus}}},
        {"spectrum",
         {{"lo_nm", c.spectrum.grid.lo_nm},
          {"hi_nm", c.spectrum.grid.hi_nm},
          {"step_nm", c.spectrum.grid.step_nm},
          {"resolution_nm", c.spectrum.resolution_nm},
          {"background", c.spectrum.background},
          {"noise", c.spectrum.noise}}},
        {"tuning",
         {{"cycles", c.tuning.cycles},
          {"shift_te", c.tuning.shift_te},
          {"shift_tm", c.tuning.shift_tm},
          {"start_lambda0", c.tuning.start_lambda0},
          {"zpl_lines", zpl}}},
        {"fig3", {{"on", decay_json(c.fig3.on)}, {"off", decay_json(c.fig3.off)}, {"zeta_zpl", c.fig3.zeta_zpl}}},
        {"fit", {{"t0_offset_ns", c.fit.t0_offset_ns}, {"shared_fwhm", c.fit.shared_fwhm}}},
    };
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

std::string config_hash(const RunConfig& cfg) {
    json j = to_json(cfg);
    j.erase("output_dir");  // where results go does not change them
    j.erase("threads");
    return hex64(label_hash(j.dump()));
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), end);
}

Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ValidationError("line " + std::to_string(lineno) + ": " + msg);
    };
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        for (;;) {
            const auto pos = s.find(',', start);
            out.push_back(s.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return out;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line.empty()) fail("missing header row");
            t.header = split(line);
            continue;
        }
        if (line.empty()) fail("empty row");
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            fail("expected " + std::to_string(t.header.size()) + " columns, found " +
                 std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            double v = 0;
            const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || p != c.data() + c.size() || c.empty())
                fail("not a number: \"" + c + "\"");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ValidationError("line 1: missing header row");
    return t;
}

std::string write_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) out += ',';
        out += t.header[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Table read_csv_file(const fs::path& path) {
    try {
        return parse_csv(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

namespace {

void require_columns(const Table& t, std::initializer_list<const char*> names) {
    std::vector<std::string> want(names.begin(), names.end());
    if (t.header != want) {
        std::string s;
        for (const auto& n : want) s += (s.empty() ? "" : ",") + n;
        throw ValidationError("line 1: expected header \"" + s + "\"");
    }
}

}  // namespace

Spectrum spectrum_from_table(const Table& t) {
    require_columns(t, {"wavelength_nm", "counts"});
    Spectrum s;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double w = t.rows[i][0], c = t.rows[i][1];
        const auto line = std::to_string(i + 2);
        if (i > 0 && !(w > s.wavelengths.back()))
            throw ValidationError("line " + line + ": wavelengths not strictly increasing");
        if (!(c >= 0)) throw ValidationError("line " + line + ": negative counts");
        s.wavelengths.push_back(w);
        s.counts.push_back(c);
    }
    return s;
}

Table to_table(const Spectrum& s) {
    Table t{{"wavelength_nm", "counts"}, {}};
    for (std::size_t i = 0; i < s.counts.size(); ++i) t.rows.push_back({s.wavelengths[i], s.counts[i]});
    return t;
}

DecayTrace trace_from_table(const Table& t, double rep_period_ns) {
    require_columns(t, {"time_ns", "counts"});
    DecayTrace d;
    d.rep_period_ns = rep_period_ns;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double x = t.rows[i][0], c = t.rows[i][1];
        const auto line = std::to_string(i + 2);
        if (i > 0 && !(x > d.times.back()))
            throw ValidationError("line " + line + ": times not strictly increasing");
        if (i > 1) {
            const double w = d.times[1] - d.times[0];
            if (std::abs(x - d.times.back() - w) > 1e-6 * w)
                throw ValidationError("line " + line + ": bins not uniform");
        }
        if (!(c >= 0)) throw ValidationError("line " + line + ": negative counts");
        d.times.push_back(x);
        d.counts.push_back(c);
    }
    return d;
}

Table to_table(const DecayTrace& d) {
    Table t{{"time_ns", "counts"}, {}};
    for (std::size_t i = 0; i < d.counts.size(); ++i) t.rows.push_back({d.times[i], d.counts[i]});
    return t;
}

Table tuning_table(const TuningMap& map) {
    Table t;
    t.header.push_back("cycle");
    for (double w : map.wavelengths) t.header.push_back(format_number(w));
    for (std::size_t k = 0; k < map.rows.size(); ++k) {
        std::vector<double> row{static_cast<double>(k)};
        row.insert(row.end(), map.rows[k].begin(), map.rows[k].end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

json to_json(const FitResult& r) {
    json params = json::object(), sigmas = json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        params[r.names[i]] = r.params[i];
        sigmas[r.names[i]] = r.sigmas[i];
    }
    json cov = json::array();
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < r.covariance.cols(); ++k) row.push_back(r.covariance(i, k));
        cov.push_back(row);
    }
    return {{"format_version", kFormatVersion},
            {"names", r.names},
            {"params", params},
            {"sigmas", sigmas},
            {"sigma_kind", "statistical"},
            {"covariance", cov},
            {"chi2_reduced", r.chi2_reduced},
            {"converged", r.converged},
            {"iterations", r.iterations}};
}

json to_json(const PurcellResult& r) {
    return {{"f_zpl", r.f_zpl},
            {"f_sigma", r.f_sigma},
            {"gamma_c_per_ns", r.gamma_c},
            {"tau_c_ns", r.tau_c},
            {"zeta_c", r.zeta_c}};
}

json to_json(const CrossingEvent& e) {
    return {{"branch", to_string(e.branch)},   {"zpl_index", e.zpl_index},
            {"zpl_nm", e.zpl_nm},              {"first_cycle", e.first_cycle},
            {"last_cycle", e.last_cycle},      {"best_cycle", e.best_cycle},
            {"enhancement", e.enhancement}};
}

namespace {

constexpr std::array<const char*, 18> kFieldColumns = {
    "j",     "i",     "r_um",  "z_um",  "region", "absorber", "er_re", "er_im", "ep_re",
    "ep_im", "ez_re", "ez_im", "hr_re", "hr_im",  "hp_re",    "hp_im", "hz_re", "hz_im"};

fs::path field_path_for(const fs::path& json_path) {
    return json_path.parent_path() / (json_path.stem().string() + "_fields.csv");
}

}  // namespace

void write_mode(const fs::path& json_path, const ModeSolution& sol, const DeviceGeometry& geom) {
    const FieldGrid& f = sol.fields;
    const fs::path fields = field_path_for(json_path);
    Table t;
    t.header.assign(kFieldColumns.begin(), kFieldColumns.end());
    t.rows.reserve(f.cells.size());
    for (int j = 0; j < f.nz; ++j) {
        for (int i = 0; i < f.nr; ++i) {
            const auto k = f.index(i, j);
            const auto& c = f.cells[k];
            std::vector<double> row{static_cast<double>(j), static_cast<double>(i), f.r(i), f.z(j),
                                    static_cast<double>(f.region[k]),
                                    static_cast<double>(f.absorber[k])};
            for (const auto& v : c.e) {
                row.push_back(v.real());
                row.push_back(v.imag());
            }
            for (const auto& v : c.h) {
                row.push_back(v.real());
                row.push_back(v.imag());
            }
            t.rows.push_back(std::move(row));
        }
    }
    write_text_file(fields, write_csv(t));

    const auto& c = sol.candidate;
    json j = {
        {"format_version", kFormatVersion},
        {"m", c.m},
        {"polarization", to_string(c.polarization)},
        {"lambda0_nm", c.lambda0_nm},
        {"q", c.q_total},
        {"q_lower_bound", c.q_lower_bound},
        {"amplitude", c.amplitude},
        {"v_mode", sol.v_mode},
        {"v_mode_units", "(lambda0/n_gap)^3, standing-wave peak"},
        {"eta_dia", sol.eta_dia},
        {"n_o", sol.n_o},
        {"peak_cell", {sol.peak_cell.first, sol.peak_cell.second}},
        {"grid", {{"nr", f.nr}, {"nz", f.nz}, {"r0_um", f.r0}, {"z0_um", f.z0}, {"dr_um", f.dr}, {"dz_um", f.dz}}},
        {"geometry", to_json(geom)},
        {"materials", {{"n_gap", sol.materials.n_gap}, {"n_dia", sol.materials.n_dia}, {"n_air", sol.materials.n_air}}},
        {"field_file", fields.filename().string()},
        {"field_layout",
         "CSV, one row per cell, z-major (j outer, i inner); region 0 air, 1 GaP, 2 diamond; "
         "complex cell-centred E and H as (re, im) pairs in the order r, phi, z; "
         "traveling-wave field is (e_r, i e_phi, e_z) exp(-i m phi)"},
    };
    write_text_file(json_path, j.dump(2) + "\n");
}

ModeSolution read_mode(const fs::path& json_path) {
    json j;
    try {
        j = json::parse(read_text_file(json_path));
    } catch (const json::parse_error& e) {
        throw ValidationError(json_path.string() + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw ValidationError(json_path.string() + ": unsupported format_version");
        ModeSolution sol;
        auto& c = sol.candidate;
        c.m = j.at("m").get<int>();
        c.polarization = polarization_from(j.at("polarization").get<std::string>());
        c.lambda0_nm = j.at("lambda0_nm").get<double>();
        c.q_total = j.at("q").get<double>();
        c.q_lower_bound = j.at("q_lower_bound").get<bool>();
        c.amplitude = j.at("amplitude").get<double>();
        const auto& m = j.at("materials");
        sol.materials = {m.at("n_gap").get<double>(), m.at("n_dia").get<double>(), m.at("n_air").get<double>()};
        const auto& g = j.at("grid");
        FieldGrid& f = sol.fields;
        f.nr = g.at("nr").get<int>();
        f.nz = g.at("nz").get<int>();
        f.r0 = g.at("r0_um").get<double>();
        f.z0 = g.at("z0_um").get<double>();
        f.dr = g.at("dr_um").get<double>();
        f.dz = g.at("dz_um").get<double>();
        const Table t = read_csv_file(json_path.parent_path() / j.at("field_file").get<std::string>());
        if (t.header != std::vector<std::string>(kFieldColumns.begin(), kFieldColumns.end()))
            throw ValidationError("field dump has an unexpected header");
        const auto n = static_cast<std::size_t>(f.nr) * static_cast<std::size_t>(f.nz);
        if (t.rows.size() != n) throw ValidationError("field dump has the wrong number of rows");
        f.cells.resize(n);
        f.region.resize(n);
        f.absorber.resize(n);
        for (const auto& row : t.rows) {
            const int jj = static_cast<int>(row[0]), ii = static_cast<int>(row[1]);
            if (ii < 0 || jj < 0 || ii >= f.nr || jj >= f.nz)
                throw ValidationError("field dump cell index out of range");
            const auto k = f.index(ii, jj);
            f.region[k] = static_cast<Region>(static_cast<int>(row[4]));
            f.absorber[k] = row[5] != 0 ? 1 : 0;
            for (int q = 0; q < 3; ++q) {
                f.cells[k].e[static_cast<std::size_t>(q)] = {row[6 + 2 * q], row[7 + 2 * q]};
                f.cells[k].h[static_cast<std::size_t>(q)] = {row[12 + 2 * q], row[13 + 2 * q]};
            }
        }
        normalize(sol);
        return sol;
    } catch (const json::exception& e) {
        throw ValidationError(json_path.string() + ": " + e.what());
    }
}

Manifest::Manifest(std::string config_hash) : hash_(std::move(config_hash)) {}

void Manifest::add(ManifestStep step) {
    std::lock_guard lock(mu_);
    steps_.push_back(std::move(step));
}

json Manifest::to_json() const {
    std::lock_guard lock(mu_);
    json steps = json::array();
    for (const auto& s : steps_)
        steps.push_back({{"name", s.name}, {"inputs", s.inputs}, {"outputs", s.outputs}, {"seconds", s.seconds}});
    return {{"format_version", kFormatVersion},
            {"tool_version", kToolVersion},
            {"config_hash", hash_},
            {"steps", steps}};
}

void Manifest::write(const fs::path& path) const {
    const json j = to_json();
    const fs::path dir = path.parent_path();
    for (const auto& s : j.at("steps"))
        for (const auto& o : s.at("outputs"))
            if (!fs::exists(dir / o.get<std::string>()))
                throw ValidationError("manifest lists missing output " + o.get<std::string>());
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace nanocav
