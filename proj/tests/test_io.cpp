#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "nanocav/io.hpp"
#include "nanocav/spectra_sim.hpp"

using namespace nanocav;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("nanocav_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("CSV round-trips byte for byte") {
    DoubletModel d;
    SpectrumOptions opt;
    opt.background = 20;
    const auto s = synth_doublet_spectrum(d, {}, opt, 5);
    const std::string text = write_csv(to_table(s));
    const auto back = spectrum_from_table(parse_csv(text));
    CHECK(back.wavelengths == s.wavelengths);
    CHECK(back.counts == s.counts);
    CHECK(write_csv(to_table(back)) == text);

    DecayParams p;
    p.noise = false;
    const auto t = synth_decay(p, 0);
    const auto tb = trace_from_table(parse_csv(write_csv(to_table(t))));
    CHECK(tb.times == t.times);
    CHECK(tb.counts == t.counts);
}

TEST_CASE("CSV errors name the line") {
    CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,2\n3\n"), doctest::Contains("line 3"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,x\n"), doctest::Contains("line 2"), ValidationError);
    CHECK_THROWS_WITH_AS(spectrum_from_table(parse_csv("wavelength_nm,counts\n637,1\n636,2\n")),
                         doctest::Contains("line 3"), ValidationError);
    CHECK_THROWS_AS(spectrum_from_table(parse_csv("time_ns,counts\n1,2\n")), ValidationError);
    CHECK_THROWS_AS(spectrum_from_table(parse_csv("wavelength_nm,counts\n637,-1\n")),
                    ValidationError);
}

TEST_CASE("config parsing") {
    CHECK_THROWS_WITH_AS(config_from_json(json::object()), doctest::Contains("seed required"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(config_from_json(json{{"seed", 1}, {"geometry", {{"radius", 0.4}}}}),
                         doctest::Contains("radius"), ValidationError);
    CHECK_THROWS_AS(config_from_json(json{{"seed", 1}, {"geometry", {{"etch_depth", -0.1}}}}),
                    ValidationError);

    const auto c = config_from_json(json{{"seed", 42}, {"fig3", {{"preset", "nv2"}}}});
    CHECK(c.seed == 42);
    CHECK(c.fig3.on.tau_ns == 9.84);
    CHECK(c.fig3.off.tau_ns == 11.0);

    // canonical round-trip and key-order independence of the hash
    const auto back = config_from_json(to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    const json a = json::parse(R"({"seed": 3, "materials": {"n_gap": 3.4, "n_dia": 2.4}})");
    const json b = json::parse(R"({"materials": {"n_dia": 2.4, "n_gap": 3.4}, "seed": 3})");
    CHECK(config_hash(config_from_json(a)) == config_hash(config_from_json(b)));
    CHECK(config_hash(config_from_json(a)) != config_hash(config_from_json(json{{"seed", 4}})));
}

TEST_CASE("output directory override") {
    const json j{{"seed", 1}, {"output_dir", "from_config"}};
    ::unsetenv(kOutputDirEnv);
    CHECK(config_from_json(j).output_dir == "from_config");
    ::setenv(kOutputDirEnv, "from_env", 1);
    CHECK(config_from_json(j).output_dir == "from_env");
    // the output location is not part of the run identity
    CHECK(config_hash(config_from_json(j)) == config_hash(config_from_json(json{{"seed", 1}})));
    ::unsetenv(kOutputDirEnv);
}

TEST_CASE("numbers print in shortest round-trip form") {
    for (double v : {0.1, 637.0, 1e-300, 6.02214076e23, -2.5, 636.865}) {
        const auto s = format_number(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_number(637.0) == "637");
}

TEST_CASE("mode files round-trip") {
    ModeSolution s;
    s.candidate.lambda0_nm = 637.5;
    s.candidate.q_total = 1234.5;
    s.candidate.m = 9;
    auto& f = s.fields;
    f.nr = 6;
    f.nz = 5;
    f.r0 = 0.1;
    f.z0 = -0.03;
    f.dr = f.dz = 0.01;
    f.cells.resize(30);
    f.region.assign(30, Region::Diamond);
    f.absorber.assign(30, 0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 5; ++j) {
            auto& c = f.cells[f.index(i, j)];
            c.e = {std::complex<double>(0.1 * i, 0.02 * j), {0.3, -0.1 * i}, {0.01 * j, 0}};
            c.h = {std::complex<double>(0.5, 0), {0, 0.25}, {-0.125, 0.0625}};
            f.region[f.index(i, j)] = j > 2 ? Region::GaP : Region::Diamond;
        }
    normalize(s);
    const auto dir = scratch("mode");
    write_mode(dir / "mode.json", s, DeviceGeometry{});
    const auto r = read_mode(dir / "mode.json");
    CHECK(r.candidate.lambda0_nm == s.candidate.lambda0_nm);
    CHECK(r.candidate.q_total == s.candidate.q_total);
    CHECK(r.v_mode == doctest::Approx(s.v_mode).epsilon(1e-12));
    CHECK(r.eta_dia == doctest::Approx(s.eta_dia).epsilon(1e-12));
    CHECK(r.peak_cell == s.peak_cell);
    for (std::size_t k = 0; k < s.fields.cells.size(); ++k) {
        CHECK(r.fields.region[k] == s.fields.region[k]);
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(r.fields.cells[k].e[c] - s.fields.cells[k].e[c]) < 1e-14);
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest lists only files that exist") {
    const auto dir = scratch("manifest");
    Manifest m("abc");
    write_text_file(dir / "a.csv", "x\n1\n");
    m.add({"synth", {}, {(dir / "a.csv").string()}, 0.1});
    m.write(dir / "manifest.json");
    const auto j = json::parse(read_text_file(dir / "manifest.json"));
    CHECK(j.at("config_hash") == "abc");
    CHECK(j.at("format_version") == kFormatVersion);
    CHECK(j.at("steps").size() == 1);
    m.add({"fit", {}, {(dir / "missing.json").string()}, 0.1});
    CHECK_THROWS_AS(m.write(dir / "manifest.json"), ValidationError);
    fs::remove_all(dir);
}
