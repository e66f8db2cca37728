#pragma once

// Run configuration, CSV/JSON formats, mode serialization and run manifests.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanocav/fitting.hpp"
#include "nanocav/geometry.hpp"
#include "nanocav/modesolver.hpp"
#include "nanocav/spectra_sim.hpp"

namespace nanocav {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "NANOCAV_OUTPUT_DIR";

using json = nlohmann::json;

// Malformed input: bad config values, unreadable or malformed files.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CalibrationSpec {
    bool enabled = true;
    double target_nm = 637.0;
    int m = 9;
    Polarization polarization = Polarization::TE;
    CalibrationKnob knob = CalibrationKnob::OuterRadius;
    double lo = 0.40;  // um
    double hi = 0.45;
    double tol_nm = 0.05;
};

struct SolveSpec {
    Band band{};
    double dr_nm = 10.0;
    double ringdown_periods = 300.0;
    CalibrationSpec calibration{};
};

struct FitSpec {
    double t0_offset_ns = 3.0;
    bool shared_fwhm = true;
};

struct Fig3Spec {
    DecayParams on{};
    DecayParams off{};
    double zeta_zpl = 0.03;
};

Fig3Spec fig3_preset(const std::string& name);  // "nv1" or "nv2"

// Default-constructed values are the documented configuration defaults.
struct RunConfig {
    RunConfig();

    DeviceGeometry geometry{};
    Materials materials{};
    SolveSpec solve{};
    std::vector<EmitterSpec> emitters{EmitterSpec{}};
    DoubletModel doublet{};
    SpectrumOptions spectrum{};
    TuningConfig tuning{};
    Fig3Spec fig3{};
    FitSpec fit{};
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    int threads = 1;
};

// Missing sections fall back to defaults; unknown keys and a missing seed
// are errors. The output_dir environment override is applied here.
RunConfig config_from_json(const json& j);
RunConfig read_config(const std::filesystem::path& path);
json to_json(const RunConfig& cfg);
// Stable under key reordering: hash of the canonical (sorted) dump.
std::string config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal form.
std::string format_number(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Strict numeric CSV with a header row; errors name the offending line.
Table parse_csv(const std::string& text);
std::string write_csv(const Table& t);
Table read_csv_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

Spectrum spectrum_from_table(const Table& t);
Table to_table(const Spectrum& s);
DecayTrace trace_from_table(const Table& t, double rep_period_ns = 210.5);
Table to_table(const DecayTrace& t);
// Header "cycle" followed by wavelengths; one row per cycle.
Table tuning_table(const TuningMap& map);

json to_json(const FitResult& r);
json to_json(const PurcellResult& r);
json to_json(const CrossingEvent& e);
json to_json(const DeviceGeometry& g);
DeviceGeometry geometry_from_json(const json& j);

// Mode header JSON plus a CSV field dump next to it.
void write_mode(const std::filesystem::path& json_path, const ModeSolution& sol,
                const DeviceGeometry& geom);
ModeSolution read_mode(const std::filesystem::path& json_path);

struct ManifestStep {
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double seconds = 0;
};

// Serialized manifest writes; safe to call from several threads.
class Manifest {
public:
    explicit Manifest(std::string config_hash);
    void add(ManifestStep step);
    // Throws ValidationError if a listed output file is missing.
    void write(const std::filesystem::path& path) const;
    json to_json() const;

private:
    std::string hash_;
    std::vector<ManifestStep> steps_;
    mutable std::mutex mu_;
};

}  // namespace nanocav
