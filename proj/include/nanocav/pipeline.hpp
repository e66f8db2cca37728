#pragma once

// End-to-end runs behind the CLI subcommands. Each writes its outputs into
// an output directory and records them in the manifest.

#include <filesystem>
#include <optional>
#include <vector>

#include "nanocav/io.hpp"

namespace nanocav {

struct ModeRequest {
    int m = 9;
    Polarization polarization = Polarization::TE;
};

struct SolveOutcome {
    DeviceGeometry geometry;
    std::vector<ModeSolution> modes;
    std::vector<std::filesystem::path> files;
};

// Calibrates the geometry (or reuses a matching calibration in out_dir),
// then solves and profiles each requested mode. A given geometry skips the
// calibration.
SolveOutcome run_solve(const RunConfig& cfg, const std::vector<ModeRequest>& modes,
                       const std::filesystem::path& out_dir, Manifest& manifest,
                       const std::optional<DeviceGeometry>& geometry = std::nullopt);

// Decays on and off resonance, windowed exponential fits, F and zeta_c.
json run_fig3(const RunConfig& cfg, const std::filesystem::path& out_dir, Manifest& manifest,
              int threads);

// Tuning map with crossing events plus a doublet fit of the first cycle.
json run_fig2c(const RunConfig& cfg, const std::filesystem::path& out_dir, Manifest& manifest,
               int threads);

}  // namespace nanocav
