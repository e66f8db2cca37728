#pragma once

// Device, material and emitter description of the hybrid GaP-on-diamond ring
// cavity, plus the closed-form helpers shared by every other module.
//
// Coordinates are cylindrical (r, z). z = 0 is the unetched diamond top
// surface; the GaP ring sits on 0 <= z <= gap_thickness and the diamond
// pedestal under it is etched down to z = -etch_depth. Geometry lengths are in
// micrometres, emitter depth in nanometres, wavelengths in nanometres.

#include <array>
#include <string>
#include <vector>

namespace nanocav {

struct Materials {
    double n_gap = 3.3;
    double n_dia = 2.4;
    double n_air = 1.0;
};

struct DeviceGeometry {
    double outer_radius = 0.45;   // um
    double wall_width = 0.25;     // um
    double gap_thickness = 0.25;  // um
    double etch_depth = 0.60;     // um

    double inner_radius() const { return outer_radius - wall_width; }
    double diameter() const { return 2.0 * outer_radius; }
};

// Dipole is given in cylindrical components (r, phi, z) at the emitter.
struct EmitterSpec {
    double depth_nm = 0.0;
    double radius_um = 0.40;
    double azimuth = 0.0;
    std::array<double, 3> dipole{1.0, 0.0, 0.0};
    double lambda_zpl_nm = 637.0;
    double zeta_zpl = 0.03;
    double tau_bulk_ns = 11.6;
};

// r_min > 0 truncates the domain before the axis with a perfect conductor;
// r_min == 0 puts the axis inside the domain.
struct SimulationGrid {
    double dr_nm = 10.0;
    double dz_nm = 10.0;
    double r_min_um = 0.10;
    double r_max_um = 1.0;
    double z_min_um = -1.2;
    double z_max_um = 0.8;
    int pml_cells = 12;
};

enum class Region { Air, GaP, Diamond };

const char* to_string(Region r);

struct Violation {
    std::string field;
    std::string rule;
};

using Violations = std::vector<Violation>;

Violations validate(const Materials& mat);
Violations validate(const DeviceGeometry& geom);
Violations validate(const EmitterSpec& nv);
// Grid checks include the padding rule: at least lambda/2 between the device
// and every open boundary, measured inside the absorber.
Violations validate(const SimulationGrid& grid, const DeviceGeometry& geom,
                    double lambda_nm = 680.0);

// Throws std::invalid_argument with all violations joined, if there are any.
void require_valid(const Violations& v, const std::string& what);

Region region_at(const DeviceGeometry& geom, double r_um, double z_um);
double refractive_index(Region region, const Materials& mat);
double permittivity_at(const DeviceGeometry& geom, const Materials& mat, double r_um,
                       double z_um);

// Intensity decay constant kappa_z in 1/um; throws if n_gap <= n_dia.
double evanescent_kappa(double lambda_nm, const Materials& mat);
// exp(-2 kappa_z z) for a depth z below the diamond surface.
double evanescent_decay(double depth_nm, double lambda_nm, const Materials& mat);

// Smallest grid that contains the device with lambda/2 padding plus the PML.
SimulationGrid default_grid(const DeviceGeometry& geom, double dr_nm = 10.0,
                            double lambda_nm = 680.0);

}  // namespace nanocav
